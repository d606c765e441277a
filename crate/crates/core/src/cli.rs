//! Command-line driver: configuration, experiment runs, output files and
//! checkpoints.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{drift_report, CsvSink};
use crate::dynamics::MhdState;
use crate::error::{Error, Result};
use crate::integrator::{run_steps, step_count, Sampling, StepConfig, TimeConvention};
use crate::matrix_core::{CMatrix, QuantizedField, C64};
use crate::quantization::{
    build_generators, build_spectral_data, spectrum_table, wigner_discrepancy, WIGNER_MAX_N,
};
use crate::sphere_analysis::{
    convergence_study, near_pole_field, pairing_convergence, ConvergenceTable, FieldSet,
    QuadratureGrid,
};

pub const CHECKPOINT_MAGIC: &str = "zeitlin-mhd v1";

#[derive(Debug, Parser)]
#[command(name = "zeitlin-mhd", version, about = "Matrix model of axisymmetric ideal MHD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a seeded random state and record diagnostics.
    Run(RunArgs),
    /// Continue integrating from a checkpoint file.
    Resume(ResumeArgs),
    /// Compare quantized and continuous invariants for increasing N.
    Convergence(ConvergenceArgs),
    /// Tabulate the Laplacian spectrum and optionally cross-check harmonics.
    Harmonics(HarmonicsArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct StepArgs {
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Time step in the chosen time convention (default 0.01).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Integration horizon (default 500).
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Fixed-point residual tolerance (default 1e-14).
    #[arg(long)]
    pub fp_tol: Option<f64>,
    /// Fixed-point iteration cap per step (default 100).
    #[arg(long)]
    pub fp_max_iter: Option<usize>,
    /// Steps between diagnostics rows (default 100).
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Highest Casimir power (default N).
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Output directory (default "output").
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// rescaled (default) or physical-hbar.
    #[arg(long)]
    pub time_convention: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Matrix size N (default 5).
    #[arg(long)]
    pub n: Option<usize>,
    /// Random seed for the initial state (default 42).
    #[arg(long)]
    pub seed: Option<u64>,
    /// L² norm of each initial field; 0 keeps the raw random draw.
    #[arg(long)]
    pub init_norm: Option<f64>,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ResumeArgs {
    /// Checkpoint written by a previous run.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    /// Comma-separated increasing matrix sizes.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    pub n_list: Vec<usize>,
    /// Band limit of the random test fields.
    #[arg(long, default_value_t = 4)]
    pub lmax: usize,
    /// Highest Casimir power compared.
    #[arg(long, default_value_t = 3)]
    pub m_max: usize,
    /// Seed for the random test fields.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "output")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HarmonicsArgs {
    /// Matrix size N.
    #[arg(long)]
    pub n: usize,
    /// Compare the eigenbasis with Wigner 3j harmonics (N <= 32).
    #[arg(long)]
    pub check_wigner: bool,
    /// Output directory.
    #[arg(long, default_value = "output")]
    pub output_dir: PathBuf,
}

/// Fully resolved parameters of a `run` or `resume`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub seed: u64,
    pub sample_every: usize,
    pub m_max: usize,
    pub output_dir: PathBuf,
    pub time_convention: TimeConvention,
    pub init_norm: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 5,
            dt: 0.01,
            t_final: 500.0,
            fp_tol: 1e-14,
            fp_max_iter: 100,
            seed: 42,
            sample_every: 100,
            m_max: 5,
            output_dir: PathBuf::from("output"),
            time_convention: TimeConvention::Rescaled,
            init_norm: 1.0,
        }
    }
}

const CONFIG_KEYS: [&str; 11] = [
    "n",
    "dt",
    "t-final",
    "fp-tol",
    "fp-max-iter",
    "seed",
    "sample-every",
    "m-max",
    "output-dir",
    "time-convention",
    "init-norm",
];

/// Parses a flat `key=value` file. Blank lines and `#` comments are ignored;
/// keys use the flag spelling, with `_` accepted for `-`.
pub fn parse_config(text: &str, path: &Path) -> Result<HashMap<String, (usize, String)>> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got '{line}'")))?;
        let key = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(parse_err(format!("unknown key '{}'", k.trim())));
        }
        out.insert(key, (i + 1, v.trim().to_string()));
    }
    Ok(out)
}

struct Layer {
    path: PathBuf,
    values: HashMap<String, (usize, String)>,
}

impl Layer {
    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Layer {
                path: PathBuf::new(),
                values: HashMap::new(),
            }),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Ok(Layer {
                    path: p.to_path_buf(),
                    values: parse_config(&text, p)?,
                })
            }
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Parse {
                path: self.path.clone(),
                line: *line,
                reason: format!("invalid value '{v}' for {key}"),
            }),
        }
    }
}

impl RunConfig {
    /// Merges flags over the config file over defaults and validates.
    pub fn resolve(run: &RunArgs, n_override: Option<usize>) -> Result<Self> {
        let file = Layer::load(run.step.config.as_deref())?;
        let d = RunConfig::default();
        let step = &run.step;
        let n = match n_override {
            Some(n) => n,
            None => run.n.or(file.get("n")?).unwrap_or(d.n),
        };
        let convention = match step.time_convention.clone().or(file.get("time-convention")?) {
            Some(s) => s.parse()?,
            None => d.time_convention,
        };
        let cfg = RunConfig {
            n,
            dt: step.dt.or(file.get("dt")?).unwrap_or(d.dt),
            t_final: step.t_final.or(file.get("t-final")?).unwrap_or(d.t_final),
            fp_tol: step.fp_tol.or(file.get("fp-tol")?).unwrap_or(d.fp_tol),
            fp_max_iter: step.fp_max_iter.or(file.get("fp-max-iter")?).unwrap_or(d.fp_max_iter),
            seed: run.seed.or(file.get("seed")?).unwrap_or(d.seed),
            sample_every: step.sample_every.or(file.get("sample-every")?).unwrap_or(d.sample_every),
            m_max: step.m_max.or(file.get("m-max")?).unwrap_or(n),
            output_dir: step
                .output_dir
                .clone()
                .or(file.get("output-dir")?)
                .unwrap_or(d.output_dir),
            time_convention: convention,
            init_norm: run.init_norm.or(file.get("init-norm")?).unwrap_or(d.init_norm),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return bad(format!("t-final must be non-negative, got {}", self.t_final));
        }
        if self.sample_every == 0 {
            return bad("sample-every must be at least 1".into());
        }
        if self.m_max == 0 || self.m_max > self.n {
            return bad(format!("m-max must lie in 1..={}, got {}", self.n, self.m_max));
        }
        if !(self.init_norm.is_finite() && self.init_norm >= 0.0) {
            return bad(format!("init-norm must be non-negative, got {}", self.init_norm));
        }
        self.step_config(1.0).map(|_| ())
    }

    fn step_config(&self, hbar: f64) -> Result<StepConfig> {
        let h = self.dt * self.time_convention.scheme_per_user(hbar);
        StepConfig::new(h)?.with_tolerance(self.fp_tol, self.fp_max_iter)
    }

    fn steps(&self) -> Result<usize> {
        if self.t_final == 0.0 {
            Ok(0)
        } else {
            step_count(self.t_final, self.dt)
        }
    }
}

fn format_matrix(out: &mut String, m: &CMatrix) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e},{:.16e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub fn format_checkpoint(s: &MhdState) -> String {
    let mut out = format!("{CHECKPOINT_MAGIC} N={}\n", s.n());
    for f in s.fields() {
        format_matrix(&mut out, f.matrix());
    }
    out
}

pub fn parse_checkpoint(text: &str, path: &Path) -> Result<MhdState> {
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty checkpoint".into()))?;
    let n: usize = header
        .strip_prefix(CHECKPOINT_MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("N="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(1, format!("bad header '{header}'")))?;
    if n < 2 {
        return Err(err(1, format!("N must be at least 2, got {n}")));
    }
    let mut fields = Vec::with_capacity(4);
    for f in 0..4 {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            let line_no = 2 + f * n + i;
            let line = lines
                .next()
                .ok_or_else(|| err(line_no, "unexpected end of file".into()))?;
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != n {
                return Err(err(line_no, format!("expected {n} entries, got {}", entries.len())));
            }
            for (j, e) in entries.iter().enumerate() {
                let (re, im) = e
                    .split_once(',')
                    .ok_or_else(|| err(line_no, format!("bad entry '{e}'")))?;
                let re: f64 = re.parse().map_err(|_| err(line_no, format!("bad number '{re}'")))?;
                let im: f64 = im.parse().map_err(|_| err(line_no, format!("bad number '{im}'")))?;
                m[(i, j)] = C64::new(re, im);
            }
        }
        let field = QuantizedField::new(m).map_err(|e| err(2 + f * n, e.to_string()))?;
        fields.push(field);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(err(2 + 4 * n, "trailing content".into()));
    }
    let xi = fields.pop().expect("four fields");
    let q = fields.pop().expect("four fields");
    let p = fields.pop().expect("four fields");
    let w = fields.pop().expect("four fields");
    MhdState::new(w, p, q, xi)
}

pub fn write_checkpoint(path: &Path, s: &MhdState) -> Result<()> {
    fs::write(path, format_checkpoint(s)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<MhdState> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text, path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Summary of a completed integration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub final_state: MhdState,
    pub steps: usize,
    pub records: usize,
}

fn integrate(cfg: &RunConfig, s0: &MhdState) -> Result<RunOutcome> {
    let data = build_spectral_data(&build_generators(cfg.n)?)?;
    let hbar = data.hbar().value();
    let step = cfg.step_config(hbar)?;
    let steps = cfg.steps()?;
    let sampling = Sampling {
        every: cfg.sample_every,
        m_max: cfg.m_max,
        time_unit: 1.0 / cfg.time_convention.scheme_per_user(hbar),
        t_start: 0.0,
    };
    ensure_dir(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join("diagnostics.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut sink = CsvSink::retaining(BufWriter::new(file));
    let final_state = run_steps(s0, &data, &step, steps, &sampling, &mut sink)?;
    let (_, records) = sink.finish().map_err(|e| Error::io(&csv_path, e))?;

    if records.len() >= 2 {
        let summary = drift_report(&records)?;
        let mut text = format!(
            "N = {}, dt = {}, t_final = {}, steps = {}, scheme step = {:e}, time convention = {}\n",
            cfg.n, cfg.dt, cfg.t_final, steps, step.h, cfg.time_convention
        );
        text.push_str(&summary.to_text());
        write_file(&cfg.output_dir.join("drift_summary.txt"), &text)?;
        write_file(&cfg.output_dir.join("drift_summary.csv"), &summary.to_csv())?;
    }
    write_checkpoint(&cfg.output_dir.join("checkpoint.txt"), &final_state)?;
    Ok(RunOutcome {
        final_state,
        steps,
        records: records.len(),
    })
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let s0 = if cfg.init_norm == 0.0 {
        MhdState::random(cfg.n, cfg.seed)?
    } else {
        MhdState::random_with_norm(cfg.n, cfg.seed, cfg.init_norm)?
    };
    integrate(cfg, &s0)
}

/// Continues from a checkpoint; reported times restart at zero.
pub fn cmd_resume(checkpoint: &Path, step: &StepArgs) -> Result<RunOutcome> {
    let s0 = read_checkpoint(checkpoint)?;
    let run = RunArgs {
        step: step.clone(),
        ..RunArgs::default()
    };
    let cfg = RunConfig::resolve(&run, Some(s0.n()))?;
    integrate(&cfg, &s0)
}

/// Pole offset of the smooth test field; its harmonic coefficients decay
/// slowly enough to stay above rounding up to N = 64.
pub const SMOOTH_FIELD_OFFSET: f64 = 1.01;

/// Both convergence tables written by the `convergence` command.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOutcome {
    pub invariants: ConvergenceTable,
    pub pairing: ConvergenceTable,
}

pub fn cmd_convergence(args: &ConvergenceArgs) -> Result<ConvergenceOutcome> {
    if args.n_list.is_empty() {
        return Err(Error::InvalidArgument("--n-list is empty".into()));
    }
    if args.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("--n-list must be strictly ascending".into()));
    }
    if args.lmax == 0 {
        return Err(Error::InvalidArgument("--lmax must be at least 1".into()));
    }
    if args.n_list.len() == 1 {
        eprintln!("warning: a single N gives no slope; writing errors only");
    }
    let fields = FieldSet::random(args.lmax, args.seed);
    let invariants = convergence_study(&fields, &args.n_list, args.m_max)?;
    let n_max = *args.n_list.last().expect("nonempty");
    let grid = QuadratureGrid::new(2 * n_max + 64, 4 * n_max + 128)?;
    let smooth = near_pole_field(SMOOTH_FIELD_OFFSET, 0.7, 0.3);
    let pairing = pairing_convergence(&smooth, &smooth, &args.n_list, &grid)?;

    ensure_dir(&args.output_dir)?;
    let mut csv = invariants.to_csv();
    csv.push_str(pairing.to_csv().split_once('\n').map_or("", |(_, rest)| rest));
    write_file(&args.output_dir.join("convergence.csv"), &csv)?;
    let mut slopes = String::new();
    if args.n_list.len() >= 2 {
        slopes.push_str(&invariants.slopes_text());
        slopes.push_str(pairing.slopes_text().split_once('\n').map_or("", |(_, rest)| rest));
    } else {
        slopes.push_str("no slopes: a single N was given\n");
    }
    write_file(&args.output_dir.join("slopes.txt"), &slopes)?;
    Ok(ConvergenceOutcome { invariants, pairing })
}

/// Result of the `harmonics` command.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicsOutcome {
    pub table: String,
    pub wigner_discrepancy: Option<f64>,
}

pub fn cmd_harmonics(args: &HarmonicsArgs) -> Result<HarmonicsOutcome> {
    if args.n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {}", args.n)));
    }
    if args.check_wigner && args.n > WIGNER_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "--check-wigner supports n <= {WIGNER_MAX_N}, got {}",
            args.n
        )));
    }
    let data = build_spectral_data(&build_generators(args.n)?)?;
    let mut table = String::from("l,eigenvalue,multiplicity,max_deviation\n");
    for e in spectrum_table(&data) {
        let _ = writeln!(
            table,
            "{},{},{},{:.3e}",
            e.l, e.expected, e.multiplicity, e.max_deviation
        );
    }
    ensure_dir(&args.output_dir)?;
    write_file(&args.output_dir.join("laplacian_spectrum.csv"), &table)?;
    let wigner = if args.check_wigner {
        let d = wigner_discrepancy(&data)?;
        write_file(
            &args.output_dir.join("wigner_check.txt"),
            &format!("N = {}\nmax phase-aligned discrepancy = {d:.3e}\n", args.n),
        )?;
        Some(d)
    } else {
        None
    };
    Ok(HarmonicsOutcome {
        table,
        wigner_discrepancy: wigner,
    })
}

/// Executes a parsed command line, printing a short report to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = RunConfig::resolve(&args, None)?;
            let out = cmd_run(&cfg)?;
            println!(
                "run: N={} steps={} records={} time-convention={} output={}",
                cfg.n,
                out.steps,
                out.records,
                cfg.time_convention,
                cfg.output_dir.display()
            );
        }
        Command::Resume(args) => {
            let out = cmd_resume(&args.checkpoint, &args.step)?;
            println!(
                "resume: N={} steps={} records={}",
                out.final_state.n(),
                out.steps,
                out.records
            );
        }
        Command::Convergence(args) => {
            let out = cmd_convergence(&args)?;
            if args.n_list.len() >= 2 {
                print!("{}", out.invariants.slopes_text());
                print!("{}", out.pairing.slopes_text().split_once('\n').map_or("", |(_, r)| r));
            }
        }
        Command::Harmonics(args) => {
            let out = cmd_harmonics(&args)?;
            print!("{}", out.table);
            if let Some(d) = out.wigner_discrepancy {
                println!("max phase-aligned discrepancy vs Wigner-3j: {d:.3e}");
            }
        }
    }
    Ok(())
}
