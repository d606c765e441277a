//! Isospectral midpoint Lie–Poisson integrator.
//!
//! One step of size `h` on `Ȧ = [A, B(A)]` solves
//!
//! ```text
//! A_n     = (I + h/2 B(Ã)) Ã (I − h/2 B(Ã))
//! A_{n+1} = (I − h/2 B(Ã)) Ã (I + h/2 B(Ã))
//! ```
//!
//! The schemes here use plain commutators: a step of size `h` advances the
//! scaled-commutator dynamics by `ħ h` in physical time. [`TimeConvention`]
//! converts a user time step into a scheme step.

use std::fmt;
use std::str::FromStr;

use crate::diagnostics::{DiagnosticsRecord, DiagnosticsSink};
use crate::dynamics::{
    b_map_2d, embed_a_2d, project_blocks, unpack_2d, MhdState,
};
use crate::error::{Error, Result};
use crate::matrix_core::{anti_hermitian_part, commutator, max_abs_diff, CMatrix, QuantizedField, C64};
use crate::quantization::LaplacianSpectralData;

/// How a user-facing time step maps onto the scheme step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeConvention {
    /// Time rescaled by `1/ħ`; the scheme step equals `dt`.
    #[default]
    Rescaled,
    /// Physical time of the `(1/ħ)`-scaled equations; the scheme step is `dt/ħ`.
    PhysicalHbar,
}

impl TimeConvention {
    /// Scheme time elapsed per unit of user time.
    pub fn scheme_per_user(self, hbar: f64) -> f64 {
        match self {
            TimeConvention::Rescaled => 1.0,
            TimeConvention::PhysicalHbar => 1.0 / hbar,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeConvention::Rescaled => "rescaled",
            TimeConvention::PhysicalHbar => "physical-hbar",
        }
    }
}

impl fmt::Display for TimeConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rescaled" | "paper-rescaled" => Ok(TimeConvention::Rescaled),
            "physical-hbar" => Ok(TimeConvention::PhysicalHbar),
            other => Err(Error::InvalidArgument(format!(
                "unknown time convention '{other}' (expected rescaled or physical-hbar)"
            ))),
        }
    }
}

pub const DEFAULT_FP_TOL: f64 = 1e-14;
pub const DEFAULT_FP_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub h: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
}

impl StepConfig {
    pub fn new(h: f64) -> Result<Self> {
        StepConfig {
            h,
            fp_tol: DEFAULT_FP_TOL,
            fp_max_iter: DEFAULT_FP_MAX_ITER,
        }
        .validated()
    }

    pub fn with_tolerance(self, fp_tol: f64, fp_max_iter: usize) -> Result<Self> {
        StepConfig {
            fp_tol,
            fp_max_iter,
            ..self
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {}", self.h)));
        }
        if !(self.fp_tol.is_finite() && self.fp_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fixed-point tolerance must be positive, got {}",
                self.fp_tol
            )));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::InvalidArgument("fp_max_iter must be at least 1".into()));
        }
        Ok(self)
    }

    /// The same configuration stepping backwards in time.
    pub fn reversed(self) -> Self {
        StepConfig { h: -self.h, ..self }
    }
}

/// Outcome of a converged fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Tracks successive updates and decides between convergence, continuation
/// and failure.
struct Convergence {
    tol: f64,
    max_iter: usize,
    iterations: usize,
    first: Option<f64>,
}

impl Convergence {
    fn new(cfg: &StepConfig) -> Self {
        Convergence {
            tol: cfg.fp_tol,
            max_iter: cfg.fp_max_iter,
            iterations: 0,
            first: None,
        }
    }

    /// `Ok(true)` once converged, `Ok(false)` to keep iterating.
    fn update(&mut self, residual: f64) -> Result<bool> {
        self.iterations += 1;
        let first = *self.first.get_or_insert(residual);
        let diverging = !residual.is_finite() || residual > 1e6 * first.max(self.tol);
        if residual < self.tol {
            return Ok(true);
        }
        if diverging || self.iterations >= self.max_iter {
            return Err(Error::StepFailure {
                step: None,
                iterations: self.iterations,
                residual,
            });
        }
        Ok(false)
    }
}

fn bab(b: &CMatrix, a: &CMatrix) -> CMatrix {
    b * a * b
}

/// One isospectral midpoint step for `Ȧ = [A, B(A)]` with a generic `B`.
pub fn generic_isospectral_step<F>(a_n: &CMatrix, b_map: F, cfg: &StepConfig) -> Result<CMatrix>
where
    F: Fn(&CMatrix) -> CMatrix,
{
    generic_isospectral_step_with_stats(a_n, b_map, cfg).map(|(a, _)| a)
}

pub fn generic_isospectral_step_with_stats<F>(
    a_n: &CMatrix,
    b_map: F,
    cfg: &StepConfig,
) -> Result<(CMatrix, FixedPointStats)>
where
    F: Fn(&CMatrix) -> CMatrix,
{
    if a_n.nrows() != a_n.ncols() {
        return Err(Error::InvalidArgument(format!(
            "step input must be square, got {}x{}",
            a_n.nrows(),
            a_n.ncols()
        )));
    }
    let half = C64::new(cfg.h / 2.0, 0.0);
    let quarter = C64::new(cfg.h * cfg.h / 4.0, 0.0);
    let mut conv = Convergence::new(cfg);
    let mut tilde = a_n.clone();
    let mut b = b_map(&tilde);
    loop {
        let next = a_n + commutator(&tilde, &b) * half + bab(&b, &tilde) * quarter;
        let residual = max_abs_diff(&next, &tilde);
        tilde = next;
        b = b_map(&tilde);
        if conv.update(residual)? {
            let out = &tilde + commutator(&tilde, &b) * half - bab(&b, &tilde) * quarter;
            return Ok((
                out,
                FixedPointStats {
                    iterations: conv.iterations,
                    residual,
                },
            ));
        }
    }
}

/// The four-field stage variables `(a, b, c, d) = (Ψ, −2Ξ − P, −2Ψ + Q, ΔΞ)`.
struct Coefficients {
    a: CMatrix,
    b: CMatrix,
    c: CMatrix,
    d: CMatrix,
}

impl Coefficients {
    fn of(w: &CMatrix, p: &CMatrix, q: &CMatrix, xi: &CMatrix, data: &LaplacianSpectralData) -> Self {
        let two = C64::new(2.0, 0.0);
        let a = data.invert_unchecked(w);
        let b = -(xi * two) - p;
        let c = -(&a * two) + q;
        let d = data.apply(xi);
        Coefficients { a, b, c, d }
    }
}

/// First- and second-order increments of the four stage equations.
struct Increments {
    first: [CMatrix; 4],
    second: [CMatrix; 4],
}

fn increments(w: &CMatrix, p: &CMatrix, q: &CMatrix, xi: &CMatrix, k: &Coefficients) -> Increments {
    let Coefficients { a, b, c, d } = k;
    let xa = xi * a;
    let ax = a * xi;
    let axa = &ax * a;

    let w1 = commutator(w, a) + commutator(p, b) + commutator(xi, d) + commutator(c, q);
    let p1 = commutator(p, a) + commutator(xi, c);
    let q1 = commutator(q, a) + commutator(b, xi);
    let xi1 = commutator(xi, a);

    let qa = q * a;
    let pa = p * a;
    let w2 = d * &xa - c * &qa + c * xi * b + b * &pa + a * w * a + a * p * b + b * xi * c
        - a * q * c
        + &ax * d;
    let p2 = a * &pa + c * &xa + &ax * c;
    let q2 = a * &qa - b * &xa - &ax * b;
    let xi2 = axa;

    Increments {
        first: [w1, p1, q1, xi1],
        second: [w2, p2, q2, xi2],
    }
}

/// One step of the four-field scheme for the axisymmetric system.
pub fn axisym_step(s_n: &MhdState, data: &LaplacianSpectralData, cfg: &StepConfig) -> Result<MhdState> {
    axisym_step_with_stats(s_n, data, cfg).map(|(s, _)| s)
}

pub fn axisym_step_with_stats(
    s_n: &MhdState,
    data: &LaplacianSpectralData,
    cfg: &StepConfig,
) -> Result<(MhdState, FixedPointStats)> {
    Error::check_dim(data.n(), s_n.n())?;
    let half = C64::new(cfg.h / 2.0, 0.0);
    let quarter = C64::new(cfg.h * cfg.h / 4.0, 0.0);
    let base = [s_n.w.matrix(), s_n.p.matrix(), s_n.q.matrix(), s_n.xi.matrix()];
    let mut tilde: [CMatrix; 4] = base.map(|m| m.clone());
    let mut conv = Convergence::new(cfg);
    loop {
        let [w, p, q, xi] = &tilde;
        let k = Coefficients::of(w, p, q, xi, data);
        let inc = increments(w, p, q, xi, &k);
        // Stage fields are anti-Hermitian but carry a trace of order h².
        let next: [CMatrix; 4] = std::array::from_fn(|f| {
            anti_hermitian_part(&(base[f] + &inc.first[f] * half + &inc.second[f] * quarter))
        });
        let residual = (0..4)
            .map(|f| max_abs_diff(&next[f], &tilde[f]))
            .fold(0.0, f64::max);
        tilde = next;
        if conv.update(residual)? {
            let [w, p, q, xi] = &tilde;
            let k = Coefficients::of(w, p, q, xi, data);
            let inc = increments(w, p, q, xi, &k);
            let h = C64::new(cfg.h, 0.0);
            let out: [CMatrix; 4] = std::array::from_fn(|f| base[f] + &inc.first[f] * h);
            return Ok((
                project_blocks(out),
                FixedPointStats {
                    iterations: conv.iterations,
                    residual,
                },
            ));
        }
    }
}

/// One step of the 2D system through its `2N×2N` isospectral form.
pub fn step_2d(
    w: &QuantizedField,
    theta: &QuantizedField,
    data: &LaplacianSpectralData,
    cfg: &StepConfig,
) -> Result<(QuantizedField, QuantizedField)> {
    Error::check_dim(data.n(), w.n())?;
    Error::check_dim(data.n(), theta.n())?;
    let a = embed_a_2d(w, theta);
    let next = generic_isospectral_step(&a, |m| b_map_2d(m, data), cfg)?;
    Ok(unpack_2d(&next))
}

/// Sampling plan for [`run_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    /// Record every this many steps (the first and last step are always recorded).
    pub every: usize,
    /// Highest monomial degree of the recorded Casimirs.
    pub m_max: usize,
    /// Reported time per unit of scheme time.
    pub time_unit: f64,
    /// Reported time of the initial state.
    pub t_start: f64,
}

impl Sampling {
    pub fn new(every: usize, m_max: usize) -> Self {
        Sampling {
            every,
            m_max,
            time_unit: 1.0,
            t_start: 0.0,
        }
    }
}

/// Number of steps of size `h` covering `t_final`, which must be a whole
/// multiple of `h` up to rounding.
pub fn step_count(t_final: f64, h: f64) -> Result<usize> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidArgument(format!("t_final must be positive, got {t_final}")));
    }
    let steps = (t_final / h).round();
    if steps < 1.0 || (steps * h - t_final).abs() > 1e-9 * t_final {
        return Err(Error::InvalidArgument(format!(
            "t_final = {t_final} is not a whole number of steps of size {h}"
        )));
    }
    Ok(steps as usize)
}

/// Advances `s0` by `steps` scheme steps, emitting a record at the start,
/// every `sampling.every` steps and at the end.
pub fn run_steps(
    s0: &MhdState,
    data: &LaplacianSpectralData,
    cfg: &StepConfig,
    steps: usize,
    sampling: &Sampling,
    sink: &mut dyn DiagnosticsSink,
) -> Result<MhdState> {
    if sampling.every == 0 {
        return Err(Error::InvalidArgument("sample_every must be at least 1".into()));
    }
    let time = |k: usize| sampling.t_start + k as f64 * cfg.h * sampling.time_unit;
    sink.accept(DiagnosticsRecord::evaluate(time(0), s0, data, sampling.m_max)?)?;
    let mut state = s0.clone();
    for k in 1..=steps {
        state = axisym_step(&state, data, cfg).map_err(|e| match e {
            Error::StepFailure {
                iterations,
                residual,
                ..
            } => Error::StepFailure {
                step: Some(k),
                iterations,
                residual,
            },
            other => other,
        })?;
        if k % sampling.every == 0 || k == steps {
            sink.accept(DiagnosticsRecord::evaluate(time(k), &state, data, sampling.m_max)?)?;
        }
    }
    Ok(state)
}

/// Runs from `t = 0` to `t_final` (in scheme time) with step `cfg.h`.
pub fn run_trajectory(
    s0: &MhdState,
    data: &LaplacianSpectralData,
    cfg: &StepConfig,
    t_final: f64,
    sample_every: usize,
    m_max: usize,
    sink: &mut dyn DiagnosticsSink,
) -> Result<MhdState> {
    let steps = step_count(t_final, cfg.h)?;
    run_steps(s0, data, cfg, steps, &Sampling::new(sample_every, m_max), sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::casimirs_axisym;
    use crate::dynamics::{b_map, embed_a, rhs_axisym, unpack_blocks};
    use crate::matrix_core::{max_abs, random_field};
    use crate::quantization::{build_generators, build_spectral_data};

    fn data(n: usize) -> LaplacianSpectralData {
        build_spectral_data(&build_generators(n).unwrap()).unwrap()
    }

    fn small_state(n: usize, seed: u64, scale: f64) -> MhdState {
        MhdState::random(n, seed).unwrap().scale(scale)
    }

    #[test]
    fn config_validation() {
        assert!(StepConfig::new(0.0).is_err());
        assert!(StepConfig::new(-0.1).is_err());
        assert!(StepConfig::new(0.1).unwrap().with_tolerance(0.0, 10).is_err());
        assert!(StepConfig::new(0.1).unwrap().with_tolerance(1e-12, 0).is_err());
        let c = StepConfig::new(0.01).unwrap();
        assert_eq!(c.fp_tol, 1e-14);
        assert_eq!(c.fp_max_iter, 100);
    }

    #[test]
    fn time_convention_parsing() {
        assert_eq!("rescaled".parse::<TimeConvention>().unwrap(), TimeConvention::Rescaled);
        assert_eq!("paper-rescaled".parse::<TimeConvention>().unwrap(), TimeConvention::Rescaled);
        assert_eq!(TimeConvention::default().to_string(), "rescaled");
        assert_eq!("physical-hbar".parse::<TimeConvention>().unwrap(), TimeConvention::PhysicalHbar);
        assert!("other".parse::<TimeConvention>().is_err());
        assert_eq!(TimeConvention::PhysicalHbar.scheme_per_user(0.5), 2.0);
    }

    #[test]
    fn zero_b_map_is_identity() {
        let a = random_field(5, 1).unwrap().into_matrix();
        let cfg = StepConfig::new(0.1).unwrap();
        let out = generic_isospectral_step(&a, |m| CMatrix::zeros(m.nrows(), m.ncols()), &cfg).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn generic_step_is_isospectral() {
        let n = 6;
        let d = data(n);
        let a = random_field(n, 3).unwrap().into_matrix();
        // Euler–Zeitlin: B(A) = Δ⁻¹A.
        let cfg = StepConfig::new(0.05).unwrap();
        let out = generic_isospectral_step(&a, |m| d.invert_unchecked(m), &cfg).unwrap();
        let (mut pa, mut pb) = (a.clone(), out.clone());
        for m in 1..=n {
            let (ta, tb) = (pa.trace(), pb.trace());
            assert!((ta - tb).norm() <= 1e-12 * ta.norm().max(1.0), "m={m}");
            pa = &pa * &a;
            pb = &pb * &out;
        }
    }

    #[test]
    fn reversed_step_returns_start() {
        let n = 5;
        let d = data(n);
        let a = random_field(n, 8).unwrap().into_matrix();
        let cfg = StepConfig::new(0.05).unwrap();
        let fwd = generic_isospectral_step(&a, |m| d.invert_unchecked(m), &cfg).unwrap();
        let back = generic_isospectral_step(&fwd, |m| d.invert_unchecked(m), &cfg.reversed()).unwrap();
        assert!(max_abs_diff(&back, &a) < 1e-13);
    }

    #[test]
    fn zero_state_stays_zero() {
        let d = data(4);
        let cfg = StepConfig::new(0.01).unwrap();
        let out = axisym_step(&MhdState::zeros(4), &d, &cfg).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn diagonal_state_is_fixed() {
        let n = 5;
        let d = data(n);
        let diag = |seed| {
            let r = random_field(n, seed).unwrap();
            let m = CMatrix::from_diagonal(&r.matrix().diagonal());
            QuantizedField::projected(&m)
        };
        let s = MhdState::new(diag(1), diag(2), diag(3), diag(4)).unwrap();
        let cfg = StepConfig::new(0.01).unwrap();
        let out = axisym_step(&s, &d, &cfg).unwrap();
        assert!(out.max_abs_diff(&s) < 1e-14);
    }

    #[test]
    fn specialized_matches_generic() {
        for n in [3, 5, 8] {
            let d = data(n);
            let cfg = StepConfig::new(0.01).unwrap();
            for seed in 0..5 {
                let s = MhdState::random(n, seed).unwrap();
                let special = axisym_step(&s, &d, &cfg).unwrap();
                let generic = generic_isospectral_step(&embed_a(&s), |m| b_map(m, &d), &cfg).unwrap();
                let unpacked = unpack_blocks(&generic);
                for (x, y) in special.fields().iter().zip(&unpacked) {
                    assert!(max_abs_diff(x.matrix(), y) < 1e-12, "n={n} seed={seed}");
                }
            }
        }
    }

    #[test]
    fn casimirs_preserved_per_step() {
        let n = 5;
        let d = data(n);
        let s = small_state(n, 12, 1.0);
        let cfg = StepConfig::new(0.01).unwrap();
        let out = axisym_step(&s, &d, &cfg).unwrap();
        let (a, b) = (casimirs_axisym(&s, n).unwrap(), casimirs_axisym(&out, n).unwrap());
        let all_a = a.c.iter().chain(&a.j).chain(&a.k);
        let all_b = b.c.iter().chain(&b.j).chain(&b.k);
        for (x, y) in all_a.zip(all_b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
        assert!((a.cross_helicity - b.cross_helicity).abs() <= 1e-12 * a.cross_helicity.abs().max(1.0));
    }

    #[test]
    fn step_is_consistent_with_rhs() {
        // A step of size h advances the scaled dynamics by ħh.
        let n = 5;
        let d = data(n);
        let s = small_state(n, 2, 0.5);
        let rhs = rhs_axisym(&s, &d).unwrap();
        let hbar = d.hbar().value();
        let mut prev = f64::INFINITY;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let out = axisym_step(&s, &d, &StepConfig::new(h).unwrap()).unwrap();
            let euler = MhdState {
                w: &s.w + &rhs.w.scale(h * hbar),
                p: &s.p + &rhs.p.scale(h * hbar),
                q: &s.q + &rhs.q.scale(h * hbar),
                xi: &s.xi + &rhs.xi.scale(h * hbar),
            };
            let err = out.max_abs_diff(&euler);
            assert!(err < prev / 3.0);
            prev = err;
        }
    }

    #[test]
    fn step_failure_reports_iterations() {
        let n = 4;
        let d = data(n);
        let s = small_state(n, 5, 1.0);
        let cfg = StepConfig::new(0.01).unwrap().with_tolerance(1e-14, 1).unwrap();
        match axisym_step(&s, &d, &cfg) {
            Err(Error::StepFailure { iterations, .. }) => assert_eq!(iterations, 1),
            other => panic!("expected step failure, got {other:?}"),
        }
        let big = StepConfig::new(50.0).unwrap();
        assert!(matches!(axisym_step(&s.scale(10.0), &d, &big), Err(Error::StepFailure { .. })));
    }

    #[test]
    fn single_step_trajectory_has_two_records() {
        let d = data(4);
        let s = small_state(4, 1, 1.0);
        let cfg = StepConfig::new(0.01).unwrap();
        let mut records = Vec::new();
        run_trajectory(&s, &d, &cfg, 0.01, 1, 4, &mut records).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].t, 0.0);
        assert_eq!(records[1].t, 0.01);
        assert!(run_trajectory(&s, &d, &cfg, 0.015, 1, 4, &mut Vec::new()).is_err());
    }

    #[test]
    fn sampling_includes_final_step() {
        let d = data(3);
        let s = small_state(3, 1, 1.0);
        let cfg = StepConfig::new(0.1).unwrap();
        let mut records = Vec::new();
        run_trajectory(&s, &d, &cfg, 0.7, 3, 2, &mut records).unwrap();
        let ts: Vec<usize> = records.iter().map(|r| (r.t / 0.1).round() as usize).collect();
        assert_eq!(ts, vec![0, 3, 6, 7]);
    }

    #[test]
    fn step_2d_preserves_theta_spectrum() {
        let n = 5;
        let d = data(n);
        let w = random_field(n, 1).unwrap();
        let theta = random_field(n, 2).unwrap();
        let cfg = StepConfig::new(0.02).unwrap();
        let (w1, t1) = step_2d(&w, &theta, &d, &cfg).unwrap();
        let (c0, i0) = crate::diagnostics::casimirs_2d(&w, &theta, n).unwrap();
        let (c1, i1) = crate::diagnostics::casimirs_2d(&w1, &t1, n).unwrap();
        for (x, y) in c0.iter().zip(&c1).chain(i0.iter().zip(&i1)) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        assert!(max_abs(w1.matrix()) > 0.0);
    }
}
