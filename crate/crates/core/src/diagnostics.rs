//! Conserved quantities, spectrum tracking and drift summaries.
//!
//! A trace of `k` anti-Hermitian factors is real for even `k` and purely
//! imaginary for odd `k`. Every trace below is reported through its
//! nonvanishing part: `Re` for an even factor count, `Im` for an odd one.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use crate::dynamics::MhdState;
use crate::error::{Error, Result};
use crate::matrix_core::{CMatrix, QuantizedField, C64};
use crate::quantization::LaplacianSpectralData;

/// Which component of a trace carries its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracePart {
    Re,
    Im,
}

impl TracePart {
    /// Part carried by a trace of `factors` anti-Hermitian matrices.
    pub fn for_factors(factors: usize) -> Self {
        if factors.is_multiple_of(2) {
            TracePart::Re
        } else {
            TracePart::Im
        }
    }

    pub fn take(self, z: C64) -> f64 {
        match self {
            TracePart::Re => z.re,
            TracePart::Im => z.im,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TracePart::Re => "re",
            TracePart::Im => "im",
        }
    }
}

fn traced(factors: usize, z: C64, n: usize) -> f64 {
    TracePart::for_factors(factors).take(z) * (4.0 * PI / n as f64)
}

fn check_m_max(m_max: usize, n: usize) -> Result<()> {
    if m_max == 0 || m_max > n {
        return Err(Error::InvalidArgument(format!(
            "m_max must lie in 1..={n}, got {m_max}"
        )));
    }
    Ok(())
}

/// `tr(AB)` without forming the product.
fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Casimir values `C_m`, `J_m`, `K_m` for `m = 1..=m_max` and the
/// cross-helicity.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirSet {
    pub c: Vec<f64>,
    pub j: Vec<f64>,
    pub k: Vec<f64>,
    pub cross_helicity: f64,
}

/// `H = −(2π/N) tr(ΨW − Q²) − (2π/N) tr(ΞΔΞ − P²)` with `Ψ = Δ⁻¹W`.
pub fn hamiltonian_axisym(s: &MhdState, data: &LaplacianSpectralData) -> Result<f64> {
    Error::check_dim(data.n(), s.n())?;
    let n = s.n();
    let psi = data.invert(&s.w)?;
    let (q, p, xi) = (s.q.matrix(), s.p.matrix(), s.xi.matrix());
    let lap_xi = data.apply(xi);
    let t = trace_of_product(psi.matrix(), s.w.matrix()) - trace_of_product(q, q)
        + trace_of_product(xi, &lap_xi)
        - trace_of_product(p, p);
    Ok(-(2.0 * PI / n as f64) * t.re)
}

/// `C_m = (4π/N) tr(Ξ^m)`, `J_m = (4π/N) tr(PΞ^m)`, `K_m = (4π/N) tr(QΞ^m)`
/// and `I = (4π/N) tr(ΞW − PQ)`.
pub fn casimirs_axisym(s: &MhdState, m_max: usize) -> Result<CasimirSet> {
    let n = s.n();
    check_m_max(m_max, n)?;
    let (w, p, q, xi) = (s.w.matrix(), s.p.matrix(), s.q.matrix(), s.xi.matrix());
    let mut c = Vec::with_capacity(m_max);
    let mut j = Vec::with_capacity(m_max);
    let mut k = Vec::with_capacity(m_max);
    let mut power = xi.clone();
    for m in 1..=m_max {
        if m > 1 {
            power = &power * xi;
        }
        c.push(traced(m, power.trace(), n));
        j.push(traced(m + 1, trace_of_product(p, &power), n));
        k.push(traced(m + 1, trace_of_product(q, &power), n));
    }
    let cross = trace_of_product(xi, w) - trace_of_product(p, q);
    Ok(CasimirSet {
        c,
        j,
        k,
        cross_helicity: traced(2, cross, n),
    })
}

/// `C_m = (4π/N) tr(Θ^m)` and `I_m = (4π/N) tr(WΘ^m)` for the 2D system.
pub fn casimirs_2d(
    w: &QuantizedField,
    theta: &QuantizedField,
    m_max: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Error::check_dim(w.n(), theta.n())?;
    let n = w.n();
    check_m_max(m_max, n)?;
    let mut c = Vec::with_capacity(m_max);
    let mut i = Vec::with_capacity(m_max);
    let mut power = theta.matrix().clone();
    for m in 1..=m_max {
        if m > 1 {
            power = &power * theta.matrix();
        }
        c.push(traced(m, power.trace(), n));
        i.push(traced(m + 1, trace_of_product(w.matrix(), &power), n));
    }
    Ok((c, i))
}

/// Sorted imaginary parts of the eigenvalues of an anti-Hermitian matrix.
///
/// Values are matched across time by sort order. The exact flow is
/// isospectral, so near-degenerate numerical crossings only swap equal values
/// and leave the drift of the sorted sequence meaningful.
pub fn xi_spectrum(xi: &QuantizedField) -> Vec<f64> {
    let herm = xi.matrix() * C64::new(0.0, -1.0);
    let herm = (&herm + herm.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// All monitored scalars of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub xi_eigenvalues: Vec<f64>,
    pub c: Vec<f64>,
    pub j: Vec<f64>,
    pub k: Vec<f64>,
    pub cross_helicity: f64,
    pub hamiltonian: f64,
}

impl DiagnosticsRecord {
    pub fn evaluate(
        t: f64,
        s: &MhdState,
        data: &LaplacianSpectralData,
        m_max: usize,
    ) -> Result<Self> {
        let cas = casimirs_axisym(s, m_max)?;
        Ok(DiagnosticsRecord {
            t,
            xi_eigenvalues: xi_spectrum(&s.xi),
            c: cas.c,
            j: cas.j,
            k: cas.k,
            cross_helicity: cas.cross_helicity,
            hamiltonian: hamiltonian_axisym(s, data)?,
        })
    }

    pub fn m_max(&self) -> usize {
        self.c.len()
    }

    /// `(name, value)` pairs in CSV column order, excluding `t`.
    pub fn named_values(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (i, v) in self.xi_eigenvalues.iter().enumerate() {
            out.push((format!("lambda_{}", i + 1), *v));
        }
        for (prefix, series) in [("C", &self.c), ("J", &self.j), ("K", &self.k)] {
            for (i, v) in series.iter().enumerate() {
                out.push((format!("{prefix}_{}", i + 1), *v));
            }
        }
        out.push(("crosshel".to_string(), self.cross_helicity));
        out.push(("H".to_string(), self.hamiltonian));
        out
    }

    pub fn csv_row(&self) -> String {
        let mut row = fmt_f64(self.t);
        for (_, v) in self.named_values() {
            row.push(',');
            row.push_str(&fmt_f64(v));
        }
        row
    }
}

/// Seventeen significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header(n: usize, m_max: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("lambda_{i}")));
    for prefix in ["C", "J", "K"] {
        cols.extend((1..=m_max).map(|i| format!("{prefix}_{i}")));
    }
    cols.push("crosshel".into());
    cols.push("H".into());
    cols.join(",")
}

/// Part (`re`/`im`) carrying the value of a named column.
pub fn column_part(name: &str) -> TracePart {
    let index = |s: &str| s.parse::<usize>().unwrap_or(0);
    if let Some(m) = name.strip_prefix("C_") {
        TracePart::for_factors(index(m))
    } else if let Some(m) = name.strip_prefix("J_").or_else(|| name.strip_prefix("K_")) {
        TracePart::for_factors(index(m) + 1)
    } else {
        TracePart::Re
    }
}

/// Receives records in time order from the stepping loop.
pub trait DiagnosticsSink {
    fn accept(&mut self, record: DiagnosticsRecord) -> Result<()>;
}

impl DiagnosticsSink for Vec<DiagnosticsRecord> {
    fn accept(&mut self, record: DiagnosticsRecord) -> Result<()> {
        self.push(record);
        Ok(())
    }
}

/// Streams records as CSV rows, writing the header before the first row.
pub struct CsvSink<W: Write> {
    out: W,
    header_written: bool,
    records: Vec<DiagnosticsRecord>,
    keep: bool,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Self {
        CsvSink {
            out,
            header_written: false,
            records: Vec::new(),
            keep: false,
        }
    }

    /// Also retains every record for a later drift report.
    pub fn retaining(out: W) -> Self {
        CsvSink {
            keep: true,
            ..CsvSink::new(out)
        }
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn finish(mut self) -> std::io::Result<(W, Vec<DiagnosticsRecord>)> {
        self.out.flush()?;
        Ok((self.out, self.records))
    }

    fn write_record(&mut self, r: &DiagnosticsRecord) -> std::io::Result<()> {
        if !self.header_written {
            writeln!(self.out, "{}", csv_header(r.xi_eigenvalues.len(), r.m_max()))?;
            self.header_written = true;
        }
        writeln!(self.out, "{}", r.csv_row())
    }
}

impl<W: Write> DiagnosticsSink for CsvSink<W> {
    fn accept(&mut self, record: DiagnosticsRecord) -> Result<()> {
        self.write_record(&record)
            .map_err(|e| Error::io("diagnostics.csv", e))?;
        if self.keep {
            self.records.push(record);
        }
        Ok(())
    }
}

/// Drift of one monitored scalar over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftRow {
    pub name: String,
    pub part: TracePart,
    pub initial: f64,
    pub max_abs_drift: f64,
    pub final_abs_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSummary {
    pub rows: Vec<DriftRow>,
    pub records: usize,
    pub t_final: f64,
    pub hamiltonian_max_rel: f64,
    pub hamiltonian_final_rel: f64,
}

impl DriftSummary {
    pub fn row(&self, name: &str) -> Option<&DriftRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Largest drift over rows whose name satisfies `select`.
    pub fn max_drift(&self, select: impl Fn(&str) -> bool) -> f64 {
        self.rows
            .iter()
            .filter(|r| select(&r.name))
            .map(|r| r.max_abs_drift)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,part,initial,max_abs_drift,final_abs_drift,max_rel_drift\n");
        for r in &self.rows {
            let rel = if r.name == "H" {
                fmt_f64(self.hamiltonian_max_rel)
            } else {
                String::new()
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.name,
                r.part.label(),
                fmt_f64(r.initial),
                fmt_f64(r.max_abs_drift),
                fmt_f64(r.final_abs_drift),
                rel
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "records: {}   t_final: {}", self.records, self.t_final);
        let _ = writeln!(
            s,
            "{:<12} {:>4} {:>24} {:>12} {:>12}",
            "quantity", "part", "initial", "max |drift|", "final |drift|"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:>4} {:>24.16e} {:>12.3e} {:>12.3e}",
                r.name,
                r.part.label(),
                r.initial,
                r.max_abs_drift,
                r.final_abs_drift
            );
        }
        let _ = writeln!(
            s,
            "Hamiltonian relative error: max {:.3e}, final {:.3e}",
            self.hamiltonian_max_rel, self.hamiltonian_final_rel
        );
        s
    }
}

/// Per-scalar `max |value(t) − value(0)|`, plus the relative Hamiltonian error.
pub fn drift_report(records: &[DiagnosticsRecord]) -> Result<DriftSummary> {
    if records.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "drift report needs at least two records, got {}",
            records.len()
        )));
    }
    let first = records[0].named_values();
    let last = records[records.len() - 1].named_values();
    let mut rows: Vec<DriftRow> = first
        .iter()
        .zip(&last)
        .map(|((name, v0), (_, v_end))| DriftRow {
            name: name.clone(),
            part: column_part(name),
            initial: *v0,
            max_abs_drift: 0.0,
            final_abs_drift: (v_end - v0).abs(),
        })
        .collect();
    for r in records {
        let values = r.named_values();
        if values.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                found: values.len(),
            });
        }
        for (row, (_, v)) in rows.iter_mut().zip(values) {
            row.max_abs_drift = row.max_abs_drift.max((v - row.initial).abs());
        }
    }
    let h0 = records[0].hamiltonian;
    let rel = |h: f64| {
        if h0 == 0.0 {
            (h - h0).abs()
        } else {
            ((h - h0) / h0).abs()
        }
    };
    let hamiltonian_max_rel = records.iter().map(|r| rel(r.hamiltonian)).fold(0.0, f64::max);
    Ok(DriftSummary {
        rows,
        records: records.len(),
        t_final: records[records.len() - 1].t,
        hamiltonian_max_rel,
        hamiltonian_final_rel: rel(records[records.len() - 1].hamiltonian),
    })
}

/// Dense real eigenvalues of a Hermitian matrix, used by tests as an oracle.
#[cfg(test)]
fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
fn naive_power(a: &CMatrix, m: usize) -> CMatrix {
    let mut out = CMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..m {
        out = &out * a;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::random_field;
    use crate::quantization::{build_generators, build_spectral_data, matrix_harmonic_wigner};

    fn data(n: usize) -> LaplacianSpectralData {
        build_spectral_data(&build_generators(n).unwrap()).unwrap()
    }

    fn i_t10(n: usize) -> QuantizedField {
        QuantizedField::new(matrix_harmonic_wigner(n, 1, 0).unwrap() * C64::new(0.0, 1.0)).unwrap()
    }

    #[test]
    fn zero_state_gives_zeros() {
        let d = data(5);
        let s = MhdState::zeros(5);
        assert_eq!(hamiltonian_axisym(&s, &d).unwrap(), 0.0);
        let c = casimirs_axisym(&s, 5).unwrap();
        assert!(c.c.iter().chain(&c.j).chain(&c.k).all(|v| *v == 0.0));
        assert_eq!(c.cross_helicity, 0.0);
        let z = QuantizedField::zeros(5);
        let (a, b) = casimirs_2d(&z, &z, 3).unwrap();
        assert!(a.iter().chain(&b).all(|v| *v == 0.0));
    }

    #[test]
    fn hamiltonian_of_single_harmonic() {
        let n = 6;
        let d = data(n);
        let mut s = MhdState::zeros(n);
        s.w = i_t10(n).scale(-2.0);
        let h = hamiltonian_axisym(&s, &d).unwrap();
        assert!((h + 4.0 * PI / n as f64).abs() < 1e-13);
    }

    fn random_unitary(n: usize, seed: u64) -> CMatrix {
        let g = random_field(n, seed).unwrap().into_matrix() + CMatrix::identity(n, n);
        g.qr().q()
    }

    #[test]
    fn casimirs_are_unitarily_invariant() {
        let n = 5;
        let s = MhdState::random(n, 4).unwrap();
        let u = random_unitary(n, 77);
        let conj = |f: &QuantizedField| f.conjugate_by(&u);
        let rotated = MhdState::new(conj(&s.w), conj(&s.p), conj(&s.q), conj(&s.xi)).unwrap();
        let a = casimirs_axisym(&s, n).unwrap();
        let b = casimirs_axisym(&rotated, n).unwrap();
        let pairs = a.c.iter().zip(&b.c).chain(a.j.iter().zip(&b.j)).chain(a.k.iter().zip(&b.k));
        for (x, y) in pairs {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        assert!((a.cross_helicity - b.cross_helicity).abs() <= 1e-12 * a.cross_helicity.abs().max(1.0));
    }

    #[test]
    fn hamiltonian_changes_under_generic_unitary() {
        // Δ_N commutes only with conjugation by the spin rotation group.
        let n = 5;
        let d = data(n);
        let s = MhdState::random(n, 4).unwrap();
        let u = random_unitary(n, 77);
        let conj = |f: &QuantizedField| f.conjugate_by(&u);
        let rotated = MhdState::new(conj(&s.w), conj(&s.p), conj(&s.q), conj(&s.xi)).unwrap();
        let h0 = hamiltonian_axisym(&s, &d).unwrap();
        let h1 = hamiltonian_axisym(&rotated, &d).unwrap();
        assert!((h0 - h1).abs() > 1e-6 * h0.abs());
    }

    #[test]
    fn hamiltonian_is_invariant_under_spin_rotation() {
        // exp of a generator commutes with Δ_N, so H is exactly invariant.
        let n = 5;
        let d = data(n);
        let g = build_generators(n).unwrap();
        let herm = g.x1() * C64::new(0.7, 0.0) + g.x3() * C64::new(-0.4, 0.0);
        let eig = herm.clone().symmetric_eigen();
        let phases = CMatrix::from_diagonal(
            &eig.eigenvalues.map(|v| C64::new(0.0, 1.3 * v).exp()),
        );
        let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        let s = MhdState::random(n, 9).unwrap();
        let r = MhdState::new(
            s.w.conjugate_by(&u),
            s.p.conjugate_by(&u),
            s.q.conjugate_by(&u),
            s.xi.conjugate_by(&u),
        )
        .unwrap();
        let h0 = hamiltonian_axisym(&s, &d).unwrap();
        let h1 = hamiltonian_axisym(&r, &d).unwrap();
        assert!((h0 - h1).abs() <= 1e-12 * h0.abs());
    }

    #[test]
    fn c2_of_normalized_harmonic() {
        let n = 7;
        let mut s = MhdState::zeros(n);
        s.xi = i_t10(n).scale((n as f64 / (4.0 * PI)).sqrt());
        let c = casimirs_axisym(&s, 3).unwrap();
        assert!((c.c[1] + 1.0).abs() < 1e-13);
        assert!(c.c[0].abs() < 1e-13);
    }

    #[test]
    fn cross_helicity_of_harmonic_pair() {
        let n = 6;
        let d = data(n);
        let mut s = MhdState::zeros(n);
        s.xi = i_t10(n);
        s.w = d.apply_field(&i_t10(n)).unwrap();
        let c = casimirs_axisym(&s, 2).unwrap();
        assert!((c.cross_helicity - 8.0 * PI / n as f64).abs() < 1e-13);
    }

    #[test]
    fn casimirs_match_naive_powers() {
        let n = 6;
        let s = MhdState::random(n, 21).unwrap();
        let c = casimirs_axisym(&s, n).unwrap();
        let f = 4.0 * PI / n as f64;
        for m in 1..=n {
            let xm = naive_power(s.xi.matrix(), m);
            let part = TracePart::for_factors(m);
            let part1 = TracePart::for_factors(m + 1);
            let cm = f * part.take(xm.trace());
            let jm = f * part1.take((s.p.matrix() * &xm).trace());
            let km = f * part1.take((s.q.matrix() * &xm).trace());
            let tol = |v: f64| 1e-13 * v.abs().max(1.0);
            assert!((c.c[m - 1] - cm).abs() <= tol(cm), "C_{m}");
            assert!((c.j[m - 1] - jm).abs() <= tol(jm), "J_{m}");
            assert!((c.k[m - 1] - km).abs() <= tol(km), "K_{m}");
        }
        let ih = f * ((s.xi.matrix() * s.w.matrix()).trace() - (s.p.matrix() * s.q.matrix()).trace()).re;
        assert!((c.cross_helicity - ih).abs() <= 1e-13 * ih.abs().max(1.0));
    }

    #[test]
    fn casimirs_2d_on_diagonal_theta() {
        let n = 5;
        let mut m = CMatrix::zeros(n, n);
        let vals = [0.3, -1.1, 0.5, 0.9, -0.6];
        for (i, v) in vals.iter().enumerate() {
            m[(i, i)] = C64::new(0.0, *v);
        }
        let theta = QuantizedField::new(m).unwrap();
        let (c, _) = casimirs_2d(&random_field(n, 1).unwrap(), &theta, n).unwrap();
        for mm in 1..=n {
            let z: C64 = vals.iter().map(|v| C64::new(0.0, *v).powu(mm as u32)).sum();
            let expected = 4.0 * PI / n as f64 * TracePart::for_factors(mm).take(z);
            assert!((c[mm - 1] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn m_max_range_is_checked() {
        let s = MhdState::zeros(4);
        assert!(casimirs_axisym(&s, 0).is_err());
        assert!(casimirs_axisym(&s, 5).is_err());
    }

    #[test]
    fn spectrum_is_sorted_and_matches_oracle() {
        let xi = random_field(6, 2).unwrap();
        let ev = xi_spectrum(&xi);
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        let oracle = hermitian_eigenvalues(&(xi.matrix() * C64::new(0.0, -1.0)));
        for (a, b) in ev.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(ev.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            csv_header(2, 2),
            "t,lambda_1,lambda_2,C_1,C_2,J_1,J_2,K_1,K_2,crosshel,H"
        );
        assert_eq!(column_part("C_3"), TracePart::Im);
        assert_eq!(column_part("J_1"), TracePart::Re);
        assert_eq!(column_part("K_2"), TracePart::Im);
        assert_eq!(column_part("H"), TracePart::Re);
    }

    #[test]
    fn drift_of_identical_records_is_zero() {
        let d = data(4);
        let s = MhdState::random(4, 3).unwrap();
        let r = DiagnosticsRecord::evaluate(0.0, &s, &d, 4).unwrap();
        let rep = drift_report(&[r.clone(), r.clone()]).unwrap();
        assert!(rep.rows.iter().all(|row| row.max_abs_drift == 0.0));
        assert_eq!(rep.hamiltonian_max_rel, 0.0);
        assert!(drift_report(&[r]).is_err());
        assert!(drift_report(&[]).is_err());
    }

    #[test]
    fn appending_first_record_keeps_drift() {
        let d = data(4);
        let r0 = DiagnosticsRecord::evaluate(0.0, &MhdState::random(4, 1).unwrap(), &d, 3).unwrap();
        let mut r1 = DiagnosticsRecord::evaluate(1.0, &MhdState::random(4, 2).unwrap(), &d, 3).unwrap();
        r1.t = 1.0;
        let a = drift_report(&[r0.clone(), r1.clone()]).unwrap();
        let b = drift_report(&[r0.clone(), r1, r0]).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.max_abs_drift, y.max_abs_drift);
        }
    }

    #[test]
    fn csv_sink_writes_header_once() {
        let d = data(3);
        let s = MhdState::random(3, 1).unwrap();
        let mut sink = CsvSink::new(Vec::new());
        for t in [0.0, 0.5] {
            sink.accept(DiagnosticsRecord::evaluate(t, &s, &d, 3).unwrap()).unwrap();
        }
        let (bytes, _) = sink.finish().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], csv_header(3, 3));
        assert_eq!(lines[1].split(',').count(), 1 + 3 + 9 + 2);
        assert!(lines[2].starts_with("5.0000000000000000e-1,"));
    }
}
