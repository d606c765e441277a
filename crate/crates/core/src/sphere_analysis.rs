//! Continuous-side evaluation on S²: quadrature, real spherical harmonics,
//! continuous Casimirs and the convergence studies of the quantized ones.

use std::f64::consts::{PI, SQRT_2};

use crate::diagnostics::{casimirs_axisym, hamiltonian_axisym};
use crate::dynamics::MhdState;
use crate::error::{Error, Result};
use crate::matrix_core::frobenius_pairing;
use crate::quantization::{
    build_generators, build_spectral_data, laplacian_eigenvalue, project_field, BandLimitedField,
    LaplacianSpectralData,
};

/// Gauss–Legendre nodes (ascending) and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Orthonormal associated Legendre values `p̄_l^m(x)` for `0 ≤ m ≤ l ≤ lmax`,
/// indexed `l(l+1)/2 + m`, such that `p̄_l^m(cos θ) e^{imφ}` has unit `L²`
/// norm on the sphere. No Condon–Shortley phase.
pub fn normalized_legendre(lmax: usize, x: f64) -> Vec<f64> {
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
    let s = (1.0 - x * x).max(0.0).sqrt();
    p[0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=lmax {
        let mf = m as f64;
        p[idx(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[idx(m - 1, m - 1)];
    }
    for m in 0..lmax {
        let mf = m as f64;
        p[idx(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * x * p[idx(m, m)];
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[idx(l, m)] = a * (x * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// Real orthonormal harmonic `Y_lm(θ, φ)`: cosine type for `m > 0`, sine type
/// for `m < 0`.
pub fn real_spherical_harmonic(l: usize, m: i64, cos_theta: f64, phi: f64) -> f64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let p = normalized_legendre(l, cos_theta)[l * (l + 1) / 2 + am];
    match m {
        0 => p,
        m if m > 0 => SQRT_2 * p * (m as f64 * phi).cos(),
        m => SQRT_2 * p * ((-m) as f64 * phi).sin(),
    }
}

/// Gauss–Legendre colatitudes times a uniform longitude grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    cos_theta: Vec<f64>,
    weights: Vec<f64>,
    n_phi: usize,
}

impl QuadratureGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature grid needs positive sizes, got {n_theta}x{n_phi}"
            )));
        }
        let (cos_theta, weights) = gauss_legendre(n_theta);
        Ok(QuadratureGrid {
            cos_theta,
            weights,
            n_phi,
        })
    }

    /// Smallest grid integrating every polynomial of degree `degree` exactly.
    pub fn for_degree(degree: usize) -> Self {
        let n_theta = degree / 2 + 1;
        QuadratureGrid::new(n_theta, degree + 1).expect("positive sizes")
    }

    pub fn n_theta(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Highest total degree integrated exactly.
    pub fn degree(&self) -> usize {
        (2 * self.n_theta() - 1).min(self.n_phi - 1)
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn phi(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_phi as f64
    }

    /// Values of `f(cos θ, φ)` at the nodes, colatitude-major.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &x in &self.cos_theta {
            for k in 0..self.n_phi {
                out.push(f(x, self.phi(k)));
            }
        }
        out
    }

    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        Error::check_dim(self.len(), values.len())?;
        let dphi = 2.0 * PI / self.n_phi as f64;
        let mut total = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            let row: f64 = values[i * self.n_phi..(i + 1) * self.n_phi].iter().sum();
            total += w * row;
        }
        Ok(total * dphi)
    }

    fn require_degree(&self, degree: usize) -> Result<()> {
        if self.degree() < degree {
            return Err(Error::InvalidArgument(format!(
                "quadrature grid exact to degree {} but degree {degree} is required",
                self.degree()
            )));
        }
        Ok(())
    }
}

/// Pointwise values of `Σ f^{lm} Y_lm` on the grid.
pub fn synthesize(f: &BandLimitedField, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    grid.require_degree(f.lmax())?;
    let lmax = f.lmax();
    let mut out = Vec::with_capacity(grid.len());
    let mut cos_part = vec![0.0; lmax + 1];
    let mut sin_part = vec![0.0; lmax + 1];
    for &x in grid.cos_theta() {
        let p = normalized_legendre(lmax, x);
        for m in 0..=lmax {
            let (mut c, mut s) = (0.0, 0.0);
            for l in m..=lmax {
                let pl = p[l * (l + 1) / 2 + m];
                c += f.get(l, m as i64) * pl;
                if m > 0 {
                    s += f.get(l, -(m as i64)) * pl;
                }
            }
            let scale = if m == 0 { 1.0 } else { SQRT_2 };
            cos_part[m] = c * scale;
            sin_part[m] = s * scale;
        }
        for k in 0..grid.n_phi() {
            let phi = grid.phi(k);
            let mut v = cos_part[0];
            for m in 1..=lmax {
                let (sn, cs) = (m as f64 * phi).sin_cos();
                v += cos_part[m] * cs + sin_part[m] * sn;
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// Coefficients up to `lmax` of grid values by quadrature. Exact when the
/// sampled field is band-limited and `lmax` plus its degree is within the
/// grid degree.
pub fn analyze(values: &[f64], grid: &QuadratureGrid, lmax: usize) -> Result<BandLimitedField> {
    Error::check_dim(grid.len(), values.len())?;
    let n_phi = grid.n_phi();
    if lmax >= n_phi.div_ceil(2) {
        return Err(Error::InvalidArgument(format!(
            "{n_phi} longitudes cannot resolve degree {lmax}"
        )));
    }
    let dphi = 2.0 * PI / n_phi as f64;
    let mut f = BandLimitedField::zeros(lmax);
    for (i, &x) in grid.cos_theta().iter().enumerate() {
        let row = &values[i * n_phi..(i + 1) * n_phi];
        let p = normalized_legendre(lmax, x);
        let w = grid.weights[i] * dphi;
        for m in 0..=lmax {
            let (mut c, mut s) = (0.0, 0.0);
            for (k, v) in row.iter().enumerate() {
                let (sn, cs) = (m as f64 * grid.phi(k)).sin_cos();
                c += v * cs;
                s += v * sn;
            }
            let scale = if m == 0 { w } else { w * SQRT_2 };
            for l in m..=lmax {
                let pl = p[l * (l + 1) / 2 + m] * scale;
                f.set(l, m as i64, f.get(l, m as i64) + c * pl);
                if m > 0 {
                    f.set(l, -(m as i64), f.get(l, -(m as i64)) + s * pl);
                }
            }
        }
    }
    Ok(f)
}

/// The four continuous fields `(ξ, ρ, q, ψ)` matching `(Ξ, P, Q, Ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    pub xi: BandLimitedField,
    pub rho: BandLimitedField,
    pub q: BandLimitedField,
    pub psi: BandLimitedField,
}

impl FieldSet {
    /// Four mean-zero random fields drawn with seeds `seed..seed+4`.
    pub fn random(lmax: usize, seed: u64) -> Self {
        FieldSet {
            xi: BandLimitedField::random(lmax, seed),
            rho: BandLimitedField::random(lmax, seed.wrapping_add(1)),
            q: BandLimitedField::random(lmax, seed.wrapping_add(2)),
            psi: BandLimitedField::random(lmax, seed.wrapping_add(3)),
        }
    }

    pub fn lmax(&self) -> usize {
        [&self.xi, &self.rho, &self.q, &self.psi]
            .iter()
            .map(|f| f.lmax())
            .max()
            .unwrap_or(0)
    }

    /// The quantized state `(W, P, Q, Ξ) = (Δ_N p(ψ), p(ρ), p(q), p(ξ))`.
    pub fn quantize(&self, data: &LaplacianSpectralData) -> Result<MhdState> {
        let psi = project_field(&self.psi, data)?;
        MhdState::new(
            data.apply_field(&psi)?,
            project_field(&self.rho, data)?,
            project_field(&self.q, data)?,
            project_field(&self.xi, data)?,
        )
    }
}

/// Continuous counterparts of the monitored Casimirs.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousCasimirs {
    pub c: Vec<f64>,
    pub j: Vec<f64>,
    pub k: Vec<f64>,
    pub cross_helicity: f64,
}

/// `C_m = ∫ξ^m`, `J_m = ∫ρξ^m`, `K_m = ∫qξ^m` and `I = ∫(ξΔψ − ρq)` by
/// quadrature.
pub fn continuous_casimirs(
    fields: &FieldSet,
    grid: &QuadratureGrid,
    m_max: usize,
) -> Result<ContinuousCasimirs> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be at least 1".into()));
    }
    grid.require_degree((m_max + 1) * fields.lmax())?;
    let xi = synthesize(&fields.xi, grid)?;
    let rho = synthesize(&fields.rho, grid)?;
    let q = synthesize(&fields.q, grid)?;
    let lap_psi = synthesize(&fields.psi.laplacian(), grid)?;

    let mut power = vec![1.0; grid.len()];
    let (mut c, mut j, mut k) = (Vec::new(), Vec::new(), Vec::new());
    let product = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
    for _ in 0..m_max {
        power = product(&power, &xi);
        c.push(grid.integrate(&power)?);
        j.push(grid.integrate(&product(&rho, &power))?);
        k.push(grid.integrate(&product(&q, &power))?);
    }
    let cross: Vec<f64> = (0..grid.len()).map(|i| xi[i] * lap_psi[i] - rho[i] * q[i]).collect();
    Ok(ContinuousCasimirs {
        c,
        j,
        k,
        cross_helicity: grid.integrate(&cross)?,
    })
}

/// `H = −½∫(ψΔψ − q²) − ½∫(ξΔξ − ρ²)`, evaluated coefficient-wise.
pub fn continuous_hamiltonian(fields: &FieldSet) -> f64 {
    let dirichlet = |f: &BandLimitedField| -> f64 {
        let mut s = 0.0;
        for l in 0..=f.lmax() {
            for m in -(l as i64)..=(l as i64) {
                s += laplacian_eigenvalue(l) * f.get(l, m).powi(2);
            }
        }
        s
    };
    let l2 = |f: &BandLimitedField| f.coeffs().iter().map(|c| c * c).sum::<f64>();
    -0.5 * (dirichlet(&fields.psi) - l2(&fields.q)) - 0.5 * (dirichlet(&fields.xi) - l2(&fields.rho))
}

/// Sign relating a reported trace of `factors` anti-Hermitian matrices to the
/// matching sphere integral: the trace equals `i^factors` times the integral.
pub fn dequantization_sign(factors: usize) -> f64 {
    match factors % 4 {
        0 | 1 => 1.0,
        _ => -1.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub quantity: String,
    pub quantized: f64,
    pub continuous: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub quantity: String,
    /// `None` when an error sits at rounding level and the fit is meaningless.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub slopes: Vec<SlopeFit>,
}

impl ConvergenceTable {
    pub fn slope(&self, quantity: &str) -> Option<f64> {
        self.slopes
            .iter()
            .find(|s| s.quantity == quantity)
            .and_then(|s| s.slope)
    }

    pub fn errors(&self, quantity: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| (r.n, r.abs_error))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,quantity,quantized,continuous,abs_error\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e}\n",
                r.n, r.quantity, r.quantized, r.continuous, r.abs_error
            ));
        }
        s
    }

    pub fn slopes_text(&self) -> String {
        let mut s = String::from("quantity slope\n");
        for f in &self.slopes {
            match f.slope {
                Some(v) => s.push_str(&format!("{} {:.4}\n", f.quantity, v)),
                None => s.push_str(&format!("{} n/a (rounding level)\n", f.quantity)),
            }
        }
        s
    }

    fn fit_slopes(&mut self, rounding: impl Fn(&str, f64) -> bool) {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.quantity) {
                names.push(r.quantity.clone());
            }
        }
        self.slopes = names
            .into_iter()
            .map(|q| {
                let pts: Vec<&ConvergenceRow> = self.rows.iter().filter(|r| r.quantity == q).collect();
                let usable = pts.len() >= 2 && pts.iter().all(|r| !rounding(&q, r.abs_error) && r.abs_error > 0.0);
                let slope = usable.then(|| {
                    let xs: Vec<f64> = pts.iter().map(|r| (r.n as f64).ln()).collect();
                    let ys: Vec<f64> = pts.iter().map(|r| r.abs_error.ln()).collect();
                    least_squares_slope(&xs, &ys)
                });
                SlopeFit { quantity: q, slope }
            })
            .collect();
    }
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Errors below this multiple of the continuous value are rounding noise.
const ROUNDING_LEVEL: f64 = 1e-12;

fn spectral_data(n: usize) -> Result<LaplacianSpectralData> {
    build_spectral_data(&build_generators(n)?)
}

/// Quantized versus continuous Casimirs, cross-helicity and Hamiltonian for
/// each `N`, with log-log slopes of the absolute errors.
pub fn convergence_study(fields: &FieldSet, n_list: &[usize], m_max: usize) -> Result<ConvergenceTable> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("n_list is empty".into()));
    }
    let lmax = fields.lmax();
    if let Some(&bad) = n_list.iter().find(|&&n| n <= lmax) {
        return Err(Error::InvalidArgument(format!(
            "every N must exceed the field degree {lmax}, got {bad}"
        )));
    }
    if let Some(&small) = n_list.iter().find(|&&n| n < m_max) {
        return Err(Error::InvalidArgument(format!("m_max = {m_max} exceeds N = {small}")));
    }
    let grid = QuadratureGrid::for_degree((m_max + 1) * lmax);
    let cont = continuous_casimirs(fields, &grid, m_max)?;
    let h_cont = continuous_hamiltonian(fields);

    let mut table = ConvergenceTable::default();
    for &n in n_list {
        let data = spectral_data(n)?;
        let state = fields.quantize(&data)?;
        let quant = casimirs_axisym(&state, m_max)?;
        let mut push = |quantity: String, quantized: f64, continuous: f64| {
            table.rows.push(ConvergenceRow {
                n,
                quantity,
                quantized,
                continuous,
                abs_error: (quantized - continuous).abs(),
            });
        };
        for m in 1..=m_max {
            push(format!("C_{m}"), dequantization_sign(m) * quant.c[m - 1], cont.c[m - 1]);
        }
        for m in 1..=m_max {
            push(format!("J_{m}"), dequantization_sign(m + 1) * quant.j[m - 1], cont.j[m - 1]);
        }
        for m in 1..=m_max {
            push(format!("K_{m}"), dequantization_sign(m + 1) * quant.k[m - 1], cont.k[m - 1]);
        }
        push(
            "crosshel".into(),
            dequantization_sign(2) * quant.cross_helicity,
            cont.cross_helicity,
        );
        push("H".into(), -hamiltonian_axisym(&state, &data)?, h_cont);
    }
    let scales: Vec<(String, f64)> = table
        .rows
        .iter()
        .map(|r| (r.quantity.clone(), r.continuous.abs().max(1.0)))
        .collect();
    table.fit_slopes(|q, err| {
        let scale = scales.iter().find(|(name, _)| name == q).map_or(1.0, |(_, s)| *s);
        err <= ROUNDING_LEVEL * scale
    });
    Ok(table)
}

/// `⟨p_N f, p_N g⟩_F` against `∫ f g` for mean-free smooth fields given
/// pointwise as functions of `(cos θ, φ)`. Coefficients are taken by
/// quadrature on `grid` and truncated to degree `N − 1`.
pub fn pairing_convergence(
    f: impl Fn(f64, f64) -> f64,
    g: impl Fn(f64, f64) -> f64,
    n_list: &[usize],
    grid: &QuadratureGrid,
) -> Result<ConvergenceTable> {
    let n_max = *n_list
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("n_list is empty".into()))?;
    if n_list.iter().any(|&n| n < 2) {
        return Err(Error::InvalidArgument("every N must be at least 2".into()));
    }
    grid.require_degree(2 * n_max)?;
    let mean_free = |vals: Vec<f64>| -> Result<Vec<f64>> {
        let mean = grid.integrate(&vals)? / (4.0 * PI);
        Ok(vals.into_iter().map(|v| v - mean).collect())
    };
    let fv = mean_free(grid.sample(&f))?;
    let gv = mean_free(grid.sample(&g))?;
    let fg: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| a * b).collect();
    let continuous = grid.integrate(&fg)?;
    let fc = analyze(&fv, grid, n_max - 1)?;
    let gc = analyze(&gv, grid, n_max - 1)?;

    let mut table = ConvergenceTable::default();
    for &n in n_list {
        let data = spectral_data(n)?;
        let truncate = |src: &BandLimitedField| {
            let mut out = BandLimitedField::zeros(n - 1);
            for l in 1..n {
                for m in -(l as i64)..=(l as i64) {
                    out.set(l, m, src.get(l, m));
                }
            }
            out
        };
        let pf = project_field(&truncate(&fc), &data)?;
        let pg = project_field(&truncate(&gc), &data)?;
        let quantized = frobenius_pairing(&pf, &pg)?;
        table.rows.push(ConvergenceRow {
            n,
            quantity: "pairing".into(),
            quantized,
            continuous,
            abs_error: (quantized - continuous).abs(),
        });
    }
    let scale = continuous.abs().max(1.0);
    table.fit_slopes(|_, err| err <= ROUNDING_LEVEL * scale);
    Ok(table)
}

/// `1/(a − n·x)` for a unit vector `n` at colatitude `tilt` and longitude
/// `azimuth`: analytic on the sphere for `a > 1`.
pub fn near_pole_field(a: f64, tilt: f64, azimuth: f64) -> impl Fn(f64, f64) -> f64 {
    let (st, ct) = tilt.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    move |cos_theta: f64, phi: f64| {
        let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        let (sp, cp) = phi.sin_cos();
        let dot = st * ca * sin_theta * cp + st * sa * sin_theta * sp + ct * cos_theta;
        1.0 / (a - dot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantization::reconstruct_coeffs;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for k in 0..=11 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum();
            assert!((q - exact).abs() < 1e-14, "k={k}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn grid_area_is_four_pi() {
        let g = QuadratureGrid::new(7, 9).unwrap();
        let area = g.integrate(&vec![1.0; g.len()]).unwrap();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        assert_eq!(g.degree(), 8);
        assert!(QuadratureGrid::new(0, 3).is_err());
    }

    #[test]
    fn harmonics_are_orthonormal_on_grid() {
        let lmax = 5;
        let g = QuadratureGrid::for_degree(2 * lmax);
        let mut basis = Vec::new();
        for l in 0..=lmax {
            for m in -(l as i64)..=(l as i64) {
                basis.push(g.sample(|x, phi| real_spherical_harmonic(l, m, x, phi)));
            }
        }
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
                let v = g.integrate(&prod).unwrap();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12, "{i},{j}: {v}");
            }
        }
    }

    #[test]
    fn low_degree_closed_forms() {
        let (x, phi) = (0.3_f64, 1.1_f64);
        let s = (1.0 - x * x).sqrt();
        let y10 = (3.0 / (4.0 * PI)).sqrt() * x;
        let y11 = (3.0 / (4.0 * PI)).sqrt() * s * phi.cos();
        let y1m1 = (3.0 / (4.0 * PI)).sqrt() * s * phi.sin();
        assert!((real_spherical_harmonic(1, 0, x, phi) - y10).abs() < 1e-15);
        assert!((real_spherical_harmonic(1, 1, x, phi) - y11).abs() < 1e-15);
        assert!((real_spherical_harmonic(1, -1, x, phi) - y1m1).abs() < 1e-15);
    }

    #[test]
    fn synthesize_single_harmonics() {
        let g = QuadratureGrid::for_degree(4);
        let mut f = BandLimitedField::zeros(2);
        assert!(synthesize(&f, &g).unwrap().iter().all(|v| *v == 0.0));
        f.set(1, 0, 1.0);
        let v = synthesize(&f, &g).unwrap();
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        assert!((g.integrate(&sq).unwrap() - 1.0).abs() < 1e-12);
        let mut h = BandLimitedField::zeros(2);
        h.set(2, 0, 1.0);
        let w = synthesize(&h, &g).unwrap();
        let cross: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a * b).collect();
        assert!(g.integrate(&cross).unwrap().abs() < 1e-12);
        assert!(synthesize(&BandLimitedField::zeros(9), &g).is_err());
    }

    #[test]
    fn analysis_inverts_synthesis() {
        let f = BandLimitedField::random(6, 4);
        let g = QuadratureGrid::for_degree(12);
        let back = analyze(&synthesize(&f, &g).unwrap(), &g, 6).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn continuous_casimirs_of_simple_fields() {
        let lmax = 1;
        let zero = BandLimitedField::zeros(lmax);
        let mut y10 = BandLimitedField::zeros(lmax);
        y10.set(1, 0, 1.0);
        let g = QuadratureGrid::for_degree(8);
        let zeros = FieldSet { xi: zero.clone(), rho: zero.clone(), q: zero.clone(), psi: zero.clone() };
        let c = continuous_casimirs(&zeros, &g, 3).unwrap();
        assert!(c.c.iter().chain(&c.j).chain(&c.k).all(|v| *v == 0.0));
        let fs = FieldSet { xi: y10.clone(), rho: zero.clone(), q: zero, psi: y10 };
        let c = continuous_casimirs(&fs, &g, 3).unwrap();
        assert!((c.c[1] - 1.0).abs() < 1e-12);
        assert!((c.cross_helicity + 2.0).abs() < 1e-12);
        assert!(continuous_casimirs(&fs, &QuadratureGrid::for_degree(2), 3).is_err());
    }

    #[test]
    fn quantized_and_continuous_agree_on_quadratics() {
        // Quadratic invariants of band-limited fields are reproduced exactly.
        let fields = FieldSet::random(3, 10);
        let t = convergence_study(&fields, &[6, 9], 3).unwrap();
        for q in ["C_2", "J_1", "K_1", "crosshel", "H"] {
            for (_, e) in t.errors(q) {
                assert!(e < 1e-10, "{q}: {e}");
            }
            assert_eq!(t.slope(q), None);
        }
    }

    #[test]
    fn projection_uses_matching_convention() {
        let f = BandLimitedField::random(3, 1);
        let data = spectral_data(7).unwrap();
        let back = reconstruct_coeffs(&project_field(&f, &data).unwrap(), &data).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn cubic_casimir_error_decays() {
        let fields = FieldSet::random(2, 3);
        let t = convergence_study(&fields, &[4, 8, 16], 3).unwrap();
        let slope = t.slope("C_3").expect("C_3 error above rounding");
        assert!(slope < -0.8, "slope {slope}");
        let again = convergence_study(&fields, &[4, 8, 16], 3).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn study_rejects_small_n() {
        let fields = FieldSet::random(4, 0);
        assert!(convergence_study(&fields, &[4, 8], 3).is_err());
        assert!(convergence_study(&fields, &[], 3).is_err());
    }

    #[test]
    fn smooth_pairing_converges_quickly() {
        let f = near_pole_field(1.2, 0.7, 0.3);
        let g = near_pole_field(1.3, 1.9, -0.8);
        let grid = QuadratureGrid::new(80, 160).unwrap();
        let t = pairing_convergence(f, g, &[4, 8, 16], &grid).unwrap();
        let errs = t.errors("pairing");
        assert!(errs.windows(2).all(|w| w[1].1 < w[0].1));
        assert!(t.slope("pairing").unwrap() < -1.5);
    }
}
