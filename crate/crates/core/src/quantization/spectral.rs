use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ladder_coefficient, SpinGenerators};
use crate::error::{Error, Result};
use crate::matrix_core::{max_abs_diff, CMatrix, Hbar, QuantizedField, C64};

/// Orthonormal eigenbasis of `Δ_N` restricted to one diagonal offset `m ≥ 0`.
///
/// Column `k` of `vectors` holds the entries `(i, i+m)` of the eigenmatrix with
/// degree `l = m + k` and eigenvalue `−l(l+1)`. Offset `−m` uses the same
/// vectors on the entries `(i+m, i)`.
#[derive(Debug, Clone)]
pub struct OffsetEigenbasis {
    pub offset: usize,
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl OffsetEigenbasis {
    pub fn degree(&self, k: usize) -> usize {
        self.offset + k
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Precomputed spectral decomposition of the Hoppe–Yau Laplacian for one N.
#[derive(Debug, Clone)]
pub struct LaplacianSpectralData {
    hbar: Hbar,
    casimir: f64,
    mu: Vec<f64>,
    ladder: Vec<f64>,
    offsets: Vec<OffsetEigenbasis>,
}

fn diag_get(a: &CMatrix, m: isize) -> Vec<C64> {
    let n = a.nrows();
    let k = m.unsigned_abs();
    (0..n - k)
        .map(|i| if m >= 0 { a[(i, i + k)] } else { a[(i + k, i)] })
        .collect()
}

fn diag_set(a: &mut CMatrix, m: isize, d: &[C64]) {
    let k = m.unsigned_abs();
    for (i, v) in d.iter().enumerate() {
        if m >= 0 {
            a[(i, i + k)] = *v;
        } else {
            a[(i + k, i)] = *v;
        }
    }
}

/// Sign convention: the first component of every eigenvector is positive.
fn fix_sign(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-300) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

pub fn laplacian_eigenvalue(l: usize) -> f64 {
    -((l * (l + 1)) as f64) + 0.0
}

impl LaplacianSpectralData {
    pub fn build(gen: &SpinGenerators) -> Result<Self> {
        let n = gen.n();
        let j = (n as f64 - 1.0) / 2.0;
        let mu: Vec<f64> = (0..n).map(|i| j - i as f64).collect();
        let ladder: Vec<f64> = (0..=n).map(|i| ladder_coefficient(n, i)).collect();
        let mut data = LaplacianSpectralData {
            hbar: gen.hbar(),
            casimir: j * (j + 1.0),
            mu,
            ladder,
            offsets: Vec::with_capacity(n),
        };
        for m in 0..n {
            let basis = data.solve_offset(m)?;
            data.offsets.push(basis);
        }
        Ok(data)
    }

    /// Restriction of `Δ_N` to the entries `(i, i+m)`, assembled by applying
    /// the Laplacian stencil to each canonical basis matrix.
    pub fn offset_restriction(&self, m: usize) -> DMatrix<f64> {
        let dim = self.n() - m;
        let mut r = DMatrix::<f64>::zeros(dim, dim);
        for col in 0..dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[col] = C64::new(1.0, 0.0);
            let image = self.apply_offset(m, &e);
            for (row, v) in image.iter().enumerate() {
                r[(row, col)] = v.re;
            }
        }
        r
    }

    fn solve_offset(&self, m: usize) -> Result<OffsetEigenbasis> {
        let r = self.offset_restriction(m);
        let eig = SymmetricEigen::try_new(r, f64::EPSILON, 10_000).ok_or_else(|| {
            Error::EigenSolve {
                offset: m,
                reason: "symmetric eigensolver did not converge".into(),
            }
        })?;
        let dim = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut vectors = DMatrix::<f64>::zeros(dim, dim);
        let mut eigenvalues = Vec::with_capacity(dim);
        for (k, &src) in order.iter().enumerate() {
            let l = m + k;
            let expected = laplacian_eigenvalue(l);
            let got = eig.eigenvalues[src];
            if (got - expected).abs() > 1e-8 * (1.0 - expected) {
                return Err(Error::EigenSolve {
                    offset: m,
                    reason: format!("eigenvalue {got} does not match -l(l+1) = {expected} for l = {l}"),
                });
            }
            eigenvalues.push(got);
            vectors.set_column(k, &eig.eigenvectors.column(src));
        }
        fix_sign(&mut vectors);
        Ok(OffsetEigenbasis {
            offset: m,
            eigenvalues,
            vectors,
        })
    }

    pub fn n(&self) -> usize {
        self.hbar.n()
    }

    pub fn hbar(&self) -> Hbar {
        self.hbar
    }

    pub fn offsets(&self) -> &[OffsetEigenbasis] {
        &self.offsets
    }

    /// Stencil of `Δ_N` on one diagonal (entries `(i, i+m)` or `(i+m, i)`):
    /// `(−2j(j+1) + 2μ_i μ_k) d_i + c_{i+1}c_{k+1} d_{i+1} + c_i c_k d_{i−1}`.
    fn apply_offset(&self, m: usize, d: &[C64]) -> Vec<C64> {
        let dim = d.len();
        (0..dim)
            .map(|i| {
                let k = i + m;
                let mut v = d[i] * (-2.0 * self.casimir + 2.0 * self.mu[i] * self.mu[k]);
                if i + 1 < dim {
                    v += d[i + 1] * (self.ladder[i + 1] * self.ladder[k + 1]);
                }
                if i > 0 {
                    v += d[i - 1] * (self.ladder[i] * self.ladder[k]);
                }
                v
            })
            .collect()
    }

    /// `Δ_N a` through the ladder-operator stencil, `O(N²)`.
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let n = self.n();
        let mut out = CMatrix::zeros(n, n);
        for m in -(n as isize - 1)..=(n as isize - 1) {
            let d = diag_get(a, m);
            diag_set(&mut out, m, &self.apply_offset(m.unsigned_abs(), &d));
        }
        out
    }

    /// `Δ_N a` reassembled from the stored eigenpairs.
    pub fn apply_spectral(&self, a: &CMatrix) -> CMatrix {
        self.spectral_map(a, |ev| ev)
    }

    /// `Δ_N⁻¹ a` on the traceless part of `a` (the `l = 0` component is dropped).
    pub fn invert_unchecked(&self, a: &CMatrix) -> CMatrix {
        self.spectral_map(a, |ev| if ev == 0.0 { 0.0 } else { 1.0 / ev })
    }

    fn spectral_map(&self, a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.n();
        let mut out = CMatrix::zeros(n, n);
        for m in -(n as isize - 1)..=(n as isize - 1) {
            let basis = &self.offsets[m.unsigned_abs()];
            let d = diag_get(a, m);
            let dim = basis.dim();
            let mut res = vec![C64::new(0.0, 0.0); dim];
            for k in 0..dim {
                let ev = if basis.degree(k) == 0 {
                    0.0
                } else {
                    basis.eigenvalues[k]
                };
                let col = basis.vectors.column(k);
                let c: C64 = d.iter().zip(col.iter()).map(|(x, v)| x * *v).sum();
                let c = c * f(ev);
                for (r, v) in res.iter_mut().zip(col.iter()) {
                    *r += c * *v;
                }
            }
            diag_set(&mut out, m, &res);
        }
        out
    }

    pub fn apply_field(&self, a: &QuantizedField) -> Result<QuantizedField> {
        Error::check_dim(self.n(), a.n())?;
        Ok(QuantizedField::projected(&self.apply(a.matrix())))
    }

    pub fn invert(&self, w: &QuantizedField) -> Result<QuantizedField> {
        Error::check_dim(self.n(), w.n())?;
        let tr = w.matrix().trace().norm();
        if tr > 1e-10 * w.norm().max(1.0) {
            return Err(Error::Precondition(format!(
                "Laplacian inverse needs a traceless argument (|tr| = {tr:.3e})"
            )));
        }
        Ok(QuantizedField::projected(&self.invert_unchecked(w.matrix())))
    }

    /// Real eigenmatrix of degree `l` on offset `m` (transposed for `m < 0`),
    /// with the stored sign convention.
    pub fn harmonic(&self, l: usize, m: i64) -> Result<CMatrix> {
        let n = self.n();
        let k = m.unsigned_abs() as usize;
        if l >= n || k > l {
            return Err(Error::InvalidArgument(format!(
                "harmonic index (l={l}, m={m}) out of range for N={n}"
            )));
        }
        let basis = &self.offsets[k];
        let col = basis.vectors.column(l - k);
        let d: Vec<C64> = col.iter().map(|v| C64::new(*v, 0.0)).collect();
        let mut out = CMatrix::zeros(n, n);
        diag_set(&mut out, m as isize, &d);
        Ok(out)
    }

    /// Hermitian, trace-orthonormal matrix counterpart of the real spherical
    /// harmonic `Y_{lm}`: cosine type for `m > 0`, sine type for `m < 0`.
    pub fn real_harmonic(&self, l: usize, m: i64) -> Result<CMatrix> {
        let e = self.harmonic(l, m.abs())?;
        Ok(match m.signum() {
            0 => e,
            1 => (&e + e.transpose()) * C64::new(FRAC_1_SQRT_2, 0.0),
            _ => (&e - e.transpose()) * C64::new(0.0, -FRAC_1_SQRT_2),
        })
    }
}

/// One degree of the computed Laplacian spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub l: usize,
    pub expected: f64,
    pub multiplicity: usize,
    /// Largest deviation of the computed eigenvalues from `expected`.
    pub max_deviation: f64,
}

/// Computed eigenvalues grouped by degree; offset `m > 0` counts twice.
pub fn spectrum_table(data: &LaplacianSpectralData) -> Vec<SpectrumEntry> {
    let mut table: Vec<SpectrumEntry> = (0..data.n())
        .map(|l| SpectrumEntry {
            l,
            expected: laplacian_eigenvalue(l),
            multiplicity: 0,
            max_deviation: 0.0,
        })
        .collect();
    for basis in data.offsets() {
        let copies = if basis.offset == 0 { 1 } else { 2 };
        for (k, ev) in basis.eigenvalues.iter().enumerate() {
            let entry = &mut table[basis.degree(k)];
            entry.multiplicity += copies;
            entry.max_deviation = entry.max_deviation.max((ev - entry.expected).abs());
        }
    }
    table
}

/// Largest entrywise gap between the stored eigenmatrices and the Wigner-3j
/// harmonics after aligning each pair by a unit phase.
pub fn wigner_discrepancy(data: &LaplacianSpectralData) -> Result<f64> {
    let n = data.n();
    let mut worst = 0.0_f64;
    for l in 0..n {
        for m in -(l as i64)..=(l as i64) {
            let w = super::matrix_harmonic_wigner(n, l, m)?;
            let e = data.harmonic(l, m)?;
            let overlap = (e.adjoint() * &w).trace();
            let phase = if overlap.norm() > 0.0 {
                overlap / overlap.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            worst = worst.max(max_abs_diff(&(e * phase), &w));
        }
    }
    Ok(worst)
}

pub fn build_spectral_data(gen: &SpinGenerators) -> Result<LaplacianSpectralData> {
    LaplacianSpectralData::build(gen)
}

pub fn invert_laplacian(data: &LaplacianSpectralData, w: &QuantizedField) -> Result<QuantizedField> {
    data.invert(w)
}

/// Coefficients of a real field in the orthonormal real spherical harmonics
/// (area 4π, no Condon–Shortley phase), indexed by `l² + l + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimitedField {
    lmax: usize,
    coeffs: Vec<f64>,
}

impl BandLimitedField {
    pub fn zeros(lmax: usize) -> Self {
        BandLimitedField {
            lmax,
            coeffs: vec![0.0; (lmax + 1) * (lmax + 1)],
        }
    }

    /// Mean-zero field with independent standard normal coefficients.
    pub fn random(lmax: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = BandLimitedField::zeros(lmax);
        for c in f.coeffs.iter_mut().skip(1) {
            *c = StandardNormal.sample(&mut rng);
        }
        f
    }

    pub fn index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            return 0.0;
        }
        self.coeffs[Self::index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l);
        self.coeffs[Self::index(l, m)] = v;
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_mean_zero(&self) -> bool {
        self.coeffs[0] == 0.0
    }

    /// Coefficient-wise Laplace–Beltrami operator.
    pub fn laplacian(&self) -> Self {
        let mut out = self.clone();
        for l in 0..=self.lmax {
            for m in -(l as i64)..=(l as i64) {
                out.coeffs[Self::index(l, m)] *= laplacian_eigenvalue(l);
            }
        }
        out
    }

    /// Largest coefficient difference against `other`, padding with zeros.
    pub fn max_abs_diff(&self, other: &BandLimitedField) -> f64 {
        let lmax = self.lmax.max(other.lmax);
        let mut worst = 0.0_f64;
        for l in 0..=lmax {
            for m in -(l as i64)..=(l as i64) {
                worst = worst.max((self.get(l, m) - other.get(l, m)).abs());
            }
        }
        worst
    }
}

/// `p_N(f) = √(N/4π) Σ i f^{lm} Y^N_{lm}`.
pub fn project_field(f: &BandLimitedField, data: &LaplacianSpectralData) -> Result<QuantizedField> {
    let n = data.n();
    if f.lmax() >= n {
        return Err(Error::InvalidArgument(format!(
            "field degree {} exceeds N-1 = {}",
            f.lmax(),
            n - 1
        )));
    }
    let s = (n as f64 / (4.0 * PI)).sqrt();
    let mut out = CMatrix::zeros(n, n);
    for basis in data.offsets() {
        let m = basis.offset;
        let dim = basis.dim();
        let mut upper = vec![C64::new(0.0, 0.0); dim];
        let mut lower = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let l = basis.degree(k);
            if l > f.lmax() {
                break;
            }
            let col = basis.vectors.column(k);
            let (cu, cl) = if m == 0 {
                let z = C64::new(0.0, s * f.get(l, 0));
                (z, z)
            } else {
                let fc = f.get(l, m as i64);
                let fs = f.get(l, -(m as i64));
                (
                    C64::new(fs, fc) * (s * FRAC_1_SQRT_2),
                    C64::new(-fs, fc) * (s * FRAC_1_SQRT_2),
                )
            };
            for i in 0..dim {
                upper[i] += cu * col[i];
                lower[i] += cl * col[i];
            }
        }
        diag_set(&mut out, m as isize, &upper);
        if m > 0 {
            diag_set(&mut out, -(m as isize), &lower);
        }
    }
    Ok(QuantizedField::projected(&out))
}

/// Inverse of [`project_field`]: `f^{lm} = √(4π/N) Re tr((i Y^N_{lm})† a)`.
pub fn reconstruct_coeffs(a: &QuantizedField, data: &LaplacianSpectralData) -> Result<BandLimitedField> {
    let n = data.n();
    Error::check_dim(n, a.n())?;
    let s = (4.0 * PI / n as f64).sqrt();
    let mut f = BandLimitedField::zeros(n - 1);
    for basis in data.offsets() {
        let m = basis.offset;
        let upper = diag_get(a.matrix(), m as isize);
        let lower = diag_get(a.matrix(), -(m as isize));
        for k in 0..basis.dim() {
            let l = basis.degree(k);
            let col = basis.vectors.column(k);
            let pu: C64 = upper.iter().zip(col.iter()).map(|(x, v)| x * *v).sum();
            if m == 0 {
                f.set(l, 0, s * pu.im);
            } else {
                let pl: C64 = lower.iter().zip(col.iter()).map(|(x, v)| x * *v).sum();
                f.set(l, m as i64, s * FRAC_1_SQRT_2 * (pu + pl).im);
                f.set(l, -(m as i64), s * FRAC_1_SQRT_2 * (pu - pl).re);
            }
        }
    }
    Ok(f)
}
