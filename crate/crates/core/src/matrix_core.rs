//! Dense complex-matrix primitives for fields living in su(N).
//!
//! Every quantized scalar field is a traceless anti-Hermitian `N×N` matrix.
//! Products and commutators are formed on raw [`CMatrix`] values and projected
//! back onto su(N) with [`skew_project`], which removes the Hermitian part and
//! the trace that rounding leaves behind.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative trace bound accepted by [`QuantizedField::new`].
pub const TRACE_TOLERANCE: f64 = 1e-12;

/// Relative anti-Hermiticity bound accepted by [`QuantizedField::new`].
pub const SKEW_TOLERANCE: f64 = 1e-12;

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `(M − M†)/2`.
pub fn anti_hermitian_part(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = (m[(i, j)] - m[(j, i)].conj()) * 0.5;
        }
    }
    out
}

/// `(M − M†)/2` with the trace removed.
pub fn skew_project(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut out = anti_hermitian_part(m);
    let mean = out.trace() / n as f64;
    for i in 0..n {
        out[(i, i)] -= mean;
    }
    out
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// The truncation scale ħ = 2/√(N²−1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hbar {
    n: usize,
    value: f64,
}

impl Hbar {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimension must be at least 2, got {n}"
            )));
        }
        let nf = n as f64;
        Ok(Hbar {
            n,
            value: 2.0 / (nf * nf - 1.0).sqrt(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// A traceless anti-Hermitian matrix: a point of su(N).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedField {
    m: CMatrix,
}

impl QuantizedField {
    pub fn zeros(n: usize) -> Self {
        QuantizedField {
            m: CMatrix::zeros(n, n),
        }
    }

    /// Wraps `m` after checking both su(N) invariants to within rounding.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidArgument(format!(
                "field matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.norm().max(f64::MIN_POSITIVE);
        let herm = max_abs(&(&m + m.adjoint()));
        if herm > SKEW_TOLERANCE * scale {
            return Err(Error::Precondition(format!(
                "matrix is not anti-Hermitian (|M + M†| = {herm:.3e})"
            )));
        }
        let tr = m.trace().norm();
        if tr > TRACE_TOLERANCE * scale {
            return Err(Error::Precondition(format!(
                "matrix is not traceless (|tr M| = {tr:.3e})"
            )));
        }
        Ok(QuantizedField { m })
    }

    /// Projects an arbitrary square matrix onto su(N).
    pub fn projected(m: &CMatrix) -> Self {
        QuantizedField { m: skew_project(m) }
    }

    /// Takes ownership of a matrix already known to lie in su(N).
    pub(crate) fn from_raw(m: CMatrix) -> Self {
        QuantizedField { m }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    /// Plain Frobenius norm, without the 4π/N scaling.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        QuantizedField { m: &self.m * C64::new(s, 0.0) }
    }

    /// Conjugation `U M U†` by a unitary matrix.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        QuantizedField::projected(&(u * &self.m * u.adjoint()))
    }
}

macro_rules! field_binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&QuantizedField> for &QuantizedField {
            type Output = QuantizedField;
            fn $f(self, rhs: &QuantizedField) -> QuantizedField {
                QuantizedField { m: &self.m $op &rhs.m }
            }
        }
        impl $tr<QuantizedField> for QuantizedField {
            type Output = QuantizedField;
            fn $f(self, rhs: QuantizedField) -> QuantizedField {
                QuantizedField { m: self.m $op rhs.m }
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);

impl AddAssign<&QuantizedField> for QuantizedField {
    fn add_assign(&mut self, rhs: &QuantizedField) {
        self.m += &rhs.m;
    }
}

impl SubAssign<&QuantizedField> for QuantizedField {
    fn sub_assign(&mut self, rhs: &QuantizedField) {
        self.m -= &rhs.m;
    }
}

impl Mul<f64> for &QuantizedField {
    type Output = QuantizedField;
    fn mul(self, s: f64) -> QuantizedField {
        self.scale(s)
    }
}

impl Neg for &QuantizedField {
    type Output = QuantizedField;
    fn neg(self) -> QuantizedField {
        QuantizedField { m: -&self.m }
    }
}

/// `[a, b]_N = (1/ħ)(ab − ba)`, re-projected onto su(N).
pub fn scaled_commutator(
    a: &QuantizedField,
    b: &QuantizedField,
    hbar: Hbar,
) -> Result<QuantizedField> {
    Error::check_dim(hbar.n(), a.n())?;
    Error::check_dim(hbar.n(), b.n())?;
    let c = commutator(&a.m, &b.m) * C64::new(1.0 / hbar.value(), 0.0);
    Ok(QuantizedField::projected(&c))
}

/// `⟨a, b⟩_F = (4π/N) Re tr(a†b)`.
pub fn frobenius_pairing(a: &QuantizedField, b: &QuantizedField) -> Result<f64> {
    Error::check_dim(a.n(), b.n())?;
    let n = a.n();
    let s: f64 = a
        .m
        .iter()
        .zip(b.m.iter())
        .map(|(x, y)| (x.conj() * y).re)
        .sum();
    Ok(4.0 * PI / n as f64 * s)
}

/// Seeded random element of su(N): independent standard normal real and
/// imaginary parts, then skew-projected and de-traced.
pub fn random_field(n: usize, seed: u64) -> Result<QuantizedField> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "random field needs n >= 2, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_field_from(n, &mut rng))
}

pub(crate) fn random_field_from<R: rand::Rng>(n: usize, rng: &mut R) -> QuantizedField {
    let m = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    QuantizedField::projected(&m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_definition() {
        let h = Hbar::new(5).unwrap();
        assert!((h.value() * 24f64.sqrt() - 2.0).abs() < 1e-15);
        assert!(Hbar::new(1).is_err());
    }

    #[test]
    fn commutator_with_self_vanishes() {
        let a = random_field(6, 3).unwrap();
        let h = Hbar::new(6).unwrap();
        assert_eq!(scaled_commutator(&a, &a, h).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn commutator_matches_unscaled_oracle() {
        let a = random_field(5, 0).unwrap();
        let b = random_field(5, 1).unwrap();
        let h = Hbar::new(5).unwrap();
        let got = scaled_commutator(&a, &b, h).unwrap();
        let factor = 24f64.sqrt() / 2.0;
        let am = a.matrix();
        let bm = b.matrix();
        for i in 0..5 {
            for j in 0..5 {
                let mut ab = C64::new(0.0, 0.0);
                for k in 0..5 {
                    ab += am[(i, k)] * bm[(k, j)] - bm[(i, k)] * am[(k, j)];
                }
                assert!((got.matrix()[(i, j)] - ab * factor).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let a = random_field(4, 0).unwrap();
        let b = random_field(5, 0).unwrap();
        let h = Hbar::new(5).unwrap();
        assert!(matches!(
            scaled_commutator(&a, &b, h),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(frobenius_pairing(&a, &b).is_err());
    }

    #[test]
    fn pairing_basics() {
        let z = QuantizedField::zeros(4);
        assert_eq!(frobenius_pairing(&z, &z).unwrap(), 0.0);
        let a = random_field(4, 10).unwrap();
        let b = random_field(4, 11).unwrap();
        let ab = frobenius_pairing(&a, &b).unwrap();
        let ba = frobenius_pairing(&b, &a).unwrap();
        assert!((ab - ba).abs() <= 1e-14 * ab.abs().max(1.0));
        assert!(frobenius_pairing(&a, &a).unwrap() > 0.0);
    }

    #[test]
    fn random_field_is_deterministic_and_valid() {
        let a = random_field(7, 42).unwrap();
        let b = random_field(7, 42).unwrap();
        assert_eq!(a, b);
        let c = random_field(7, 43).unwrap();
        assert!((&a - &c).norm() > 0.0);
        assert!(QuantizedField::new(a.into_matrix()).is_ok());
        assert!(random_field(1, 0).is_err());
    }

    #[test]
    fn new_rejects_hermitian_and_traced() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        assert!(QuantizedField::new(m).is_err());
        let id = CMatrix::identity(3, 3) * C64::new(0.0, 1.0);
        assert!(QuantizedField::new(id).is_err());
    }
}
