//! Quantization of S²: spin generators, the Hoppe–Yau Laplacian, matrix
//! harmonics, and the projection between band-limited fields and su(N).

mod spectral;
mod wigner;

pub use spectral::{
    build_spectral_data, invert_laplacian, laplacian_eigenvalue, project_field,
    reconstruct_coeffs, spectrum_table, wigner_discrepancy, BandLimitedField,
    LaplacianSpectralData, OffsetEigenbasis, SpectrumEntry,
};
pub use wigner::{matrix_harmonic_wigner, wigner_3j_doubled, LogFactorials, WIGNER_MAX_N};

use crate::error::{Error, Result};
use crate::matrix_core::{commutator, CMatrix, Hbar, QuantizedField, C64};

/// `X_a = ħ J_a` for the spin-(N−1)/2 representation.
#[derive(Debug, Clone)]
pub struct SpinGenerators {
    hbar: Hbar,
    x: [CMatrix; 3],
}

impl SpinGenerators {
    pub fn n(&self) -> usize {
        self.hbar.n()
    }

    pub fn hbar(&self) -> Hbar {
        self.hbar
    }

    pub fn x1(&self) -> &CMatrix {
        &self.x[0]
    }

    pub fn x2(&self) -> &CMatrix {
        &self.x[1]
    }

    pub fn x3(&self) -> &CMatrix {
        &self.x[2]
    }

    pub fn all(&self) -> &[CMatrix; 3] {
        &self.x
    }

    /// Hoppe–Yau Laplacian of an arbitrary `N×N` matrix.
    pub fn laplacian_of(&self, a: &CMatrix) -> CMatrix {
        let mut acc = CMatrix::zeros(self.n(), self.n());
        for x in &self.x {
            acc += commutator(x, &commutator(x, a));
        }
        let h = self.hbar.value();
        acc * C64::new(-1.0 / (h * h), 0.0)
    }
}

/// `J₃ = diag(j, …, −j)`; the ladder coefficient linking rows `i−1` and `i`.
pub(crate) fn ladder_coefficient(n: usize, i: usize) -> f64 {
    if i == 0 || i >= n {
        return 0.0;
    }
    let j = (n as f64 - 1.0) / 2.0;
    let mu = j - i as f64;
    (j * (j + 1.0) - mu * (mu + 1.0)).sqrt()
}

pub fn build_generators(n: usize) -> Result<SpinGenerators> {
    let hbar = Hbar::new(n)?;
    let j = (n as f64 - 1.0) / 2.0;
    let mut j3 = CMatrix::zeros(n, n);
    let mut jp = CMatrix::zeros(n, n);
    for i in 0..n {
        j3[(i, i)] = C64::new(j - i as f64, 0.0);
        if i > 0 {
            jp[(i - 1, i)] = C64::new(ladder_coefficient(n, i), 0.0);
        }
    }
    let jm = jp.transpose();
    let j1 = (&jp + &jm) * C64::new(0.5, 0.0);
    let j2 = (&jp - &jm) * C64::new(0.0, -0.5);
    let h = C64::new(hbar.value(), 0.0);
    Ok(SpinGenerators {
        hbar,
        x: [j1 * h, j2 * h, j3 * h],
    })
}

/// `Δ_N a = −(1/ħ²) Σ_a [X_a, [X_a, a]]`, with spectrum `−l(l+1)`.
pub fn apply_laplacian(gen: &SpinGenerators, a: &QuantizedField) -> Result<QuantizedField> {
    Error::check_dim(gen.n(), a.n())?;
    Ok(QuantizedField::projected(&gen.laplacian_of(a.matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{max_abs, max_abs_diff, random_field};

    #[test]
    fn spin_half_x3() {
        let g = build_generators(2).unwrap();
        let h = 2.0 / 3f64.sqrt();
        assert!((g.x3()[(0, 0)].re - 0.5 * h).abs() < 1e-15);
        assert!((g.x3()[(1, 1)].re + 0.5 * h).abs() < 1e-15);
    }

    #[test]
    fn generator_relations() {
        for n in [2, 5, 9] {
            let g = build_generators(n).unwrap();
            let h = g.hbar().value();
            let sum = g.x1() * g.x1() + g.x2() * g.x2() + g.x3() * g.x3();
            assert!(max_abs_diff(&sum, &CMatrix::identity(n, n)) < 1e-14);
            let i = C64::new(0.0, 1.0);
            let cyc = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];
            for (a, b, c) in cyc {
                let lhs = commutator(&g.all()[a], &g.all()[b]) / C64::new(h, 0.0);
                assert!(max_abs_diff(&lhs, &(&g.all()[c] * i)) < 1e-13);
            }
        }
    }

    #[test]
    fn laplacian_kills_identity_and_zero() {
        let g = build_generators(6).unwrap();
        let id = CMatrix::identity(6, 6) * C64::new(0.0, 1.0);
        assert!(max_abs(&g.laplacian_of(&id)) < 1e-12);
        let z = QuantizedField::zeros(6);
        assert_eq!(apply_laplacian(&g, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn laplacian_on_wigner_harmonics() {
        let n = 6;
        let g = build_generators(n).unwrap();
        for l in 0..n {
            for m in -(l as i64)..=(l as i64) {
                let t = matrix_harmonic_wigner(n, l, m).unwrap();
                let lt = g.laplacian_of(&t);
                let ev = -((l * (l + 1)) as f64);
                assert!(
                    max_abs_diff(&lt, &(&t * C64::new(ev, 0.0))) < 1e-10,
                    "l={l} m={m}"
                );
            }
        }
    }

    #[test]
    fn laplacian_of_t32_n6() {
        let g = build_generators(6).unwrap();
        let t = matrix_harmonic_wigner(6, 3, 2).unwrap() * C64::new(0.0, 1.0);
        let lt = g.laplacian_of(&t);
        assert!(max_abs_diff(&lt, &(&t * C64::new(-12.0, 0.0))) < 1e-10);
    }

    #[test]
    fn laplacian_is_rotation_equivariant() {
        let n = 7;
        let g = build_generators(n).unwrap();
        let a = random_field(n, 5).unwrap();
        for x in g.all() {
            let lhs = g.laplacian_of(&commutator(x, a.matrix()));
            let rhs = commutator(x, &g.laplacian_of(a.matrix()));
            let scale = max_abs(&lhs).max(1.0);
            assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * scale);
        }
    }

    #[test]
    fn wigner_family_is_trace_orthonormal() {
        let n = 6;
        let mut all = Vec::new();
        for l in 0..n {
            for m in -(l as i64)..=(l as i64) {
                all.push(matrix_harmonic_wigner(n, l, m).unwrap());
            }
        }
        for (p, a) in all.iter().enumerate() {
            for (q, b) in all.iter().enumerate() {
                let ip = (a.adjoint() * b).trace();
                let expected = if p == q { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expected, 0.0)).norm() < 1e-10);
            }
        }
    }
}
