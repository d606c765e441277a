//! Right-hand sides of the matrix MHD systems and the operators of the
//! Abelian extension su(N) × su(N).
//!
//! Every bracket here is the scaled commutator `[·,·]_N = (1/ħ)[·,·]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix_core::{
    commutator, frobenius_pairing, random_field_from, skew_project, CMatrix, Hbar, QuantizedField, C64,
};
use crate::quantization::LaplacianSpectralData;

/// A point `(W, P, Q, Ξ)` of the dual Lie algebra. `W = Δ_N Ψ` is stored;
/// the stream matrix `Ψ` is always derived.
#[derive(Debug, Clone, PartialEq)]
pub struct MhdState {
    pub w: QuantizedField,
    pub p: QuantizedField,
    pub q: QuantizedField,
    pub xi: QuantizedField,
}

impl MhdState {
    pub fn new(
        w: QuantizedField,
        p: QuantizedField,
        q: QuantizedField,
        xi: QuantizedField,
    ) -> Result<Self> {
        let n = w.n();
        for f in [&p, &q, &xi] {
            Error::check_dim(n, f.n())?;
        }
        Ok(MhdState { w, p, q, xi })
    }

    pub fn zeros(n: usize) -> Self {
        let z = QuantizedField::zeros(n);
        MhdState {
            w: z.clone(),
            p: z.clone(),
            q: z.clone(),
            xi: z,
        }
    }

    /// Four random fields drawn in the order `W, P, Q, Ξ` from one seeded stream.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "state dimension must be at least 2, got {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_field_from(n, &mut rng);
        let p = random_field_from(n, &mut rng);
        let q = random_field_from(n, &mut rng);
        let xi = random_field_from(n, &mut rng);
        Ok(MhdState { w, p, q, xi })
    }

    /// As [`MhdState::random`], with each field rescaled to the given
    /// `L²(S²)` norm `√⟨F, F⟩_F`.
    pub fn random_with_norm(n: usize, seed: u64, l2_norm: f64) -> Result<Self> {
        if !(l2_norm.is_finite() && l2_norm > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "initial field norm must be positive, got {l2_norm}"
            )));
        }
        let raw = MhdState::random(n, seed)?;
        let unit = |f: QuantizedField| -> Result<QuantizedField> {
            let norm = frobenius_pairing(&f, &f)?.sqrt();
            Ok(f.scale(l2_norm / norm))
        };
        Ok(MhdState {
            w: unit(raw.w)?,
            p: unit(raw.p)?,
            q: unit(raw.q)?,
            xi: unit(raw.xi)?,
        })
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }

    pub fn fields(&self) -> [&QuantizedField; 4] {
        [&self.w, &self.p, &self.q, &self.xi]
    }

    pub fn scale(&self, s: f64) -> Self {
        MhdState {
            w: self.w.scale(s),
            p: self.p.scale(s),
            q: self.q.scale(s),
            xi: self.xi.scale(s),
        }
    }

    /// Largest entry difference over all four fields.
    pub fn max_abs_diff(&self, other: &MhdState) -> f64 {
        self.fields()
            .iter()
            .zip(other.fields())
            .map(|(a, b)| crate::matrix_core::max_abs_diff(a.matrix(), b.matrix()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.fields().iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }
}

fn bracket(a: &CMatrix, b: &CMatrix, inv_hbar: f64) -> CMatrix {
    commutator(a, b) * C64::new(inv_hbar, 0.0)
}

/// 2D MHD–Zeitlin: `Ẇ = [W, Δ⁻¹W]_N + [Θ, ΔΘ]_N`, `Θ̇ = [Θ, Δ⁻¹W]_N`.
pub fn rhs_2d(
    w: &QuantizedField,
    theta: &QuantizedField,
    data: &LaplacianSpectralData,
) -> Result<(QuantizedField, QuantizedField)> {
    Error::check_dim(data.n(), w.n())?;
    Error::check_dim(data.n(), theta.n())?;
    let inv = 1.0 / data.hbar().value();
    let psi = data.invert(w)?;
    let lap_theta = data.apply(theta.matrix());
    let w_dot = bracket(w.matrix(), psi.matrix(), inv)
        + bracket(theta.matrix(), &lap_theta, inv);
    let theta_dot = bracket(theta.matrix(), psi.matrix(), inv);
    Ok((
        QuantizedField::projected(&w_dot),
        QuantizedField::projected(&theta_dot),
    ))
}

/// Time derivative of the axisymmetric MHD–Zeitlin system:
///
/// ```text
/// Ẇ = [W, Ψ]_N + [Ξ, ΔΞ]_N + 2[Q, Ψ]_N + 2[Ξ, P]_N
/// Ṗ = [P, Ψ]_N + [Ξ, Q]_N + 2[Ψ, Ξ]_N
/// Q̇ = [Q, Ψ]_N + [Ξ, P]_N
/// Ξ̇ = [Ξ, Ψ]_N
/// ```
pub fn rhs_axisym(s: &MhdState, data: &LaplacianSpectralData) -> Result<MhdState> {
    Error::check_dim(data.n(), s.n())?;
    let inv = 1.0 / data.hbar().value();
    let psi = data.invert(&s.w)?;
    let psi = psi.matrix();
    let (w, p, q, xi) = (s.w.matrix(), s.p.matrix(), s.q.matrix(), s.xi.matrix());
    let lap_xi = data.apply(xi);
    let two = C64::new(2.0, 0.0);

    let xi_p = bracket(xi, p, inv);
    let q_psi = bracket(q, psi, inv);
    let w_dot = bracket(w, psi, inv) + bracket(xi, &lap_xi, inv) + &q_psi * two + &xi_p * two;
    let p_dot = bracket(p, psi, inv) + bracket(xi, q, inv) + bracket(psi, xi, inv) * two;
    let q_dot = q_psi + xi_p;
    let xi_dot = bracket(xi, psi, inv);

    for d in [&w_dot, &p_dot, &q_dot, &xi_dot] {
        debug_assert!(
            crate::matrix_core::max_abs(&(d + d.adjoint())) <= 1e-9 * (1.0 + crate::matrix_core::max_abs(d))
        );
    }
    Ok(MhdState {
        w: QuantizedField::projected(&w_dot),
        p: QuantizedField::projected(&p_dot),
        q: QuantizedField::projected(&q_dot),
        xi: QuantizedField::projected(&xi_dot),
    })
}

/// An element `(first, second)` of the Abelian extension su(N) × su(N).
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraPair {
    pub first: QuantizedField,
    pub second: QuantizedField,
}

impl AlgebraPair {
    pub fn new(first: QuantizedField, second: QuantizedField) -> Result<Self> {
        Error::check_dim(first.n(), second.n())?;
        Ok(AlgebraPair { first, second })
    }

    pub fn n(&self) -> usize {
        self.first.n()
    }

    pub fn zeros(n: usize) -> Self {
        AlgebraPair {
            first: QuantizedField::zeros(n),
            second: QuantizedField::zeros(n),
        }
    }
}

/// `[(P,B),(U,V)] = ([B,U]_N + [P,V]_N − [B,V]_N, [B,V]_N)`.
pub fn abelian_bracket(x: &AlgebraPair, y: &AlgebraPair, hbar: Hbar) -> Result<AlgebraPair> {
    Error::check_dim(hbar.n(), x.n())?;
    Error::check_dim(hbar.n(), y.n())?;
    let inv = 1.0 / hbar.value();
    let (p, b) = (x.first.matrix(), x.second.matrix());
    let (u, v) = (y.first.matrix(), y.second.matrix());
    let bv = bracket(b, v, inv);
    let first = bracket(b, u, inv) + bracket(p, v, inv) - &bv;
    Ok(AlgebraPair {
        first: QuantizedField::projected(&first),
        second: QuantizedField::projected(&bv),
    })
}

/// `ad*_{(P₁,B₁)}(P₂,B₂) = ([P₂,B₁]_N, Δ⁻¹([P₁,P₂]_N + [P₂,B₁]_N + [ΔB₂,B₁]_N))`.
pub fn abelian_coadjoint(
    x: &AlgebraPair,
    mu: &AlgebraPair,
    data: &LaplacianSpectralData,
) -> Result<AlgebraPair> {
    Error::check_dim(data.n(), x.n())?;
    Error::check_dim(data.n(), mu.n())?;
    let inv = 1.0 / data.hbar().value();
    let (p1, b1) = (x.first.matrix(), x.second.matrix());
    let (p2, b2) = (mu.first.matrix(), mu.second.matrix());
    let p2b1 = bracket(p2, b1, inv);
    let inner = bracket(p1, p2, inv) + &p2b1 + bracket(&data.apply(b2), b1, inv);
    let second = data.invert(&QuantizedField::projected(&inner))?;
    Ok(AlgebraPair {
        first: QuantizedField::projected(&p2b1),
        second,
    })
}

/// `⟨(P₁,B₁),(P₂,B₂)⟩ = tr(P₁P₂) − tr((Δ_N B₁)B₂)`.
pub fn abelian_pairing(
    mu: &AlgebraPair,
    y: &AlgebraPair,
    data: &LaplacianSpectralData,
) -> Result<f64> {
    Error::check_dim(data.n(), mu.n())?;
    Error::check_dim(data.n(), y.n())?;
    let t1 = (mu.first.matrix() * y.first.matrix()).trace();
    let t2 = (data.apply(mu.second.matrix()) * y.second.matrix()).trace();
    Ok((t1 - t2).re)
}

/// The 4N×4N isospectral form `A`, `B(A)` of the axisymmetric system.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPair {
    pub a: CMatrix,
    pub b_of_a: CMatrix,
}

fn put(m: &mut CMatrix, n: usize, r: usize, c: usize, block: &CMatrix) {
    m.view_mut((r * n, c * n), (n, n)).copy_from(block);
}

fn take(m: &CMatrix, n: usize, r: usize, c: usize) -> CMatrix {
    m.view((r * n, c * n), (n, n)).into_owned()
}

/// Places `[[X₁₁, 0], [X₂₁, X₁₁]]` with `X₁₁ = [[d, 0], [s, d]]` and
/// `X₂₁ = [[t, 0], [u, t]]` into a 4N×4N matrix.
fn nested_lower(n: usize, d: &CMatrix, s: &CMatrix, t: &CMatrix, u: &CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(4 * n, 4 * n);
    for k in 0..4 {
        put(&mut m, n, k, k, d);
    }
    put(&mut m, n, 1, 0, s);
    put(&mut m, n, 3, 2, s);
    put(&mut m, n, 2, 0, t);
    put(&mut m, n, 3, 1, t);
    put(&mut m, n, 3, 0, u);
    m
}

/// Raw `(W, P, Q, Ξ)` blocks read back from a matrix with the layout of `A`.
pub fn unpack_blocks(a: &CMatrix) -> [CMatrix; 4] {
    let n = a.nrows() / 4;
    [
        take(a, n, 3, 0),
        take(a, n, 2, 0),
        -take(a, n, 1, 0),
        take(a, n, 0, 0),
    ]
}

pub fn unpack_state(a: &CMatrix) -> MhdState {
    let [w, p, q, xi] = unpack_blocks(a);
    MhdState {
        w: QuantizedField::projected(&w),
        p: QuantizedField::projected(&p),
        q: QuantizedField::projected(&q),
        xi: QuantizedField::projected(&xi),
    }
}

pub fn embed_a(s: &MhdState) -> CMatrix {
    nested_lower(
        s.n(),
        s.xi.matrix(),
        &-s.q.matrix(),
        s.p.matrix(),
        s.w.matrix(),
    )
}

/// `B(A)` with `a = Ψ`, `b = −2Ξ − P`, `c = −2Ψ + Q`, `d = Δ_N Ξ`, read from
/// the blocks of `a_mat` (which need not be exactly anti-Hermitian).
pub fn b_map(a_mat: &CMatrix, data: &LaplacianSpectralData) -> CMatrix {
    let [w, p, q, xi] = unpack_blocks(a_mat);
    let two = C64::new(2.0, 0.0);
    let psi = data.invert_unchecked(&w);
    let b = -(&xi * two) - &p;
    let c = -(&psi * two) + &q;
    let d = data.apply(&xi);
    nested_lower(a_mat.nrows() / 4, &psi, &b, &c, &d)
}

pub fn block_embed(s: &MhdState, data: &LaplacianSpectralData) -> Result<BlockPair> {
    Error::check_dim(data.n(), s.n())?;
    data.invert(&s.w)?;
    let a = embed_a(s);
    let b_of_a = b_map(&a, data);
    Ok(BlockPair { a, b_of_a })
}

/// The form `𝐉` with identity blocks on the block anti-diagonal.
pub fn j_form(n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(4 * n, 4 * n);
    let id = CMatrix::identity(n, n);
    for k in 0..4 {
        put(&mut j, n, k, 3 - k, &id);
    }
    j
}

/// 2N×2N isospectral form of the 2D system: `A = [[Θ, 0], [W, Θ]]`.
pub fn embed_a_2d(w: &QuantizedField, theta: &QuantizedField) -> CMatrix {
    let n = w.n();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    put(&mut m, n, 0, 0, theta.matrix());
    put(&mut m, n, 1, 1, theta.matrix());
    put(&mut m, n, 1, 0, w.matrix());
    m
}

/// `B(A) = [[Ψ, 0], [ΔΘ, Ψ]]` for the 2D system.
pub fn b_map_2d(a_mat: &CMatrix, data: &LaplacianSpectralData) -> CMatrix {
    let n = a_mat.nrows() / 2;
    let theta = take(a_mat, n, 0, 0);
    let w = take(a_mat, n, 1, 0);
    let psi = data.invert_unchecked(&w);
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    put(&mut m, n, 0, 0, &psi);
    put(&mut m, n, 1, 1, &psi);
    put(&mut m, n, 1, 0, &data.apply(&theta));
    m
}

pub fn unpack_2d(a_mat: &CMatrix) -> (QuantizedField, QuantizedField) {
    let n = a_mat.nrows() / 2;
    (
        QuantizedField::projected(&take(a_mat, n, 1, 0)),
        QuantizedField::projected(&take(a_mat, n, 0, 0)),
    )
}

/// Skew-projects each of the four blocks of an unpacked derivative.
pub(crate) fn project_blocks(blocks: [CMatrix; 4]) -> MhdState {
    let [w, p, q, xi] = blocks;
    MhdState {
        w: QuantizedField::from_raw(skew_project(&w)),
        p: QuantizedField::from_raw(skew_project(&p)),
        q: QuantizedField::from_raw(skew_project(&q)),
        xi: QuantizedField::from_raw(skew_project(&xi)),
    }
}
