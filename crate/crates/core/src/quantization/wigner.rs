//! Wigner 3j symbols by the Racah sum, and the matrix harmonics built from them.

use crate::error::{Error, Result};
use crate::matrix_core::{CMatrix, C64};

/// Table of `ln k!` for `k = 0..len`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        LogFactorials { table }
    }

    fn get(&self, k: i64) -> f64 {
        self.table[k as usize]
    }

    fn max(&self) -> usize {
        self.table.len() - 1
    }
}

/// Wigner 3j symbol with every argument passed as twice its value.
pub fn wigner_3j_doubled(
    lf: &LogFactorials,
    tj1: i64,
    tj2: i64,
    tj3: i64,
    tm1: i64,
    tm2: i64,
    tm3: i64,
) -> f64 {
    if tm1 + tm2 + tm3 != 0 {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm3.abs() > tj3 {
        return 0.0;
    }
    if (tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tj3 + tm3) % 2 != 0 {
        return 0.0;
    }
    if tj3 > tj1 + tj2 || tj3 < (tj1 - tj2).abs() || (tj1 + tj2 + tj3) % 2 != 0 {
        return 0.0;
    }
    let half = |x: i64| x / 2;
    let a = half(tj1 + tj2 - tj3);
    let b = half(tj1 - tj2 + tj3);
    let c = half(-tj1 + tj2 + tj3);
    let total = half(tj1 + tj2 + tj3);
    assert!(
        (total + 1) as usize <= lf.max(),
        "log-factorial table too small for 3j arguments"
    );
    let log_delta = lf.get(a) + lf.get(b) + lf.get(c) - lf.get(total + 1);
    let log_norm = lf.get(half(tj1 + tm1))
        + lf.get(half(tj1 - tm1))
        + lf.get(half(tj2 + tm2))
        + lf.get(half(tj2 - tm2))
        + lf.get(half(tj3 + tm3))
        + lf.get(half(tj3 - tm3));
    let prefactor_log = 0.5 * (log_delta + log_norm);

    let k_min = 0.max(half(tj2 - tj3 - tm1)).max(half(tj1 - tj3 + tm2));
    let k_max = a.min(half(tj1 - tm1)).min(half(tj2 + tm2));
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = lf.get(k)
            + lf.get(half(tj3 - tj2 + tm1) + k)
            + lf.get(half(tj3 - tj1 - tm2) + k)
            + lf.get(a - k)
            + lf.get(half(tj1 - tm1) - k)
            + lf.get(half(tj2 + tm2) - k);
        let term = (prefactor_log - denom).exp();
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let phase_exp = half(tj1 - tj2 - tm3);
    if phase_exp.rem_euclid(2) == 0 {
        sum
    } else {
        -sum
    }
}

/// Largest dimension for which the 3j route is offered.
pub const WIGNER_MAX_N: usize = 32;

/// Matrix harmonic `T^N_{lm}` from the explicit 3j formula.
///
/// Rows and columns are indexed by `m₁ = j − row`, `m₂ = j − col` with
/// `j = (N−1)/2`, so the harmonic is supported on the diagonal `col − row = m`.
pub fn matrix_harmonic_wigner(n: usize, l: usize, m: i64) -> Result<CMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be >= 2, got {n}")));
    }
    if l >= n || m.unsigned_abs() as usize > l {
        return Err(Error::InvalidArgument(format!(
            "harmonic index (l={l}, m={m}) out of range for N={n}"
        )));
    }
    let lf = LogFactorials::new(4 * n + 4);
    let tj = n as i64 - 1;
    let tl = 2 * l as i64;
    let scale = ((2 * l + 1) as f64).sqrt();
    let mut t = CMatrix::zeros(n, n);
    for row in 0..n {
        let col = row as i64 + m;
        if col < 0 || col >= n as i64 {
            continue;
        }
        let tm1 = tj - 2 * row as i64;
        let tm2 = tj - 2 * col;
        let w = wigner_3j_doubled(&lf, tj, tl, tj, -tm1, 2 * m, tm2);
        let sign = if row % 2 == 0 { 1.0 } else { -1.0 };
        t[(row, col as usize)] = C64::new(sign * scale * w, 0.0);
    }
    Ok(t)
}
