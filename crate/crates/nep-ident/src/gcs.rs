//! Cyclic shift matrices, the two-term polynomials they annihilate, and
//! exponent arithmetic for eventually periodic index patterns.
//!
//! The shift matrix C_{k,n} maps ê_j → ê_{j+1} for j < n and wraps the last
//! basis vector back to ê_k, so its orbit through ê_1 runs down the line
//! 1 → 2 → … → n and then cycles through k, …, n forever: a transient of
//! length k−1 followed by a period of n−k+1. It is the companion matrix of
//! p(z) = z^n − z^{k−1}, the polynomial whose residual ‖p(M)‖ certifies how
//! close an arbitrary operator M is to this algebraic structure.
//!
//! Matrices are stored structurally as the pair (k, n) and materialized
//! densely only on demand; powers applied to vectors use index bookkeeping,
//! never dense matrix powers.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{matrix_power, spectral_norm, CMat, CVec};

/// Structural description of the n×n cyclic shift matrix C_{k,n} with
/// columns ê_2, ê_3, …, ê_n, ê_k (1-based indices, 1 ≤ k ≤ n).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcsSpec {
    /// 1-based index the final basis vector wraps to.
    pub k: usize,
    /// Dimension.
    pub n: usize,
}

impl GcsSpec {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::InvalidSpec(format!(
                "cyclic shift spec needs 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        Ok(Self { k, n })
    }

    /// The shift matrix drives an orbit with transient `s` and period `T`:
    /// C_{s+1, s+T}.
    pub fn from_index(transient: usize, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidSpec("period must be at least 1".into()));
        }
        Self::new(transient + 1, transient + period)
    }

    /// Transient length of the orbit through ê_1 (= k − 1).
    pub fn transient(&self) -> usize {
        self.k - 1
    }

    /// Period of the orbit through ê_1 (= n − k + 1).
    pub fn period(&self) -> usize {
        self.n - self.k + 1
    }
}

/// The two-term polynomial p(z) = z^a − z^b with a > b ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicPoly {
    pub a: usize,
    pub b: usize,
}

impl PeriodicPoly {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a <= b {
            return Err(Error::InvalidSpec(format!(
                "two-term polynomial needs a > b >= 0, got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }
}

impl fmt::Display for PeriodicPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b == 0 {
            write!(f, "z^{} - 1", self.a)
        } else {
            write!(f, "z^{} - z^{}", self.a, self.b)
        }
    }
}

/// Dense 0/1 materialization of C_{k,n}.
pub fn gcs_build(spec: GcsSpec) -> CMat {
    let one = Complex64::new(1.0, 0.0);
    let mut m = CMat::zeros(spec.n, spec.n);
    // Column j (0-based) is ê_{j+2} for j < n−1 and ê_k for the last column.
    for j in 0..spec.n - 1 {
        m[(j + 1, j)] = one;
    }
    m[(spec.k - 1, spec.n - 1)] += one;
    m
}

/// The polynomial C_{k,n} annihilates: z^n − z^{k−1}.
pub fn minimal_poly(spec: GcsSpec) -> PeriodicPoly {
    PeriodicPoly {
        a: spec.n,
        b: spec.k - 1,
    }
}

/// Collapse the exponent t of C_{s+1,s+T}^t to its canonical representative
/// in [0, s+T): t itself during the transient, s + ((t−s) mod T) afterwards.
/// C^t·x = C^reduced·x for every x, so powers never need to grow past s+T.
pub fn reduce_exponent(transient: usize, period: usize, t: usize) -> Result<usize> {
    if period == 0 {
        return Err(Error::InvalidSpec("period must be at least 1".into()));
    }
    Ok(if t <= transient {
        t
    } else {
        transient + ((t - transient) % period)
    })
}

/// One application of C_{s+1,s+T} to a vector of length s+T, by index
/// bookkeeping: entry j moves to j+1 and the last entry folds onto position
/// s+1 (1-based). Exact — every output entry is a plain copy or a single
/// two-operand sum.
fn shift_once(transient: usize, v: &CVec) -> CVec {
    let n = v.len();
    let mut out = CVec::zeros(n);
    for j in 0..n - 1 {
        out[j + 1] += v[j];
    }
    out[transient] += v[n - 1];
    out
}

/// C_{s+1,s+T}^t · v computed via [`reduce_exponent`] and repeated single
/// shifts; O(s+T) per application, never a dense matrix power.
pub fn gcs_apply_power(transient: usize, period: usize, t: usize, v: &CVec) -> Result<CVec> {
    let n = transient + period;
    if v.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "vector length {} does not match shift dimension s+T = {}",
            v.len(),
            n
        )));
    }
    let reduced = reduce_exponent(transient, period, t)?;
    let mut out = v.clone();
    for _ in 0..reduced {
        out = shift_once(transient, &out);
    }
    Ok(out)
}

/// ‖M^a − M^b‖ in spectral norm: the membership residual of M in the
/// algebraic set of (approximate) roots of p(z) = z^a − z^b.
pub fn poly_residual(m: &CMat, p: PeriodicPoly) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "polynomial residual needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let high = matrix_power(m, p.a)?;
    let low = matrix_power(m, p.b)?;
    spectral_norm(&(high - low))
}

/// Residual budget after a δ-perturbation: if ‖X‖ ≤ 2, ‖p(X)‖ ≤ δ and
/// ‖X − Y‖ ≤ δ, then ‖p(Y)‖ ≤ (1 + p'_abs(2+δ))·δ, where
/// p'_abs(z) = a·z^{a−1} + b·z^{b−1} is the derivative of |z|^a + |z|^b.
pub fn poly_pert_bound(p: PeriodicPoly, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "perturbation size must be nonnegative, got {delta}"
        )));
    }
    let z = 2.0 + delta;
    let a = p.a as f64;
    let b = p.b as f64;
    let da = a * z.powi(p.a as i32 - 1);
    let db = if p.b == 0 {
        0.0
    } else {
        b * z.powi(p.b as i32 - 1)
    };
    Ok((1.0 + da + db) * delta)
}
