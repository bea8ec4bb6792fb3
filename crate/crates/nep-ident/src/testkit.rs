//! Shared helpers for the in-crate unit tests: seeded RNG, random complex
//! matrices/vectors, and random unitaries independent of the code under test.

use nalgebra::linalg::QR;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numkernel::{CMat, CVec};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_complex(r: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn rand_cmat(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| rand_complex(r))
}

pub fn rand_cvec(r: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| rand_complex(r))
}

/// Random unitary via QR of a Gaussian matrix (Haar-ish; exactly unitary up
/// to roundoff).
pub fn rand_unitary(r: &mut ChaCha8Rng, n: usize) -> CMat {
    let m = rand_cmat(r, n, n);
    QR::new(m).q()
}

pub fn cvec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of the difference (an upper bound on the spectral norm;
/// fine for closeness assertions).
pub fn mat_norm_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "testkit: comparing unequal shapes");
    (a - b).norm()
}
