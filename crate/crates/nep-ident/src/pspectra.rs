//! Pseudospectrum grids: σ_min(zI − M) sampled over a rectangular window of
//! the complex plane, with contour levels left to the caller.

use nalgebra::linalg::LU;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkernel::{self, CMat, CVec};

/// Dimensions up to this size take the dense-SVD route per node; larger
/// operators switch to inverse iteration on (B*B)⁻¹ with an LU solve.
const DIRECT_SVD_MAX: usize = 256;

/// Hard cap on the operator dimension; grids beyond this are better served
/// by compressing the model first.
const DIM_MAX: usize = 2048;

/// Padding added on every side of the spectrum's bounding box when no
/// window is given.
const WINDOW_PAD: f64 = 0.5;

const ITER_MAX: usize = 1000;
const ITER_RTOL: f64 = 1e-13;

/// Sampled σ_min values over an axis-aligned rectangle. `values` is stored
/// row-major by imaginary part then real part: index `i_im * resolution +
/// i_re` holds the node `re_min + i_re·Δre + i(im_min + i_im·Δim)`.
#[derive(Debug, Clone)]
pub struct PseudospectrumGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub resolution: usize,
    pub values: Vec<f64>,
    pub eps_levels: Option<Vec<f64>>,
}

impl PseudospectrumGrid {
    /// Grid node at row `i_im`, column `i_re`.
    pub fn node(&self, i_im: usize, i_re: usize) -> Complex64 {
        Complex64::new(self.re_nodes()[i_re], self.im_nodes()[i_im])
    }

    /// Sampled σ_min at row `i_im`, column `i_re`.
    pub fn value(&self, i_im: usize, i_re: usize) -> f64 {
        self.values[i_im * self.resolution + i_re]
    }

    /// Real-axis sample coordinates, ascending.
    pub fn re_nodes(&self) -> Vec<f64> {
        axis_nodes(self.re_min, self.re_max, self.resolution)
    }

    /// Imaginary-axis sample coordinates, ascending.
    pub fn im_nodes(&self) -> Vec<f64> {
        axis_nodes(self.im_min, self.im_max, self.resolution)
    }

    /// Attach contour levels for downstream plotting; the sampled values
    /// are unaffected.
    pub fn with_levels(mut self, levels: Vec<f64>) -> Self {
        self.eps_levels = Some(levels);
        self
    }
}

fn axis_nodes(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    let step = (hi - lo) / (resolution - 1) as f64;
    (0..resolution).map(|i| lo + i as f64 * step).collect()
}

/// Bounding box of the spectrum padded by 0.5 on every side, as
/// (re_min, re_max, im_min, im_max).
pub fn default_window(m: &CMat) -> Result<(f64, f64, f64, f64)> {
    let eigs = numkernel::eigenvalues(m)?;
    let mut re_lo = f64::INFINITY;
    let mut re_hi = f64::NEG_INFINITY;
    let mut im_lo = f64::INFINITY;
    let mut im_hi = f64::NEG_INFINITY;
    for z in &eigs {
        re_lo = re_lo.min(z.re);
        re_hi = re_hi.max(z.re);
        im_lo = im_lo.min(z.im);
        im_hi = im_hi.max(z.im);
    }
    Ok((
        re_lo - WINDOW_PAD,
        re_hi + WINDOW_PAD,
        im_lo - WINDOW_PAD,
        im_hi + WINDOW_PAD,
    ))
}

/// Sample σ_min(zI − M) on a `resolution`×`resolution` grid over `window`
/// (defaulting to the padded spectrum bounding box). Nodes are independent
/// and evaluated in parallel; the node order in `values` is fixed, so the
/// output does not depend on thread scheduling.
pub fn pseudospectrum_grid(
    m: &CMat,
    window: Option<(f64, f64, f64, f64)>,
    resolution: usize,
) -> Result<PseudospectrumGrid> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "pseudospectrum needs a square operator, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() > DIM_MAX {
        return Err(Error::InvalidSpec(format!(
            "operator dimension {} exceeds the grid limit {DIM_MAX}; compress the model first",
            m.nrows()
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidSpec(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    let (re_min, re_max, im_min, im_max) = match window {
        Some(w) => w,
        None => default_window(m)?,
    };
    for b in [re_min, re_max, im_min, im_max] {
        if !b.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "window bound {b} is not finite"
            )));
        }
    }
    if re_min >= re_max || im_min >= im_max {
        return Err(Error::InvalidSpec(format!(
            "window must have positive extent, got re [{re_min}, {re_max}], im [{im_min}, {im_max}]"
        )));
    }

    let re = axis_nodes(re_min, re_max, resolution);
    let im = axis_nodes(im_min, im_max, resolution);
    let n = m.nrows();
    let values: Vec<f64> = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| {
            let z = Complex64::new(re[idx % resolution], im[idx / resolution]);
            let mut b = -m.clone();
            for i in 0..n {
                b[(i, i)] += z;
            }
            if n <= DIRECT_SVD_MAX {
                sigma_min_direct(&b)
            } else {
                sigma_min_iterated(&b)
            }
        })
        .collect();

    Ok(PseudospectrumGrid {
        re_min,
        re_max,
        im_min,
        im_max,
        resolution,
        values,
        eps_levels: None,
    })
}

fn sigma_min_direct(b: &CMat) -> f64 {
    numkernel::min_singular(b).unwrap_or(0.0)
}

/// Inverse iteration for the smallest singular value: power iteration on
/// (B*B)⁻¹ via two triangular solves per sweep, reusing the LU factors of
/// B and B*. A singular factorisation means z is numerically an
/// eigenvalue, reported as σ_min = 0.
fn sigma_min_iterated(b: &CMat) -> f64 {
    let lu = LU::new(b.clone());
    let lu_adj = LU::new(b.adjoint());
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15);
    let mut v = CVec::from_fn(b.nrows(), |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    v /= Complex64::new(v.norm(), 0.0);

    let mut sigma = 0.0;
    for _ in 0..ITER_MAX {
        let u = match lu_adj.solve(&v) {
            Some(u) => u,
            None => return 0.0,
        };
        let w = match lu.solve(&u) {
            Some(w) => w,
            None => return 0.0,
        };
        let growth = w.norm();
        if !growth.is_finite() || growth == 0.0 {
            return 0.0;
        }
        let next = 1.0 / growth.sqrt();
        let done = (next - sigma).abs() <= ITER_RTOL * next.max(f64::MIN_POSITIVE);
        sigma = next;
        if done {
            break;
        }
        v = w / Complex64::new(growth, 0.0);
    }
    sigma
}

/// Distance from z to the closest point of `spectrum`; for normal M this
/// equals σ_min(zI − M).
pub fn distance_to_spectrum(z: Complex64, spectrum: &[Complex64]) -> f64 {
    spectrum
        .iter()
        .map(|l| (z - l).norm())
        .fold(f64::INFINITY, f64::min)
}
