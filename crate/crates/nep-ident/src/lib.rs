//! Identification and reduced-order modelling of nearly eventually periodic
//! (NEP) discrete-time systems from snapshot data.
//!
//! A trajectory x_1, x_2, … ∈ Cⁿ is *nearly eventually periodic* at tolerance
//! ε when, after a transient of length s, every column matches the column one
//! period T later within ε. This crate
//!
//! 1. **detects** the smallest such (s, T) from a finite sample, either by
//!    direct column comparison or through the covariance stripe pattern
//!    ([`periodicity`]);
//! 2. **realizes** the dynamics as a linear model built from the perturbed
//!    SVD of the first s+T snapshots — a full cyclic matrix realization, a
//!    reduced-order model on the leading singular subspace, or that model's
//!    nearest unitary ([`realization`]);
//! 3. **predicts** by exact index-bookkeeping extrapolation or model rollout,
//!    with relative-error series against ground truth ([`predict`]);
//! 4. **diagnoses** fitted models through pseudospectrum grids of the small
//!    compressed operators ([`pspectra`]).
//!
//! The algebraic backbone is the cyclic shift matrix C_{k,n} (columns
//! ê_2, …, ê_n, ê_k) and the two-term polynomials z^a − z^b it annihilates
//! ([`gcs`]). Synthetic ground-truth generators — parametric NEP signals and
//! a Crank–Nicolson harmonic-oscillator simulator — live in [`datagen`];
//! deterministic CSV/JSON persistence in [`io`].

pub mod datagen;
pub mod error;
pub mod gcs;
pub mod io;
pub mod numkernel;
pub mod periodicity;
pub mod predict;
pub mod pspectra;
pub mod realization;
#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};
pub use numkernel::{CMat, CVec};
pub use periodicity::{EpsIndex, Trajectory};
pub use realization::Model;
