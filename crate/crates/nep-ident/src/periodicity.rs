//! Near-eventual-periodicity detection on sampled trajectories.
//!
//! A trajectory is a matrix whose t-th column is the system state at step t.
//! The detectors look for the smallest pair (s, T) — transient length s,
//! period T — such that every column beyond the transient matches the column
//! one period later within a tolerance eps. Two routes are provided:
//!
//! * [`estimate_index_direct`] compares columns by Euclidean norm; this is
//!   the ground-truth oracle.
//! * [`estimate_index_cov`] scans the trajectory's covariance matrix for
//!   the diagonal stripes that repeated columns leave behind, then confirms
//!   surviving candidates with the direct test. The covariance criterion is
//!   necessary but not sufficient (distant columns can share a covariance
//!   value), hence the confirmation pass.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{CMat, CVec};

/// Snapshot matrix with time-ordered columns plus optional sampling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// n×N data; column t (0-based t−1) is the state at step t.
    pub data: CMat,
    /// Physical time step between columns, when known.
    pub dt: Option<f64>,
    /// Free-form origin tag (generator name, file stem, …).
    pub label: Option<String>,
}

impl Trajectory {
    pub fn new(data: CMat) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidInput(
                "trajectory must have at least one row and one column".into(),
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(
                "trajectory contains non-finite entries".into(),
            ));
        }
        Ok(Self {
            data,
            dt: None,
            label: None,
        })
    }

    pub fn from_columns(cols: &[CVec]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::InvalidInput("no columns supplied".into()));
        }
        let n = cols[0].len();
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::ShapeMismatch(
                "trajectory columns must share one length".into(),
            ));
        }
        Self::new(CMat::from_fn(n, cols.len(), |i, j| cols[j][i]))
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// State dimension (rows).
    pub fn state_dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of snapshots (columns).
    pub fn steps(&self) -> usize {
        self.data.ncols()
    }

    /// Snapshot at 1-based step t.
    pub fn snapshot(&self, t: usize) -> CVec {
        self.data.column(t - 1).clone_owned()
    }
}

/// A detected (transient, period) pair together with the tolerance that
/// certified it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsIndex {
    /// Transient length: columns 1..=s precede the periodic regime.
    pub s: usize,
    /// Period, at least 1.
    #[serde(rename = "T")]
    pub period: usize,
    /// Tolerance under which the pair was certified.
    pub eps: f64,
}

impl EpsIndex {
    /// s + T, the number of columns a realization consumes.
    pub fn span(&self) -> usize {
        self.s + self.period
    }
}

/// Arithmetic mean of the entries of a column.
pub fn column_mean(v: &CVec) -> Result<Complex64> {
    if v.is_empty() {
        return Err(Error::InvalidInput("mean of an empty vector".into()));
    }
    Ok(v.sum() / Complex64::new(v.len() as f64, 0.0))
}

/// Sample standard deviation ‖v − μ(v)e‖ / √(n−1); zero iff v is constant.
pub fn column_std(v: &CVec) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::InvalidInput(
            "standard deviation needs at least two entries".into(),
        ));
    }
    let mu = column_mean(v)?;
    let centered = v.map(|z| z - mu);
    Ok(centered.norm() / ((v.len() - 1) as f64).sqrt())
}

/// Covariance matrix of the trajectory, treating the N columns as variables
/// and the n rows as observations:
/// cov(X) = (1/(n−1))·(X − (1/n)ee*X)*·(X − (1/n)ee*X), an N×N Hermitian
/// positive semidefinite matrix whose (j,j) entry is σ̂(x_j)².
pub fn covariance(x: &Trajectory) -> Result<CMat> {
    if x.state_dim() < 2 {
        return Err(Error::InvalidInput(
            "covariance needs at least two rows (observations)".into(),
        ));
    }
    let n = x.state_dim() as f64;
    let mut centered = x.data.clone();
    for mut col in centered.column_iter_mut() {
        let mu = col.sum() / Complex64::new(n, 0.0);
        col.add_scalar_mut(-mu);
    }
    Ok(centered.adjoint() * &centered * Complex64::new(1.0 / (n - 1.0), 0.0))
}

/// How far a covariance entry can drift from the variance σ̂(x_j)² when the
/// partner column sits at distance eps: returns 2·σ̂(x_j)·eps/√(n−1).
pub fn cov_pert_bound(xj: &CVec, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "tolerance must be nonnegative, got {eps}"
        )));
    }
    let sigma = column_std(xj)?;
    Ok(2.0 * sigma * eps / ((xj.len() - 1) as f64).sqrt())
}

/// Threshold mode for [`detection_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub enum DetectionDelta {
    /// One threshold for every column.
    Uniform(f64),
    /// Column-dependent thresholds δ_j, length N.
    PerColumn(Vec<f64>),
}

/// 0/1 matrix marking which column pairs the covariance criterion accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMatrix {
    /// N×N; entry (k, j) — 0-based — is set iff k ≥ j and
    /// |cov_{kj} − σ̂(x_j)²| passed the column-j threshold.
    pub bits: DMatrix<bool>,
}

impl DetectionMatrix {
    /// 0-based accessor.
    pub fn is_set(&self, k: usize, j: usize) -> bool {
        self.bits[(k, j)]
    }

    pub fn size(&self) -> usize {
        self.bits.nrows()
    }
}

/// Lower-triangular detection pattern: entry (k,j) with k ≥ j is set iff
/// |cov_{kj} − σ̂(x_j)²| ≤ δ_j. The variance σ̂(x_j)² is read off the
/// covariance diagonal, so the diagonal is set even at δ = 0.
pub fn detection_matrix(x: &Trajectory, delta: &DetectionDelta) -> Result<DetectionMatrix> {
    let nsteps = x.steps();
    let deltas: Vec<f64> = match delta {
        DetectionDelta::Uniform(d) => {
            if !(*d >= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "detection threshold must be nonnegative, got {d}"
                )));
            }
            vec![*d; nsteps]
        }
        DetectionDelta::PerColumn(ds) => {
            if ds.len() != nsteps {
                return Err(Error::ShapeMismatch(format!(
                    "{} thresholds for {} columns",
                    ds.len(),
                    nsteps
                )));
            }
            if ds.iter().any(|d| !(*d >= 0.0)) {
                return Err(Error::InvalidSpec(
                    "detection thresholds must be nonnegative".into(),
                ));
            }
            ds.clone()
        }
    };
    let cov = covariance(x)?;
    let bits = DMatrix::from_fn(nsteps, nsteps, |k, j| {
        k >= j && (cov[(k, j)] - cov[(j, j)].re).norm() <= deltas[j]
    });
    Ok(DetectionMatrix { bits })
}

/// Euclidean distances between all column pairs at positive lag:
/// entry (q, lag) — both 0-based — is ‖x_{q+1+lag+1} − x_{q+1}‖… i.e.
/// `dist[q][l] = ‖column(q + l + 1) − column(q)‖` in 0-based columns.
fn lag_distances(data: &CMat) -> Vec<Vec<f64>> {
    let nsteps = data.ncols();
    (0..nsteps)
        .map(|q| {
            (q + 1..nsteps)
                .map(|p| (data.column(p) - data.column(q)).norm())
                .collect()
        })
        .collect()
}

fn lag_dist(dists: &[Vec<f64>], q0: usize, p0: usize) -> f64 {
    dists[q0][p0 - q0 - 1]
}

/// Smallest transient s making period `t` pass the direct-norm test, if any:
/// every 1-based q in s+1..=N−T must satisfy ‖x_{q+T} − x_q‖ ≤ eps, and
/// s + T ≤ N − 1 must leave at least one such q.
fn min_transient_direct(
    dists: &[Vec<f64>],
    nsteps: usize,
    period: usize,
    eps: f64,
) -> Option<usize> {
    let mut s = 0usize;
    for q in 1..=nsteps - period {
        if lag_dist(dists, q - 1, q - 1 + period) > eps {
            s = q;
        }
    }
    (s + period <= nsteps - 1).then_some(s)
}

/// Direct-norm index estimator: lexicographically smallest (T, then s) with
/// s+T ≤ N−1 such that ‖x_{q+T} − x_q‖ ≤ eps for every q in s+1..=N−T.
pub fn estimate_index_direct(x: &Trajectory, eps: f64) -> Result<EpsIndex> {
    validate_eps(eps)?;
    let nsteps = x.steps();
    if nsteps < 3 {
        return Err(Error::InvalidInput(format!(
            "index estimation needs at least 3 snapshots, got {nsteps}"
        )));
    }
    let dists = lag_distances(&x.data);
    for period in 1..nsteps {
        if let Some(s) = min_transient_direct(&dists, nsteps, period, eps) {
            return Ok(EpsIndex { s, period, eps });
        }
    }
    Err(Error::NotNearlyPeriodic { eps })
}

/// Covariance-based index estimator: builds the detection matrix with the
/// column-dependent thresholds δ_j = 2σ̂(x_j)·eps/√(n−1), finds the smallest
/// (T, then s) whose full stripe pattern {(q+mT, q) : q ≥ s+1} is all ones,
/// and confirms each surviving candidate with the direct-norm test before
/// returning it.
pub fn estimate_index_cov(x: &Trajectory, eps: f64) -> Result<EpsIndex> {
    validate_eps(eps)?;
    let nsteps = x.steps();
    if nsteps < 3 {
        return Err(Error::InvalidInput(format!(
            "index estimation needs at least 3 snapshots, got {nsteps}"
        )));
    }
    if x.state_dim() < 2 {
        return Err(Error::InvalidInput(
            "covariance-based detection needs state dimension at least 2".into(),
        ));
    }
    let cov = covariance(x)?;
    let scale = 2.0 * eps / ((x.state_dim() - 1) as f64).sqrt();
    let deltas: Vec<f64> = (0..nsteps)
        .map(|j| scale * cov[(j, j)].re.max(0.0).sqrt())
        .collect();
    let bits = DMatrix::from_fn(nsteps, nsteps, |k, j| {
        k >= j && (cov[(k, j)] - cov[(j, j)].re).norm() <= deltas[j]
    });
    let dists = lag_distances(&x.data);

    for period in 1..nsteps {
        // Largest 1-based q whose stripe has a hole forces s ≥ q.
        let mut s_stripe = 0usize;
        for q in 1..=nsteps {
            let mut p = q + period;
            while p <= nsteps {
                if !bits[(p - 1, q - 1)] {
                    s_stripe = q;
                    break;
                }
                p += period;
            }
        }
        let Some(s_direct) = min_transient_direct(&dists, nsteps, period, eps) else {
            continue;
        };
        let s = s_stripe.max(s_direct);
        if s + period <= nsteps - 1 {
            return Ok(EpsIndex { s, period, eps });
        }
    }
    Err(Error::NotNearlyPeriodic { eps })
}

/// Synthetic-data diagnostic: does the sample's detected index match the
/// underlying orbit's, with the first s+T sample columns eps-close to the
/// truth? Truth must extend at least as far as the sample.
pub fn is_meaningful(sample: &Trajectory, truth: &Trajectory, eps: f64) -> Result<bool> {
    if sample.state_dim() != truth.state_dim() {
        return Err(Error::ShapeMismatch(format!(
            "sample has {} rows, truth {}",
            sample.state_dim(),
            truth.state_dim()
        )));
    }
    if truth.steps() < sample.steps() {
        return Err(Error::InvalidInput(format!(
            "truth supplies {} snapshots but the sample has {}",
            truth.steps(),
            sample.steps()
        )));
    }
    let sample_idx = match estimate_index_direct(sample, eps) {
        Ok(idx) => idx,
        Err(Error::NotNearlyPeriodic { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    let prefix = Trajectory::new(truth.data.columns(0, sample.steps()).clone_owned())?;
    let truth_idx = match estimate_index_direct(&prefix, eps) {
        Ok(idx) => idx,
        Err(Error::NotNearlyPeriodic { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    if (sample_idx.s, sample_idx.period) != (truth_idx.s, truth_idx.period) {
        return Ok(false);
    }
    let span = truth_idx.span();
    for t in 0..span {
        if (sample.data.column(t) - truth.data.column(t)).norm() > eps {
            return Ok(false);
        }
    }
    Ok(true)
}

fn validate_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "tolerance must be a nonnegative finite number, got {eps}"
        )));
    }
    Ok(())
}
