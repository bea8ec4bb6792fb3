//! Realization fitting: turning a detected (s, T) index into an operator
//! that reproduces the sampled transitions, in three flavors.
//!
//! * **CMR** — full-dimension cyclic realization
//!   A = U·S_δ·V·C_{s+1,s+T}·V*·S_δ^{−1}·U*, kept factored; matrix-vector
//!   products cost O(n·k + s+T) and the dense n×n form is materialized only
//!   for small diagnostics.
//! * **CROM** — reduced-order realization A_η on the leading-r singular
//!   subspace, fitted by least squares on the compressed one-step pairs.
//! * **UCROM** — CROM followed by projection onto the unitary group via the
//!   polar decomposition, valid when A_η is δ-close to unitary on both
//!   sides.
//!
//! Every fitted model carries a residual certificate: the worst one-step
//! prediction error over a fixed horizon and the spectral-norm residuals of
//! the two-term polynomials z^{s+T} − z^s and z^{s+T+1} − z^{s+1}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcs::{self, PeriodicPoly};
use crate::numkernel::{
    lstsq, polar_unitary, spectral_norm, svd_reduced, CMat, CVec, SvdFactors, ZERO_SV_REL,
};
use crate::periodicity::{estimate_index_direct, EpsIndex, Trajectory};

/// Residual certificate attached to every fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualReport {
    /// max_t ‖A·x_t − x_{t+1}‖ over the evaluation horizon.
    pub one_step_max: f64,
    /// Same maximum with each step divided by ‖x_{t+1}‖.
    pub one_step_rel_max: f64,
    /// ‖M^{s+T} − M^s‖ of the compressed operator.
    pub poly_residual_st: f64,
    /// ‖M^{s+T+1} − M^{s+1}‖ of the compressed operator; for CMR this equals
    /// the same residual of the full n×n operator exactly.
    pub poly_residual_st1: f64,
    /// ‖U_η·U_η* − 1‖ (unitary models only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unitarity_defect: Option<f64>,
    /// ‖A_η − U_η‖ (unitary models only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nearness: Option<f64>,
}

/// Singular values with exact zeros replaced by a fill-in value δ, making
/// the diagonal factor invertible: entries stay put when they exceed the
/// zero threshold and become δ otherwise.
pub fn perturb_singular(s: &[f64], delta: f64) -> Result<Vec<f64>> {
    validate_delta(delta)?;
    let threshold = ZERO_SV_REL * s.first().copied().unwrap_or(0.0);
    Ok(s.iter()
        .map(|&sv| if sv > threshold { sv } else { delta })
        .collect())
}

/// Reduced SVD with the perturbed diagonal: X_δ = U·diag(S_δ)·V satisfies
/// ‖X − X_δ‖ ≤ δ.
#[derive(Debug, Clone)]
pub struct PerturbedSvd {
    pub u: CMat,
    pub v: CMat,
    pub sdelta: Vec<f64>,
    pub delta: f64,
}

impl PerturbedSvd {
    pub fn new(factors: SvdFactors, delta: f64) -> Result<Self> {
        let sdelta = perturb_singular(&factors.s, delta)?;
        Ok(Self {
            u: factors.u,
            v: factors.v,
            sdelta,
            delta,
        })
    }
}

/// Cyclic matrix realization, stored factored. With k the reduced SVD
/// dimension of the first s+T snapshots,
/// `u` is n×k, `v` is k×(s+T) with orthonormal rows, and the operator is
/// A = u·diag(sdelta)·v·C_{s+1,s+T}·v*·diag(sdelta)^{−1}·u*.
#[derive(Debug, Clone)]
pub struct CmrModel {
    pub u: CMat,
    pub v: CMat,
    pub sdelta: Vec<f64>,
    pub index: EpsIndex,
    pub delta: f64,
    pub residuals: ResidualReport,
}

impl CmrModel {
    pub fn state_dim(&self) -> usize {
        self.u.nrows()
    }

    /// Reduced SVD dimension k = min(n, s+T).
    pub fn core_dim(&self) -> usize {
        self.sdelta.len()
    }

    /// s + T, the shift dimension.
    pub fn span(&self) -> usize {
        self.index.span()
    }

    /// Shift-basis coordinates of a state: V*·S_δ^{−1}·U*·x, length s+T.
    pub fn encode(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.state_dim() {
            return Err(Error::ShapeMismatch(format!(
                "state has length {}, model expects {}",
                x.len(),
                self.state_dim()
            )));
        }
        let mut w = self.u.adjoint() * x;
        for (j, &sv) in self.sdelta.iter().enumerate() {
            w[j] /= sv;
        }
        Ok(self.v.adjoint() * w)
    }

    /// Back from shift-basis coordinates: U·S_δ·V·c.
    pub fn decode(&self, c: &CVec) -> Result<CVec> {
        if c.len() != self.span() {
            return Err(Error::ShapeMismatch(format!(
                "shift coordinate has length {}, model expects {}",
                c.len(),
                self.span()
            )));
        }
        let mut w = &self.v * c;
        for (j, &sv) in self.sdelta.iter().enumerate() {
            w[j] *= sv;
        }
        Ok(&self.u * w)
    }

    /// One application of A, right to left through the factors.
    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        let c = self.encode(x)?;
        let shifted = gcs::gcs_apply_power(self.index.s, self.index.period, 1, &c)?;
        self.decode(&shifted)
    }

    /// The compressed operator B = U*·A·U = S_δ·(V·C)·V*·S_δ^{−1}, k×k.
    /// Because A = U·B·U* with U*U = 1, ‖A‖ = ‖B‖ and
    /// ‖A^a − A^b‖ = ‖B^a − B^b‖ for all a, b ≥ 1.
    pub fn core(&self) -> CMat {
        let vc = shifted_columns(&self.v, self.index.s);
        let mut b = vc * self.v.adjoint();
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                b[(i, j)] *= self.sdelta[i] / self.sdelta[j];
            }
        }
        b
    }

    /// ‖A‖, computed exactly as the spectral norm of the compressed core.
    pub fn operator_norm(&self) -> Result<f64> {
        spectral_norm(&self.core())
    }

    /// Dense n×n form of A, for small diagnostics only.
    pub fn dense(&self) -> Result<CMat> {
        let n = self.state_dim();
        if n > 512 {
            return Err(Error::InvalidInput(format!(
                "dense CMR form is a diagnostic for n <= 512, got n = {n}"
            )));
        }
        Ok(&self.u * self.core() * self.u.adjoint())
    }
}

/// Reduced cyclic realization: the compressed operator A_η on the leading-r
/// left singular subspace, lifted by W.
#[derive(Debug, Clone)]
pub struct CromModel {
    /// n×r, orthonormal columns.
    pub w: CMat,
    /// r×r reduced operator.
    pub aeta: CMat,
    pub index: EpsIndex,
    pub delta: f64,
    pub r: usize,
    pub residuals: ResidualReport,
}

impl CromModel {
    pub fn state_dim(&self) -> usize {
        self.w.nrows()
    }

    /// One application of the lifted operator W·A_η·W*.
    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.state_dim() {
            return Err(Error::ShapeMismatch(format!(
                "state has length {}, model expects {}",
                x.len(),
                self.state_dim()
            )));
        }
        Ok(&self.w * (&self.aeta * (self.w.adjoint() * x)))
    }
}

/// Unitary reduced realization: the polar factor U_η of a near-unitary A_η.
#[derive(Debug, Clone)]
pub struct UcromModel {
    /// n×r, orthonormal columns.
    pub w: CMat,
    /// r×r unitary operator.
    pub ueta: CMat,
    pub index: EpsIndex,
    pub delta: f64,
    pub r: usize,
    /// ‖A_η − U_η‖, the price of unitarity.
    pub nearness: f64,
    pub residuals: ResidualReport,
}

impl UcromModel {
    pub fn state_dim(&self) -> usize {
        self.w.nrows()
    }

    /// One application of the lifted operator W·U_η·W*.
    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.state_dim() {
            return Err(Error::ShapeMismatch(format!(
                "state has length {}, model expects {}",
                x.len(),
                self.state_dim()
            )));
        }
        Ok(&self.w * (&self.ueta * (self.w.adjoint() * x)))
    }
}

/// Any fitted realization, for code that is generic over the three kinds.
#[derive(Debug, Clone)]
pub enum Model {
    Cmr(CmrModel),
    Crom(CromModel),
    Ucrom(UcromModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Cmr(_) => "cmr",
            Model::Crom(_) => "crom",
            Model::Ucrom(_) => "ucrom",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Model::Cmr(m) => m.state_dim(),
            Model::Crom(m) => m.state_dim(),
            Model::Ucrom(m) => m.state_dim(),
        }
    }

    pub fn index(&self) -> EpsIndex {
        match self {
            Model::Cmr(m) => m.index,
            Model::Crom(m) => m.index,
            Model::Ucrom(m) => m.index,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Model::Cmr(m) => m.delta,
            Model::Crom(m) => m.delta,
            Model::Ucrom(m) => m.delta,
        }
    }

    /// Dimension of the compressed operator (k for CMR, r otherwise).
    pub fn reduced_dim(&self) -> usize {
        match self {
            Model::Cmr(m) => m.core_dim(),
            Model::Crom(m) => m.r,
            Model::Ucrom(m) => m.r,
        }
    }

    pub fn residuals(&self) -> &ResidualReport {
        match self {
            Model::Cmr(m) => &m.residuals,
            Model::Crom(m) => &m.residuals,
            Model::Ucrom(m) => &m.residuals,
        }
    }

    /// One application of the realized operator.
    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        match self {
            Model::Cmr(m) => m.apply(x),
            Model::Crom(m) => m.apply(x),
            Model::Ucrom(m) => m.apply(x),
        }
    }

    /// The compressed connecting matrix (U*AU, A_η, or U_η) — the object
    /// pseudospectra are computed on.
    pub fn compressed(&self) -> CMat {
        match self {
            Model::Cmr(m) => m.core(),
            Model::Crom(m) => m.aeta.clone(),
            Model::Ucrom(m) => m.ueta.clone(),
        }
    }
}

/// Fit a cyclic matrix realization: detect (s, T), take the perturbed
/// reduced SVD of the first s+T snapshots, and wire the cyclic shift
/// through it.
pub fn fit_cmr(x: &Trajectory, eps: f64, delta: f64) -> Result<CmrModel> {
    validate_delta(delta)?;
    let (index, factors) = detect_and_factor(x, eps)?;
    let p = PerturbedSvd::new(factors, delta)?;
    let mut model = CmrModel {
        u: p.u,
        v: p.v,
        sdelta: p.sdelta,
        index,
        delta,
        residuals: ResidualReport::default(),
    };
    let horizon = default_horizon(&index, x.steps());
    model.residuals = report_for(&|y| model.apply(y), &model.core(), &index, x, horizon)?;
    Ok(model)
}

/// Fit a reduced cyclic realization: truncate to the r singular directions
/// at or above δ, compress the first s+T+1 snapshots, and solve the
/// one-step least-squares system
/// [x̂_1 … x̂_r]·Ĉ = [x̂_2 … x̂_{r+1}] for the connecting matrix.
pub fn fit_crom(x: &Trajectory, eps: f64, delta: f64) -> Result<CromModel> {
    validate_delta(delta)?;
    let (index, factors) = detect_and_factor(x, eps)?;
    let span = index.span();

    // r = min{max{1 ≤ t ≤ s+T | s_tt ≥ δ}, s+T}, at least 1 so the model
    // never degenerates to nothing when every singular value sits below δ.
    let r = factors
        .s
        .iter()
        .take(span)
        .rposition(|&sv| sv >= delta)
        .map_or(1, |p| p + 1);
    let w = factors.u.columns(0, r).clone_owned();

    // Compress one column past the span so the shifted pair includes the
    // wrap-around transition x_{s+T} → x_{s+T+1}; detection guarantees
    // s+T+1 ≤ N.
    let compressed = w.adjoint() * x.data.columns(0, span + 1);
    let head = compressed.columns(0, r).clone_owned();
    let shift = compressed.columns(1, r).clone_owned();

    let hf = svd_reduced(&head)?;
    let s_max = hf.s.first().copied().unwrap_or(0.0);
    let s_min = hf.s.last().copied().unwrap_or(0.0);
    if s_min <= ZERO_SV_REL * s_max {
        return Err(Error::DegenerateCompression(format!(
            "compressed snapshot matrix is numerically rank deficient \
             (singular values span [{s_min:e}, {s_max:e}])"
        )));
    }
    let chat = lstsq(&head, &shift)?;

    // A_η = U_r·S_r·V_r·Ĉ·V_r*·S_r^{−1}·U_r*: similar to Ĉ through the
    // invertible factor U_r·S_r·V_r (the head matrix itself).
    let mut left = hf.u.clone();
    let mut right = hf.u.adjoint();
    for (j, &sv) in hf.s.iter().enumerate() {
        left.column_mut(j).scale_mut(sv);
        right.row_mut(j).scale_mut(1.0 / sv);
    }
    let aeta = left * &hf.v * chat * hf.v.adjoint() * right;

    let mut model = CromModel {
        w,
        aeta,
        index,
        delta,
        r,
        residuals: ResidualReport::default(),
    };
    let horizon = default_horizon(&index, x.steps());
    model.residuals = report_for(&|y| model.apply(y), &model.aeta, &index, x, horizon)?;
    Ok(model)
}

/// Largest nearness a δ-near-unitary matrix can have to its polar factor:
/// √(1+δ) − 1.
pub fn unitary_nearness_bound(delta: f64) -> f64 {
    (1.0 + delta).sqrt() - 1.0
}

/// Fit a unitary reduced realization: run [`fit_crom`], require A_η to be
/// δ-near-unitary on both sides, and replace it by its polar factor.
pub fn fit_ucrom(x: &Trajectory, eps: f64, delta: f64) -> Result<UcromModel> {
    let crom = fit_crom(x, eps, delta)?;
    let id = CMat::identity(crom.r, crom.r);
    let right_defect = spectral_norm(&(&crom.aeta * crom.aeta.adjoint() - &id))?;
    let left_defect = spectral_norm(&(crom.aeta.adjoint() * &crom.aeta - &id))?;
    if right_defect > delta || left_defect > delta {
        return Err(Error::NotNearUnitary {
            right_defect,
            left_defect,
            allowed: delta,
        });
    }
    let ueta = polar_unitary(&crom.aeta)?;
    let nearness = spectral_norm(&(&crom.aeta - &ueta))?;

    let mut model = UcromModel {
        w: crom.w,
        ueta,
        index: crom.index,
        delta,
        r: crom.r,
        nearness,
        residuals: ResidualReport::default(),
    };
    let horizon = default_horizon(&model.index, x.steps());
    let mut report = report_for(&|y| model.apply(y), &model.ueta, &model.index, x, horizon)?;
    report.unitarity_defect = Some(spectral_norm(&(&model.ueta * model.ueta.adjoint() - &id))?);
    report.nearness = Some(nearness);
    model.residuals = report;
    Ok(model)
}

/// W*·M·W: restrict an n×n operator to the subspace spanned by W's columns.
pub fn compress(w: &CMat, m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() || m.nrows() != w.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "compress needs M square with W's row count, got W {}x{}, M {}x{}",
            w.nrows(),
            w.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(w.adjoint() * m * w)
}

/// W·Y·W*: lift a compressed operator back to state space. When W has
/// orthonormal columns this map is linear, multiplicative, *-preserving,
/// and isometric in spectral norm.
pub fn lift(w: &CMat, y: &CMat) -> Result<CMat> {
    if y.nrows() != y.ncols() || y.nrows() != w.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "lift needs Y square with W's column count, got W {}x{}, Y {}x{}",
            w.nrows(),
            w.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(w * y * w.adjoint())
}

/// Recompute a model's residual certificate over an arbitrary horizon.
/// References past the sampled range come from exact eventually periodic
/// extrapolation of the first s+T snapshots.
pub fn model_residuals(model: &Model, x: &Trajectory, horizon: usize) -> Result<ResidualReport> {
    if horizon == 0 {
        return Err(Error::InvalidSpec(
            "residual horizon must be positive".into(),
        ));
    }
    if model.state_dim() != x.state_dim() {
        return Err(Error::ShapeMismatch(format!(
            "model acts on dimension {}, trajectory has {}",
            model.state_dim(),
            x.state_dim()
        )));
    }
    let index = model.index();
    if x.steps() < index.span() {
        return Err(Error::InvalidInput(format!(
            "trajectory has {} snapshots, fewer than the model span {}",
            x.steps(),
            index.span()
        )));
    }
    let mut report = report_for(&|y| model.apply(y), &model.compressed(), &index, x, horizon)?;
    if let Model::Ucrom(m) = model {
        let id = CMat::identity(m.r, m.r);
        report.unitarity_defect = Some(spectral_norm(&(&m.ueta * m.ueta.adjoint() - &id))?);
        report.nearness = Some(m.nearness);
    }
    Ok(report)
}

/// Detect the index and factor the first s+T snapshots.
fn detect_and_factor(x: &Trajectory, eps: f64) -> Result<(EpsIndex, SvdFactors)> {
    let index = estimate_index_direct(x, eps)?;
    let span = index.span();
    if span + 1 > x.steps() {
        return Err(Error::InsufficientSample(format!(
            "need at least s+T+1 = {} snapshots, trajectory has {}",
            span + 1,
            x.steps()
        )));
    }
    let factors = svd_reduced(&x.data.columns(0, span).clone_owned())?;
    Ok((index, factors))
}

/// V·C_{s+1,s+T} without forming C: column j of the product is column j+1
/// of V for j < s+T−1, and column s (0-based) for the last one.
fn shifted_columns(v: &CMat, transient: usize) -> CMat {
    let m = v.ncols();
    CMat::from_fn(v.nrows(), m, |i, j| {
        if j + 1 < m {
            v[(i, j + 1)]
        } else {
            v[(i, transient)]
        }
    })
}

fn default_horizon(index: &EpsIndex, nsteps: usize) -> usize {
    (3 * index.span()).min(nsteps - 1)
}

/// Reference state at 1-based step t: the sampled column when available,
/// exact eventually periodic extrapolation beyond the sample.
fn reference(x: &Trajectory, index: &EpsIndex, t: usize) -> Result<CVec> {
    if t <= x.steps() {
        Ok(x.data.column(t - 1).clone_owned())
    } else {
        let col = gcs::reduce_exponent(index.s, index.period, t - 1)?;
        Ok(x.data.column(col).clone_owned())
    }
}

/// One-step residual scan plus polynomial residuals of the compressed
/// operator, shared by all three fits.
fn report_for(
    apply: &dyn Fn(&CVec) -> Result<CVec>,
    compressed: &CMat,
    index: &EpsIndex,
    x: &Trajectory,
    horizon: usize,
) -> Result<ResidualReport> {
    let mut one_step_max = 0.0f64;
    let mut one_step_rel_max = 0.0f64;
    for t in 1..=horizon {
        let here = reference(x, index, t)?;
        let next = reference(x, index, t + 1)?;
        let abs = (apply(&here)? - &next).norm();
        one_step_max = one_step_max.max(abs);
        let denom = next.norm();
        let rel = if denom > 0.0 {
            abs / denom
        } else if abs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        one_step_rel_max = one_step_rel_max.max(rel);
    }
    let span = index.span();
    let p_st = PeriodicPoly {
        a: span,
        b: index.s,
    };
    let p_st1 = PeriodicPoly {
        a: span + 1,
        b: index.s + 1,
    };
    Ok(ResidualReport {
        one_step_max,
        one_step_rel_max,
        poly_residual_st: gcs::poly_residual(compressed, p_st)?,
        poly_residual_st1: gcs::poly_residual(compressed, p_st1)?,
        unitarity_defect: None,
        nearness: None,
    })
}

fn validate_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "perturbation parameter delta must be positive and finite, got {delta}"
        )));
    }
    Ok(())
}
