//! Predictive simulation: exact eventually periodic extrapolation from a
//! detected index, model-driven rollout, and relative-error series against
//! a ground truth.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gcs;
use crate::numkernel::{CMat, CVec};
use crate::periodicity::Trajectory;
use crate::realization::Model;

/// Entry magnitudes beyond this multiple of the initial state's norm count
/// as numerical blowup during rollout.
pub const BLOWUP_FACTOR: f64 = 1e12;

/// State at step t+1 of the eventually periodic sequence whose first s+T
/// states are the basis columns: [x_1 … x_{s+T}]·C_{s+1,s+T}^t·ê_1. The
/// shift power is collapsed by exponent reduction, so this is a column
/// lookup, never a matrix power. For t ≤ s+T−1 it returns x_{t+1} exactly.
pub fn extrapolate_ep(basis: &CMat, s: usize, period: usize, t: usize) -> Result<CVec> {
    if basis.ncols() != s + period {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} columns, index (s={s}, T={period}) needs {}",
            basis.ncols(),
            s + period
        )));
    }
    let col = gcs::reduce_exponent(s, period, t)?;
    Ok(basis.column(col).clone_owned())
}

/// Roll a fitted model forward: column 1 is `x1` verbatim, column t+1 is
/// the model's one-step map applied to column t. CMR advances the shift
/// coordinates by index bookkeeping and CROM/UCROM advance the compressed
/// r-vector, so each step costs O(n·k) with no error accumulation beyond
/// the map itself.
pub fn simulate(model: &Model, x1: &CVec, horizon: usize) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::InvalidSpec(
            "simulation horizon must be positive".into(),
        ));
    }
    if x1.len() != model.state_dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial state has length {}, model expects {}",
            x1.len(),
            model.state_dim()
        )));
    }
    let limit = BLOWUP_FACTOR * x1.norm();
    let mut cols = Vec::with_capacity(horizon);
    cols.push(x1.clone());

    match model {
        Model::Cmr(m) => {
            let index = m.index;
            let mut c = m.encode(x1)?;
            for t in 2..=horizon {
                c = gcs::gcs_apply_power(index.s, index.period, 1, &c)?;
                let col = m.decode(&c)?;
                check_blowup(&col, t, limit)?;
                cols.push(col);
            }
        }
        Model::Crom(m) => {
            roll_compressed(&m.w, &m.aeta, x1, horizon, limit, &mut cols)?;
        }
        Model::Ucrom(m) => {
            roll_compressed(&m.w, &m.ueta, x1, horizon, limit, &mut cols)?;
        }
    }
    Trajectory::from_columns(&cols)
}

fn roll_compressed(
    w: &CMat,
    op: &CMat,
    x1: &CVec,
    horizon: usize,
    limit: f64,
    cols: &mut Vec<CVec>,
) -> Result<()> {
    let mut z = w.adjoint() * x1;
    for t in 2..=horizon {
        z = op * z;
        let col = w * &z;
        check_blowup(&col, t, limit)?;
        cols.push(col);
    }
    Ok(())
}

fn check_blowup(col: &CVec, step: usize, limit: f64) -> Result<()> {
    for z in col.iter() {
        let mag = z.norm();
        if !mag.is_finite() || mag > limit {
            return Err(Error::NumericalBlowup {
                step,
                magnitude: mag,
                limit,
            });
        }
    }
    Ok(())
}

/// Per-step relative errors ‖x̂_t − x_t‖_∞ / ‖x_t‖_∞ in the entrywise max
/// norm, one value per column.
pub fn relative_error_series(pred: &Trajectory, truth: &Trajectory) -> Result<Vec<f64>> {
    if pred.data.shape() != truth.data.shape() {
        return Err(Error::ShapeMismatch(format!(
            "prediction is {}x{} but truth is {}x{}",
            pred.state_dim(),
            pred.steps(),
            truth.state_dim(),
            truth.steps()
        )));
    }
    let max_abs = |col: nalgebra::DVectorView<Complex64>| -> f64 {
        col.iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    let mut series = Vec::with_capacity(pred.steps());
    for t in 0..pred.steps() {
        let denom = max_abs(truth.data.column(t));
        if denom == 0.0 {
            return Err(Error::DivisionByZero(format!(
                "truth column {} is zero in max norm",
                t + 1
            )));
        }
        let num = max_abs((pred.data.column(t) - truth.data.column(t)).column(0));
        series.push(num / denom);
    }
    Ok(series)
}
