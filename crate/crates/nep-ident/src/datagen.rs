//! Test-data generators: synthetic nearly eventually periodic trajectories
//! with a known ground-truth index, and a Crank–Nicolson harmonic
//! oscillator whose time step can be tuned to an exact discrete period.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkernel::{CMat, CVec};
use crate::periodicity::{EpsIndex, Trajectory};

/// Base states are drawn at least this far apart even when the noise
/// amplitude is zero, so the generated index stays minimal.
const MIN_SEPARATION_FLOOR: f64 = 1e-3;

/// Draw attempts per base state before giving up on the separation
/// constraint.
const DRAW_LIMIT: usize = 1000;

/// Parameters for a synthetic nearly eventually periodic trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NepSpec {
    /// State dimension.
    pub n: usize,
    /// Transient length.
    pub s: usize,
    /// Period.
    pub period: usize,
    /// Number of time steps to emit.
    pub steps: usize,
    /// Per-step perturbation norm; every emitted column sits exactly this
    /// far from its base state.
    pub noise: f64,
    /// Seed for the deterministic generator stream.
    pub seed: u64,
}

impl NepSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec(
                "state dimension must be positive".into(),
            ));
        }
        if self.period == 0 {
            return Err(Error::InvalidSpec("period must be positive".into()));
        }
        if self.steps < self.s + self.period + 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least s + T + 2 = {} steps to certify index (s={}, T={}), got {}",
                self.s + self.period + 2,
                self.s,
                self.period,
                self.steps
            )));
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "noise amplitude must be finite and nonnegative, got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

/// Generate a trajectory that is eventually periodic up to per-step noise,
/// together with its ground-truth index. The s + T base states are drawn
/// unit-norm with pairwise separation at least max(10·noise, 1e-3), which
/// keeps (s, T) the minimal index for any tolerance below 8·noise (or
/// below the floor when noiseless). Each emitted column is its base state
/// plus a perturbation of norm exactly `noise`, so the truth tolerance is
/// 2·noise.
pub fn gen_nep(spec: &NepSpec) -> Result<(Trajectory, EpsIndex)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let span = spec.s + spec.period;
    let min_sep = (10.0 * spec.noise).max(MIN_SEPARATION_FLOOR);

    let mut bases: Vec<CVec> = Vec::with_capacity(span);
    for _ in 0..span {
        let mut accepted = None;
        for _ in 0..DRAW_LIMIT {
            let cand = unit_gaussian(&mut rng, spec.n);
            if bases.iter().all(|b| (b - &cand).norm() >= min_sep) {
                accepted = Some(cand);
                break;
            }
        }
        match accepted {
            Some(v) => bases.push(v),
            None => {
                return Err(Error::GenerationFailed(format!(
                    "could not draw {span} base states with pairwise separation {min_sep} \
                     in dimension {} after {DRAW_LIMIT} attempts per state; lower the noise \
                     or raise the dimension",
                    spec.n
                )))
            }
        }
    }

    let cols: Vec<CVec> = (1..=spec.steps)
        .map(|t| {
            let i = if t <= spec.s {
                t
            } else {
                spec.s + 1 + ((t - spec.s - 1) % spec.period)
            };
            let base = bases[i - 1].clone();
            if spec.noise > 0.0 {
                let g = unit_gaussian(&mut rng, spec.n);
                base + g * Complex64::new(spec.noise, 0.0)
            } else {
                base
            }
        })
        .collect();

    let x = Trajectory::from_columns(&cols)?.with_label("nep");
    let truth = EpsIndex {
        s: spec.s,
        period: spec.period,
        eps: 2.0 * spec.noise,
    };
    Ok((x, truth))
}

fn unit_gaussian(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Parameters for the Crank–Nicolson harmonic-oscillator benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchrodingerSpec {
    /// Number of interior grid points on (-1, 1).
    pub n_x: usize,
    /// Number of time steps to emit.
    pub steps: usize,
    /// Time step.
    pub dt: f64,
    /// Index of the Hamiltonian eigenmode used as the initial state,
    /// counted from the ground state.
    pub mode: usize,
}

impl SchrodingerSpec {
    fn validate(&self) -> Result<()> {
        if self.n_x < 8 {
            return Err(Error::InvalidSpec(format!(
                "need at least 8 grid points, got {}",
                self.n_x
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidSpec("step count must be positive".into()));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "time step must be finite and positive, got {}",
                self.dt
            )));
        }
        if self.mode >= self.n_x {
            return Err(Error::InvalidSpec(format!(
                "mode {} out of range for {} grid points",
                self.mode, self.n_x
            )));
        }
        Ok(())
    }
}

/// Discrete harmonic-oscillator Hamiltonian −½∂ₓₓ + ½x² on (-1, 1) with
/// Dirichlet walls: second-order central differences on n_x interior
/// points. Mirrored off-diagonal entries are written from one expression,
/// so the matrix is symmetric to the bit.
pub fn oscillator_hamiltonian(n_x: usize) -> DMatrix<f64> {
    let h = 2.0 / (n_x + 1) as f64;
    let off = -0.5 / (h * h);
    let mut m = DMatrix::zeros(n_x, n_x);
    for j in 0..n_x {
        let x = -1.0 + (j + 1) as f64 * h;
        m[(j, j)] = 1.0 / (h * h) + 0.5 * x * x;
        if j + 1 < n_x {
            m[(j, j + 1)] = off;
            m[(j + 1, j)] = off;
        }
    }
    m
}

/// Eigenpair of the discrete oscillator, modes sorted by ascending energy.
pub fn oscillator_mode(n_x: usize, mode: usize) -> Result<(f64, DVector<f64>)> {
    if n_x < 8 {
        return Err(Error::InvalidSpec(format!(
            "need at least 8 grid points, got {n_x}"
        )));
    }
    if mode >= n_x {
        return Err(Error::InvalidSpec(format!(
            "mode {mode} out of range for {n_x} grid points"
        )));
    }
    let eig = SymmetricEigen::try_new(oscillator_hamiltonian(n_x), f64::EPSILON, 0)
        .ok_or_else(|| Error::GenerationFailed("oscillator eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n_x).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = order[mode];
    Ok((eig.eigenvalues[k], eig.eigenvectors.column(k).clone_owned()))
}

/// Time step that makes the Crank–Nicolson evolution of `mode` exactly
/// `period`-periodic: the scheme multiplies the mode by the unimodular
/// factor (1 − i·dt·λ/2)/(1 + i·dt·λ/2) each step, whose phase is
/// −2·atan(dt·λ/2), so dt = (2/λ)·tan(π/period) pins the phase to an
/// exact 2π/period. Periods below 3 would need a phase step of π or more,
/// which the factor cannot reach at positive dt.
pub fn period_matched_dt(n_x: usize, mode: usize, period: usize) -> Result<f64> {
    if period < 3 {
        return Err(Error::InvalidSpec(format!(
            "period must be at least 3 to match a positive time step, got {period}"
        )));
    }
    let (lambda, _) = oscillator_mode(n_x, mode)?;
    let dt = (2.0 / lambda) * (std::f64::consts::PI / period as f64).tan();
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::GenerationFailed(format!(
            "mode energy {lambda} gave unusable time step {dt}"
        )));
    }
    Ok(dt)
}

/// Evolve a Hamiltonian eigenmode with the Crank–Nicolson scheme
/// (1 + i·dt/2·H)ψ⁺ = (1 − i·dt/2·H)ψ. One LU factorisation is reused
/// across all steps; the scheme is unitary, so norms are conserved.
pub fn gen_schrodinger(spec: &SchrodingerSpec) -> Result<Trajectory> {
    spec.validate()?;
    let h_real = oscillator_hamiltonian(spec.n_x);
    let (_, mode_vec) = oscillator_mode(spec.n_x, spec.mode)?;

    let half = Complex64::new(0.0, spec.dt / 2.0);
    let mut a_plus = CMat::identity(spec.n_x, spec.n_x);
    let mut a_minus = CMat::identity(spec.n_x, spec.n_x);
    for i in 0..spec.n_x {
        for j in 0..spec.n_x {
            let hij = Complex64::new(h_real[(i, j)], 0.0);
            a_plus[(i, j)] += half * hij;
            a_minus[(i, j)] -= half * hij;
        }
    }
    let lu = nalgebra::linalg::LU::new(a_plus);

    let mut cols = Vec::with_capacity(spec.steps);
    cols.push(CVec::from_fn(spec.n_x, |i, _| {
        Complex64::new(mode_vec[i], 0.0)
    }));
    for _ in 1..spec.steps {
        let rhs = &a_minus * cols.last().expect("at least the initial state");
        let next = lu.solve(&rhs).ok_or_else(|| {
            Error::GenerationFailed("Crank–Nicolson system became singular".into())
        })?;
        cols.push(next);
    }
    Ok(Trajectory::from_columns(&cols)?
        .with_dt(spec.dt)
        .with_label("schrodinger"))
}

/// Add a perturbation of norm exactly `amplitude` to every column, drawn
/// deterministically from `seed`. Time step and label are preserved.
pub fn add_noise(x: &Trajectory, amplitude: f64, seed: u64) -> Result<Trajectory> {
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "noise amplitude must be finite and nonnegative, got {amplitude}"
        )));
    }
    if amplitude == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = x.data.clone();
    for mut col in data.column_iter_mut() {
        let g = unit_gaussian(&mut rng, col.nrows());
        col += g * Complex64::new(amplitude, 0.0);
    }
    let mut out = Trajectory::new(data)?;
    out.dt = x.dt;
    out.label = x.label.clone();
    Ok(out)
}
