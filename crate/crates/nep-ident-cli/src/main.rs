//! Command-line frontend: generate trajectories, detect their eventually
//! periodic index, fit realizations, roll models forward, and sample
//! pseudospectrum grids — with deterministic, atomically written artifacts.
//!
//! Exit codes: 0 success, 2 usage/parse/validation, 3 I/O, 4 not nearly
//! periodic at the requested tolerance, 5 not near-unitary (ucrom), 6
//! numerical blowup during rollout, 1 anything else.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nep_ident::datagen::{gen_nep, gen_schrodinger, period_matched_dt, NepSpec, SchrodingerSpec};
use nep_ident::io::{
    errors_to_csv, grid_to_csv, load_model, meta_path, read_trajectory, save_model, write_atomic,
    write_trajectory, DetectReport, MetaSidecar,
};
use nep_ident::periodicity::{estimate_index_cov, estimate_index_direct};
use nep_ident::predict::{extrapolate_ep, relative_error_series, simulate};
use nep_ident::pspectra::{default_window, pseudospectrum_grid};
use nep_ident::realization::{fit_cmr, fit_crom, fit_ucrom};
use nep_ident::{CMat, CVec, EpsIndex, Error, Model, Result, Trajectory};

#[derive(Parser)]
#[command(
    name = "nep-ident",
    version,
    about = "Identification and model-order reduction for nearly eventually periodic systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trajectory CSV plus metadata sidecar.
    Gen(GenArgs),
    /// Estimate the (s, T) index of a trajectory at a tolerance.
    Detect(DetectArgs),
    /// Fit a realization (cmr, crom, or ucrom) and write the model JSON.
    Fit(FitArgs),
    /// Roll a fitted model forward from an initial state.
    Predict(PredictArgs),
    /// Sample σ_min(z·1 − M) of the reduced operator over a grid.
    Pspec(PspecArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Nep,
    Schrodinger,
}

#[derive(Args)]
struct GenArgs {
    /// Which generator to run.
    #[arg(long, value_enum)]
    system: System,
    /// Output trajectory CSV path (sidecar goes next to it).
    #[arg(long)]
    out: PathBuf,

    /// State dimension (nep).
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Transient length (nep).
    #[arg(long, default_value_t = 0)]
    s: usize,
    /// Period (nep).
    #[arg(long = "T", default_value_t = 5)]
    period: usize,
    /// Number of time steps.
    #[arg(long, default_value_t = 40)]
    steps: usize,
    /// Per-step perturbation norm (nep).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Generator seed (nep).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of interior grid points (schrodinger).
    #[arg(long, default_value_t = 64)]
    nx: usize,
    /// Time step (schrodinger); exclusive with --match-period.
    #[arg(long, conflicts_with = "match_period")]
    dt: Option<f64>,
    /// Pick the time step that makes the chosen mode exactly this-periodic
    /// (schrodinger).
    #[arg(long = "match-period")]
    match_period: Option<usize>,
    /// Hamiltonian eigenmode used as the initial state (schrodinger).
    #[arg(long, default_value_t = 0)]
    mode: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectMethod {
    Direct,
    Cov,
}

#[derive(Args)]
struct DetectArgs {
    /// Input trajectory CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Detection tolerance.
    #[arg(long)]
    eps: f64,
    /// direct: lag-distance scan; cov: covariance stripes confirmed by the
    /// direct test.
    #[arg(long, value_enum)]
    method: DetectMethod,
    /// Output report JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitMethod {
    Cmr,
    Crom,
    Ucrom,
}

#[derive(Args)]
struct FitArgs {
    /// Input trajectory CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Detection tolerance.
    #[arg(long)]
    eps: f64,
    /// Singular-value fill-in / truncation threshold.
    #[arg(long)]
    delta: f64,
    /// Realization to fit.
    #[arg(long, value_enum)]
    method: FitMethod,
    /// Output model JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON path.
    #[arg(long)]
    model: PathBuf,
    /// Trajectory CSV whose first column is the initial state.
    #[arg(long)]
    init: PathBuf,
    /// Number of steps to emit (the first is the initial state).
    #[arg(long)]
    horizon: usize,
    /// Output prediction CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth trajectory CSV to score against.
    #[arg(long, requires = "errors_out")]
    truth: Option<PathBuf>,
    /// Output CSV for the per-step relative errors.
    #[arg(long = "errors-out", requires = "truth")]
    errors_out: Option<PathBuf>,
    /// For cmr models: report the max deviation between the rollout and
    /// direct basis extrapolation.
    #[arg(long)]
    check_extrapolation: bool,
}

#[derive(Args)]
struct PspecArgs {
    /// Model JSON path.
    #[arg(long)]
    model: PathBuf,
    /// Output grid CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Nodes per axis.
    #[arg(long, default_value_t = 200)]
    resolution: usize,
    /// Explicit window; give all four or none (default: spectrum bounding
    /// box padded by 0.5).
    #[arg(long = "re-min", allow_negative_numbers = true)]
    re_min: Option<f64>,
    #[arg(long = "re-max", allow_negative_numbers = true)]
    re_max: Option<f64>,
    #[arg(long = "im-min", allow_negative_numbers = true)]
    im_min: Option<f64>,
    #[arg(long = "im-max", allow_negative_numbers = true)]
    im_max: Option<f64>,
    /// Contour levels recorded with the grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|()| run(cli)) {
        let _ = writeln!(std::io::stderr(), "error: {e}");
        std::process::exit(exit_code(&e));
    }
}

/// Print a status line, ignoring a closed stdout (e.g. `… | head`): the
/// files are the real output, so a dead pipe must not abort the command.
macro_rules! say {
    ($($arg:tt)*) => {
        let _ = writeln!(std::io::stdout(), $($arg)*);
    };
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ParseError(_)
        | Error::InvalidSpec(_)
        | Error::InvalidInput(_)
        | Error::ShapeMismatch(_) => 2,
        Error::Io(_) => 3,
        Error::NotNearlyPeriodic { .. } => 4,
        Error::NotNearUnitary { .. } => 5,
        Error::NumericalBlowup { .. } => 6,
        _ => 1,
    }
}

/// NEP_IDENT_THREADS caps the parallelism of grid sampling; unset means
/// all cores.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("NEP_IDENT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.parse().map_err(|_| {
        Error::InvalidSpec(format!(
            "NEP_IDENT_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    if threads == 0 {
        return Err(Error::InvalidSpec(
            "NEP_IDENT_THREADS must be a positive integer, got '0'".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidSpec(format!("could not size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Pspec(args) => cmd_pspec(args),
    }
}

/// Outputs must not overwrite inputs or each other; compared as absolute
/// paths so `run.csv` and `./run.csv` collide as expected.
fn ensure_distinct_paths(inputs: &[&PathBuf], outputs: &[&PathBuf]) -> Result<()> {
    let absolute = |p: &PathBuf| std::path::absolute(p).map_err(Error::from);
    let outs: Vec<_> = outputs.iter().map(|p| absolute(p)).collect::<Result<_>>()?;
    for (i, out) in outs.iter().enumerate() {
        if outs[..i].contains(out) {
            return Err(Error::InvalidSpec(format!(
                "output paths must be distinct: {}",
                outputs[i].display()
            )));
        }
        for input in inputs {
            if absolute(input)? == *out {
                return Err(Error::InvalidSpec(format!(
                    "input and output paths must differ: {}",
                    input.display()
                )));
            }
        }
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let (x, meta) = match args.system {
        System::Nep => {
            let spec = NepSpec {
                n: args.n,
                s: args.s,
                period: args.period,
                steps: args.steps,
                noise: args.noise,
                seed: args.seed,
            };
            let (x, truth) = gen_nep(&spec)?;
            let meta = MetaSidecar::for_trajectory(&x, "nep")
                .with_ground_truth(truth)
                .with_seed(args.seed);
            (x, meta)
        }
        System::Schrodinger => {
            let dt = match (args.dt, args.match_period) {
                (Some(dt), None) => dt,
                (None, Some(period)) => {
                    let dt = period_matched_dt(args.nx, args.mode, period)?;
                    say!("matched dt = {dt} for period {period}");
                    dt
                }
                (None, None) => {
                    return Err(Error::InvalidSpec(
                        "schrodinger needs either --dt or --match-period".into(),
                    ))
                }
                (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
            };
            let spec = SchrodingerSpec {
                n_x: args.nx,
                steps: args.steps,
                dt,
                mode: args.mode,
            };
            let x = gen_schrodinger(&spec)?;
            let mut meta = MetaSidecar::for_trajectory(&x, "schrodinger");
            // A matched time step makes the orbit exactly periodic up to
            // solver roundoff; record the observed defect as the certified
            // ground-truth tolerance.
            if let Some(period) = args.match_period.filter(|p| *p < x.steps()) {
                let worst = (0..x.steps() - period)
                    .map(|q| (x.data.column(q + period) - x.data.column(q)).norm())
                    .fold(0.0, f64::max);
                meta = meta.with_ground_truth(EpsIndex {
                    s: 0,
                    period,
                    eps: worst,
                });
            }
            (x, meta)
        }
    };
    write_trajectory(&args.out, &x, &meta)?;
    say!(
        "wrote {} and {} ({}x{})",
        args.out.display(),
        meta_path(&args.out).display(),
        x.state_dim(),
        x.steps()
    );
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    ensure_distinct_paths(&[&args.input], &[&args.out])?;
    let (x, _) = read_trajectory(&args.input)?;
    let (idx, method) = match args.method {
        DetectMethod::Direct => (estimate_index_direct(&x, args.eps)?, "direct"),
        DetectMethod::Cov => (estimate_index_cov(&x, args.eps)?, "cov"),
    };
    // Both estimators only return indices with s+T+1 samples in evidence,
    // and the covariance route re-checks against the direct norms.
    let report = DetectReport {
        s: idx.s,
        period: idx.period,
        eps: idx.eps,
        method: method.to_string(),
        certified: true,
    };
    let json = nep_ident::io::detect_report_to_json(&report)?;
    write_atomic(&args.out, &json)?;
    say!("{json}");
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    ensure_distinct_paths(&[&args.input], &[&args.out])?;
    let (x, _) = read_trajectory(&args.input)?;
    let model = match args.method {
        FitMethod::Cmr => Model::Cmr(fit_cmr(&x, args.eps, args.delta)?),
        FitMethod::Crom => Model::Crom(fit_crom(&x, args.eps, args.delta)?),
        FitMethod::Ucrom => Model::Ucrom(fit_ucrom(&x, args.eps, args.delta)?),
    };
    save_model(&args.out, &model)?;
    let idx = model.index();
    let res = model.residuals();
    say!(
        "fitted {}: n={}, index (s={}, T={}), r={}, one-step max {:e}, annihilation {:e}",
        model.kind(),
        model.state_dim(),
        idx.s,
        idx.period,
        model.reduced_dim(),
        res.one_step_max,
        res.poly_residual_st
    );
    say!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let mut inputs = vec![&args.model, &args.init];
    inputs.extend(&args.truth);
    let mut outputs = vec![&args.out];
    outputs.extend(&args.errors_out);
    ensure_distinct_paths(&inputs, &outputs)?;

    let model = load_model(&args.model)?;
    let (init, _) = read_trajectory(&args.init)?;
    let x1 = init.snapshot(1);
    let mut rollout = simulate(&model, &x1, args.horizon)?;
    if let Some(dt) = init.dt {
        rollout = rollout.with_dt(dt);
    }

    // Everything that can fail runs before anything is written, so an error
    // leaves no partial artifacts behind.
    let errors = match (&args.truth, &args.errors_out) {
        (Some(truth_path), Some(_)) => {
            let (truth, _) = read_trajectory(truth_path)?;
            if truth.steps() < args.horizon {
                return Err(Error::InvalidInput(format!(
                    "truth has {} steps but the horizon is {}",
                    truth.steps(),
                    args.horizon
                )));
            }
            let truth_slice = Trajectory::new(truth.data.columns(0, args.horizon).clone_owned())?;
            Some(relative_error_series(&rollout, &truth_slice)?)
        }
        _ => None,
    };
    let gap = if args.check_extrapolation {
        Some(extrapolation_gap(&model, &rollout)?)
    } else {
        None
    };

    let meta = MetaSidecar::for_trajectory(&rollout, "predict");
    write_trajectory(&args.out, &rollout, &meta)?;
    say!(
        "wrote {} ({} steps from {})",
        args.out.display(),
        args.horizon,
        args.init.display()
    );
    if let (Some(errors), Some(errors_out)) = (errors, &args.errors_out) {
        write_atomic(errors_out, &errors_to_csv(&errors))?;
        let worst = errors.iter().copied().fold(0.0, f64::max);
        say!("max relative error {worst:e} over {} steps", args.horizon);
        say!("wrote {}", errors_out.display());
    }
    if let Some(gap) = gap {
        say!("extrapolation cross-check: max deviation {gap:e}");
    }
    Ok(())
}

/// Max deviation between the rollout and direct extrapolation over the
/// model's own snapshot basis (cmr only — the factors reconstruct it).
fn extrapolation_gap(model: &Model, rollout: &Trajectory) -> Result<f64> {
    let Model::Cmr(m) = model else {
        return Err(Error::InvalidSpec(
            "--check-extrapolation applies to cmr models only".into(),
        ));
    };
    let span = m.span();
    let cols: Vec<CVec> = (0..span)
        .map(|j| {
            let mut e = CVec::zeros(span);
            e[j] = num_complex::Complex64::new(1.0, 0.0);
            m.decode(&e)
        })
        .collect::<Result<_>>()?;
    let basis = CMat::from_columns(&cols);
    let idx = m.index;
    let mut gap = 0.0f64;
    for t in 0..rollout.steps() {
        let oracle = extrapolate_ep(&basis, idx.s, idx.period, t)?;
        gap = gap.max((rollout.data.column(t) - oracle).norm());
    }
    Ok(gap)
}

fn cmd_pspec(args: PspecArgs) -> Result<()> {
    ensure_distinct_paths(&[&args.model], &[&args.out])?;
    let model = load_model(&args.model)?;
    let compressed = model.compressed();

    let bbox = default_window(&compressed)?;
    say!(
        "spectrum bounding box (padded): re [{}, {}], im [{}, {}]",
        bbox.0,
        bbox.1,
        bbox.2,
        bbox.3
    );
    let window = parse_window(&args)?;
    if let Some(w) = window {
        say!("window: re [{}, {}], im [{}, {}]", w.0, w.1, w.2, w.3);
    }

    let mut grid = pseudospectrum_grid(&compressed, window, args.resolution)?;
    if let Some(levels) = args.levels.clone() {
        say!(
            "levels: {}",
            levels
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        );
        grid = grid.with_levels(levels);
    }
    write_atomic(&args.out, &grid_to_csv(&grid))?;
    say!(
        "wrote {} ({}x{} nodes)",
        args.out.display(),
        args.resolution,
        args.resolution
    );
    Ok(())
}

fn parse_window(args: &PspecArgs) -> Result<Option<(f64, f64, f64, f64)>> {
    let bounds = [args.re_min, args.re_max, args.im_min, args.im_max];
    if bounds.iter().all(Option::is_none) {
        return Ok(None);
    }
    if bounds.iter().any(Option::is_none) {
        return Err(Error::InvalidSpec(
            "give all of --re-min --re-max --im-min --im-max, or none".into(),
        ));
    }
    Ok(Some((
        args.re_min.unwrap(),
        args.re_max.unwrap(),
        args.im_min.unwrap(),
        args.im_max.unwrap(),
    )))
}
