//! On-disk formats: trajectory CSV with a JSON metadata sidecar, model
//! JSON, detection reports, and pseudospectrum grid CSV. Floats are
//! printed with the shortest decimal that round-trips (both `Display` for
//! f64 and the JSON serializer do this), so save → load reproduces every
//! value to the bit, and all writes go through a same-directory temp file
//! plus rename so readers never observe a half-written file.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcs::PeriodicPoly;
use crate::numkernel::{CMat, CVec};
use crate::periodicity::{EpsIndex, Trajectory};
use crate::pspectra::PseudospectrumGrid;
use crate::realization::{CmrModel, CromModel, Model, ResidualReport, UcromModel};

/// Version stamp written into every JSON artifact.
pub const FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Atomic writes
// ---------------------------------------------------------------------------

/// Write `contents` to `path` via a temp file in the same directory and a
/// rename, so a crash or concurrent reader never sees a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let file_name = path.file_name().ok_or_else(|| {
        Error::InvalidInput(format!(
            "cannot write to '{}': no file name",
            path.display()
        ))
    })?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::ParseError(format!("serialization failed: {e}")))
}

// ---------------------------------------------------------------------------
// Trajectory CSV + metadata sidecar
// ---------------------------------------------------------------------------

/// Metadata stored next to a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSidecar {
    /// State dimension.
    pub n: usize,
    /// Number of time steps.
    #[serde(rename = "N")]
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dt: Option<f64>,
    /// Name of the producing generator or command.
    pub generator: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ground_truth_index: Option<EpsIndex>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub format_version: u32,
}

impl MetaSidecar {
    pub fn for_trajectory(x: &Trajectory, generator: impl Into<String>) -> Self {
        MetaSidecar {
            n: x.state_dim(),
            steps: x.steps(),
            dt: x.dt,
            generator: generator.into(),
            ground_truth_index: None,
            seed: None,
            format_version: FORMAT_VERSION,
        }
    }

    pub fn with_ground_truth(mut self, index: EpsIndex) -> Self {
        self.ground_truth_index = Some(index);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Sidecar path for a trajectory file: `run.csv` → `run.meta.json`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Render a trajectory as CSV: header `t,c0_re,c0_im,…`, one row per time
/// step with the 1-based step index first.
pub fn traj_to_csv(x: &Trajectory) -> String {
    let n = x.state_dim();
    let mut out = String::from("t");
    for i in 0..n {
        out.push_str(&format!(",c{i}_re,c{i}_im"));
    }
    out.push('\n');
    for t in 0..x.steps() {
        out.push_str(&(t + 1).to_string());
        for i in 0..n {
            let z = x.data[(i, t)];
            out.push_str(&format!(",{},{}", z.re, z.im));
        }
        out.push('\n');
    }
    out
}

/// Parse a trajectory CSV. Rows must be sequential from step 1 and every
/// entry must be a finite float; violations carry the offending line
/// number.
pub fn traj_from_csv(text: &str) -> Result<Trajectory> {
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty());
    let (_, header) = rows
        .next()
        .ok_or_else(|| Error::ParseError("trajectory file is empty".into()))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields[0].trim() != "t" {
        return Err(Error::ParseError(format!(
            "line 1: expected a header starting with 't', got '{}'",
            fields[0]
        )));
    }
    if fields.len() < 3 || (fields.len() - 1) % 2 != 0 {
        return Err(Error::ParseError(format!(
            "line 1: header must list a re/im column pair per component, got {} fields",
            fields.len()
        )));
    }
    let n = (fields.len() - 1) / 2;

    let mut cols: Vec<CVec> = Vec::new();
    for (lineno, line) in rows {
        let display_line = lineno + 1;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 1 + 2 * n {
            return Err(Error::ParseError(format!(
                "line {display_line}: expected {} fields, got {}",
                1 + 2 * n,
                parts.len()
            )));
        }
        let t: usize = parts[0].trim().parse().map_err(|_| {
            Error::ParseError(format!(
                "line {display_line}: bad step index '{}'",
                parts[0]
            ))
        })?;
        if t != cols.len() + 1 {
            return Err(Error::ParseError(format!(
                "line {display_line}: steps must be sequential from 1, got {t}"
            )));
        }
        let mut col = CVec::zeros(n);
        for i in 0..n {
            let re = parse_finite(parts[1 + 2 * i], display_line)?;
            let im = parse_finite(parts[2 + 2 * i], display_line)?;
            col[i] = Complex64::new(re, im);
        }
        cols.push(col);
    }
    if cols.is_empty() {
        return Err(Error::ParseError("trajectory file has no data rows".into()));
    }
    Trajectory::from_columns(&cols)
}

fn parse_finite(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| Error::ParseError(format!("line {line}: bad float '{token}'")))?;
    if !v.is_finite() {
        return Err(Error::ParseError(format!(
            "line {line}: non-finite value '{token}'"
        )));
    }
    Ok(v)
}

/// Write trajectory CSV and its metadata sidecar, both atomically.
pub fn write_trajectory(path: &Path, x: &Trajectory, meta: &MetaSidecar) -> Result<()> {
    write_atomic(path, &traj_to_csv(x))?;
    write_atomic(&meta_path(path), &to_json_pretty(meta)?)
}

/// Read a trajectory CSV; if a sidecar exists it is validated against the
/// data shape and its dt and generator are applied to the result.
pub fn read_trajectory(path: &Path) -> Result<(Trajectory, Option<MetaSidecar>)> {
    let text = fs::read_to_string(path)?;
    let mut x = traj_from_csv(&text)?;
    let mpath = meta_path(path);
    if !mpath.exists() {
        return Ok((x, None));
    }
    let meta: MetaSidecar = serde_json::from_str(&fs::read_to_string(&mpath)?)
        .map_err(|e| Error::ParseError(format!("{}: {e}", mpath.display())))?;
    if meta.n != x.state_dim() || meta.steps != x.steps() {
        return Err(Error::ParseError(format!(
            "{}: sidecar says {}x{} but the CSV holds {}x{}",
            mpath.display(),
            meta.n,
            meta.steps,
            x.state_dim(),
            x.steps()
        )));
    }
    if let Some(dt) = meta.dt {
        x = x.with_dt(dt);
    }
    x = x.with_label(meta.generator.clone());
    Ok((x, Some(meta)))
}

// ---------------------------------------------------------------------------
// Detection report
// ---------------------------------------------------------------------------

/// Outcome of an index-detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub s: usize,
    #[serde(rename = "T")]
    pub period: usize,
    pub eps: f64,
    /// "direct" or "cov".
    pub method: String,
    /// Whether the sample was long enough (N ≥ s+T+1) to certify the
    /// index rather than merely suggest it.
    pub certified: bool,
}

pub fn detect_report_to_json(report: &DetectReport) -> Result<String> {
    to_json_pretty(report)
}

pub fn detect_report_from_json(text: &str) -> Result<DetectReport> {
    serde_json::from_str(text).map_err(|e| Error::ParseError(format!("detect report: {e}")))
}

// ---------------------------------------------------------------------------
// Model JSON
// ---------------------------------------------------------------------------

type MatrixJson = Vec<Vec<[f64; 2]>>;

fn mat_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn mat_from_json(rows: &MatrixJson, what: &str) -> Result<CMat> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::ParseError(format!("{what} matrix is empty")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ParseError(format!("{what} matrix has ragged rows")));
    }
    for r in rows {
        for e in r {
            if !e[0].is_finite() || !e[1].is_finite() {
                return Err(Error::ParseError(format!(
                    "{what} matrix has a non-finite entry"
                )));
            }
        }
    }
    Ok(CMat::from_fn(rows.len(), ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Serialize, Deserialize)]
struct MatrixSet {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    u: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    v: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sdelta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    w: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    aeta: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    ueta: Option<MatrixJson>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    kind: String,
    n: usize,
    s: usize,
    #[serde(rename = "T")]
    period: usize,
    r: usize,
    eps: f64,
    delta: f64,
    /// Exponents of the annihilating polynomial z^a − z^b the fit
    /// certifies against.
    poly: PeriodicPoly,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    nearness: Option<f64>,
    matrices: MatrixSet,
    residuals: ResidualReport,
}

pub fn model_to_json(model: &Model) -> Result<String> {
    let index = model.index();
    let mut matrices = MatrixSet {
        u: None,
        v: None,
        sdelta: None,
        w: None,
        aeta: None,
        ueta: None,
    };
    let mut nearness = None;
    match model {
        Model::Cmr(m) => {
            matrices.u = Some(mat_to_json(&m.u));
            matrices.v = Some(mat_to_json(&m.v));
            matrices.sdelta = Some(m.sdelta.clone());
        }
        Model::Crom(m) => {
            matrices.w = Some(mat_to_json(&m.w));
            matrices.aeta = Some(mat_to_json(&m.aeta));
        }
        Model::Ucrom(m) => {
            matrices.w = Some(mat_to_json(&m.w));
            matrices.ueta = Some(mat_to_json(&m.ueta));
            nearness = Some(m.nearness);
        }
    }
    to_json_pretty(&ModelFile {
        format_version: FORMAT_VERSION,
        kind: model.kind().to_string(),
        n: model.state_dim(),
        s: index.s,
        period: index.period,
        r: model.reduced_dim(),
        eps: index.eps,
        delta: model.delta(),
        poly: PeriodicPoly::new(index.span(), index.s)?,
        nearness,
        matrices,
        residuals: *model.residuals(),
    })
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::ParseError(format!("model file: {e}")))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::ParseError(format!(
            "unsupported model format version {}, this build reads {FORMAT_VERSION}",
            file.format_version
        )));
    }
    let index = EpsIndex {
        s: file.s,
        period: file.period,
        eps: file.eps,
    };
    if file.poly.a != index.span() || file.poly.b != index.s {
        return Err(Error::ParseError(format!(
            "polynomial exponents (a={}, b={}) disagree with the index (s={}, T={})",
            file.poly.a, file.poly.b, file.s, file.period
        )));
    }
    let require = |field: Option<&MatrixJson>, what: &str| -> Result<CMat> {
        let rows = field.ok_or_else(|| {
            Error::ParseError(format!("{} model is missing the {what} matrix", file.kind))
        })?;
        mat_from_json(rows, what)
    };
    let model = match file.kind.as_str() {
        "cmr" => {
            let u = require(file.matrices.u.as_ref(), "u")?;
            let v = require(file.matrices.v.as_ref(), "v")?;
            let sdelta = file.matrices.sdelta.clone().ok_or_else(|| {
                Error::ParseError("cmr model is missing the sdelta values".into())
            })?;
            if u.ncols() != sdelta.len() || v.nrows() != sdelta.len() {
                return Err(Error::ParseError(format!(
                    "cmr factors disagree: u is {}x{}, v is {}x{}, sdelta has {} entries",
                    u.nrows(),
                    u.ncols(),
                    v.nrows(),
                    v.ncols(),
                    sdelta.len()
                )));
            }
            if v.ncols() != index.span() || u.nrows() != file.n {
                return Err(Error::ParseError(format!(
                    "cmr factors disagree with the header (n={}, s+T={})",
                    file.n,
                    index.span()
                )));
            }
            Model::Cmr(CmrModel {
                u,
                v,
                sdelta,
                index,
                delta: file.delta,
                residuals: file.residuals,
            })
        }
        "crom" | "ucrom" => {
            let w = require(file.matrices.w.as_ref(), "w")?;
            let op_name = if file.kind == "crom" { "aeta" } else { "ueta" };
            let op = if file.kind == "crom" {
                require(file.matrices.aeta.as_ref(), op_name)?
            } else {
                require(file.matrices.ueta.as_ref(), op_name)?
            };
            if op.nrows() != op.ncols() || op.nrows() != file.r || w.ncols() != file.r {
                return Err(Error::ParseError(format!(
                    "{} factors disagree: w is {}x{}, {op_name} is {}x{}, header says r={}",
                    file.kind,
                    w.nrows(),
                    w.ncols(),
                    op.nrows(),
                    op.ncols(),
                    file.r
                )));
            }
            if w.nrows() != file.n {
                return Err(Error::ParseError(format!(
                    "{} basis has {} rows but the header says n={}",
                    file.kind,
                    w.nrows(),
                    file.n
                )));
            }
            if file.kind == "crom" {
                Model::Crom(CromModel {
                    w,
                    aeta: op,
                    index,
                    delta: file.delta,
                    r: file.r,
                    residuals: file.residuals,
                })
            } else {
                let nearness = file.nearness.ok_or_else(|| {
                    Error::ParseError("ucrom model is missing the nearness value".into())
                })?;
                Model::Ucrom(UcromModel {
                    w,
                    ueta: op,
                    index,
                    delta: file.delta,
                    r: file.r,
                    nearness,
                    residuals: file.residuals,
                })
            }
        }
        other => {
            return Err(Error::ParseError(format!(
                "unknown model kind '{other}' (expected cmr, crom, or ucrom)"
            )))
        }
    };
    Ok(model)
}

/// Write a model JSON file atomically.
pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    write_atomic(path, &model_to_json(model)?)
}

/// Read a model JSON file.
pub fn load_model(path: &Path) -> Result<Model> {
    model_from_json(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Grid and error-series CSV
// ---------------------------------------------------------------------------

/// Render a pseudospectrum grid as CSV with header `re,im,sigma_min`, rows
/// in the grid's storage order (imaginary part outer, real part inner).
pub fn grid_to_csv(grid: &PseudospectrumGrid) -> String {
    let re = grid.re_nodes();
    let im = grid.im_nodes();
    let mut out = String::from("re,im,sigma_min\n");
    for (i_im, b) in im.iter().enumerate() {
        for (i_re, a) in re.iter().enumerate() {
            out.push_str(&format!("{a},{b},{}\n", grid.value(i_im, i_re)));
        }
    }
    out
}

/// Render a relative-error series as CSV with header `t,rel_err` and
/// 1-based steps.
pub fn errors_to_csv(errors: &[f64]) -> String {
    let mut out = String::from("t,rel_err\n");
    for (t, e) in errors.iter().enumerate() {
        out.push_str(&format!("{},{e}\n", t + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realization::{fit_cmr, fit_crom, fit_ucrom};
    use crate::testkit::{c, rand_cmat, rand_cvec, rng};

    fn random_traj(seed: u64, n: usize, steps: usize) -> Trajectory {
        let mut r = rng(seed);
        Trajectory::new(rand_cmat(&mut r, n, steps)).unwrap()
    }

    fn periodic_traj(seed: u64, n: usize, s: usize, period: usize, steps: usize) -> Trajectory {
        let mut r = rng(seed);
        let bases: Vec<CVec> = (0..s + period)
            .map(|_| {
                let v = rand_cvec(&mut r, n);
                let nv = v.norm();
                v / c(nv, 0.0)
            })
            .collect();
        let cols: Vec<CVec> = (1..=steps)
            .map(|t| {
                let i = if t <= s {
                    t
                } else {
                    s + 1 + ((t - s - 1) % period)
                };
                bases[i - 1].clone()
            })
            .collect();
        Trajectory::from_columns(&cols).unwrap()
    }

    #[test]
    fn trajectory_csv_round_trips_bitwise() {
        let x = random_traj(81, 3, 5).with_dt(0.25);
        let text = traj_to_csv(&x);
        assert!(text.starts_with("t,c0_re,c0_im,c1_re,c1_im,c2_re,c2_im\n"));
        let back = traj_from_csv(&text).unwrap();
        assert_eq!(back.data, x.data);
    }

    #[test]
    fn trajectory_csv_golden_small() {
        let cols = vec![
            CVec::from_vec(vec![c(0.5, 0.0)]),
            CVec::from_vec(vec![c(0.0, -0.25)]),
        ];
        let x = Trajectory::from_columns(&cols).unwrap();
        assert_eq!(traj_to_csv(&x), "t,c0_re,c0_im\n1,0.5,0\n2,0,-0.25\n");
    }

    #[test]
    fn trajectory_csv_parse_errors_carry_line_numbers() {
        let cases: &[(&str, &str)] = &[
            ("", "empty"),
            ("x,c0_re,c0_im\n1,0,0\n", "header"),
            ("t,c0_re\n1,0\n", "odd"),
            ("t,c0_re,c0_im\n", "no data"),
            ("t,c0_re,c0_im\n1,0\n", "fields"),
            ("t,c0_re,c0_im\nfoo,0,0\n", "step index"),
            ("t,c0_re,c0_im\n2,0,0\n", "sequential"),
            ("t,c0_re,c0_im\n1,zap,0\n", "float"),
            ("t,c0_re,c0_im\n1,inf,0\n", "finite"),
        ];
        for (text, label) in cases {
            assert!(
                matches!(traj_from_csv(text), Err(Error::ParseError(_))),
                "case {label}"
            );
        }
        // Specific line numbers in messages.
        match traj_from_csv("t,c0_re,c0_im\n1,0,0\n3,0,0\n") {
            Err(Error::ParseError(msg)) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn sidecar_path_and_round_trip() {
        assert_eq!(
            meta_path(Path::new("/tmp/run.csv")),
            PathBuf::from("/tmp/run.meta.json")
        );

        let x = random_traj(82, 2, 6).with_dt(0.1);
        let meta = MetaSidecar::for_trajectory(&x, "nep")
            .with_ground_truth(EpsIndex {
                s: 1,
                period: 2,
                eps: 0.002,
            })
            .with_seed(42);
        let text = to_json_pretty(&meta).unwrap();
        assert!(text.contains("\"N\": 6"), "{text}");
        let back: MetaSidecar = serde_json::from_str(&text).unwrap();
        assert_eq!(back, meta);
    }

    #[test]
    fn write_and_read_trajectory_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let x = random_traj(83, 4, 7).with_dt(0.5);
        let meta = MetaSidecar::for_trajectory(&x, "nep").with_seed(7);
        write_trajectory(&path, &x, &meta).unwrap();

        let (back, back_meta) = read_trajectory(&path).unwrap();
        assert_eq!(back.data, x.data);
        assert_eq!(back.dt, Some(0.5));
        assert_eq!(back.label.as_deref(), Some("nep"));
        assert_eq!(back_meta, Some(meta));

        // No stray temp files.
        let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 2);

        // Without a sidecar the data still loads.
        fs::remove_file(meta_path(&path)).unwrap();
        let (bare, none) = read_trajectory(&path).unwrap();
        assert_eq!(bare.data, x.data);
        assert!(none.is_none());
    }

    #[test]
    fn mismatched_sidecar_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let x = random_traj(84, 2, 5);
        let mut meta = MetaSidecar::for_trajectory(&x, "nep");
        meta.steps = 99;
        write_trajectory(&path, &x, &meta).unwrap();
        assert!(matches!(read_trajectory(&path), Err(Error::ParseError(_))));
    }

    #[test]
    fn model_json_round_trips_every_kind() {
        let x = periodic_traj(85, 6, 1, 3, 14);
        let mut r = rng(86);
        let probe = rand_cvec(&mut r, 6);

        let theta = 2.0 * std::f64::consts::PI / 5.0;
        let rot = CMat::from_row_slice(
            2,
            2,
            &[
                c(theta.cos(), 0.0),
                c(-theta.sin(), 0.0),
                c(theta.sin(), 0.0),
                c(theta.cos(), 0.0),
            ],
        );
        let mut rot_cols = vec![CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])];
        for t in 1..12 {
            let prev = rot_cols[t - 1].clone();
            rot_cols.push(&rot * prev);
        }
        let rot_x = Trajectory::from_columns(&rot_cols).unwrap();
        let rot_probe = rand_cvec(&mut r, 2);

        let models = vec![
            (Model::Cmr(fit_cmr(&x, 1e-9, 1e-8).unwrap()), probe.clone()),
            (
                Model::Crom(fit_crom(&x, 1e-9, 1e-8).unwrap()),
                probe.clone(),
            ),
            (
                Model::Ucrom(fit_ucrom(&rot_x, 1e-9, 1e-6).unwrap()),
                rot_probe,
            ),
        ];
        for (model, v) in models {
            let text = model_to_json(&model).unwrap();
            let back = model_from_json(&text).unwrap();
            assert_eq!(back.kind(), model.kind());
            assert_eq!(back.index(), model.index());
            assert_eq!(back.reduced_dim(), model.reduced_dim());
            // Matrices reload to the bit, so applications agree exactly.
            assert_eq!(back.apply(&v).unwrap(), model.apply(&v).unwrap());

            let text2 = model_to_json(&back).unwrap();
            assert_eq!(text2, text, "reserialization must be byte-identical");
        }
    }

    #[test]
    fn model_json_rejects_malformed_input() {
        let x = periodic_traj(87, 4, 0, 2, 9);
        let model = Model::Cmr(fit_cmr(&x, 1e-9, 1e-8).unwrap());
        let good = model_to_json(&model).unwrap();

        let wrong_version = good.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            model_from_json(&wrong_version),
            Err(Error::ParseError(_))
        ));

        let wrong_kind = good.replace("\"kind\": \"cmr\"", "\"kind\": \"zmr\"");
        assert!(matches!(
            model_from_json(&wrong_kind),
            Err(Error::ParseError(_))
        ));

        let wrong_dim = good.replace("\"n\": 4", "\"n\": 5");
        assert!(matches!(
            model_from_json(&wrong_dim),
            Err(Error::ParseError(_))
        ));

        assert!(matches!(
            model_from_json("not json"),
            Err(Error::ParseError(_))
        ));
    }

    #[test]
    fn save_and_load_model_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let x = periodic_traj(88, 5, 2, 2, 12);
        let model = Model::Crom(fit_crom(&x, 1e-9, 1e-8).unwrap());
        save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.compressed(), model.compressed());

        assert!(matches!(
            load_model(&dir.path().join("missing.json")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn grid_csv_golden() {
        let grid = PseudospectrumGrid {
            re_min: -1.0,
            re_max: 1.0,
            im_min: 0.0,
            im_max: 2.0,
            resolution: 2,
            values: vec![0.5, 1.0, 1.5, 2.0],
            eps_levels: None,
        };
        assert_eq!(
            grid_to_csv(&grid),
            "re,im,sigma_min\n-1,0,0.5\n1,0,1\n-1,2,1.5\n1,2,2\n"
        );
    }

    #[test]
    fn errors_csv_golden() {
        assert_eq!(errors_to_csv(&[0.0, 0.125]), "t,rel_err\n1,0\n2,0.125\n");
    }

    #[test]
    fn detect_report_round_trip_uses_capital_t() {
        let report = DetectReport {
            s: 2,
            period: 5,
            eps: 1e-4,
            method: "direct".into(),
            certified: true,
        };
        let text = detect_report_to_json(&report).unwrap();
        assert!(text.contains("\"T\": 5"), "{text}");
        assert_eq!(detect_report_from_json(&text).unwrap(), report);
    }

    #[test]
    fn write_atomic_overwrites_and_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);

        // Missing parent directory surfaces as an I/O error.
        assert!(matches!(
            write_atomic(&dir.path().join("nope/out.txt"), "x"),
            Err(Error::Io(_))
        ));
    }
}
