//! Batch front-end: file formats, run reports and the subcommands.
//!
//! Exit codes: 0 when the run's certificate passes, 2 when a well-formed
//! run fails its certificate, 1 on input or usage errors.

use crate::linalg::Mat;
use crate::lift::{self, DirectionSet, ExactnessReport, LatticePoints, LiftError, SpectrahedralLift};
use crate::psdrank::{self, PsdFactorization, PsdRankError, PsdReport};
use crate::sketch::{self, PointSet, Sketch, SketchCertificate, SketchError, SketchReport};
use crate::tensor;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CERTIFICATE: i32 = 2;

/// Tolerance used when re-verifying psd factorizations.
pub const PSD_VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    PsdRank(#[from] PsdRankError),
    #[error(transparent)]
    Sizing(#[from] tensor::SizingError),
}

#[derive(Parser, Debug)]
#[command(name = "spectrasketch", version, about = "Certified sketches, spectrahedral lifts and psd-rank approximations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pick a small subset of a point set with a certified factor.
    Sketch(SketchArgs),
    /// Build a spectrahedral lift of an integer point set.
    Lift(LiftArgs),
    /// Approximate a [0, 1] matrix by one of small psd rank.
    Psdapprox(PsdApproxArgs),
    /// Re-check an artifact written by another subcommand.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct SketchArgs {
    /// Point set, JSON or CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub gap_tol: f64,
    /// Random directions for the Monte-Carlo check (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub verify_dirs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    /// Integer point set, JSON or CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub k: i64,
    /// Directions are enumerated in the box ‖v‖∞ ≤ radius.
    #[arg(long, allow_negative_numbers = true)]
    pub radius: i64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PsdApproxArgs {
    /// Matrix JSON.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Artifact written by `sketch`, `lift` or `psdapprox`.
    #[arg(long)]
    pub input: PathBuf,
}

/// Point-set file layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFile {
    pub dim: usize,
    #[serde(default)]
    pub integer: bool,
    pub points: Vec<Vec<f64>>,
}

/// Matrix file layout, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_mat(m: &Mat) -> Self {
        MatrixFile { rows: m.rows(), cols: m.cols(), data: m.to_rows() }
    }

    pub fn to_mat(&self) -> Result<Mat, CliError> {
        if self.data.len() != self.rows {
            return Err(CliError::Format(format!("matrix declares {} rows but has {}", self.rows, self.data.len())));
        }
        for (i, row) in self.data.iter().enumerate() {
            if row.len() != self.cols {
                return Err(CliError::Format(format!("row {i}: expected {} columns, found {}", self.cols, row.len())));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(CliError::Format(format!("row {i}: entry {j} is not finite")));
            }
        }
        Ok(Mat::from_rows(&self.data))
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn parse_csv_points(bytes: &[u8]) -> Result<PointFile, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Format(format!("row {row}: {e}")))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let p = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| CliError::Format(format!("row {row}: cannot parse {f:?} as a number"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = points.first() {
            if p.len() != first.len() {
                return Err(CliError::Format(format!("row {row}: expected {} coordinates, found {}", first.len(), p.len())));
            }
        }
        points.push(p);
    }
    let dim = points.first().map_or(0, Vec::len);
    let integer = points.iter().flatten().all(|v| v.fract() == 0.0);
    Ok(PointFile { dim, integer, points })
}

/// Reads a point file; the format follows the extension (`.csv` or JSON).
pub fn read_points(path: &Path) -> Result<PointSet, CliError> {
    let bytes = read_bytes(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let file = if is_csv { parse_csv_points(&bytes)? } else { serde_json::from_slice(&bytes)? };
    point_file_to_set(&file)
}

pub fn point_file_to_set(file: &PointFile) -> Result<PointSet, CliError> {
    if file.points.is_empty() {
        return Err(SketchError::EmptyPointSet.into());
    }
    for (i, p) in file.points.iter().enumerate() {
        if p.len() != file.dim {
            return Err(CliError::Format(format!("row {i}: expected {} coordinates, found {}", file.dim, p.len())));
        }
        if file.integer {
            if let Some(c) = p.iter().position(|v| v.fract() != 0.0) {
                return Err(CliError::Format(format!("row {i}: coordinate {c} is not an integer")));
            }
        }
    }
    Ok(PointSet::new(file.points.clone())?)
}

pub fn read_matrix(path: &Path) -> Result<Mat, CliError> {
    let file: MatrixFile = serde_json::from_slice(&read_bytes(path)?)?;
    file.to_mat()
}

/// Hex SHA-256 of the canonical JSON encoding of `value`.
pub fn digest<T: Serialize>(value: &T) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchParameters {
    pub k: usize,
    pub gap_tol: f64,
    pub verify_dirs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchArtifact {
    pub input_digest: String,
    pub parameters: SketchParameters,
    pub input: PointSet,
    pub sketch: Sketch,
    pub certificate: SketchCertificate,
    pub verification: Option<SketchReport>,
    pub pass: bool,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftParameters {
    pub k: i64,
    pub radius: i64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftArtifact {
    pub input_digest: String,
    pub parameters: LiftParameters,
    pub input: LatticePoints,
    pub directions: DirectionSet,
    pub lift: SpectrahedralLift,
    pub report: ExactnessReport,
    pub pass: bool,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdApproxParameters {
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdApproxOutputs {
    pub approx: MatrixFile,
    pub factorization: PsdFactorization,
    pub degree: usize,
    /// Monomial coefficients of the square-root approximation.
    pub polynomial: Vec<f64>,
    pub sup_error: f64,
    pub rank: usize,
    pub rank_bound: usize,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdApproxArtifact {
    pub input_digest: String,
    pub parameters: PsdApproxParameters,
    pub input: MatrixFile,
    pub outputs: PsdApproxOutputs,
    pub report: PsdReport,
    pub pass: bool,
    pub wall_time_ms: f64,
}

/// Every artifact carries its producing command as the `"command"` field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Artifact {
    Sketch(SketchArtifact),
    Lift(LiftArtifact),
    Psdapprox(PsdApproxArtifact),
}

impl Artifact {
    pub fn pass(&self) -> bool {
        match self {
            Artifact::Sketch(a) => a.pass,
            Artifact::Lift(a) => a.pass,
            Artifact::Psdapprox(a) => a.pass,
        }
    }
}

pub fn write_artifact(path: &Path, artifact: &Artifact) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(artifact)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_artifact(path: &Path) -> Result<Artifact, CliError> {
    Ok(serde_json::from_slice(&read_bytes(path)?)?)
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn run_sketch(args: &SketchArgs) -> Result<Artifact, CliError> {
    let start = Instant::now();
    let input = read_points(&args.input)?;
    let sketch = sketch::build_sketch(&input, args.k, args.gap_tol)?;
    let certificate = sketch::certify_sketch(&input, &sketch)?;
    let verification = if args.verify_dirs > 0 {
        Some(sketch::verify_sketch(&input, &sketch, args.verify_dirs, args.seed)?)
    } else {
        None
    };
    let pass = certificate.pass && verification.as_ref().is_none_or(|v| v.pass);
    Ok(Artifact::Sketch(SketchArtifact {
        input_digest: digest(&input)?,
        parameters: SketchParameters { k: args.k, gap_tol: args.gap_tol, verify_dirs: args.verify_dirs, seed: args.seed },
        input,
        sketch,
        certificate,
        verification,
        pass,
        wall_time_ms: elapsed_ms(start),
    }))
}

pub fn run_lift(args: &LiftArgs) -> Result<Artifact, CliError> {
    let start = Instant::now();
    if args.k <= 0 {
        return Err(LiftError::ZeroWidth.into());
    }
    let input = LatticePoints::from_real(&read_points(&args.input)?)?;
    let directions = lift::enumerate_directions(&input, args.k, args.radius)?;
    let built = lift::build_lift(&input, &directions, args.k)?;
    let report = lift::certify_exactness(&built, &input, &directions, args.tol);
    Ok(Artifact::Lift(LiftArtifact {
        input_digest: digest(&input)?,
        parameters: LiftParameters { k: args.k, radius: args.radius, tol: args.tol },
        input,
        directions,
        pass: report.pass,
        lift: built,
        report,
        wall_time_ms: elapsed_ms(start),
    }))
}

pub fn run_psdapprox(args: &PsdApproxArgs) -> Result<Artifact, CliError> {
    let start = Instant::now();
    let a = read_matrix(&args.input)?;
    let out = psdrank::approx_low_psd_rank(&a, args.eps)?;
    let report = psdrank::verify_psd_factorization(&out.approx, &out.factorization, PSD_VERIFY_TOL);
    let pass = report.pass && out.max_deviation <= args.eps;
    Ok(Artifact::Psdapprox(PsdApproxArtifact {
        input_digest: digest(&MatrixFile::from_mat(&a))?,
        parameters: PsdApproxParameters { eps: args.eps },
        input: MatrixFile::from_mat(&a),
        outputs: PsdApproxOutputs {
            approx: MatrixFile::from_mat(&out.approx),
            factorization: out.factorization,
            degree: out.sqrt_approx.degree,
            polynomial: out.sqrt_approx.poly.coeffs().to_vec(),
            sup_error: out.sqrt_approx.sup_error,
            rank: out.rank,
            rank_bound: out.rank_bound,
            max_deviation: out.max_deviation,
        },
        report,
        pass,
        wall_time_ms: elapsed_ms(start),
    }))
}

/// Outcome of re-checking an artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub command: String,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Recomputes every certificate in `artifact` from its embedded input.
pub fn verify_artifact(artifact: &Artifact) -> Result<Verdict, CliError> {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };
    let command = match artifact {
        Artifact::Sketch(a) => {
            check(digest(&a.input)? == a.input_digest, "input digest");
            check(a.sketch.k == a.parameters.k && a.sketch.gap_tol == a.parameters.gap_tol, "parameters");
            match sketch::certify_sketch(&a.input, &a.sketch) {
                Ok(c) => check(c.pass, "containment certificate"),
                Err(e) => check(false, &format!("sketch: {e}")),
            }
            if let Some(v) = &a.verification {
                match sketch::verify_sketch(&a.input, &a.sketch, v.n_dirs, v.seed) {
                    Ok(r) => {
                        check(r.pass, "direction sample");
                        check(r.worst_ratio == v.worst_ratio, "recorded worst ratio");
                    }
                    Err(e) => check(false, &format!("direction sample: {e}")),
                }
            }
            "sketch"
        }
        Artifact::Lift(a) => {
            check(digest(&a.input)? == a.input_digest, "input digest");
            match lift::enumerate_directions(&a.input, a.parameters.k, a.parameters.radius) {
                Ok(d) => check(d == a.directions, "direction set"),
                Err(e) => check(false, &format!("direction set: {e}")),
            }
            let report = lift::certify_exactness(&a.lift, &a.input, &a.directions, a.parameters.tol);
            check(report.identity_residual <= a.parameters.tol, "identity residual");
            check(report.psd_ok, "psd floor");
            check(report.pass, "exactness certificate");
            "lift"
        }
        Artifact::Psdapprox(a) => {
            check(digest(&a.input)? == a.input_digest, "input digest");
            let input = a.input.to_mat()?;
            let approx = a.outputs.approx.to_mat()?;
            let report = psdrank::verify_psd_factorization(&approx, &a.outputs.factorization, PSD_VERIFY_TOL);
            check(report.pass, "psd factorization");
            let same_shape = input.rows() == approx.rows() && input.cols() == approx.cols();
            let deviation = if same_shape { input.sub(&approx).max_abs() } else { f64::INFINITY };
            check(deviation <= a.parameters.eps, "entrywise deviation");
            let poly = psdrank::Polynomial::new(a.outputs.polynomial.clone());
            let sup = psdrank::grid_sup_error(&poly, &psdrank::sqrt_grid());
            check(sup <= a.parameters.eps / 3.0, "square-root approximation");
            let bound = tensor::binomial(a.outputs.degree + a.outputs.rank, a.outputs.degree)?;
            check(a.outputs.factorization.r <= bound && bound == a.outputs.rank_bound, "rank bound");
            "psdapprox"
        }
    };
    Ok(Verdict { command: command.to_string(), pass: failures.is_empty(), failures })
}

fn summary(artifact: &Artifact) -> String {
    match artifact {
        Artifact::Sketch(a) => format!(
            "sketch: |X| = {} of {} (bound {}), factor bound {:.6}, max gauge {:.9}{}",
            a.sketch.indices.len(),
            a.sketch.num_points,
            a.sketch.cardinality_bound,
            a.sketch.factor_bound,
            a.certificate.max_gauge,
            a.verification.as_ref().map_or(String::new(), |v| format!(", worst ratio {:.6} over {} directions", v.worst_ratio, v.n_dirs)),
        ),
        Artifact::Lift(a) => format!(
            "lift: {} directions, r = {}, identity residual {:.3e}, min eigenvalue {:.3e}",
            a.directions.len(),
            a.lift.r,
            a.report.identity_residual,
            a.report.min_eig_floor,
        ),
        Artifact::Psdapprox(a) => format!(
            "psdapprox: degree {}, rank {}, psd size {}, max deviation {:.3e}",
            a.outputs.degree, a.outputs.rank, a.outputs.factorization.r, a.outputs.max_deviation,
        ),
    }
}

fn produce(out: &Path, artifact: Result<Artifact, CliError>) -> Result<i32, CliError> {
    let artifact = artifact?;
    write_artifact(out, &artifact)?;
    let pass = artifact.pass();
    println!("{} [{}]", summary(&artifact), if pass { "pass" } else { "FAIL" });
    Ok(if pass { EXIT_PASS } else { EXIT_CERTIFICATE })
}

pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Sketch(a) => produce(&a.out, run_sketch(a)),
        Command::Lift(a) => produce(&a.out, run_lift(a)),
        Command::Psdapprox(a) => produce(&a.out, run_psdapprox(a)),
        Command::Verify(a) => read_artifact(&a.input).and_then(|art| verify_artifact(&art)).map(|v| {
            if v.pass {
                println!("verify {}: pass", v.command);
                EXIT_PASS
            } else {
                println!("verify {}: FAIL ({})", v.command, v.failures.join(", "));
                EXIT_CERTIFICATE
            }
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_INPUT
    })
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let f = parse_csv_points(b"# square\n0, 0\n1,0\n\n0,1\n1,1\n").unwrap();
        assert_eq!(f.dim, 2);
        assert!(f.integer);
        assert_eq!(f.points.len(), 4);
        let err = parse_csv_points(b"0,0\n1,x\n").unwrap_err();
        assert!(err.to_string().contains("row 1"));
        let err = parse_csv_points(b"0,0\n1\n").unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn point_file_checks() {
        let empty = PointFile { dim: 2, integer: false, points: vec![] };
        assert_eq!(point_file_to_set(&empty).unwrap_err().to_string(), "empty point set");
        let frac = PointFile { dim: 1, integer: true, points: vec![vec![0.5]] };
        assert!(point_file_to_set(&frac).is_err());
    }

    #[test]
    fn matrix_file_shape() {
        let m = MatrixFile { rows: 2, cols: 2, data: vec![vec![1.0, 0.0], vec![0.0]] };
        assert!(m.to_mat().unwrap_err().to_string().contains("row 1"));
        let ok = MatrixFile { rows: 1, cols: 2, data: vec![vec![0.5, 1.0]] };
        assert_eq!(MatrixFile::from_mat(&ok.to_mat().unwrap()), ok);
    }

    #[test]
    fn artifact_tag() {
        let json = r#"{"command":"nope"}"#;
        assert!(serde_json::from_str::<Artifact>(json).is_err());
    }
}
