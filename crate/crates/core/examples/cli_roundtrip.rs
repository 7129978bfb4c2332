// Produces a lift artifact and a psd approximation artifact through the
// library entry points of the CLI, then re-verifies both from disk.
//
// ```bash
// cargo run --release --example cli_roundtrip
// ```

use spectrasketch::cli::{self, MatrixFile, PointFile, PsdApproxArgs};
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("spectrasketch-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let square = PointFile { dim: 2, integer: true, points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]] };
    let points_path = dir.join("square.json");
    std::fs::write(&points_path, serde_json::to_string(&square)?)?;
    let lift_path = dir.join("square-lift.json");
    let code = cli::main_with_args([
        "spectrasketch", "lift", "--input", points_path.to_str().unwrap(), "--k", "1", "--radius", "1",
        "--out", lift_path.to_str().unwrap(),
    ]);
    println!("lift exit code {code}");

    let matrix = MatrixFile { rows: 2, cols: 2, data: vec![vec![0.0, 1.0], vec![0.25, 0.5]] };
    let matrix_path = dir.join("matrix.json");
    std::fs::write(&matrix_path, serde_json::to_string(&matrix)?)?;
    let args = PsdApproxArgs { input: matrix_path, eps: 0.2, out: dir.join("approx.json") };
    let artifact = cli::run_psdapprox(&args)?;
    cli::write_artifact(&args.out, &artifact)?;

    for path in [&lift_path, &args.out] {
        let verdict = cli::verify_artifact(&cli::read_artifact(path)?)?;
        println!("{}: {} {:?}", path.display(), verdict.pass, verdict.failures);
        assert!(verdict.pass);
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
