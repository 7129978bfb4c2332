// Minimum-volume centred ellipsoid of a point cloud and its John
// decomposition `Σ α_i y_i y_iᵀ = I / D`.
//
// ```bash
// cargo run --example john_ellipsoid
// ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectrasketch::mvee;
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    // an anisotropic cloud in R^4
    let scales = [3.0, 1.0, 0.5, 0.2];
    let points: Vec<Vec<f64>> = (0..200)
        .map(|_| scales.iter().map(|s| s * rng.random_range(-1.0..1.0)).collect())
        .collect();

    let gap_tol = 1e-7;
    let sol = mvee::mvee_centered(&points, gap_tol, 1_000_000)?;
    println!("iterations {}, duality gap {:.3e}", sol.iterations, sol.duality_gap(&points));
    println!("shape eigenvalues {:?}", sol.ellipsoid.eigenvalues());

    let dec = mvee::extract_john_decomposition(&sol.ellipsoid, &points, &sol.weights, gap_tol)?;
    println!("{} contact points of {}", dec.indices.len(), points.len());
    let report = mvee::verify_john(&dec, &points);
    println!(
        "weights sum error {:.2e}, identity error {:.2e}, contact slack {:.2e}",
        report.weight_sum_error, report.identity_error, report.max_contact_slack
    );
    let worst = points.iter().map(|p| sol.ellipsoid.gauge_squared(p)).fold(0.0, f64::max);
    println!("largest gauge over the cloud {worst:.9}");
    assert!(report.passes(10.0 * 4.0 * gap_tol));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
