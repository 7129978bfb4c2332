// Sketch of 500 points on the sphere with `k = 2`: a subset of at most
// 22 points whose extent in every direction is within `6^{1/4}` of the
// whole set's.
//
// ```bash
// cargo run --release --example sphere_sketch
// ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spectrasketch::sketch::{self, PointSet};
use std::error::Error;

pub fn sphere_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let points = PointSet::new(sphere_points(500, 3, 7))?;
    let s = sketch::build_sketch(&points, 2, 1e-7)?;
    println!(
        "|X| = {} of {} (bound {}), lifted dimension {}",
        s.indices.len(),
        s.num_points,
        s.cardinality_bound,
        s.effective_dim
    );
    println!("factor bound {:.6}, John residual {:.2e}", s.factor_bound, s.john_residual);

    let cert = sketch::certify_sketch(&points, &s)?;
    println!("containment: max gauge {:.9} (allowed {:.9})", cert.max_gauge, 1.0 + cert.slack);

    let report = sketch::verify_sketch(&points, &s, 20_000, 1)?;
    println!(
        "worst ratio over {} directions: {:.6} (threshold {:.6}) -> {}",
        report.n_dirs,
        report.worst_ratio,
        report.threshold,
        if report.pass { "pass" } else { "fail" }
    );
    assert!(cert.pass && report.pass);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
