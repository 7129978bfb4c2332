// Entrywise ε-approximation of a `[0, 1]` matrix by one of small psd rank,
// by squaring a polynomial approximation of `√t`.
//
// ```bash
// cargo run --release --example psd_approx
// ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectrasketch::linalg::Mat;
use spectrasketch::psdrank;
use std::error::Error;

/// A random `n × n` matrix of rank `r` with entries in `[0, 1]`.
pub fn random_low_rank(n: usize, r: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<Vec<f64>> = (0..n).map(|_| (0..r).map(|_| rng.random::<f64>()).collect()).collect();
    let v: Vec<Vec<f64>> = (0..n).map(|_| (0..r).map(|_| rng.random::<f64>()).collect()).collect();
    Mat::from_fn(n, n, |i, j| u[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum::<f64>() / r as f64)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let a = random_low_rank(20, 3, 3);
    for eps in [0.3, 0.1, 0.05] {
        let out = psdrank::approx_low_psd_rank(&a, eps)?;
        let report = psdrank::verify_psd_factorization(&out.approx, &out.factorization, 1e-8);
        println!(
            "eps {eps:<5} degree {:2}  √t error {:.4}  psd size {:4} (= C({}+{}, {}))  max |a - a'| {:.4}  residual {:.1e}",
            out.sqrt_approx.degree,
            out.sqrt_approx.sup_error,
            out.factorization.r,
            out.sqrt_approx.degree,
            out.rank,
            out.sqrt_approx.degree,
            out.max_deviation,
            report.max_residual,
        );
        assert!(out.max_deviation <= eps && report.pass);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
