// Carathéodory support reduction of a convex decomposition.
//
// ```bash
// cargo run --example caratheodory_reduce
// ```

use spectrasketch::caratheodory::{self, WeightedDecomposition};
use spectrasketch::linalg::Mat;
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // twelve unit vectors on the circle, equal weights: Σ α y yᵀ = I/2
    let n = 12;
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let a = std::f64::consts::PI * t as f64 / n as f64;
            caratheodory::flatten_outer(&[a.cos(), a.sin()])
        })
        .collect();
    let target = caratheodory::flatten_symmetric(&Mat::identity(2).scaled(0.5));
    let dec = WeightedDecomposition::new(vectors, vec![1.0 / n as f64; n], target);
    println!("before: support {}, residual {:.2e}", dec.support(), dec.target_residual());

    let out = caratheodory::reduce(&dec, 1e-10)?;
    println!("after:  support {} (bound {}), residual {:.2e}", out.support(), out.dim() + 1, out.target_residual());
    for (id, w) in out.ids.iter().zip(&out.weights) {
        println!("  angle {:5.1}°  weight {w:.6}", 180.0 * *id as f64 / n as f64);
    }
    assert!(out.support() <= out.dim() + 1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
