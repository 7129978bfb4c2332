// Psd factorizations of nonnegative matrices with few distinct values.
//
// ```bash
// cargo run --example few_values_psd
// ```

use spectrasketch::linalg::Mat;
use spectrasketch::psdrank::{self, Polynomial, RankFactorization};
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // the interpolant of √t through 0, 1/2, 1
    let nodes = [0.0, 0.5, 1.0];
    let roots: Vec<f64> = nodes.iter().map(|t: &f64| t.sqrt()).collect();
    let p = psdrank::lagrange_interpolate(&nodes, &roots)?;
    println!("p(t) = {:?} (monomial coefficients)", p.coeffs());

    // a polynomial applied through a rank factorization
    let f = RankFactorization::new(2, vec![vec![1.0, 2.0], vec![0.5, -1.0]], vec![vec![0.3, 0.4], vec![-1.0, 1.0]])?;
    let sq = psdrank::apply_poly_to_factorization(&f, &Polynomial::new(vec![1.0, 0.0, 1.0]))?;
    println!("1 + t² through a rank-2 factorization: inner dimension {}", sq.n);
    for i in 0..2 {
        for j in 0..2 {
            let a = f.entry(i, j);
            println!("  ({i},{j}): a = {a:+.3}, 1 + a² = {:.6}, realized {:.6}", 1.0 + a * a, sq.entry(i, j));
        }
    }

    // the slack matrix of a square: entries in {0, 1}
    let a = Mat::from_rows(&[
        [0.0, 0.0, 1.0, 1.0],
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 1.0, 1.0, 0.0],
    ]);
    let out = psdrank::psd_factorize_few_values(&a)?;
    println!(
        "square slack matrix: values {:?}, rank {}, psd size {} (bound {})",
        out.values, out.rank, out.factorization.r, out.bound
    );
    let report = psdrank::verify_psd_factorization(&a, &out.factorization, 1e-9);
    println!("residual {:.2e}, pass {}", report.max_residual, report.pass);
    assert!(report.pass);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
