// Symmetric tensor lifts: `⟨lift x, lift y⟩ = ⟨x, y⟩^k` in `C(d+k-1, k)`
// coordinates instead of `d^k`.
//
// ```bash
// cargo run --example tensor_lift
// ```

use spectrasketch::tensor::{self, SymBasis};
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let basis = SymBasis::new(3, 2)?;
    println!("d = 3, k = 2: {} coordinates", basis.len());
    for idx in basis.indices() {
        println!("  x^{:?}  multinomial {}", idx.exponents(), idx.multinomial());
    }

    let x = [0.5, -1.0, 2.0];
    let y = [1.5, 0.25, -0.6];
    let inner: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    for k in 1..=5 {
        let b = SymBasis::new(3, k)?;
        let lifted = b.lift(&x).dot(&b.lift(&y));
        println!("k = {k}: dim {:3}  ⟨lift x, lift y⟩ = {lifted:+.12}  ⟨x, y⟩^k = {:+.12}", b.len(), inner.powi(k as i32));
        assert!((lifted - inner.powi(k as i32)).abs() <= 1e-9 * inner.abs().powi(k as i32).max(1.0));
    }

    // sizes are checked before anything is allocated
    match tensor::lift_dim(1_000_000, 1_000) {
        Ok(n) => println!("unexpected size {n}"),
        Err(e) => println!("{e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
