// Spectrahedral lift of `{0, ±e_1, ±e_2, ±e_3}` exact in every direction
// of `{-1, 0, 1}^3` (all have width at most 2).
//
// ```bash
// cargo run --release --example lattice_lift
// ```

use spectrasketch::lift::{self, LatticePoints, LiftStatus};
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut pts = vec![vec![0i64; 3]];
    for i in 0..3 {
        for s in [1, -1] {
            let mut e = vec![0; 3];
            e[i] = s;
            pts.push(e);
        }
    }
    let b = LatticePoints::new(pts)?;
    let k = 2;
    let dirs = lift::enumerate_directions(&b, k, 1)?;
    let built = lift::build_lift(&b, &dirs, k)?;
    println!("{} directions, psd size r = {} (bound C(7, 2) = 21)", dirs.len(), built.r);

    let report = lift::certify_exactness(&built, &b, &dirs, 1e-9);
    println!(
        "identity residual {:.2e}, eigenvalue floor {:.2e}, certified {}",
        report.identity_residual, report.min_eig_floor, report.pass
    );

    for c in [[1.0, 1.0, 1.0], [1.0, -1.0, 0.0], [0.3, -0.7, 1.1]] {
        let opt = lift::maximize_over_lift(&built, &c, 1e-8)?;
        let brute = b
            .points
            .iter()
            .map(|u| u.iter().zip(&c).map(|(&a, b)| a as f64 * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        println!("max ⟨{c:?}, x⟩ over the lift {:.8} ({:?}), over B {brute}", opt.value, opt.status);
        assert_eq!(opt.status, LiftStatus::Optimal);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
