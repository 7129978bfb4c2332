// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Build with --release for meaningful timings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spectrasketch::lift::{self, LatticePoints, LiftStatus};
use spectrasketch::linalg::{self, Mat};
use spectrasketch::mvee;
use spectrasketch::psdrank::{self, PsdFactorization, PsdMatrix};
use spectrasketch::sketch::{self, PointSet};
use spectrasketch::tensor;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn sphere_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = linalg::norm(&v);
            v.into_iter().map(|x| x / r).collect()
        })
        .collect()
}

fn cross_polytope(d: usize, scales: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut x = vec![0.0; d];
            x[i] = s * scales[i];
            pts.push(x);
        }
    }
    pts
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t <= limit {
        Ok(t)
    } else {
        Err(format!("runtime {t:.2?} exceeds {limit:?}"))
    }
}

fn tensor_isometry() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let d = rng.random_range(1..=6);
        let k = rng.random_range(1..=5);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let lx = tensor::sym_lift(&x, k).map_err(|e| e.to_string())?;
        let ly = tensor::sym_lift(&y, k).map_err(|e| e.to_string())?;
        let ip = linalg::dot(&x, &y);
        let expected = ip.powi(k as i32);
        let err = (lx.dot(&ly) - expected).abs() / expected.abs().max(1.0);
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!("pair {trial} (d={d}, k={k}) relative error {err:.2e}"));
        }
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("1000 pairs, worst relative error {worst:.1e}, {t:.2?}"))
}

fn mvee_certificates() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for d in 3..=6 {
        let ones = vec![1.0; d];
        let scales: Vec<f64> = (1..=d).map(|i| i as f64).collect();
        let sets = [
            ("cross-polytope", cross_polytope(d, &ones)),
            ("scaled axes", cross_polytope(d, &scales)),
            ("sphere", sphere_points(200, d, 100 + d as u64)),
        ];
        for (name, pts) in sets {
            let dim = d as f64;
            let sol = mvee::mvee_centered(&pts, 1e-7, sketch::DEFAULT_MAX_ITER).map_err(|e| format!("{name} R^{d}: {e}"))?;
            // gap from the weights alone
            let mut lam = Mat::zeros(d, d);
            for (x, &w) in pts.iter().zip(&sol.weights) {
                lam.add_outer(w, x);
            }
            let l = linalg::cholesky(&lam).ok_or(format!("{name} R^{d}: moment matrix not positive definite"))?;
            let gap = pts
                .iter()
                .map(|x| {
                    let z = linalg::cholesky_solve(&l, x);
                    linalg::dot(x, &z)
                })
                .fold(f64::NEG_INFINITY, f64::max)
                - dim;
            let containment = pts.iter().map(|x| sol.ellipsoid.gauge_squared(x) - 1.0).fold(f64::NEG_INFINITY, f64::max);
            let john = mvee::extract_john_decomposition(&sol.ellipsoid, &pts, &sol.weights, 1e-6)
                .map_err(|e| format!("{name} R^{d}: {e}"))?;
            let root = linalg::sym_sqrt(&sol.ellipsoid.shape);
            let mut s = Mat::identity(d).scaled(-1.0 / dim);
            for (&i, &a) in john.indices.iter().zip(&john.weights) {
                s.add_outer(a, &root.matvec(&pts[i]));
            }
            let residual = s.frobenius_norm();
            worst = (worst.0.max(gap / dim), worst.1.max(containment), worst.2.max(residual / dim));
            if gap > dim * 1e-6 || containment > 1e-6 || residual > 10.0 * dim * 1e-6 || john.weights.iter().any(|&a| a < 0.0) {
                return Err(format!(
                    "{name} R^{d}: gap {gap:.2e}, containment {containment:.2e}, John residual {residual:.2e}"
                ));
            }
        }
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "12 sets, worst gap/D {:.1e}, containment {:.1e}, John residual/D {:.1e}, {t:.2?}",
        worst.0, worst.1, worst.2
    ))
}

fn sketch_end_to_end() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (d, k) in [(3usize, 2usize), (2, 3), (4, 1), (4, 2)] {
        let pts = PointSet::new(sphere_points(500, d, 10 * d as u64 + k as u64)).map_err(|e| e.to_string())?;
        let sk = sketch::build_sketch(&pts, k, 1e-7).map_err(|e| format!("({d},{k}): {e}"))?;
        let big_d = binom((d + k - 1) as u64, k as u64);
        let card = 1 + big_d * (big_d + 1) / 2;
        let bound = (big_d as f64).powf(1.0 / (2.0 * k as f64));
        let report = sketch::verify_sketch(&pts, &sk, 100_000, 2024).map_err(|e| e.to_string())?;
        if sk.indices.len() as u64 > card {
            return Err(format!("({d},{k}): |X| = {} exceeds {card}", sk.indices.len()));
        }
        if !(report.worst_ratio <= bound * (1.0 + 2e-4)) {
            return Err(format!("({d},{k}): worst ratio {:.6} exceeds {bound:.6}", report.worst_ratio));
        }
        notes.push(format!("({d},{k}) |X|={}≤{card} ratio {:.4}≤{:.4}", sk.indices.len(), report.worst_ratio, bound));
    }
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!("{}, {t:.2?}", notes.join("; ")))
}

fn cube_base_case() -> Outcome {
    let mut notes = Vec::new();
    for d in 1..=5usize {
        let pts: Vec<Vec<f64>> = (0..1u32 << d)
            .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        let pts = PointSet::new(pts).map_err(|e| e.to_string())?;
        let sk = sketch::build_sketch(&pts, 1, 1e-7).map_err(|e| format!("d={d}: {e}"))?;
        let report = sketch::verify_sketch(&pts, &sk, 10_000, 5).map_err(|e| e.to_string())?;
        let bound = (d as f64).sqrt();
        if !(report.worst_ratio <= bound * (1.0 + 1e-4)) {
            return Err(format!("d={d}: worst ratio {:.6} exceeds {bound:.6}", report.worst_ratio));
        }
        notes.push(format!("d={d} {:.4}", report.worst_ratio));
    }
    Ok(format!("worst ratios {}", notes.join(", ")))
}

fn min_eig(lift: &lift::SpectrahedralLift) -> f64 {
    lift.certificates
        .iter()
        .map(|c| &c.matrix)
        .chain(lift.constraints.iter().map(|c| &c.matrix))
        .map(|m| linalg::min_eigenvalue(&m.to_dense()))
        .fold(f64::INFINITY, f64::min)
}

fn lattice_lifts() -> Outcome {
    let start = Instant::now();
    let square = LatticePoints::new(vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]).map_err(|e| e.to_string())?;
    let dirs = lift::enumerate_directions(&square, 1, 1).map_err(|e| e.to_string())?;
    let l = lift::build_lift(&square, &dirs, 1).map_err(|e| e.to_string())?;
    if l.r > 5 || dirs.len() != 5 {
        return Err(format!("square: r = {}, {} directions", l.r, dirs.len()));
    }
    let report = lift::certify_exactness(&l, &square, &dirs, 1e-9);
    let eig = min_eig(&l);
    if !report.pass || report.identity_residual > 1e-9 || eig < -1e-9 {
        return Err(format!("square: identity {:.2e}, min eigenvalue {eig:.2e}", report.identity_residual));
    }
    let mut worst = 0.0f64;
    for e in &dirs.entries {
        let c: Vec<f64> = e.v.iter().map(|&x| x as f64).collect();
        let brute = square.points.iter().map(|p| p.iter().zip(&e.v).map(|(a, b)| a * b).sum::<i64>()).max().unwrap_or(0);
        let opt = lift::maximize_over_lift(&l, &c, 1e-8).map_err(|err| format!("square {:?}: {err}", e.v))?;
        let err = (opt.value - brute as f64).abs();
        worst = worst.max(err);
        if opt.status != LiftStatus::Optimal || err > 1e-5 {
            return Err(format!("square {:?}: got {:?} {}, expected {brute}", e.v, opt.status, opt.value));
        }
    }

    let mut pts = vec![vec![0i64; 3]];
    for i in 0..3 {
        for s in [1, -1] {
            let mut x = vec![0i64; 3];
            x[i] = s;
            pts.push(x);
        }
    }
    let octa = LatticePoints::new(pts).map_err(|e| e.to_string())?;
    let dirs3 = lift::enumerate_directions(&octa, 2, 1).map_err(|e| e.to_string())?;
    let l3 = lift::build_lift(&octa, &dirs3, 2).map_err(|e| e.to_string())?;
    let r3 = lift::certify_exactness(&l3, &octa, &dirs3, 1e-9);
    if l3.r > 21 || !r3.pass {
        return Err(format!("octahedron: r = {}, certificate pass {}", l3.r, r3.pass));
    }
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "square r={} identity {:.1e} min eig {eig:.1e} max |opt - m| {worst:.1e}; octahedron r={}≤21; {t:.2?}",
        l.r, report.identity_residual, l3.r
    ))
}

fn random_rank3(n: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    let v: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    Mat::from_fn(n, n, |i, j| linalg::dot(&u[i], &v[j]) / 3.0)
}

fn psd_approximation() -> Outcome {
    let start = Instant::now();
    let a = random_rank3(20, 6);
    let mut notes = Vec::new();
    for eps in [0.3, 0.1] {
        let out = psdrank::approx_low_psd_rank(&a, eps).map_err(|e| e.to_string())?;
        let coeffs = out.sqrt_approx.poly.coeffs();
        // a' = p(a)² evaluated entrywise with no factorization involved
        let direct = Mat::from_fn(20, 20, |i, j| {
            let t = a[(i, j)];
            let p: f64 = coeffs.iter().enumerate().map(|(m, c)| c * t.powi(m as i32)).sum();
            p * p
        });
        let deviation = direct.sub(&a).max_abs();
        let reproduce = out.factorization.realized().sub(&direct).max_abs();
        let deg = out.sqrt_approx.degree as u64;
        let expected_r = binom(deg + 3, deg) as usize;
        if deviation > eps || reproduce > 1e-8 || out.factorization.r != expected_r {
            return Err(format!(
                "eps {eps}: deviation {deviation:.3e}, reproduction {reproduce:.2e}, r {} vs C({}+3,{})={expected_r}",
                out.factorization.r, deg, deg
            ));
        }
        notes.push(format!("eps {eps}: deg {deg} r={expected_r} dev {deviation:.4} repro {reproduce:.1e}"));
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("{}; {t:.2?}", notes.join("; ")))
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let r = linalg::norm(&v);
    v.into_iter().map(|x| x / r).collect()
}

/// Replaces `m` with a planted copy: either non-psd or shifted by `δ I`.
fn plant(m: &PsdMatrix, rng: &mut ChaCha8Rng) -> PsdMatrix {
    let dense = m.to_dense();
    let n = dense.rows();
    if rng.random_bool(0.5) {
        let w = unit(rng, n);
        let s = dense.quad_form(&w) + 1e-3 * (1.0 + dense.trace());
        let mut out = dense;
        out.add_outer(-s, &w);
        PsdMatrix::Full(out)
    } else {
        let delta = 10f64.powf(rng.random_range(-6.0..=-2.0));
        PsdMatrix::Full(dense.add(&Mat::identity(n).scaled(delta)))
    }
}

fn pick(rng: &mut ChaCha8Rng, left: &mut [PsdMatrix], right: &mut [PsdMatrix]) {
    let total = left.len() + right.len();
    let idx = rng.random_range(0..total);
    if idx < left.len() {
        left[idx] = plant(&left[idx], rng);
    } else {
        let j = idx - left.len();
        right[j] = plant(&right[j], rng);
    }
}

fn fault_injection() -> Outcome {
    let square = LatticePoints::new(vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]).map_err(|e| e.to_string())?;
    let dirs = lift::enumerate_directions(&square, 1, 1).map_err(|e| e.to_string())?;
    let base_lift = lift::build_lift(&square, &dirs, 1).map_err(|e| e.to_string())?;
    if !lift::certify_exactness(&base_lift, &square, &dirs, 1e-9).pass {
        return Err("unplanted lift fails".into());
    }
    let a = random_rank3(8, 11);
    let approx = psdrank::approx_low_psd_rank(&a, 0.3).map_err(|e| e.to_string())?;
    if !psdrank::verify_psd_factorization(&approx.approx, &approx.factorization, 1e-8).pass {
        return Err("unplanted psd factorization fails".into());
    }
    let pts = sphere_points(60, 4, 12);
    let sol = mvee::mvee_centered(&pts, 1e-7, sketch::DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
    let john = mvee::extract_john_decomposition(&sol.ellipsoid, &pts, &sol.weights, 1e-6).map_err(|e| e.to_string())?;
    let john_tol = 10.0 * 4.0 * 1e-6;
    if !mvee::verify_john(&john, &pts).passes(john_tol) {
        return Err("unplanted John decomposition fails".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut missed = Vec::new();
    let mut counts = [0usize; 3];
    for trial in 0..100 {
        let target = trial % 3;
        counts[target] += 1;
        let detected = match target {
            0 => {
                let mut l = base_lift.clone();
                let mut left: Vec<PsdMatrix> = l.certificates.iter().map(|c| c.matrix.clone()).collect();
                let mut right: Vec<PsdMatrix> = l.constraints.iter().map(|c| c.matrix.clone()).collect();
                pick(&mut rng, &mut left, &mut right);
                for (c, m) in l.certificates.iter_mut().zip(left) {
                    c.matrix = m;
                }
                for (c, m) in l.constraints.iter_mut().zip(right) {
                    c.matrix = m;
                }
                !lift::certify_exactness(&l, &square, &dirs, 1e-9).pass
            }
            1 => {
                let mut f: PsdFactorization = approx.factorization.clone();
                pick(&mut rng, &mut f.left, &mut f.right);
                !psdrank::verify_psd_factorization(&approx.approx, &f, 1e-8).pass
            }
            _ => {
                let mut j = john.clone();
                if rng.random_bool(0.5) {
                    let i = rng.random_range(0..j.weights.len());
                    let w = j.weights[i];
                    j.weights[i] = -w;
                    let spread = 2.0 * w / (j.weights.len() - 1).max(1) as f64;
                    for (q, x) in j.weights.iter_mut().enumerate() {
                        if q != i {
                            *x += spread;
                        }
                    }
                } else {
                    let delta = rng.random_range(1e-3..=0.1);
                    j.frame = j.frame.scaled(1.0 + delta);
                }
                !mvee::verify_john(&j, &pts).passes(john_tol)
            }
        };
        if !detected {
            missed.push(trial);
        }
    }
    if missed.is_empty() {
        Ok(format!(
            "100 trials (lift {}, psd factorization {}, John {}), 0 missed",
            counts[0], counts[1], counts[2]
        ))
    } else {
        Err(format!("missed detections in trials {missed:?}"))
    }
}

fn strip_timing(text: &str) -> String {
    text.lines().filter(|l| !l.contains("\"wall_time_ms\"")).collect::<Vec<_>>().join("\n")
}

fn cli(args: &[&str]) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_spectrasketch"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    out.status.code().ok_or_else(|| "killed by signal".to_string())
}

fn cli_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name);
    let s = |path: &Path| path.to_str().unwrap().to_string();

    let sphere = serde_json::json!({"dim": 3, "points": sphere_points(200, 3, 8)});
    std::fs::write(p("sphere.json"), sphere.to_string()).map_err(|e| e.to_string())?;
    let square = serde_json::json!({"dim": 2, "integer": true, "points": [[0, 0], [1, 0], [0, 1], [1, 1]]});
    std::fs::write(p("square.json"), square.to_string()).map_err(|e| e.to_string())?;
    let a = random_rank3(12, 9);
    let matrix = serde_json::json!({"rows": 12, "cols": 12, "data": a.to_rows()});
    std::fs::write(p("matrix.json"), matrix.to_string()).map_err(|e| e.to_string())?;

    let runs: [(&str, Vec<String>); 3] = [
        ("sketch", vec!["--input".into(), s(&p("sphere.json")), "--k".into(), "2".into(), "--verify-dirs".into(), "20000".into(), "--seed".into(), "3".into()]),
        ("lift", vec!["--input".into(), s(&p("square.json")), "--k".into(), "1".into(), "--radius".into(), "1".into()]),
        ("psdapprox", vec!["--input".into(), s(&p("matrix.json")), "--eps".into(), "0.3".into()]),
    ];
    for (cmd, args) in &runs {
        let mut texts = Vec::new();
        for rep in 0..2 {
            let out = p(&format!("{cmd}{rep}.json"));
            let mut full = vec![cmd.to_string()];
            full.extend(args.iter().cloned());
            full.extend(["--out".to_string(), s(&out)]);
            let refs: Vec<&str> = full.iter().map(String::as_str).collect();
            let code = cli(&refs)?;
            if code != 0 {
                return Err(format!("{cmd} run {rep} exited {code}"));
            }
            let code = cli(&["verify", "--input", &s(&out)])?;
            if code != 0 {
                return Err(format!("verify of {cmd} artifact exited {code}"));
            }
            texts.push(strip_timing(&std::fs::read_to_string(&out).map_err(|e| e.to_string())?));
        }
        if texts[0] != texts[1] {
            return Err(format!("{cmd} artifacts differ between equal-seed runs"));
        }
    }
    Ok("sketch, lift, psdapprox artifacts verify with exit 0 and are byte-identical across reruns".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("tensor isometry", tensor_isometry),
        ("MVEE certificates", mvee_certificates),
        ("sketch end to end", sketch_end_to_end),
        ("k = 1 cube base case", cube_base_case),
        ("lattice lifts", lattice_lifts),
        ("low psd-rank approximation", psd_approximation),
        ("fault injection", fault_injection),
        ("CLI round trip", cli_round_trip),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", n + 1)
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
