//! Acceptance suite: thirteen criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed in order; the
//! process exits nonzero when any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use probframe::dpp::{DppKernel, PointConfiguration};
use probframe::frames::Frame;
use probframe::gaussian::{
    char_functional_checks, ito_isometry_checks, moment_checks, process_covariance, reconstruct_mc, Parity,
};
use probframe::markov::FrameChain;
use probframe::measure::{wasserstein2, DiscreteMeasure};
use probframe::rng::{Domain, Stream, StreamFamily};
use probframe::stats::{chi_square_test, total_variation, Moments};
use probframe::translation::{cocycle_check, kl_variance_checks, rn_density_mean_check, translated_second_moment};
use probframe::{linalg, Vector, WhiteNoiseEnsemble};

const Z_MAX: f64 = 4.0;

type Criterion = (&'static str, u64, fn() -> Verdict);

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Self { ok, detail: detail.into() }
    }
}

fn stream(tag: u64, index: u64) -> Stream {
    StreamFamily::new(20_240_601, Domain::Custom(tag)).stream(index)
}

fn normal_vec(s: &mut Stream, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    s.fill_normal(&mut v);
    v
}

fn unit(s: &mut Stream, dim: usize) -> Vector {
    let v = Vector::new(normal_vec(s, dim)).unwrap();
    v.scale(1.0 / v.norm())
}

fn below(s: &mut Stream, n: usize) -> usize {
    ((s.next_uniform() * n as f64) as usize).min(n - 1)
}

/// Gaussian frame with `N ≤ 8` and `N ≤ n ≤ 16`.
fn random_frame(s: &mut Stream) -> Frame {
    let dim = 1 + below(s, 8);
    let n = dim + below(s, 17 - dim);
    let vectors = (0..n).map(|_| Vector::new(normal_vec(s, dim)).unwrap()).collect();
    Frame::new(vectors).unwrap()
}

fn criterion_frame_bounds() -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    for f in 0..200 {
        let mut s = stream(1, f);
        let frame = random_frame(&mut s);
        for _ in 0..1000 {
            let x = unit(&mut s, frame.dim());
            let energy: f64 = frame.analysis(&x).unwrap().iter().map(|c| c * c).sum();
            worst = worst.max(frame.lower_bound() - energy).max(energy - frame.upper_bound());
        }
    }
    Verdict::new(worst <= 1e-10, format!("max slack {worst:.3e}"))
}

fn criterion_markov_structure() -> Verdict {
    let mut worst = [0.0_f64; 3];
    let mut skipped = 0;
    for f in 0..100 {
        let frame = random_frame(&mut stream(2, f));
        let Ok(chain) = FrameChain::new(frame) else {
            skipped += 1;
            continue;
        };
        let d = chain.diagnostics();
        worst[0] = worst[0].max(d.row_sum_residual);
        worst[1] = worst[1].max(d.reversibility_residual);
        worst[2] = worst[2].max(d.bound_residual);
    }
    Verdict::new(
        worst.iter().all(|&w| w <= 1e-12) && skipped == 0,
        format!("row {:.2e}, reversibility {:.2e}, bound {:.2e}", worst[0], worst[1], worst[2]),
    )
}

fn criterion_path_measure() -> Verdict {
    let frame = Frame::mercedes_benz();
    let phi = frame.vectors().to_vec();
    let chain = FrameChain::new(frame).unwrap();
    let x = Vector::new(vec![0.3, -0.9]).unwrap();
    let step = |from: &Vector, to: usize| {
        let c: f64 = phi.iter().map(|p| from.dot(p).unwrap().powi(2)).sum();
        from.dot(&phi[to]).unwrap().powi(2) / c
    };
    let mut probs = vec![0.0; 9];
    for j in 0..3 {
        for k in 0..3 {
            probs[3 * j + k] = step(&x, j) * step(&phi[j], k);
        }
    }
    let mut counts = vec![0u64; 9];
    for p in chain.sample_paths(&x, 2, 200_000, 31).unwrap() {
        counts[3 * p.indices[0] + p.indices[1]] += 1;
    }
    let chi = chi_square_test(&counts, &probs);

    let onb = FrameChain::new(Frame::orthonormal_basis(4)).unwrap();
    let start = Vector::basis(4, 2);
    let paths = onb.sample_paths(&start, 5, 1000, 31).unwrap();
    let deterministic = paths.iter().all(|p| p.indices == vec![2; 5] && p.probability == 1.0);
    Verdict::new(
        chi.p_value >= 1e-3 && deterministic,
        format!("chi-square p {:.4}, ONB deterministic {deterministic}", chi.p_value),
    )
}

fn random_kernel(s: &mut Stream) -> DppKernel {
    let n = 1 + below(s, 6);
    let q = DMatrix::from_column_slice(n, n, &normal_vec(s, n * n)).qr().q();
    let spectrum: Vec<f64> = (0..n).map(|_| s.next_uniform()).collect();
    let k = &q * DMatrix::from_diagonal(&spectrum.into()) * q.transpose();
    DppKernel::new((&k + k.transpose()) * 0.5).unwrap()
}

/// `P(Φ = S) = |det(K − I_{S^c})|`.
fn subset_oracle(k: &DMatrix<f64>) -> Vec<f64> {
    let n = k.nrows();
    (0..1usize << n)
        .map(|mask| {
            let mut m = k.clone();
            for i in 0..n {
                if mask & (1 << i) == 0 {
                    m[(i, i)] -= 1.0;
                }
            }
            linalg::det(&m).abs()
        })
        .collect()
}

fn criterion_determinantal() -> Verdict {
    let m = 200_000;
    let (mut min_minor, mut mass_err, mut empty_err, mut tv_max, mut z_max) = (f64::INFINITY, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for t in 0..50 {
        let kernel = random_kernel(&mut stream(4, t));
        let n = kernel.size();
        for mask in 1..(1usize << n) {
            let p = kernel.inclusion_probability(&PointConfiguration::from_mask(mask, n)).unwrap();
            min_minor = min_minor.min(p);
        }
        let table = kernel.subset_distribution_bruteforce().unwrap();
        mass_err = mass_err.max((table.iter().sum::<f64>() - 1.0).abs());
        let complement = linalg::det(&(DMatrix::identity(n, n) - kernel.matrix()));
        empty_err = empty_err.max((table[0] - complement).abs());

        let oracle = subset_oracle(kernel.matrix());
        let mut freq = vec![0.0; 1 << n];
        let mut card = Moments::default();
        for s in kernel.sample(m, 1000 + t).unwrap() {
            freq[s.mask()] += 1.0 / m as f64;
            card.push(s.len() as f64);
        }
        tv_max = tv_max.max(total_variation(&freq, &oracle));
        z_max = z_max.max(((card.mean() - kernel.trace()) / card.std_error()).abs());
    }
    let ok = min_minor >= -1e-10 && mass_err <= 1e-9 && empty_err <= 1e-9 && tv_max <= 0.02 && z_max <= 3.0;
    Verdict::new(
        ok,
        format!("min minor {min_minor:.2e}, mass {mass_err:.1e}, empty {empty_err:.1e}, TV {tv_max:.4}, |z| cardinality {z_max:.2}"),
    )
}

fn criterion_isometry_charfn() -> Verdict {
    let d = 32;
    let ens = WhiteNoiseEnsemble::new(d, 1_000_000, 5).unwrap();
    let mut s = stream(5, 0);
    let xs: Vec<Vector> = (0..20).map(|_| unit(&mut s, d)).collect();
    let wide = xs[1].scale(std::f64::consts::SQRT_2);
    let refs: Vec<&Vector> = xs.iter().collect();
    let iso = ito_isometry_checks(&refs, &ens).unwrap();
    let mut cf_inputs = refs.clone();
    cf_inputs.push(&wide);
    let cf = char_functional_checks(&cf_inputs, &ens).unwrap();
    let worst_iso = iso.iter().map(|e| e.z_score.map_or(f64::INFINITY, f64::abs)).fold(0.0, f64::max);
    let worst_cf = cf
        .iter()
        .flat_map(|c| [c.re.z_score, c.im.z_score])
        .map(|z| z.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    let t1 = cf[0].re.target;
    let t2 = cf[20].re.target;
    let targets_ok = (t1 - (-0.5f64).exp()).abs() <= 1e-12 && (t2 - (-1.0f64).exp()).abs() <= 1e-12;
    Verdict::new(
        worst_iso <= Z_MAX && worst_cf <= Z_MAX && targets_ok,
        format!("max |z| isometry {worst_iso:.2}, charfn {worst_cf:.2}; targets {t1:.4}, {t2:.4}"),
    )
}

fn criterion_moments() -> Verdict {
    let ens = WhiteNoiseEnsemble::new(8, 1_000_000, 6).unwrap();
    let x = unit(&mut stream(6, 0), 8).scale(1.3);
    let orders: Vec<(usize, Parity)> = (1..=3).flat_map(|k| [(k, Parity::Even), (k, Parity::Odd)]).collect();
    let est = moment_checks(&x, &orders, &ens).unwrap();
    let mut ok = true;
    let mut zs = Vec::new();
    for (&(k, p), e) in orders.iter().zip(&est) {
        let target = match p {
            Parity::Even => (1..=k).map(|i| (2 * i - 1) as f64).product::<f64>() * x.norm().powi(2 * k as i32),
            Parity::Odd => 0.0,
        };
        ok &= (e.target - target).abs() <= 1e-12 * target.max(1.0) && e.passes(Z_MAX);
        zs.push(format!("{:.2}", e.z_score.unwrap_or(f64::NAN)));
    }
    Verdict::new(ok, format!("z for powers 2..7: [{}]", zs.join(", ")))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_decomposition() -> Verdict {
    let d = 16;
    let m = 1_000_000;
    let x = unit(&mut stream(7, 0), d);
    let bound = 4.0 * ((d as f64 + 1.0) / m as f64).sqrt();
    let mut full = Vec::new();
    let mut half = Vec::new();
    for t in 0..20 {
        full.push(reconstruct_mc(&x, &WhiteNoiseEnsemble::new(d, m, 700 + t).unwrap()).unwrap().error);
        half.push(reconstruct_mc(&x, &WhiteNoiseEnsemble::new(d, m / 2, 700 + t).unwrap()).unwrap().error);
    }
    let worst = full.iter().cloned().fold(0.0, f64::max);
    let ratio = median(half) / median(full);
    Verdict::new(
        worst <= bound && (1.2..=1.7).contains(&ratio),
        format!("max err {worst:.2e} (bound {bound:.2e}), median ratio {ratio:.3}"),
    )
}

fn criterion_gramian_covariance() -> Verdict {
    let m = 1_000_000;
    let frame = Frame::mercedes_benz();
    let cov = process_covariance(&frame, &WhiteNoiseEnsemble::new(2, m, 8).unwrap()).unwrap();
    let dist = (&cov - frame.gram().entries()).norm();
    let bound = 5.0 * 3.0 / (m as f64).sqrt();
    Verdict::new(dist <= bound, format!("Frobenius {dist:.2e} (bound {bound:.2e})"))
}

fn criterion_translation() -> Verdict {
    let mut worst = 0.0_f64;
    for t in 0..1000 {
        let mut s = stream(9, t);
        let d = 1 + below(&mut s, 8);
        let x1 = Vector::new(normal_vec(&mut s, d)).unwrap();
        let x2 = Vector::new(normal_vec(&mut s, d)).unwrap();
        let width = d + below(&mut s, 4);
        let omega = normal_vec(&mut s, width);
        worst = worst.max(cocycle_check(&x1, &x2, &omega).unwrap().relative_residual());
    }
    let d = 8;
    let ens = WhiteNoiseEnsemble::new(d, 1_000_000, 9).unwrap();
    let mut s = stream(9, 5000);
    let u = unit(&mut s, d);
    let w = unit(&mut s, d);
    let perp = w.sub(&u.scale(u.dot(&w).unwrap())).unwrap();
    let perp = perp.scale(1.0 / perp.norm());
    let configs = [(Vector::zeros(d), u.clone()), (u.clone(), perp), (u.clone(), u.clone())];
    let mut zs = Vec::new();
    let mut ok = worst <= 1e-12;
    for (x, y) in &configs {
        let e = translated_second_moment(x, y, &ens).unwrap();
        ok &= e.passes(Z_MAX);
        zs.push(format!("{:.2}/{:.3}", e.z_score.unwrap_or(f64::NAN), e.target));
        let rn = rn_density_mean_check(x, &ens).unwrap();
        ok &= rn.passes(Z_MAX);
    }
    let expected = [1.0, 1.0, 2.0];
    for ((x, y), t) in configs.iter().zip(expected) {
        let target = translated_second_moment(x, y, &WhiteNoiseEnsemble::new(d, 1, 0).unwrap()).unwrap().target;
        ok &= (target - t).abs() <= 1e-12;
    }
    Verdict::new(ok, format!("cocycle residual {worst:.2e}; z/target {}", zs.join(", ")))
}

fn criterion_karhunen_loeve() -> Verdict {
    let frame = Frame::mercedes_benz().parseval_rescale().unwrap();
    let ens = WhiteNoiseEnsemble::new(3, 1_000_000, 10).unwrap();
    let mut s = stream(10, 0);
    let xs: Vec<Vector> = (0..10).map(|_| unit(&mut s, 2)).collect();
    let refs: Vec<&Vector> = xs.iter().collect();
    let est = kl_variance_checks(&frame, &refs, &ens).unwrap();
    let worst = est.iter().map(|e| e.z_score.map_or(f64::INFINITY, f64::abs)).fold(0.0, f64::max);
    let targets_ok = est.iter().all(|e| (e.target - 1.0).abs() <= 1e-12);
    Verdict::new(worst <= Z_MAX && targets_ok, format!("max |z| {worst:.2}"))
}

fn criterion_decay() -> Verdict {
    let mut ok = true;
    let mut worst = 0.0_f64;
    for t in 0..20 {
        let mut s = stream(11, t);
        let d = 1 + below(&mut s, 8);
        let n = 1 + below(&mut s, 10);
        let atoms: Vec<Vector> = (0..n).map(|_| Vector::new(normal_vec(&mut s, d)).unwrap()).collect();
        let weights: Vec<f64> = (0..n).map(|_| 0.05 + s.next_uniform()).collect();
        let mu = DiscreteMeasure::normalized(atoms, weights).unwrap();
        let f = mu.lower_bound_decay(64);
        ok &= f[d..].iter().all(|&v| v == 0.0);
        let m2: f64 = mu.atoms().iter().zip(mu.weights()).map(|(a, w)| w * a.norm_sq()).sum();
        worst = worst.max((f.iter().sum::<f64>() - m2).abs() / m2.max(1.0));
    }
    Verdict::new(ok && worst <= 1e-12, format!("tails zero {ok}, max sum residual {worst:.2e}"))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    permutations(n - 1)
        .into_iter()
        .flat_map(|p| {
            (0..=p.len()).map(move |pos| {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                q
            })
        })
        .collect()
}

fn criterion_wasserstein() -> Verdict {
    let mut worst = 0.0_f64;
    let mut axioms = true;
    for t in 0..100 {
        let mut s = stream(12, t);
        let n = 1 + below(&mut s, 6);
        let d = 1 + below(&mut s, 3);
        let cloud = |s: &mut Stream| (0..n).map(|_| Vector::new(normal_vec(s, d)).unwrap()).collect::<Vec<_>>();
        let (a, b, c) = (cloud(&mut s), cloud(&mut s), cloud(&mut s));
        let best = permutations(n)
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| a[i].sub(&b[j]).unwrap().norm_sq()).sum::<f64>() / n as f64)
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let (mu, nu, xi) = (
            DiscreteMeasure::uniform(a).unwrap(),
            DiscreteMeasure::uniform(b).unwrap(),
            DiscreteMeasure::uniform(c).unwrap(),
        );
        let ab = wasserstein2(&mu, &nu).unwrap().distance;
        worst = worst.max((ab - best).abs());
        let ba = wasserstein2(&nu, &mu).unwrap().distance;
        let bc = wasserstein2(&nu, &xi).unwrap().distance;
        let ac = wasserstein2(&mu, &xi).unwrap().distance;
        axioms &= (ab - ba).abs() <= 1e-9 && ac <= ab + bc + 1e-9 && wasserstein2(&mu, &mu).unwrap().distance <= 1e-9;
    }
    Verdict::new(worst <= 1e-9 && axioms, format!("max deviation {worst:.2e}, axioms {axioms}"))
}

fn verify_all_fingerprint(threads: Option<&str>, tag: &str) -> Result<String, String> {
    let out = std::env::temp_dir().join(format!("pframe-acceptance-{}-{tag}.json", std::process::id()));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pframe"));
    cmd.args(["verify-all", "--seed", "7", "--samples", "100000", "--dim", "32", "--out"]).arg(&out);
    match threads {
        Some(t) => cmd.env("FRAMES_THREADS", t),
        None => cmd.env_remove("FRAMES_THREADS"),
    };
    let status = cmd.status().map_err(|e| e.to_string())?;
    if status.code() != Some(0) {
        return Err(format!("verify-all exited with {status}"));
    }
    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_file(&out);
    let report: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&(&report["records"], &report["payload"])).unwrap())
}

fn criterion_reproducibility() -> Verdict {
    let runs = [
        verify_all_fingerprint(None, "a"),
        verify_all_fingerprint(None, "b"),
        verify_all_fingerprint(Some("1"), "t1"),
        verify_all_fingerprint(Some("8"), "t8"),
    ];
    if let Some(Err(e)) = runs.iter().find(|r| r.is_err()) {
        return Verdict::new(false, e.clone());
    }
    let p: Vec<&String> = runs.iter().map(|r| r.as_ref().unwrap()).collect();
    let repeat = p[0] == p[1];
    let threads = p[2] == p[3] && p[0] == p[2];
    Verdict::new(repeat && threads, format!("repeat identical {repeat}, 1 vs 8 threads identical {threads} ({} bytes)", p[0].len()))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("frame bounds sandwich", 5, criterion_frame_bounds),
        ("Markov chain structure", 5, criterion_markov_structure),
        ("path-space measure", 10, criterion_path_measure),
        ("determinantal measure", 60, criterion_determinantal),
        ("Ito isometry and characteristic functional", 60, criterion_isometry_charfn),
        ("Gaussian moments", 30, criterion_moments),
        ("frame decomposition", 60, criterion_decomposition),
        ("Gramian covariance", 20, criterion_gramian_covariance),
        ("translation identities", 30, criterion_translation),
        ("Karhunen-Loeve variance", 20, criterion_karhunen_loeve),
        ("no uniform lower bound (decay)", 2, criterion_decay),
        ("W2 exact solver", 30, criterion_wasserstein),
        ("reproducibility", 300, criterion_reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let ok = v.ok && in_time;
        failures += usize::from(!ok);
        println!(
            "[{}] {:>2}. {name}: {} | {:.2}s (budget {budget}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            elapsed.as_secs_f64(),
        );
    }
    println!("acceptance: {}/13 passed", 13 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
