//! Verification suites, one per command.

use nalgebra::DMatrix;
use serde_json::{json, Value};

use probframe::dpp::{DppKernel, BRUTEFORCE_LIMIT};
use probframe::frames::Frame;
use probframe::gaussian::{
    char_functional_checks, ito_isometry_checks, moment_checks, process_covariance, projection_check,
    reconstruct_mc, Parity,
};
use probframe::markov::{start_row, FrameChain};
use probframe::measure::{wasserstein2, DiscreteMeasure};
use probframe::rng::{Domain, StreamFamily};
use probframe::stats::{chi_square_test, total_variation, McEstimate, Moments};
use probframe::translation::{
    change_of_variables_check, cocycle_check, kl_variance_checks, rn_density_mean_check, translated_second_moment,
    WIDE_TRANSLATION_NORM_SQ,
};
use probframe::{linalg, FrameError, Vector, WhiteNoiseEnsemble};

use crate::config::{GaussianCheck, Tolerances};
use crate::report::{fmt_f64, Record, Table};

/// Stream tags for the test vectors the suites draw themselves.
const PROBE_DOMAIN: Domain = Domain::Custom(0x5052_4f42_4553);
const RANDOM_FRAME_DOMAIN: Domain = Domain::Custom(0x4652_414d_4553);

pub type SuiteResult = std::result::Result<Outcome, FrameError>;

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub payload: Value,
    pub table: Option<Table>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Unit vector number `index` in R^dim from the probe streams.
pub fn probe_unit(seed: u64, dim: usize, index: u64) -> Vector {
    let mut c = vec![0.0; dim];
    StreamFamily::new(seed, PROBE_DOMAIN).stream(index).fill_normal(&mut c);
    let v = Vector::new(c).expect("finite normals");
    v.scale(1.0 / v.norm())
}

/// A spanning random frame of `n` vectors in R^dim.
pub fn random_frame(seed: u64, index: u64, dim: usize, n: usize) -> Frame {
    let mut stream = StreamFamily::new(seed, RANDOM_FRAME_DOMAIN).stream(index);
    let vectors = (0..n)
        .map(|k| {
            let mut c = vec![0.0; dim];
            stream.fill_normal(&mut c);
            if k < dim {
                c[k] += 3.0;
            }
            Vector::new(c).expect("finite normals")
        })
        .collect();
    Frame::new(vectors).expect("spanning by construction")
}

pub fn frames(frame: &Frame, seed: u64, tol: &Tolerances) -> SuiteResult {
    let mut records = Vec::new();
    let (alpha, beta) = (frame.lower_bound(), frame.upper_bound());
    let mut slack = f64::NEG_INFINITY;
    let mut dual_residual = 0.0_f64;
    let dual = frame.is_frame().then(|| frame.dual_frame()).transpose()?;
    for i in 0..1000 {
        let x = probe_unit(seed, frame.dim(), i);
        let energy: f64 = frame.analysis(&x)?.iter().map(|c| c * c).sum();
        slack = slack.max(alpha - energy).max(energy - beta);
        if let Some(d) = &dual {
            let rebuilt = frame.synthesis(&d.analysis(&x)?)?;
            dual_residual = dual_residual.max(rebuilt.sub(&x)?.norm());
        }
    }
    records.push(Record::at_most("sandwich_slack", slack, tol.ineq));
    if dual.is_some() {
        records.push(Record::at_most("dual_reconstruction", dual_residual, tol.spectrum));
    }

    let gram = frame.gram();
    let g_eig = gram.eigenvalues();
    let s_eig = linalg::sym_eigenvalues(frame.operator());
    let cut = tol.spectrum * beta;
    let nonzero = |v: &[f64]| v.iter().copied().filter(|&l| l > cut).collect::<Vec<_>>();
    let (g_nz, s_nz) = (nonzero(&g_eig), nonzero(&s_eig));
    let gap = if g_nz.len() == s_nz.len() {
        g_nz.iter().zip(&s_nz).map(|(a, b)| (a - b).abs() / beta).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    records.push(Record::at_most("gram_operator_spectrum", gap, tol.spectrum));
    records.push(Record::at_least("gram_min_eigenvalue", g_eig[0], -tol.ineq * beta.max(1.0)));

    let payload = json!({
        "dim": frame.dim(),
        "len": frame.len(),
        "lower_bound": alpha,
        "upper_bound": beta,
        "is_frame": frame.is_frame(),
        "is_tight": frame.is_tight(tol.ineq),
        "is_parseval": frame.is_parseval(tol.ineq),
        "operator": rows(frame.operator()),
        "gram": rows(gram.entries()),
        "gram_eigenvalues": g_eig,
    });
    Ok(Outcome { records, payload, table: None })
}

pub fn wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: &Tolerances) -> SuiteResult {
    let forward = wasserstein2(mu, nu)?;
    let backward = wasserstein2(nu, mu)?;
    let own = wasserstein2(mu, mu)?;
    let mut marginal = 0.0_f64;
    for (i, w) in mu.weights().iter().enumerate() {
        marginal = marginal.max((forward.plan.row(i).sum() - w).abs());
    }
    for (j, w) in nu.weights().iter().enumerate() {
        marginal = marginal.max((forward.plan.column(j).sum() - w).abs());
    }
    let records = vec![
        Record::close("symmetry", forward.distance, backward.distance, tol.w2),
        Record::at_most("self_distance", own.distance, tol.w2),
        Record::at_most("plan_marginals", marginal, tol.spectrum),
    ];
    let mut table = Table::new(&["i", "j", "mass"]);
    for i in 0..forward.plan.nrows() {
        for j in 0..forward.plan.ncols() {
            let g = forward.plan[(i, j)];
            if g > 0.0 {
                table.push(vec![i.to_string(), j.to_string(), fmt_f64(g)]);
            }
        }
    }
    let payload = json!({ "distance": forward.distance, "plan": rows(&forward.plan) });
    Ok(Outcome { records, payload, table: Some(table) })
}

pub fn decay(mu: &DiscreteMeasure, n_max: usize, tol: &Tolerances) -> SuiteResult {
    let seq = mu.lower_bound_decay(n_max);
    let tail = seq.iter().skip(mu.dim()).fold(0.0_f64, |m, v| m.max(v.abs()));
    let total: f64 = seq.iter().sum();
    let m2 = mu.second_moment();
    let records = vec![
        Record::at_most("tail_beyond_dimension", tail, 0.0),
        Record::close("sum_equals_second_moment", total, m2, tol.exact * m2.max(1.0)),
    ];
    let mut table = Table::new(&["n", "f"]);
    for (n, v) in seq.iter().enumerate() {
        table.push(vec![n.to_string(), fmt_f64(*v)]);
    }
    let payload = json!({ "dim": mu.dim(), "second_moment": m2, "decay": seq });
    Ok(Outcome { records, payload, table: Some(table) })
}

pub fn markov(frame: Frame, start: &Vector, horizon: usize, paths: usize, seed: u64, tol: &Tolerances) -> SuiteResult {
    let chain = FrameChain::new(frame)?;
    let d = chain.diagnostics();
    let mut records = vec![
        Record::at_most("row_sum_residual", d.row_sum_residual, tol.exact),
        Record::at_most("reversibility_residual", d.reversibility_residual, tol.exact),
        Record::at_most("bound_residual", d.bound_residual, tol.exact),
    ];
    let first = start_row(chain.frame(), start)?;
    let samples = chain.sample_paths(start, horizon, paths, seed)?;
    let mut counts = vec![0u64; chain.len()];
    let mut table = Table::new(&["path", "indices", "probability"]);
    for (p, s) in samples.iter().enumerate() {
        counts[s.indices[0]] += 1;
        let idx: Vec<String> = s.indices.iter().map(|i| i.to_string()).collect();
        table.push(vec![p.to_string(), idx.join(" "), fmt_f64(s.probability)]);
    }
    let chi = chi_square_test(&counts, &first);
    records.push(Record::at_least("first_step_chi_square_p", chi.p_value, tol.p_min));
    let mut distinct: Vec<&Vec<usize>> = samples.iter().map(|s| &s.indices).collect();
    distinct.sort();
    distinct.dedup();
    let payload = json!({
        "start": start.as_slice(),
        "horizon": horizon,
        "paths": paths,
        "normalizers": chain.normalizers(),
        "transitions": rows(chain.transitions()),
        "start_row": first,
        "diagnostics": d,
        "first_step_counts": counts,
        "first_step_chi_square": chi,
        "distinct_paths": distinct.len(),
    });
    Ok(Outcome { records, payload, table: Some(table) })
}

pub fn dpp(kernel: &DppKernel, draws: usize, seed: u64, bruteforce: bool, tol: &Tolerances) -> SuiteResult {
    let n = kernel.size();
    let samples = kernel.sample(draws, seed)?;
    let mut card = Moments::default();
    let mut table = Table::new(&["draw", "indices"]);
    for (i, s) in samples.iter().enumerate() {
        card.push(s.len() as f64);
        let idx: Vec<String> = s.indices().iter().map(|v| v.to_string()).collect();
        table.push(vec![i.to_string(), idx.join(" ")]);
    }
    let cardinality = McEstimate::from_moments(&card, kernel.trace());
    let mut records = vec![Record::estimate("expected_cardinality", &cardinality, tol.z_max)];
    let mut payload = json!({
        "kernel": rows(kernel.matrix()),
        "eigenvalues": kernel.eigenvalues(),
        "trace": kernel.trace(),
        "draws": draws,
        "mean_cardinality": cardinality.value,
    });
    if bruteforce {
        if n > BRUTEFORCE_LIMIT {
            return Err(FrameError::TooLarge { n, limit: BRUTEFORCE_LIMIT });
        }
        let exact = kernel.subset_distribution_bruteforce()?;
        let mass: f64 = exact.iter().sum();
        let mut freq = vec![0.0; exact.len()];
        for s in &samples {
            freq[s.mask()] += 1.0 / draws as f64;
        }
        let tv = total_variation(&freq, &exact);
        records.push(Record::close("subset_table_mass", mass, 1.0, tol.spectrum));
        records.push(Record::at_most("total_variation", tv, tol.tv_max));
        payload["subset_probabilities"] = json!(exact);
        payload["total_variation"] = json!(tv);
    }
    Ok(Outcome { records, payload, table: Some(table) })
}

pub fn gaussian(dim: usize, samples: usize, seed: u64, checks: &[GaussianCheck], tol: &Tolerances) -> SuiteResult {
    let ens = WhiteNoiseEnsemble::new(dim, samples, seed)?;
    let u1 = probe_unit(seed, dim, 0);
    let u2 = probe_unit(seed, dim, 1);
    let mut records = Vec::new();
    let mut payload = serde_json::Map::new();
    let sanity = ens.sanity();
    payload.insert("ensemble_sanity".into(), json!(sanity));
    let z = tol.z_max;
    for check in checks {
        match check {
            GaussianCheck::Isometry => {
                let two = u2.scale(2.0);
                let e1 = Vector::basis(dim, 0);
                let est = ito_isometry_checks(&[&u1, &two, &e1], &ens)?;
                for (name, e) in ["isometry.unit", "isometry.scaled", "isometry.basis"].iter().zip(&est) {
                    records.push(Record::estimate(*name, e, z));
                }
            }
            GaussianCheck::Charfn => {
                let wide = u2.scale(std::f64::consts::SQRT_2);
                let est = char_functional_checks(&[&u1, &wide], &ens)?;
                for (label, e) in ["norm_sq_1", "norm_sq_2"].iter().zip(&est) {
                    records.push(Record::estimate(format!("charfn.{label}.re"), &e.re, z));
                    records.push(Record::estimate(format!("charfn.{label}.im"), &e.im, z));
                }
            }
            GaussianCheck::Moments => {
                let orders: Vec<(usize, Parity)> = (1..=3)
                    .flat_map(|k| [(k, Parity::Even), (k, Parity::Odd)])
                    .collect();
                let est = moment_checks(&u1, &orders, &ens)?;
                for (&(k, p), e) in orders.iter().zip(&est) {
                    let power = if p == Parity::Even { 2 * k } else { 2 * k + 1 };
                    records.push(Record::estimate(format!("moments.power_{power}"), e, z));
                }
            }
            GaussianCheck::Covariance => {
                let frame = Frame::mercedes_benz();
                if dim >= frame.dim() {
                    let cov = process_covariance(&frame, &ens)?;
                    let dist = (&cov - frame.gram().entries()).norm();
                    let bound = 5.0 * frame.len() as f64 / (samples as f64).sqrt();
                    records.push(Record::at_most("covariance.frobenius", dist, bound));
                    payload.insert("process_covariance".into(), json!(rows(&cov)));
                }
            }
            GaussianCheck::Reconstruct => {
                let r = reconstruct_mc(&u1, &ens)?;
                let bound = 4.0 * ((dim as f64 + 1.0) / samples as f64).sqrt();
                records.push(Record::at_most("reconstruct.error", r.error, bound));
            }
            GaussianCheck::Projection => {
                let est = projection_check(&u1, &u2, &ens)?;
                records.push(Record::estimate("projection.inner_product", &est, z));
            }
        }
    }
    Ok(Outcome { records, payload: Value::Object(payload), table: None })
}

/// Translation identities for one `(x, y)` pair; `warning` is set when the
/// density's variance makes the bands uninformative.
pub fn translate(x: &Vector, y: &Vector, dim: usize, samples: usize, seed: u64, tol: &Tolerances) -> SuiteResult {
    let ens = WhiteNoiseEnsemble::new(dim, samples, seed)?;
    let z = tol.z_max;
    let mut records = vec![
        Record::estimate("rn_density_mean", &rn_density_mean_check(x, &ens)?, z),
        Record::estimate("translated_second_moment", &translated_second_moment(x, y, &ens)?, z),
    ];
    for c in change_of_variables_check(x, y, &ens)? {
        let se = (c.weighted.std_error.powi(2) + c.shifted.std_error.powi(2)).sqrt();
        let name = format!("change_of_variables.{}", serde_json::to_value(c.function).expect("enum")
            .as_str()
            .expect("string"));
        records.push(Record::difference(name, c.weighted.value, c.shifted.value, se, c.z_difference, z));
    }
    let mut worst = 0.0_f64;
    let mut omega = vec![0.0; dim];
    for m in 0..samples.min(1000) {
        ens.sample_into(m, &mut omega);
        worst = worst.max(cocycle_check(x, y, &omega)?.relative_residual());
    }
    records.push(Record::at_most("cocycle_residual", worst, tol.exact));
    let wide = x.norm_sq() > WIDE_TRANSLATION_NORM_SQ;
    let payload = json!({
        "x": x.as_slice(),
        "y": y.as_slice(),
        "x_norm_sq": x.norm_sq(),
        "wide_translation": wide,
    });
    Ok(Outcome { records, payload, table: None })
}

pub fn kl(frame: &Frame, xs: &[Vector], dim: usize, samples: usize, seed: u64, tol: &Tolerances) -> SuiteResult {
    let ens = WhiteNoiseEnsemble::new(dim.max(frame.len()), samples, seed)?;
    let refs: Vec<&Vector> = xs.iter().collect();
    let est = kl_variance_checks(frame, &refs, &ens)?;
    let records = est
        .iter()
        .enumerate()
        .map(|(i, e)| Record::estimate(format!("variance.{i}"), e, tol.z_max))
        .collect();
    let payload = json!({ "frame_len": frame.len(), "truncation": ens.dim(), "estimates": est });
    Ok(Outcome { records, payload, table: None })
}
