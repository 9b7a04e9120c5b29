//! Gaussian white noise at finite truncation.
//!
//! The white-noise measure is represented by its push-forward onto the first
//! `D` coordinates of a fixed orthonormal basis: i.i.d. standard normal
//! vectors in R^D. All identities checked here (Ito isometry, characteristic
//! functional, moments, Gramian covariance, synthesis and reconstruction) hold
//! exactly for any `D` at least the dimension of the inputs, so truncation adds
//! no bias.
//!
//! Samples are never stored: sample `m` is regenerated from the stream
//! addressed by `(seed, m)`, and every estimator folds fixed-size blocks of
//! samples and merges the block results in block order.

use nalgebra::DMatrix;

use crate::error::{FrameError, Result};
use crate::exec::{self, Strategy};
use crate::frames::{Frame, GramMatrix, TOL_RANK_REL};
use crate::rng::{Domain, StreamFamily};
use crate::stats::{CompensatedSum, ComplexMcEstimate, McEstimate, Moments};
use crate::vector::{dot, Vector};

/// Default truncation dimension.
pub const DEFAULT_DIM: usize = 64;

/// Seeded ensemble of `count` i.i.d. N(0, I_D) vectors.
#[derive(Debug, Clone)]
pub struct WhiteNoiseEnsemble {
    dim: usize,
    count: usize,
    seed: u64,
    family: StreamFamily,
}

impl WhiteNoiseEnsemble {
    pub fn new(dim: usize, count: usize, seed: u64) -> Result<Self> {
        if dim == 0 || count == 0 {
            return Err(FrameError::InvalidArgument("ensemble dimension and size must be positive".into()));
        }
        Ok(Self { dim, count, seed, family: StreamFamily::new(seed, Domain::WhiteNoise) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes the first `out.len()` coordinates of sample `index`.
    pub fn sample_into(&self, index: usize, out: &mut [f64]) {
        debug_assert!(out.len() <= self.dim);
        self.family.stream(index as u64).fill_normal(out);
    }

    pub fn sample(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(index, &mut out);
        out
    }

    /// Every sample, materialised. Only sensible for small ensembles.
    pub fn samples(&self) -> Vec<Vec<f64>> {
        (0..self.count).map(|m| self.sample(m)).collect()
    }

    fn require_within(&self, dim: usize) -> Result<()> {
        if dim > self.dim {
            Err(FrameError::DimensionExceedsTruncation { dim, truncation: self.dim })
        } else {
            Ok(())
        }
    }

    /// Folds every sample (its first `width` coordinates) into a per-block
    /// accumulator and merges the blocks left to right.
    pub fn reduce<A, I, S, M>(&self, strategy: Strategy, width: usize, init: I, step: S, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        S: Fn(&mut A, usize, &[f64]) + Sync + Send,
        M: Fn(&mut A, A),
    {
        let width = width.min(self.dim);
        let partials = exec::map_blocks(strategy, self.count, |range| {
            let mut acc = init();
            let mut omega = vec![0.0; width];
            for m in range {
                self.sample_into(m, &mut omega);
                step(&mut acc, m, &omega);
            }
            acc
        });
        let mut total = init();
        for part in partials {
            merge(&mut total, part);
        }
        total
    }

    /// Mean and variance of `k` per-sample statistics written by `f`.
    pub fn moments<F>(&self, strategy: Strategy, width: usize, k: usize, f: F) -> Vec<Moments>
    where
        F: Fn(&[f64], &mut [f64]) + Sync + Send,
    {
        self.reduce(
            strategy,
            width,
            || (vec![Moments::default(); k], vec![0.0; k]),
            |(acc, buf), _, omega| {
                f(omega, buf);
                for (a, &v) in acc.iter_mut().zip(buf.iter()) {
                    a.push(v);
                }
            },
            |(total, _), (part, _)| {
                for (t, p) in total.iter_mut().zip(&part) {
                    t.merge(p);
                }
            },
        )
        .0
    }

    /// Per-coordinate generator sanity: means within `5/√M` of 0 and variances
    /// within `5·√(2/M)` of 1.
    pub fn sanity(&self) -> EnsembleSanity {
        let d = self.dim;
        let stats = self.moments(Strategy::default(), d, d, |omega, out| out.copy_from_slice(omega));
        let m = self.count as f64;
        let max_mean_deviation = stats.iter().map(|s| s.mean().abs()).fold(0.0, f64::max);
        let max_variance_deviation = stats.iter().map(|s| (s.variance() - 1.0).abs()).fold(0.0, f64::max);
        EnsembleSanity {
            max_mean_deviation,
            max_variance_deviation,
            pass: max_mean_deviation <= 5.0 / m.sqrt() && max_variance_deviation <= 5.0 * (2.0 / m).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnsembleSanity {
    pub max_mean_deviation: f64,
    pub max_variance_deviation: f64,
    pub pass: bool,
}

/// The extended pairing `⟨x, ω⟩ = Σ x_n ω_n`, with `x` zero-padded to `ω`'s length.
pub fn pairing(x: &Vector, omega: &[f64]) -> Result<f64> {
    if x.dim() > omega.len() {
        return Err(FrameError::DimensionExceedsTruncation { dim: x.dim(), truncation: omega.len() });
    }
    Ok(dot(x.as_slice(), &omega[..x.dim()]))
}

fn max_dim(xs: &[&Vector]) -> usize {
    xs.iter().map(|x| x.dim()).max().unwrap_or(0)
}

/// Ito isometry: `E⟨x, ω⟩² = ‖x‖²`.
pub fn ito_isometry_check(x: &Vector, ens: &WhiteNoiseEnsemble) -> Result<McEstimate> {
    Ok(ito_isometry_checks(&[x], ens)?.remove(0))
}

/// [`ito_isometry_check`] for several vectors in one pass over the ensemble.
pub fn ito_isometry_checks(xs: &[&Vector], ens: &WhiteNoiseEnsemble) -> Result<Vec<McEstimate>> {
    let width = max_dim(xs);
    ens.require_within(width)?;
    let stats = ens.moments(Strategy::default(), width, xs.len(), |omega, out| {
        for (o, x) in out.iter_mut().zip(xs) {
            *o = dot(x.as_slice(), &omega[..x.dim()]).powi(2);
        }
    });
    Ok(stats.iter().zip(xs).map(|(s, x)| McEstimate::from_moments(s, x.norm_sq())).collect())
}

/// Characteristic functional: `E e^{i⟨x, ω⟩} = e^{−‖x‖²/2}`.
pub fn char_functional_check(x: &Vector, ens: &WhiteNoiseEnsemble) -> Result<ComplexMcEstimate> {
    Ok(char_functional_checks(&[x], ens)?.remove(0))
}

pub fn char_functional_checks(xs: &[&Vector], ens: &WhiteNoiseEnsemble) -> Result<Vec<ComplexMcEstimate>> {
    let width = max_dim(xs);
    ens.require_within(width)?;
    let stats = ens.moments(Strategy::default(), width, 2 * xs.len(), |omega, out| {
        for (pair, x) in out.chunks_exact_mut(2).zip(xs) {
            let (s, c) = dot(x.as_slice(), &omega[..x.dim()]).sin_cos();
            pair[0] = c;
            pair[1] = s;
        }
    });
    Ok(stats
        .chunks_exact(2)
        .zip(xs)
        .map(|(s, x)| ComplexMcEstimate {
            re: McEstimate::from_moments(&s[0], (-0.5 * x.norm_sq()).exp()),
            im: McEstimate::from_moments(&s[1], 0.0),
        })
        .collect())
}

/// Which moment of `⟨x, ω⟩` to check for a given `k`: power `2k` or `2k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Largest `k` accepted by [`moment_check`].
pub const MAX_MOMENT_K: usize = 4;

/// `(2k − 1)!!`.
pub fn double_factorial_odd(k: usize) -> f64 {
    (1..=k).map(|i| (2 * i - 1) as f64).product()
}

/// `E⟨x, ω⟩^{2k} = (2k − 1)!! ‖x‖^{2k}` and `E⟨x, ω⟩^{2k+1} = 0`, for `1 ≤ k ≤ 4`.
pub fn moment_check(x: &Vector, k: usize, parity: Parity, ens: &WhiteNoiseEnsemble) -> Result<McEstimate> {
    Ok(moment_checks(x, &[(k, parity)], ens)?.remove(0))
}

pub fn moment_checks(x: &Vector, orders: &[(usize, Parity)], ens: &WhiteNoiseEnsemble) -> Result<Vec<McEstimate>> {
    if let Some(&(k, _)) = orders.iter().find(|(k, _)| *k == 0 || *k > MAX_MOMENT_K) {
        return Err(FrameError::KTooLarge { k });
    }
    ens.require_within(x.dim())?;
    let powers: Vec<i32> = orders
        .iter()
        .map(|&(k, p)| match p {
            Parity::Even => 2 * k as i32,
            Parity::Odd => 2 * k as i32 + 1,
        })
        .collect();
    let stats = ens.moments(Strategy::default(), x.dim(), orders.len(), |omega, out| {
        let t = dot(x.as_slice(), omega);
        for (o, &p) in out.iter_mut().zip(&powers) {
            *o = t.powi(p);
        }
    });
    Ok(stats
        .iter()
        .zip(orders)
        .map(|(s, &(k, parity))| {
            let target = match parity {
                Parity::Even => double_factorial_odd(k) * x.norm_sq().powi(k as i32),
                Parity::Odd => 0.0,
            };
            McEstimate::from_moments(s, target)
        })
        .collect())
}

/// Process samples `X_{m,k} = ⟨φ_k, ω_m⟩`, one row per ensemble member.
pub fn gaussian_process_from_frame(frame: &Frame, ens: &WhiteNoiseEnsemble) -> Result<DMatrix<f64>> {
    ens.require_within(frame.dim())?;
    let n = frame.len();
    let rows = ens.reduce(
        Strategy::default(),
        frame.dim(),
        Vec::new,
        |acc: &mut Vec<f64>, _, omega| {
            acc.extend(frame.vectors().iter().map(|v| dot(v.as_slice(), omega)));
        },
        |total, part| total.extend(part),
    );
    Ok(DMatrix::from_row_slice(ens.count(), n, &rows))
}

/// Empirical covariance `(1/M) Σ X_m X_mᵀ` of the process (mean known to be 0),
/// accumulated without materialising the samples.
pub fn process_covariance(frame: &Frame, ens: &WhiteNoiseEnsemble) -> Result<DMatrix<f64>> {
    ens.require_within(frame.dim())?;
    let n = frame.len();
    let sums = ens.reduce(
        Strategy::default(),
        frame.dim(),
        || (vec![CompensatedSum::default(); n * n], vec![0.0; n]),
        |(acc, x), _, omega| {
            for (xi, v) in x.iter_mut().zip(frame.vectors()) {
                *xi = dot(v.as_slice(), omega);
            }
            for j in 0..n {
                for k in j..n {
                    acc[j * n + k].add(x[j] * x[k]);
                }
            }
        },
        |(total, _), (part, _)| {
            for (t, p) in total.iter_mut().zip(&part) {
                t.merge(p);
            }
        },
    );
    let m = ens.count() as f64;
    Ok(DMatrix::from_fn(n, n, |j, k| {
        let (a, b) = if j <= k { (j, k) } else { (k, j) };
        sums.0[a * n + b].value() / m
    }))
}

/// Centred Gaussian density with covariance `G_n`:
/// `(2π)^{−n/2} (det G_n)^{−1/2} exp(−½ xᵀ G_n⁻¹ x)`.
pub fn joint_density(gram: &GramMatrix, x: &[f64]) -> Result<f64> {
    let n = gram.size();
    if x.len() != n {
        return Err(FrameError::DimensionMismatch { expected: n, got: x.len() });
    }
    let eigenvalues = gram.eigenvalues();
    let (min, max) = (eigenvalues[0], eigenvalues[n - 1]);
    if min <= TOL_RANK_REL * max.max(f64::MIN_POSITIVE) {
        return Err(FrameError::SingularGramian { min_eigenvalue: min });
    }
    let chol = gram
        .entries()
        .clone()
        .cholesky()
        .ok_or(FrameError::SingularGramian { min_eigenvalue: min })?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().take(n).map(|d| 2.0 * d.ln()).sum();
    let z = chol.l().solve_lower_triangular(&nalgebra::DVector::from_column_slice(x)).expect("nonsingular");
    let quad = z.norm_squared();
    let log_norm = -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det;
    Ok((log_norm - 0.5 * quad).exp())
}

/// Monte-Carlo synthesis integral `(1/M) Σ f(ω_m) ω_m`, a vector in R^D.
pub fn synthesis_mc(f_values: &[f64], ens: &WhiteNoiseEnsemble) -> Result<Vector> {
    if f_values.len() != ens.count() {
        return Err(FrameError::LengthMismatch { expected: ens.count(), got: f_values.len() });
    }
    weighted_mean(ens, |m, _| f_values[m])
}

/// `(1/M) Σ g(m, ω_m) ω_m` with compensated, block-ordered summation.
fn weighted_mean<G>(ens: &WhiteNoiseEnsemble, g: G) -> Result<Vector>
where
    G: Fn(usize, &[f64]) -> f64 + Sync + Send,
{
    let d = ens.dim();
    let sums = ens.reduce(
        Strategy::default(),
        d,
        || vec![CompensatedSum::default(); d],
        |acc, m, omega| {
            let weight = g(m, omega);
            for (a, w) in acc.iter_mut().zip(omega) {
                a.add(weight * w);
            }
        },
        |total, part| {
            for (t, p) in total.iter_mut().zip(&part) {
                t.merge(p);
            }
        },
    );
    let m = ens.count() as f64;
    Vector::new(sums.iter().map(|s| s.value() / m).collect())
}

/// Output of [`reconstruct_mc`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Estimate of `x` in R^D.
    pub x_hat: Vector,
    /// `‖x_hat − x‖`, with `x` zero-padded.
    pub error: f64,
}

/// Frame decomposition `x = ∫ ⟨x, ω⟩ ω dμ(ω)` by Monte Carlo.
/// `E‖x_hat − x‖² = (D + 1)‖x‖² / M`.
pub fn reconstruct_mc(x: &Vector, ens: &WhiteNoiseEnsemble) -> Result<Reconstruction> {
    ens.require_within(x.dim())?;
    let x_hat = weighted_mean(ens, |_, omega| dot(x.as_slice(), &omega[..x.dim()]))?;
    let error = x_hat
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &h)| (h - x.as_slice().get(i).copied().unwrap_or(0.0)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(Reconstruction { x_hat, error })
}

/// Projection onto the range of the analysis map, tested on `f = ⟨y, ·⟩`:
/// value `⟨synthesis_mc(f), x_probe⟩`, target `⟨y, x_probe⟩`. The standard
/// error comes from the per-sample products `⟨y, ω⟩⟨x_probe, ω⟩`.
pub fn projection_check(y: &Vector, x_probe: &Vector, ens: &WhiteNoiseEnsemble) -> Result<McEstimate> {
    ens.require_within(y.dim().max(x_probe.dim()))?;
    let synthesized = weighted_mean(ens, |_, omega| dot(y.as_slice(), &omega[..y.dim()]))?;
    let value = dot(x_probe.as_slice(), &synthesized.as_slice()[..x_probe.dim()]);
    let width = y.dim().max(x_probe.dim());
    let stats = ens.moments(Strategy::default(), width, 1, |omega, out| {
        out[0] = dot(y.as_slice(), &omega[..y.dim()]) * dot(x_probe.as_slice(), &omega[..x_probe.dim()]);
    });
    let n = y.dim().min(x_probe.dim());
    let target = dot(&y.as_slice()[..n], &x_probe.as_slice()[..n]);
    Ok(McEstimate::new(value, stats[0].std_error(), stats[0].count(), target))
}
