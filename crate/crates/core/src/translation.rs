//! Translated white-noise measures and the Karhunen–Loève expansion.
//!
//! Translating by `x` has density `E(x)(ω) = exp(⟨x, ω⟩ − ½‖x‖²)` against the
//! white-noise measure. These exponential functionals obey the cocycle rule
//! `E(x₁) E(x₂) = e^{⟨x₁, x₂⟩} E(x₁ + x₂)`, and the translated second moment of
//! `⟨y, ·⟩` is `⟨x, y⟩² + ‖y‖²`. For a Parseval frame the analysis map expands
//! as `Σ ⟨x, φ_n⟩ Z_n` with `Z_n` i.i.d. standard normal; at truncation `Z_n` is
//! the `n`-th white-noise coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{FrameError, Result};
use crate::exec::Strategy;
use crate::frames::{Frame, TOL_INEQ};
use crate::gaussian::{pairing, WhiteNoiseEnsemble};
use crate::stats::McEstimate;
use crate::vector::{dot, Vector};

/// Largest exponent whose exponential is finite in f64.
const MAX_EXPONENT: f64 = 709.0;

/// `‖x‖²` above which importance-sampling bands become uninformative at M = 10⁶.
pub const WIDE_TRANSLATION_NORM_SQ: f64 = 4.0;

fn exp_checked(exponent: f64) -> Result<f64> {
    if exponent > MAX_EXPONENT {
        Err(FrameError::Overflow(exponent))
    } else {
        Ok(exponent.exp())
    }
}

/// Radon–Nikodym density of the translated measure, `e^{⟨x, ω⟩ − ‖x‖²/2}`.
pub fn rn_density(x: &Vector, omega: &[f64]) -> Result<f64> {
    exp_checked(pairing(x, omega)? - 0.5 * x.norm_sq())
}

/// The exponential functional of `x` tabulated over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFunctional {
    pub x: Vector,
    pub values: Vec<f64>,
}

impl ExpFunctional {
    pub fn new(x: &Vector, ens: &WhiteNoiseEnsemble) -> Result<Self> {
        let values = (0..ens.count())
            .map(|m| rn_density(x, &ens.sample(m)[..]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { x: x.clone(), values })
    }
}

fn padded_sum(a: &Vector, b: &Vector) -> Vector {
    let n = a.dim().max(b.dim());
    let coords = (0..n)
        .map(|i| a.as_slice().get(i).copied().unwrap_or(0.0) + b.as_slice().get(i).copied().unwrap_or(0.0))
        .collect();
    Vector::new(coords).expect("finite")
}

fn padded_dot(a: &Vector, b: &Vector) -> f64 {
    let n = a.dim().min(b.dim());
    dot(&a.as_slice()[..n], &b.as_slice()[..n])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CocycleCheck {
    /// `E(x₁)(ω) E(x₂)(ω)`.
    pub lhs: f64,
    /// `e^{⟨x₁, x₂⟩} E(x₁ + x₂)(ω)`.
    pub rhs: f64,
}

impl CocycleCheck {
    pub fn relative_residual(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs).abs() / scale
        }
    }
}

/// Evaluates both sides of the cocycle identity at one `ω`. Expanding
/// `‖x₁ + x₂‖² = ‖x₁‖² + ‖x₂‖² + 2⟨x₁, x₂⟩` fixes the correction factor as
/// `e^{+⟨x₁, x₂⟩}`.
pub fn cocycle_check(x1: &Vector, x2: &Vector, omega: &[f64]) -> Result<CocycleCheck> {
    let lhs = rn_density(x1, omega)? * rn_density(x2, omega)?;
    let rhs = exp_checked(padded_dot(x1, x2))? * rn_density(&padded_sum(x1, x2), omega)?;
    Ok(CocycleCheck { lhs, rhs })
}

fn require_within(ens: &WhiteNoiseEnsemble, dim: usize) -> Result<()> {
    if dim > ens.dim() {
        Err(FrameError::DimensionExceedsTruncation { dim, truncation: ens.dim() })
    } else {
        Ok(())
    }
}

/// Ensemble mean of the density, target 1. The single-sample variance is
/// `e^{‖x‖²} − 1`.
pub fn rn_density_mean_check(x: &Vector, ens: &WhiteNoiseEnsemble) -> Result<McEstimate> {
    require_within(ens, x.dim())?;
    exp_checked(x.norm_sq())?;
    let half = 0.5 * x.norm_sq();
    let stats = ens.moments(Strategy::default(), x.dim(), 1, |omega, out| {
        out[0] = (dot(x.as_slice(), omega) - half).exp();
    });
    Ok(McEstimate::from_moments(&stats[0], 1.0))
}

/// `∫ E(x)(ω) ⟨y, ω⟩² dμ(ω) = ⟨x, y⟩² + ‖y‖²`.
pub fn translated_second_moment(x: &Vector, y: &Vector, ens: &WhiteNoiseEnsemble) -> Result<McEstimate> {
    let width = x.dim().max(y.dim());
    require_within(ens, width)?;
    let half = 0.5 * x.norm_sq();
    let stats = ens.moments(Strategy::default(), width, 1, |omega, out| {
        let density = (dot(x.as_slice(), &omega[..x.dim()]) - half).exp();
        out[0] = density * dot(y.as_slice(), &omega[..y.dim()]).powi(2);
    });
    let target = padded_dot(x, y).powi(2) + y.norm_sq();
    Ok(McEstimate::from_moments(&stats[0], target))
}

/// One test function in [`change_of_variables_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// `g(ω) = ⟨y, ω⟩`.
    Linear,
    /// `g(ω) = ⟨y, ω⟩²`.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfVariables {
    pub function: TestFunction,
    /// `(1/M) Σ E(x)(ω_m) g(ω_m)`.
    pub weighted: McEstimate,
    /// `(1/M) Σ g(ω_m + x)`.
    pub shifted: McEstimate,
    /// Difference of the two in units of `√(se₁² + se₂²)`.
    pub z_difference: f64,
}

impl ChangeOfVariables {
    pub fn passes(&self, z_max: f64) -> bool {
        self.z_difference.abs() <= z_max
    }
}

/// `∫ g dμ^x = ∫ g(· + x) dμ` for linear and quadratic `g`, each side estimated
/// on the same ensemble. Targets are `⟨x, y⟩` and `⟨x, y⟩² + ‖y‖²`.
pub fn change_of_variables_check(x: &Vector, y: &Vector, ens: &WhiteNoiseEnsemble) -> Result<Vec<ChangeOfVariables>> {
    let width = x.dim().max(y.dim());
    require_within(ens, width)?;
    let half = 0.5 * x.norm_sq();
    let shift = padded_dot(x, y);
    let stats = ens.moments(Strategy::default(), width, 4, |omega, out| {
        let density = (dot(x.as_slice(), &omega[..x.dim()]) - half).exp();
        let g = dot(y.as_slice(), &omega[..y.dim()]);
        let g_shifted = g + shift;
        out[0] = density * g;
        out[1] = g_shifted;
        out[2] = density * g * g;
        out[3] = g_shifted * g_shifted;
    });
    let targets = [shift, shift * shift + y.norm_sq()];
    Ok([TestFunction::Linear, TestFunction::Quadratic]
        .into_iter()
        .enumerate()
        .map(|(i, function)| {
            let weighted = McEstimate::from_moments(&stats[2 * i], targets[i]);
            let shifted = McEstimate::from_moments(&stats[2 * i + 1], targets[i]);
            let se = (weighted.std_error.powi(2) + shifted.std_error.powi(2)).sqrt();
            let diff = weighted.value - shifted.value;
            let z_difference = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
            ChangeOfVariables { function, weighted, shifted, z_difference }
        })
        .collect())
}

fn require_parseval(frame: &Frame, ens: &WhiteNoiseEnsemble) -> Result<()> {
    if !frame.is_parseval(TOL_INEQ) {
        return Err(FrameError::NotParseval { lower: frame.lower_bound(), upper: frame.upper_bound() });
    }
    require_within(ens, frame.len())
}

/// Per-sample values of `(Tx)(ω_m) = Σ_n ⟨x, φ_n⟩ ω_{m,n}` for a Parseval frame.
pub fn kl_expand(frame: &Frame, x: &Vector, ens: &WhiteNoiseEnsemble) -> Result<Vec<f64>> {
    require_parseval(frame, ens)?;
    let coefficients = frame.analysis(x)?;
    let n = coefficients.len();
    Ok(ens.reduce(
        Strategy::default(),
        n,
        Vec::new,
        |acc: &mut Vec<f64>, _, omega| acc.push(dot(&coefficients, omega)),
        |total, part| total.extend(part),
    ))
}

/// Second moment of the expansion against `Σ_n ⟨x, φ_n⟩²`, for several `x`
/// in one pass.
pub fn kl_variance_checks(frame: &Frame, xs: &[&Vector], ens: &WhiteNoiseEnsemble) -> Result<Vec<McEstimate>> {
    require_parseval(frame, ens)?;
    let coefficients = xs.iter().map(|x| frame.analysis(x)).collect::<Result<Vec<_>>>()?;
    let n = frame.len();
    let stats = ens.moments(Strategy::default(), n, xs.len(), |omega, out| {
        for (o, c) in out.iter_mut().zip(&coefficients) {
            *o = dot(c, omega).powi(2);
        }
    });
    Ok(stats
        .iter()
        .zip(&coefficients)
        .map(|(s, c)| McEstimate::from_moments(s, dot(c, c)))
        .collect())
}

pub fn kl_variance_check(frame: &Frame, x: &Vector, ens: &WhiteNoiseEnsemble) -> Result<McEstimate> {
    Ok(kl_variance_checks(frame, &[x], ens)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn density_examples() {
        let omega = [0.3, -1.2, 2.0];
        assert_eq!(rn_density(&Vector::zeros(3), &omega).unwrap(), 1.0);
        // ⟨x, ω⟩ = ‖x‖²/2 for x = (1, 0) and ω₁ = 1/2.
        assert_eq!(rn_density(&v(&[1.0, 0.0]), &[0.5, 7.0]).unwrap(), 1.0);
        assert!(matches!(rn_density(&v(&[1000.0]), &[1000.0]), Err(FrameError::Overflow(_))));
        assert!(matches!(rn_density(&v(&[1.0; 4]), &omega), Err(FrameError::DimensionExceedsTruncation { .. })));
    }

    #[test]
    fn density_mean_is_one() {
        let ens = WhiteNoiseEnsemble::new(4, 50_000, 6).unwrap();
        let est = rn_density_mean_check(&v(&[0.6, 0.0, 0.8]), &ens).unwrap();
        assert!(est.passes(4.0), "{est:?}");
        let table = ExpFunctional::new(&v(&[0.6, 0.0, 0.8]), &WhiteNoiseEnsemble::new(4, 100, 6).unwrap()).unwrap();
        assert!(table.values.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn cocycle_examples() {
        let omega = [0.7, -0.4, 1.1];
        let x2 = v(&[0.2, 0.9, -0.3]);
        let c = cocycle_check(&Vector::zeros(3), &x2, &omega).unwrap();
        assert_relative_eq!(c.lhs, rn_density(&x2, &omega).unwrap(), max_relative = 1e-15);
        assert_relative_eq!(c.lhs, c.rhs, max_relative = 1e-12);

        let (a, b) = (v(&[1.0, 0.0]), v(&[0.0, 2.0]));
        let c = cocycle_check(&a, &b, &omega).unwrap();
        assert_relative_eq!(c.rhs, rn_density(&v(&[1.0, 2.0]), &omega).unwrap(), max_relative = 1e-15);
        assert_relative_eq!(c.lhs, c.rhs, max_relative = 1e-12);

        let x = v(&[0.5, -0.25, 0.1]);
        let c = cocycle_check(&x, &x, &omega).unwrap();
        let t = dot(x.as_slice(), &omega);
        let closed = (2.0 * t - x.norm_sq()).exp();
        assert_relative_eq!(c.lhs, closed, max_relative = 1e-12);
        assert_relative_eq!(c.rhs, closed, max_relative = 1e-12);
    }

    #[test]
    fn translated_moment_targets() {
        let ens = WhiteNoiseEnsemble::new(4, 50_000, 3).unwrap();
        let y = v(&[0.0, 0.6, 0.8]);
        let est = translated_second_moment(&Vector::zeros(3), &y, &ens).unwrap();
        assert_relative_eq!(est.target, 1.0, epsilon = 1e-15);
        let est = translated_second_moment(&v(&[1.0, 0.0, 0.0]), &y, &ens).unwrap();
        assert_relative_eq!(est.target, 1.0, epsilon = 1e-15);
        let est = translated_second_moment(&y, &y, &ens).unwrap();
        assert_relative_eq!(est.target, 2.0, epsilon = 1e-15);
        assert!(est.passes(4.0), "{est:?}");
    }

    #[test]
    fn change_of_variables_agrees() {
        let ens = WhiteNoiseEnsemble::new(4, 50_000, 10).unwrap();
        let checks = change_of_variables_check(&v(&[0.6, 0.8]), &v(&[0.5, -0.5, 0.7]), &ens).unwrap();
        assert_eq!(checks.len(), 2);
        assert!(checks.iter().all(|c| c.passes(4.0)), "{checks:?}");
    }

    #[test]
    fn kl_examples() {
        let ens = WhiteNoiseEnsemble::new(4, 1_000, 2).unwrap();
        let onb = Frame::orthonormal_basis(2);
        let values = kl_expand(&onb, &v(&[1.0, 0.0]), &ens).unwrap();
        for (m, value) in values.iter().enumerate().take(20) {
            assert_eq!(*value, ens.sample(m)[0]);
        }
        assert!(kl_expand(&onb, &Vector::zeros(2), &ens).unwrap().iter().all(|&t| t == 0.0));

        let mb = Frame::mercedes_benz();
        assert!(matches!(kl_expand(&mb, &v(&[1.0, 0.0]), &ens), Err(FrameError::NotParseval { .. })));
        let parseval = mb.parseval_rescale().unwrap();
        let big = WhiteNoiseEnsemble::new(4, 50_000, 2).unwrap();
        let est = kl_variance_check(&parseval, &v(&[0.6, -0.8]), &big).unwrap();
        assert_relative_eq!(est.target, 1.0, epsilon = 1e-12);
        assert!(est.passes(4.0));
        let small = WhiteNoiseEnsemble::new(2, 10, 2).unwrap();
        assert!(matches!(kl_expand(&parseval, &v(&[1.0, 0.0]), &small), Err(FrameError::DimensionExceedsTruncation { .. })));
    }
}
