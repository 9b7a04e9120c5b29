//! Accumulators and verification records for Monte-Carlo estimates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Streaming mean and variance (Welford), mergeable in a fixed order (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n_a = self.count as f64;
        let n_b = other.count as f64;
        let n = n_a + n_b;
        let delta = other.mean - self.mean;
        self.mean += delta * (n_b / n);
        self.m2 += other.m2 + delta * delta * (n_a * n_b / n);
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// A Monte-Carlo estimate checked against a closed-form target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub sample_count: u64,
    pub target: f64,
    /// `(value - target) / std_error`; `None` when the standard error is zero
    /// and the value misses the target.
    pub z_score: Option<f64>,
}

impl McEstimate {
    pub fn new(value: f64, std_error: f64, sample_count: u64, target: f64) -> Self {
        let z_score = if std_error > 0.0 {
            Some((value - target) / std_error)
        } else if (value - target).abs() <= 1e-12 * target.abs().max(1.0) {
            Some(0.0)
        } else {
            None
        };
        Self { value, std_error, sample_count, target, z_score }
    }

    pub fn from_moments(moments: &Moments, target: f64) -> Self {
        Self::new(moments.mean(), moments.std_error(), moments.count(), target)
    }

    /// True when `|z| ≤ z_max`.
    pub fn passes(&self, z_max: f64) -> bool {
        self.z_score.is_some_and(|z| z.abs() <= z_max)
    }
}

/// Real and imaginary parts of a complex-valued estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMcEstimate {
    pub re: McEstimate,
    pub im: McEstimate,
}

impl ComplexMcEstimate {
    pub fn passes(&self, z_max: f64) -> bool {
        self.re.passes(z_max) && self.im.passes(z_max)
    }
}

/// Pearson chi-square goodness-of-fit result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson test of observed counts against cell probabilities.
///
/// Cells with zero probability are dropped; any observation in such a cell
/// yields p = 0.
pub fn chi_square_test(observed: &[u64], probabilities: &[f64]) -> ChiSquareTest {
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut statistic = 0.0;
    let mut cells = 0usize;
    let mut impossible = false;
    for (&o, &p) in observed.iter().zip(probabilities) {
        if p <= 0.0 {
            impossible |= o > 0;
            continue;
        }
        cells += 1;
        let e = n * p;
        statistic += (o as f64 - e).powi(2) / e;
    }
    let degrees_of_freedom = cells.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if degrees_of_freedom == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(degrees_of_freedom as f64).expect("positive dof");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareTest {
        statistic: if impossible { f64::INFINITY } else { statistic },
        degrees_of_freedom,
        p_value,
    }
}

/// Inverse-CDF selection: the smallest index whose running cumulative weight
/// exceeds `u * total`. Zero-weight entries are never selected.
pub fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let threshold = u * total;
    let mut cumulative = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cumulative += w;
        if w > 0.0 && threshold < cumulative {
            return i;
        }
    }
    // Round-off can leave the threshold at the top; fall back to the last live entry.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Total-variation distance `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn merged_moments_match_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut merged = Moments::default();
        for chunk in xs.chunks(77) {
            let mut part = Moments::default();
            chunk.iter().for_each(|&x| part.push(x));
            merged.merge(&part);
        }
        assert!((whole.mean() - merged.mean()).abs() < 1e-12);
        assert!((whole.variance() - merged.variance()).abs() < 1e-10);
    }

    #[test]
    fn zero_error_estimates() {
        assert_eq!(McEstimate::new(1.0, 0.0, 5, 1.0).z_score, Some(0.0));
        assert_eq!(McEstimate::new(1.0, 0.0, 5, 2.0).z_score, None);
        assert!(!McEstimate::new(1.0, 0.0, 5, 2.0).passes(4.0));
    }

    #[test]
    fn inverse_cdf_ties_and_zeros() {
        let w = [0.25, 0.0, 0.25, 0.5];
        assert_eq!(inverse_cdf(&w, 0.0), 0);
        assert_eq!(inverse_cdf(&w, 0.25), 2);
        assert_eq!(inverse_cdf(&w, 0.49), 2);
        assert_eq!(inverse_cdf(&w, 0.5), 3);
        assert_eq!(inverse_cdf(&w, 1.0), 3);
        assert_eq!(inverse_cdf(&[0.0, 1.0, 0.0], 0.999_999), 1);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let t = chi_square_test(&[25, 25, 50], &[0.25, 0.25, 0.5]);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.degrees_of_freedom, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
        let t = chi_square_test(&[1, 0], &[0.0, 1.0]);
        assert_eq!(t.p_value, 0.0);
    }
}
