//! The Markov chain a frame induces on its own index set.
//!
//! From a frame `{φ_n}` every nonzero `x` gets the normaliser
//! `c(x) = Σ |⟨x, φ_n⟩|²` and transition weights `p_{x,y} = |⟨x, y⟩|² / c(x)`.
//! Restricted to the frame vectors these weights form a reversible stochastic
//! matrix. A path starts at an external state `x` (even when `x` equals a frame
//! vector) and then walks on the frame indices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FrameError, Result};
use crate::exec::{self, Strategy};
use crate::frames::Frame;
use crate::rng::{Domain, StreamFamily};
use crate::stats::inverse_cdf;
use crate::vector::{check_dim, dot, Vector};

/// `c(x) = Σ_n ⟨x, φ_n⟩²`.
pub fn normalizer(frame: &Frame, x: &Vector) -> Result<f64> {
    check_dim(frame.dim(), x.dim())?;
    if x.is_zero() {
        return Err(FrameError::ZeroVector);
    }
    Ok(frame.analysis(x)?.iter().map(|c| c * c).sum())
}

/// `p_{x,y} = ⟨x, y⟩² / c(x)`. Not a row of a stochastic matrix unless `y`
/// ranges over the frame itself.
pub fn transition_prob(frame: &Frame, x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(frame.dim(), y.dim())?;
    let c = normalizer(frame, x)?;
    Ok(x.dot(y)?.powi(2) / c)
}

/// Transition row out of an external state `x` onto the frame indices.
pub fn start_row(frame: &Frame, x: &Vector) -> Result<Vec<f64>> {
    let coefficients = frame.analysis(x)?;
    if x.is_zero() {
        return Err(FrameError::ZeroVector);
    }
    let squares: Vec<f64> = coefficients.iter().map(|c| c * c).collect();
    let c: f64 = squares.iter().sum();
    Ok(squares.into_iter().map(|s| s / c).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameChain {
    frame: Frame,
    normalizers: Vec<f64>,
    transitions: DMatrix<f64>,
}

impl FrameChain {
    pub fn new(frame: Frame) -> Result<Self> {
        frame.require_frame()?;
        if let Some(index) = frame.vectors().iter().position(Vector::is_zero) {
            return Err(FrameError::ZeroFrameVector { index });
        }
        let n = frame.len();
        let gram = frame.gram();
        let g = gram.entries();
        let normalizers: Vec<f64> = (0..n).map(|j| (0..n).map(|k| g[(j, k)].powi(2)).sum()).collect();
        let transitions = DMatrix::from_fn(n, n, |j, k| g[(j, k)].powi(2) / normalizers[j]);
        Ok(Self { frame, normalizers, transitions })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// `c(φ_j)` for every frame index.
    pub fn normalizers(&self) -> &[f64] {
        &self.normalizers
    }

    pub fn transitions(&self) -> &DMatrix<f64> {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    /// Product of transition weights along `x → φ_{n_1} → … → φ_{n_k}`.
    pub fn path_probability(&self, x: &Vector, indices: &[usize]) -> Result<f64> {
        let (&first, rest) = indices
            .split_first()
            .ok_or(FrameError::Empty("path needs at least one step"))?;
        let n = self.len();
        if let Some(&index) = indices.iter().find(|&&i| i >= n) {
            return Err(FrameError::IndexOutOfRange { index, len: n });
        }
        let c = normalizer(&self.frame, x)?;
        let mut probability = dot(x.as_slice(), self.frame.vectors()[first].as_slice()).powi(2) / c;
        let mut prev = first;
        for &next in rest {
            probability *= self.transitions[(prev, next)];
            prev = next;
        }
        Ok(probability)
    }

    /// `m` independent length-`k` paths from `x`. Path `i` uses only the stream
    /// addressed by `(seed, i)`.
    pub fn sample_paths(&self, x: &Vector, k: usize, m: usize, seed: u64) -> Result<Vec<PathSample>> {
        self.sample_paths_with(Strategy::default(), x, k, m, seed)
    }

    pub fn sample_paths_with(
        &self,
        strategy: Strategy,
        x: &Vector,
        k: usize,
        m: usize,
        seed: u64,
    ) -> Result<Vec<PathSample>> {
        if k == 0 || m == 0 {
            return Err(FrameError::InvalidArgument("horizon and path count must be positive".into()));
        }
        let first_row = start_row(&self.frame, x)?;
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|j| self.transitions.row(j).iter().copied().collect())
            .collect();
        let family = StreamFamily::new(seed, Domain::MarkovPaths);
        Ok(exec::map_indices(strategy, m, |path_index| {
            let mut stream = family.stream(path_index as u64);
            let mut indices = Vec::with_capacity(k);
            let mut state = inverse_cdf(&first_row, stream.next_uniform());
            indices.push(state);
            let mut probability = first_row[state];
            for _ in 1..k {
                let next = inverse_cdf(&rows[state], stream.next_uniform());
                probability *= rows[state][next];
                indices.push(next);
                state = next;
            }
            PathSample { start: x.clone(), indices, probability }
        }))
    }

    pub fn diagnostics(&self) -> ChainDiagnostics {
        let n = self.len();
        let p = &self.transitions;
        let row_sum_residual = (0..n)
            .map(|j| (p.row(j).sum() - 1.0).abs())
            .fold(0.0, f64::max);
        let mut reversibility_residual = 0.0_f64;
        let mut bound_residual = f64::NEG_INFINITY;
        let alpha = self.frame.lower_bound();
        for j in 0..n {
            for k in 0..n {
                let a = self.normalizers[j] * p[(j, k)];
                let b = self.normalizers[k] * p[(k, j)];
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    reversibility_residual = reversibility_residual.max((a - b).abs() / scale);
                }
                let bound = self.frame.vectors()[k].norm_sq() / alpha;
                bound_residual = bound_residual.max(p[(j, k)] - bound);
            }
        }
        ChainDiagnostics { row_sum_residual, reversibility_residual, bound_residual }
    }
}

/// Structural residuals of a [`FrameChain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// `max_j |Σ_k P_jk − 1|`.
    pub row_sum_residual: f64,
    /// `max_{j,k} |c_j P_jk − c_k P_kj| / max(|c_j P_jk|, |c_k P_kj|)`.
    pub reversibility_residual: f64,
    /// `max_{j,k} (P_jk − ‖φ_k‖²/α)`; nonpositive when the bound holds.
    pub bound_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub start: Vector,
    /// Zero-based frame indices visited after the start state.
    pub indices: Vec<usize>,
    pub probability: f64,
}
