//! Determinantal measures on a finite index set.
//!
//! A symmetric kernel `K` with spectrum in `[0, 1]` defines a random subset
//! `Φ` with `P(Φ ⊇ S) = det(K_S)`. From a frame we take `K = G / β`: the
//! Gramian satisfies `0 ≼ G ≼ β I`, so the scaled kernel is admissible.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FrameError, Result};
use crate::exec::{self, Strategy};
use crate::frames::{Frame, GramMatrix};
use crate::linalg;
use crate::rng::{Domain, StreamFamily};
use crate::stats::inverse_cdf;

/// Largest ground set the subset enumeration accepts.
pub const BRUTEFORCE_LIMIT: usize = 20;
const SPECTRUM_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelDoc", into = "KernelDoc")]
pub struct DppKernel {
    k: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// JSON form `{ "k": [[...], ...] }`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    pub k: Vec<Vec<f64>>,
}

impl TryFrom<KernelDoc> for DppKernel {
    type Error = FrameError;

    fn try_from(doc: KernelDoc) -> Result<Self> {
        let n = doc.k.len();
        if let Some(row) = doc.k.iter().find(|r| r.len() != n) {
            return Err(FrameError::DimensionMismatch { expected: n, got: row.len() });
        }
        let flat: Vec<f64> = doc.k.into_iter().flatten().collect();
        DppKernel::new(DMatrix::from_row_slice(n, n, &flat))
    }
}

impl From<DppKernel> for KernelDoc {
    fn from(kernel: DppKernel) -> Self {
        let n = kernel.size();
        KernelDoc { k: (0..n).map(|i| kernel.k.row(i).iter().copied().collect()).collect() }
    }
}

impl DppKernel {
    /// Validates symmetry and that the spectrum lies in `[0, 1]` up to 1e-10.
    /// An unnormalised Gramian is accepted only if it already satisfies this.
    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(FrameError::DimensionMismatch { expected: k.nrows(), got: k.ncols() });
        }
        if let Some(index) = k.iter().position(|v| !v.is_finite()) {
            return Err(FrameError::NonFinite { index });
        }
        let asym = linalg::asymmetry(&k);
        if asym > SYMMETRY_TOL {
            return Err(FrameError::InvalidKernel(format!("asymmetry {asym:e}")));
        }
        let (eigenvalues, eigenvectors) = linalg::sym_eigen_sorted(&k);
        if let (Some(&lo), Some(&hi)) = (eigenvalues.first(), eigenvalues.last()) {
            if lo < -SPECTRUM_TOL || hi > 1.0 + SPECTRUM_TOL {
                return Err(FrameError::InvalidKernel(format!("spectrum [{lo}, {hi}] outside [0, 1]")));
            }
        }
        Ok(Self { k, eigenvalues, eigenvectors })
    }

    /// `K = G / β` for the frame's Gramian and upper bound.
    pub fn from_frame(frame: &Frame) -> Result<Self> {
        let beta = frame.upper_bound();
        if beta <= 0.0 {
            return Err(FrameError::InvalidKernel("frame has zero upper bound".into()));
        }
        Self::new(frame.gram().entries() / beta)
    }

    /// Strict mode: the Gramian itself as the kernel.
    pub fn from_gram_strict(gram: &GramMatrix) -> Result<Self> {
        Self::new(gram.entries().clone())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// Spectrum, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn size(&self) -> usize {
        self.k.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.k.trace()
    }

    /// `P(Φ ⊇ S) = det(K_S)`; the empty set has probability 1.
    pub fn inclusion_probability(&self, subset: &PointConfiguration) -> Result<f64> {
        if let Some(&index) = subset.indices().iter().find(|&&i| i >= self.size()) {
            return Err(FrameError::IndexOutOfRange { index, len: self.size() });
        }
        Ok(linalg::det(&linalg::principal_submatrix(&self.k, subset.indices())))
    }

    /// `P(Φ = S)` for every subset, indexed by bitmask (bit `i` set ⇔ `i ∈ S`),
    /// by Möbius inversion of the minors `det(K_T)`. Values are clipped at zero.
    pub fn subset_distribution_bruteforce(&self) -> Result<Vec<f64>> {
        let n = self.size();
        if n > BRUTEFORCE_LIMIT {
            return Err(FrameError::TooLarge { n, limit: BRUTEFORCE_LIMIT });
        }
        let mut table: Vec<f64> = (0..1usize << n)
            .map(|mask| linalg::det(&linalg::principal_submatrix(&self.k, &mask_indices(mask, n))))
            .collect();
        // Superset Möbius transform: f(S) ← Σ_{T ⊇ S} (−1)^{|T∖S|} f(T).
        for bit in 0..n {
            let b = 1usize << bit;
            for mask in 0..table.len() {
                if mask & b == 0 {
                    table[mask] -= table[mask | b];
                }
            }
        }
        for p in &mut table {
            *p = p.max(0.0);
        }
        Ok(table)
    }

    /// Spectrum clamped into `[0, 1]`, snapping values within 1e-10 of an end.
    fn selection_probabilities(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                if l <= SPECTRUM_TOL {
                    0.0
                } else if l >= 1.0 - SPECTRUM_TOL {
                    1.0
                } else {
                    l
                }
            })
            .collect()
    }

    /// `m` exact draws by the spectral method; draw `i` uses only the stream
    /// addressed by `(seed, i)`.
    pub fn sample(&self, m: usize, seed: u64) -> Result<Vec<PointConfiguration>> {
        self.sample_with(Strategy::default(), m, seed)
    }

    pub fn sample_with(&self, strategy: Strategy, m: usize, seed: u64) -> Result<Vec<PointConfiguration>> {
        if m == 0 {
            return Err(FrameError::InvalidArgument("sample count must be positive".into()));
        }
        let family = StreamFamily::new(seed, Domain::DppDraws);
        let probabilities = self.selection_probabilities();
        Ok(exec::map_indices(strategy, m, |draw| {
            let mut stream = family.stream(draw as u64);
            let mut columns: Vec<DVector<f64>> = probabilities
                .iter()
                .enumerate()
                .filter(|&(_, &p)| stream.next_uniform() < p)
                .map(|(i, _)| self.eigenvectors.column(i).into_owned())
                .collect();
            let n = self.size();
            let mut chosen = Vec::with_capacity(columns.len());
            while !columns.is_empty() {
                let weights: Vec<f64> = (0..n)
                    .map(|i| columns.iter().map(|c| c[i] * c[i]).sum())
                    .collect();
                let item = inverse_cdf(&weights, stream.next_uniform());
                chosen.push(item);
                let pivot_col = (0..columns.len())
                    .max_by(|&a, &b| columns[a][item].abs().total_cmp(&columns[b][item].abs()))
                    .expect("nonempty");
                let pivot = columns.remove(pivot_col);
                for c in &mut columns {
                    let factor = c[item] / pivot[item];
                    c.axpy(-factor, &pivot, 1.0);
                }
                orthonormalize(&mut columns);
            }
            chosen.sort_unstable();
            PointConfiguration { indices: chosen }
        }))
    }
}

/// Modified Gram–Schmidt in place; numerically dependent columns are dropped.
fn orthonormalize(columns: &mut Vec<DVector<f64>>) {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(columns.len());
    for mut c in columns.drain(..) {
        for b in &basis {
            let proj = b.dot(&c);
            c.axpy(-proj, b, 1.0);
        }
        let norm = c.norm();
        if norm > 1e-12 {
            basis.push(c / norm);
        }
    }
    *columns = basis;
}

fn mask_indices(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// A finite subset of zero-based indices, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointConfiguration {
    indices: Vec<usize>,
}

impl PointConfiguration {
    pub fn new(indices: Vec<usize>, size: usize) -> Result<Self> {
        if let Some(&index) = indices.iter().find(|&&i| i >= size) {
            return Err(FrameError::IndexOutOfRange { index, len: size });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FrameError::InvalidArgument("indices must be strictly increasing".into()));
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    pub fn from_mask(mask: usize, size: usize) -> Self {
        Self { indices: mask_indices(mask, size) }
    }

    pub fn mask(&self) -> usize {
        self.indices.iter().fold(0, |m, &i| m | (1 << i))
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}
