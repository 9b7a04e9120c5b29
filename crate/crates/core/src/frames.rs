//! Finite frames in R^N: frame operator, analysis and synthesis, Gramian,
//! optimal frame bounds and the Riesz-type upper estimate on coefficient
//! sequences.
//!
//! The optimal bounds of a finite system are the extreme eigenvalues of the
//! frame operator `S = Σ φ φᵀ`. A system whose lower bound vanishes (the vectors
//! do not span R^N) is still representable; operations that need the lower
//! bound refuse it with [`FrameError::NotAFrame`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FrameError, Result};
use crate::linalg;
use crate::vector::{check_dim, dot, Vector};

/// Absolute tolerance on eigenvalues for positive semidefiniteness.
pub const TOL_PSD: f64 = 1e-10;
/// Slack allowed in frame and Riesz inequalities.
pub const TOL_INEQ: f64 = 1e-10;
/// Relative (to the upper bound) threshold below which a lower bound counts as zero.
pub const TOL_RANK_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameDoc", into = "FrameDoc")]
pub struct Frame {
    vectors: Vec<Vector>,
    dim: usize,
    operator: DMatrix<f64>,
    lower: f64,
    upper: f64,
}

/// JSON form `{ "dim": N, "vectors": [[...], ...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDoc {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl TryFrom<FrameDoc> for Frame {
    type Error = FrameError;

    fn try_from(doc: FrameDoc) -> Result<Self> {
        let vectors = doc
            .vectors
            .into_iter()
            .map(Vector::new)
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = vectors.first() {
            check_dim(doc.dim, first.dim())?;
        }
        Frame::new(vectors)
    }
}

impl From<Frame> for FrameDoc {
    fn from(frame: Frame) -> Self {
        FrameDoc {
            dim: frame.dim,
            vectors: frame.vectors.into_iter().map(Vector::into_inner).collect(),
        }
    }
}

impl Frame {
    /// Builds a frame and computes its operator and optimal bounds.
    pub fn new(vectors: Vec<Vector>) -> Result<Self> {
        let first = vectors.first().ok_or(FrameError::Empty("frame has no vectors"))?;
        let dim = first.dim();
        for v in &vectors {
            check_dim(dim, v.dim())?;
        }
        let mut operator = DMatrix::<f64>::zeros(dim, dim);
        for v in &vectors {
            let c = v.as_slice();
            for i in 0..dim {
                for j in 0..dim {
                    operator[(i, j)] += c[i] * c[j];
                }
            }
        }
        let eigenvalues = linalg::sym_eigenvalues(&operator);
        // Clamp round-off below zero: S is PSD by construction.
        let lower = eigenvalues[0].max(0.0);
        let upper = eigenvalues[dim - 1].max(0.0);
        Ok(Self { vectors, dim, operator, lower, upper })
    }

    /// The standard orthonormal basis of R^dim.
    pub fn orthonormal_basis(dim: usize) -> Self {
        Self::new((0..dim).map(|i| Vector::basis(dim, i)).collect()).expect("valid basis")
    }

    /// The three-vector "Mercedes-Benz" tight frame in R², with bounds 3/2.
    pub fn mercedes_benz() -> Self {
        let h = 3.0_f64.sqrt() / 2.0;
        let vectors = [[1.0, 0.0], [-0.5, h], [-0.5, -h]]
            .into_iter()
            .map(|c| Vector::new(c.to_vec()).expect("finite"))
            .collect();
        Self::new(vectors).expect("valid frame")
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn vector(&self, index: usize) -> Result<&Vector> {
        self.vectors
            .get(index)
            .ok_or(FrameError::IndexOutOfRange { index, len: self.len() })
    }

    /// Number of frame vectors.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Ambient dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn rank_tolerance(&self) -> f64 {
        TOL_RANK_REL * self.upper
    }

    /// True when the vectors span R^N.
    pub fn is_frame(&self) -> bool {
        self.upper > 0.0 && self.lower > self.rank_tolerance()
    }

    pub fn is_tight(&self, rel_tol: f64) -> bool {
        self.is_frame() && (self.upper - self.lower) <= rel_tol * self.upper
    }

    pub fn is_parseval(&self, tol: f64) -> bool {
        (self.lower - 1.0).abs() <= tol && (self.upper - 1.0).abs() <= tol
    }

    pub(crate) fn require_frame(&self) -> Result<()> {
        if self.is_frame() {
            Ok(())
        } else {
            Err(FrameError::NotAFrame { lower: self.lower, tol: self.rank_tolerance() })
        }
    }

    /// Analysis operator: `x ↦ (⟨x, φ_n⟩)_n`.
    pub fn analysis(&self, x: &Vector) -> Result<Vec<f64>> {
        check_dim(self.dim, x.dim())?;
        Ok(self.vectors.iter().map(|v| dot(v.as_slice(), x.as_slice())).collect())
    }

    /// Synthesis operator: `c ↦ Σ c_n φ_n`.
    pub fn synthesis(&self, coefficients: &[f64]) -> Result<Vector> {
        check_dim(self.len(), coefficients.len())?;
        let mut out = vec![0.0; self.dim];
        for (c, v) in coefficients.iter().zip(&self.vectors) {
            for (o, vi) in out.iter_mut().zip(v.as_slice()) {
                *o += c * vi;
            }
        }
        Vector::new(out)
    }

    /// Gramian `G_jk = ⟨φ_j, φ_k⟩`.
    pub fn gram(&self) -> GramMatrix {
        let n = self.len();
        let entries = DMatrix::from_fn(n, n, |j, k| {
            dot(self.vectors[j].as_slice(), self.vectors[k].as_slice())
        });
        GramMatrix { entries }
    }

    /// Checks `cᵀGc ≤ β‖c‖²` for a coefficient sequence.
    pub fn verify_riesz_upper(&self, coefficients: &[f64]) -> Result<RieszCheck> {
        check_dim(self.len(), coefficients.len())?;
        // cᵀGc = ‖Σ c_n φ_n‖², which avoids forming G.
        let lhs = self.synthesis(coefficients)?.norm_sq();
        let bound = self.upper * dot(coefficients, coefficients);
        Ok(RieszCheck { lhs, bound, ok: lhs <= bound + TOL_INEQ })
    }

    /// Canonical dual frame `{S⁻¹ φ_n}`.
    pub fn dual_frame(&self) -> Result<Frame> {
        self.require_frame()?;
        let chol = self
            .operator
            .clone()
            .cholesky()
            .ok_or(FrameError::NotAFrame { lower: self.lower, tol: self.rank_tolerance() })?;
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                let solved = chol.solve(&nalgebra::DVector::from_column_slice(v.as_slice()));
                Vector::new(solved.iter().copied().collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Frame::new(vectors)
    }

    /// Rescales a tight frame by `1/√β`, producing a Parseval frame.
    pub fn parseval_rescale(&self) -> Result<Frame> {
        if !self.is_tight(TOL_INEQ) {
            return Err(FrameError::NotTight { lower: self.lower, upper: self.upper });
        }
        let factor = 1.0 / self.upper.sqrt();
        Frame::new(self.vectors.iter().map(|v| v.scale(factor)).collect())
    }
}

/// Outcome of [`Frame::verify_riesz_upper`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszCheck {
    pub lhs: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Symmetric positive semidefinite matrix of pairwise inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    /// Wraps a matrix after checking symmetry and positive semidefiniteness.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(FrameError::DimensionMismatch { expected: entries.nrows(), got: entries.ncols() });
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(FrameError::NonFinite { index });
        }
        let scale = entries.amax().max(1.0);
        if linalg::asymmetry(&entries) > 1e-12 * scale {
            return Err(FrameError::InvalidArgument("Gram matrix is not symmetric".into()));
        }
        let gram = Self { entries };
        if let Some(&min) = gram.eigenvalues().first() {
            if min < -TOL_PSD {
                return Err(FrameError::InvalidArgument(format!(
                    "Gram matrix is not positive semidefinite (eigenvalue {min:e})"
                )));
            }
        }
        Ok(gram)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(&self.entries)
    }

    /// The leading `n × n` block `G_n`.
    pub fn leading(&self, n: usize) -> Result<GramMatrix> {
        if n > self.size() {
            return Err(FrameError::IndexOutOfRange { index: n, len: self.size() });
        }
        Ok(GramMatrix { entries: self.entries.view((0, 0), (n, n)).into_owned() })
    }

    /// `det(G_n)` for `n = 1..=size`.
    pub fn leading_minors(&self) -> Vec<f64> {
        (1..=self.size())
            .map(|n| linalg::det(&self.entries.view((0, 0), (n, n)).into_owned()))
            .collect()
    }

    /// Quadratic form `cᵀ G c`.
    pub fn quadratic_form(&self, c: &[f64]) -> Result<f64> {
        check_dim(self.size(), c.len())?;
        let v = nalgebra::DVector::from_column_slice(c);
        Ok(v.dot(&(&self.entries * &v)))
    }
}
