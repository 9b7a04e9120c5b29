//! Probabilistic frames: finitely supported probability measures on R^N, their
//! second-moment (frame) operator and bounds, the probabilistic analysis,
//! synthesis and Gramian operators, the quadratic Wasserstein distance, and the
//! coordinate decay sequence showing that no probability measure can keep a
//! uniform positive lower frame bound along an orthonormal basis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FrameError, Result};
use crate::linalg;
use crate::transport;
use crate::vector::{check_dim, dot, Vector};

/// Tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-12;

/// Positive weights on distinct atoms, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct DiscreteMeasure {
    atoms: Vec<Vector>,
    weights: Vec<f64>,
    dim: usize,
}

/// JSON form `{ "dim": N, "atoms": [[...]], "weights": [...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub dim: usize,
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TryFrom<MeasureDoc> for DiscreteMeasure {
    type Error = FrameError;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        let atoms = doc.atoms.into_iter().map(Vector::new).collect::<Result<Vec<_>>>()?;
        if let Some(first) = atoms.first() {
            check_dim(doc.dim, first.dim())?;
        }
        DiscreteMeasure::new(atoms, doc.weights)
    }
}

impl From<DiscreteMeasure> for MeasureDoc {
    fn from(mu: DiscreteMeasure) -> Self {
        MeasureDoc {
            dim: mu.dim,
            atoms: mu.atoms.into_iter().map(Vector::into_inner).collect(),
            weights: mu.weights,
        }
    }
}

impl DiscreteMeasure {
    /// Validates weights (positive, total mass 1 within [`MASS_TOL`]) and merges
    /// repeated atoms by summing their weights.
    pub fn new(atoms: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        let (atoms, weights, dim) = Self::validate(atoms, weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(FrameError::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(Self::merged(atoms, weights, dim))
    }

    /// Like [`DiscreteMeasure::new`] but rescales positive weights to unit mass.
    pub fn normalized(atoms: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        let (atoms, weights, dim) = Self::validate(atoms, weights)?;
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self::merged(atoms, weights, dim))
    }

    pub fn uniform(atoms: Vec<Vector>) -> Result<Self> {
        let n = atoms.len();
        Self::normalized(atoms, vec![1.0; n])
    }

    pub fn point_mass(atom: Vector) -> Self {
        let dim = atom.dim();
        Self { atoms: vec![atom], weights: vec![1.0], dim }
    }

    fn validate(atoms: Vec<Vector>, weights: Vec<f64>) -> Result<(Vec<Vector>, Vec<f64>, usize)> {
        let first = atoms.first().ok_or(FrameError::Empty("measure has no atoms"))?;
        let dim = first.dim();
        check_dim(atoms.len(), weights.len())?;
        for a in &atoms {
            check_dim(dim, a.dim())?;
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(FrameError::InvalidWeights(format!("weight {w} is not strictly positive")));
        }
        Ok((atoms, weights, dim))
    }

    fn merged(atoms: Vec<Vector>, weights: Vec<f64>, dim: usize) -> Self {
        let mut out_atoms: Vec<Vector> = Vec::with_capacity(atoms.len());
        let mut out_weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (a, w) in atoms.into_iter().zip(weights) {
            match out_atoms.iter().position(|b| *b == a) {
                Some(k) => out_weights[k] += w,
                None => {
                    out_atoms.push(a);
                    out_weights.push(w);
                }
            }
        }
        Self { atoms: out_atoms, weights: out_weights, dim }
    }

    pub fn atoms(&self) -> &[Vector] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `S_μ = Σ w_i y_i y_iᵀ`.
    pub fn frame_operator(&self) -> DMatrix<f64> {
        let n = self.dim;
        let mut s = DMatrix::zeros(n, n);
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            let y = a.as_slice();
            for i in 0..n {
                for j in 0..n {
                    s[(i, j)] += w * y[i] * y[j];
                }
            }
        }
        s
    }

    /// Extreme eigenvalues of the probabilistic frame operator.
    pub fn frame_bounds(&self) -> MeasureFrameBounds {
        let eig = linalg::sym_eigenvalues(&self.frame_operator());
        let lower = eig[0].max(0.0);
        let upper = eig[eig.len() - 1].max(0.0);
        MeasureFrameBounds {
            lower,
            upper,
            is_frame: upper > 0.0 && lower > crate::frames::TOL_RANK_REL * upper,
            is_tight: upper > 0.0 && (upper - lower) <= 1e-10 * upper,
        }
    }

    /// `M₂²(μ) = Σ w_i ‖y_i‖²`.
    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * a.norm_sq()).sum()
    }

    /// Probabilistic analysis: the function `y ↦ ⟨x, y⟩` tabulated on the atoms.
    pub fn analysis(&self, x: &Vector) -> Result<Vec<f64>> {
        check_dim(self.dim, x.dim())?;
        Ok(self.atoms.iter().map(|a| dot(a.as_slice(), x.as_slice())).collect())
    }

    /// Squared norm of a function table in L²(μ).
    pub fn l2_norm_sq(&self, f: &[f64]) -> Result<f64> {
        check_dim(self.len(), f.len())?;
        Ok(f.iter().zip(&self.weights).map(|(v, w)| w * v * v).sum())
    }

    /// Probabilistic synthesis: `f ↦ Σ w_i f_i y_i`.
    pub fn synthesis(&self, f: &[f64]) -> Result<Vector> {
        check_dim(self.len(), f.len())?;
        let mut out = vec![0.0; self.dim];
        for ((a, &w), &fi) in self.atoms.iter().zip(&self.weights).zip(f) {
            for (o, y) in out.iter_mut().zip(a.as_slice()) {
                *o += w * fi * y;
            }
        }
        Vector::new(out)
    }

    /// Probabilistic Gramian: `(G_μ f)(y_j) = Σ_i w_i ⟨y_j, y_i⟩ f_i`.
    pub fn gramian_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.len(), f.len())?;
        Ok(self
            .atoms
            .iter()
            .map(|yj| {
                self.atoms
                    .iter()
                    .zip(&self.weights)
                    .zip(f)
                    .map(|((yi, w), fi)| w * dot(yj.as_slice(), yi.as_slice()) * fi)
                    .sum()
            })
            .collect())
    }

    /// `f(n) = ∫ |⟨b_n, y⟩|² dμ(y)` for the standard basis, `n = 1..=n_max`
    /// (returned zero-based). Entries past the ambient dimension are zero.
    pub fn lower_bound_decay(&self, n_max: usize) -> Vec<f64> {
        (0..n_max)
            .map(|n| {
                if n < self.dim {
                    self.atoms
                        .iter()
                        .zip(&self.weights)
                        .map(|(a, w)| w * a.as_slice()[n].powi(2))
                        .sum()
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureFrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub is_frame: bool,
    pub is_tight: bool,
}

/// Quadratic Wasserstein distance with an optimal coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct Wasserstein {
    pub distance: f64,
    /// Rows index atoms of the first measure, columns atoms of the second.
    pub plan: DMatrix<f64>,
}

/// Exact `W₂(μ, ν)` via the transportation simplex on squared Euclidean cost.
pub fn wasserstein2(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Wasserstein> {
    check_dim(mu.dim(), nu.dim())?;
    let cost = DMatrix::from_fn(mu.len(), nu.len(), |i, j| {
        mu.atoms[i]
            .as_slice()
            .iter()
            .zip(nu.atoms[j].as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    });
    let solution = transport::solve(&mu.weights, &nu.weights, &cost)?;
    Ok(Wasserstein { distance: solution.cost.max(0.0).sqrt(), plan: solution.plan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn e(i: usize) -> Vector {
        Vector::basis(2, i)
    }

    fn mb_uniform() -> DiscreteMeasure {
        DiscreteMeasure::uniform(crate::frames::Frame::mercedes_benz().vectors().to_vec()).unwrap()
    }

    #[test]
    fn construction_rules() {
        assert!(DiscreteMeasure::new(vec![e(0), e(1)], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(vec![e(0), e(1)], vec![1.0, 0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![e(0)], vec![0.5, 0.5]).is_err());
        let merged = DiscreteMeasure::new(vec![e(0), e(1), e(0)], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.weights(), &[0.5, 0.5]);
        let n = DiscreteMeasure::normalized(vec![e(0), e(1)], vec![2.0, 6.0]).unwrap();
        assert_eq!(n.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn frame_operator_examples() {
        let u = DiscreteMeasure::uniform(vec![e(0), e(1)]).unwrap();
        assert_eq!(u.frame_operator(), DMatrix::identity(2, 2) * 0.5);
        let zero = DiscreteMeasure::point_mass(Vector::zeros(2));
        assert_eq!(zero.frame_operator(), DMatrix::zeros(2, 2));
        let mb = mb_uniform().frame_operator();
        assert!((mb - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
    }

    #[test]
    fn bounds_examples() {
        let b = DiscreteMeasure::uniform(vec![e(0), e(1)]).unwrap().frame_bounds();
        assert_eq!((b.lower, b.upper, b.is_frame, b.is_tight), (0.5, 0.5, true, true));
        let b = DiscreteMeasure::point_mass(e(0)).frame_bounds();
        assert_eq!(b.lower, 0.0);
        assert_relative_eq!(b.upper, 1.0);
        assert!(!b.is_frame);
        let b = mb_uniform().frame_bounds();
        assert_relative_eq!(b.lower, 0.5, epsilon = 1e-15);
        assert_relative_eq!(b.upper, 0.5, epsilon = 1e-15);
        assert!(b.is_tight);
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(DiscreteMeasure::uniform(vec![e(0), e(1)]).unwrap().second_moment(), 1.0);
        assert_eq!(DiscreteMeasure::point_mass(Vector::zeros(3)).second_moment(), 0.0);
        assert_relative_eq!(mb_uniform().second_moment(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn analysis_synthesis_gramian_examples() {
        let u = DiscreteMeasure::uniform(vec![e(0), e(1)]).unwrap();
        let f = u.analysis(&e(0)).unwrap();
        assert_eq!(f, vec![1.0, 0.0]);
        assert_eq!(u.l2_norm_sq(&f).unwrap(), 0.5);
        assert!(u.analysis(&Vector::zeros(2)).unwrap().iter().all(|&x| x == 0.0));
        let a = v(&[0.3, -0.7]);
        let pm = DiscreteMeasure::point_mass(a.clone());
        assert_eq!(pm.analysis(&v(&[2.0, 1.0])).unwrap(), vec![0.6 - 0.7]);

        assert!(u.synthesis(&[0.0, 0.0]).unwrap().is_zero());
        assert_eq!(u.synthesis(&[1.0, 0.0]).unwrap(), v(&[0.5, 0.0]));
        let x = v(&[0.4, 1.3]);
        let sx = u.synthesis(&u.analysis(&x).unwrap()).unwrap();
        let direct = u.frame_operator() * nalgebra::DVector::from_column_slice(x.as_slice());
        assert!((sx.as_slice()[0] - direct[0]).abs() < 1e-15);
        assert!(u.synthesis(&[1.0]).is_err());

        assert_eq!(u.gramian_apply(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(u.gramian_apply(&[1.0, 0.0]).unwrap(), vec![0.5, 0.0]);
        assert_eq!(DiscreteMeasure::point_mass(e(1)).gramian_apply(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn decay_examples() {
        assert_eq!(DiscreteMeasure::point_mass(Vector::basis(3, 0)).lower_bound_decay(3), vec![1.0, 0.0, 0.0]);
        let u = DiscreteMeasure::uniform(vec![e(0), e(1)]).unwrap();
        let f = u.lower_bound_decay(4);
        assert_eq!(f, vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(f.iter().sum::<f64>(), u.second_moment());
    }

    #[test]
    fn wasserstein_examples() {
        let mu = DiscreteMeasure::uniform(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0])]).unwrap();
        let w = wasserstein2(&mu, &mu).unwrap();
        assert_eq!(w.distance, 0.0);
        assert_eq!(w.plan[(0, 0)], 0.5);
        assert_eq!(w.plan[(1, 1)], 0.5);

        let a = v(&[1.0, 2.0]);
        let b = v(&[-1.0, 0.5]);
        let w = wasserstein2(&DiscreteMeasure::point_mass(a.clone()), &DiscreteMeasure::point_mass(b.clone())).unwrap();
        assert_relative_eq!(w.distance, a.sub(&b).unwrap().norm(), epsilon = 1e-15);

        // Two couplings exist at vertices: {0→0, e1→2e1} costs 1/2, the swap costs 5/2.
        let nu = DiscreteMeasure::uniform(vec![v(&[0.0, 0.0]), v(&[2.0, 0.0])]).unwrap();
        let w = wasserstein2(&mu, &nu).unwrap();
        assert_relative_eq!(w.distance.powi(2), 0.5, epsilon = 1e-14);

        let other = DiscreteMeasure::point_mass(Vector::zeros(3));
        assert!(matches!(wasserstein2(&mu, &other), Err(FrameError::DimensionMismatch { .. })));
    }

    #[test]
    fn json_revalidates() {
        let text = r#"{"dim": 2, "atoms": [[1, 0], [0, 1]], "weights": [0.5, 0.5]}"#;
        let mu: DiscreteMeasure = serde_json::from_str(text).unwrap();
        assert_eq!(mu.len(), 2);
        let bad = r#"{"dim": 2, "atoms": [[1, 0]], "weights": [0.5]}"#;
        assert!(serde_json::from_str::<DiscreteMeasure>(bad).is_err());
    }
}
