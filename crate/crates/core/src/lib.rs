//! Probabilistic frame theory at desk scale.
//!
//! * [`frames`]: finite frames, their operators, Gramians and optimal bounds.
//! * [`measure`]: discrete probabilistic frames and the exact W₂ distance.
//! * [`markov`]: the reversible Markov chain a frame induces on its indices.
//! * [`dpp`]: determinantal measures with Gramian-derived kernels.
//! * [`gaussian`]: truncated Gaussian white noise and its frame identities.
//! * [`translation`]: translated measures, cocycles, Karhunen–Loève expansion.
//!
//! Random quantities come from counter-addressed streams ([`rng`]) and all
//! Monte-Carlo reductions are block-ordered ([`exec`]), so results are bitwise
//! reproducible with or without the `parallel` feature and for any number of
//! threads.

pub mod dpp;
pub mod error;
pub mod exec;
pub mod frames;
pub mod gaussian;
pub mod linalg;
pub mod markov;
pub mod measure;
pub mod rng;
pub mod stats;
pub mod translation;
pub mod transport;
pub mod vector;

pub use dpp::{DppKernel, PointConfiguration};
pub use error::{FrameError, Result};
pub use frames::{Frame, GramMatrix};
pub use gaussian::WhiteNoiseEnsemble;
pub use markov::{FrameChain, PathSample};
pub use measure::{DiscreteMeasure, MeasureFrameBounds};
pub use stats::{ComplexMcEstimate, McEstimate};
pub use vector::Vector;
