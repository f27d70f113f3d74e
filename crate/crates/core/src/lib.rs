//! Concept-grouped Taylor additive models.
//!
//! Features are split into named groups ("concepts"); a small MLP per group
//! maps its features to one scalar, and a single-layer Taylor polynomial
//! network with Tucker-factored coefficient tensors combines the concept
//! values. The fitted polynomial can be expanded into explicit monomials,
//! ranked by standardized contribution, and plotted per concept.

pub mod archive;
pub mod cli;
pub mod data;
pub mod encoder;
pub mod interpret;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod params;
pub mod polynomial;
pub mod svg;
pub mod taylornet;
pub mod tensor;
pub mod train;

pub use model::{CatModel, ModelSpec};
pub use error::{CatError, Result};
pub use params::Parameterized;
pub use polynomial::{Monomial, PolynomialExpansion};
pub use taylornet::{param_count, RankConfig, TaylorNet, TuckerTerm};
pub use tensor::{DenseTensor, Matrix};
