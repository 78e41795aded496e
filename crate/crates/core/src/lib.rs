//! Matérn covariances on bounded boxes: exact spectral evaluation under
//! Dirichlet, Neumann, periodic and Robin conditions, folded image sums,
//! certified error bounds for the windowed approximation, and field sampling.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod folded;
pub mod matern;
pub mod quad;
pub mod sampler;
pub mod specfun;
pub mod spectral;
pub mod sum;

pub use error::{Error, Result};
