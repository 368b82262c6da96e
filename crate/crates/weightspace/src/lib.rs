//! Radial weights on the unit disc, the weight classes defined through tail
//! and moment comparisons, every norm-like functional built from a weight and
//! an analytic function, and a harness that measures two-sided comparison
//! constants and reproduces divergence counterexamples at desk scale.

pub mod cli;
pub mod error;
pub mod functionals;
pub mod functions;
pub mod harness;
pub mod lacunary;
pub mod quadrature;
pub mod report;
pub mod weight_classes;
pub mod weights;

pub use error::{Error, Result};
pub use quadrature::{QuadratureConfig, Radius};
