//! Homogenized elasticity of a cylinder reinforced by thin periodic fibers.
//!
//! The library covers the full pipeline: closed-form effective coefficients,
//! the exact exterior cell solutions and their singular-energy quadrature,
//! finite element solvers for the fine-scale composite and for the limit
//! functionals, and regime classification of scaling families.

pub mod cell;
pub mod error;
pub mod expr;
pub mod fem;
pub mod fine;
pub mod grid;
pub mod limit;
pub mod material;
pub mod quad;
pub mod report;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Working precision of the finite element lane.
pub type Real = f64;

/// `f64` coefficient aliases for the common case.
pub type Lame = material::LameCoefficients<Real>;
pub type Coefficients = material::EffectiveCoefficients<Real>;
