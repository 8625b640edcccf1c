//! Moutard-type transforms for two-dimensional Dirac systems and
//! generalized analytic functions, computed on rectangular grids.
//!
//! * [`grid`]: domains, sampled fields and Wirtinger derivatives
//! * [`expr`]: parser/evaluator for closed-form seed functions
//! * [`potentials`]: quadrature of the exact one-forms defining `ω_{j,k}`
//! * [`dirac`]: the transform at the level of the Dirac system
//! * [`ga`]: its reduction to generalized analytic functions
//! * [`examples`]: closed forms of the one- and two-seed constant families
//! * [`verifier`]: residuals, convergence orders and pole-set location

pub mod dirac;
pub mod error;
pub mod examples;
pub mod expr;
pub mod ga;
pub mod grid;
mod linalg;
pub mod potentials;
pub mod verifier;

pub use error::{MoutardError, Result};
pub use num_complex::Complex64;
