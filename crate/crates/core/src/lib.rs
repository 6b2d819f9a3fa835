//! Sound bounds for indefinite-horizon POMDP objectives.
//!
//! The engine discretises the belief MDP with Freudenthal triangulations,
//! cuts off exploration with bound mass and refines the abstraction until the
//! gap between the certified lower and upper bound closes.

pub mod belief;
pub mod bench;
pub mod check;
pub mod error;
pub mod linalg;
pub mod model;
pub mod refine;
pub mod scalar;
pub mod triangulation;

pub use error::{Error, ModelError, Result};
pub use scalar::{Rational, Scalar};
