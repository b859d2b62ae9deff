//! Geometry of finite-dimensional ℓ_p spaces, resolvents of monotone
//! operators in that geometry, and a sampling harness that checks the
//! related inequalities numerically.

pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod operators;
pub mod report;
pub mod resolvent;
pub mod run;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use geometry::{DualVector, PrimalVector, SpaceDescriptor};
pub use operators::{MonotoneOperatorSpec, OperatorEvaluation};
pub use report::{FitPoint, HolderFit, InequalityReport, Witness};
pub use sampling::{Exec, SamplerConfig};
