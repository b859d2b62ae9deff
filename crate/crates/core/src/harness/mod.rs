//! Sampled, fitted and adversarial verification of the inequalities on
//! ℓ_p spaces and resolvents.

pub mod adversarial;
pub mod checks;
pub mod driver;
pub mod fit;

pub use adversarial::{adversarial_search, SearchTarget};
pub use checks::*;
pub use fit::{fit_holder_exponent, FitMap, FitOutput};
