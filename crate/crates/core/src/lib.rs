//! Cumulative link models for ordinal responses, fitted by maximum likelihood,
//! mean bias reduction or median bias reduction through adjusted score equations.
//!
//! Modules follow the data flow: [`links`] and [`model`] define the likelihood,
//! [`adjust`] builds the bias-reducing score adjustments, [`solver`] runs Fisher
//! scoring, [`effects`] turns coefficients into ordinal superiority measures,
//! [`sim`] runs Monte Carlo studies and [`oracle`] holds independent checks.

pub mod adjust;
pub mod datasets;
pub mod effects;
pub mod error;
pub mod linalg;
pub mod links;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod solver;

pub use adjust::Method;
pub use error::{Error, Result};
pub use links::LinkFamily;
pub use model::{Dataset, ParamVector};
pub use solver::{fit, BoundaryFlag, FitOptions, FitResult};
