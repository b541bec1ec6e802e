//! Poisson likelihood of count tables and its maximisation.

mod fit;
mod likelihood;
pub mod nelder_mead;
mod synthetic;

pub use fit::{
    fit_mle, profile_ci, theta_hat, Bounds, Estimator, FitConfig, FitResult, ParamMap, Parameter,
    ProfileInterval, Sharing, StartSummary, StdErrors,
};
pub use likelihood::{means_for_layout, poisson_loglik, table_loglik};
pub use nelder_mead::{minimize, NelderMeadOptions, NelderMeadResult};
pub use synthetic::poisson_tables;
