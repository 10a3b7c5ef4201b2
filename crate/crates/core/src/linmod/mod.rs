//! Class-balanced, L2-regularized logistic regression.

mod model;
mod solver;
pub(crate) use solver::fit_hinted;
mod standardize;

pub use model::{coefficient_importance, normalized_importance, FitReport, LogisticModel};
pub use solver::{
    class_weights, fit, fit_from, minimize, minimize_from, ClassWeighting, Fit, Objective, TrainConfig,
    DEFAULT_L2_STRENGTH, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
pub use standardize::Standardizer;

/// Logistic function. Only non-positive magnitudes are exponentiated, so it
/// never overflows.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
