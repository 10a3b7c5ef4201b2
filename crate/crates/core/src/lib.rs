//! Interpretable thrombosis-risk classification from per-cell flow features.
//!
//! Class-balanced L2 logistic regression, a staged feature-selection
//! pipeline (screening, engineered SQ/LOG/IX terms, LOFO recursive
//! elimination), permutation importance, and export of the trained model as
//! a closed-form expression over raw flow variables.

pub mod dataset;
pub mod error;
pub mod export;
pub mod fselect;
pub mod linmod;
pub mod metrics;
pub mod synth;

pub use error::{Error, Result};
