//! Column screening, feature engineering, LOFO recursive elimination and
//! permutation importance.

mod cv;
mod engineer;
mod permutation;
mod rfe;
mod screen;
mod spec;

pub use cv::{lofo_importances, stratified_folds, CrossValidator, CvConfig, FoldFit, LofoResult, DEFAULT_FOLDS};
pub use engineer::{candidate_pool, engineer_features, log_shift, LOG_SHIFT_EPSILON};
pub use permutation::{permutation_importance, PermutationImportance, PermutationReport};
pub use rfe::{rfe_loop, RfeConfig, RfeIteration, SelectionTrace};
pub use screen::{
    glob_match, importance_screen, screen_columns, ImportanceScreen, Removal, RemovalReason, ScreenConfig,
    ScreenOutcome,
};
pub use spec::{materialize, materialize_one, FeatureKind, FeatureSpec};
