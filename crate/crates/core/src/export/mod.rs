//! Versioned model artifacts and closed-form solver expressions.

mod artifact;
mod eval;
mod expression;

pub use artifact::{
    artifact_from_str, artifact_to_string, json_checksum, load_artifact, save_artifact, write_feature_manifest,
    ModelArtifact, FORMAT_VERSION,
};
pub use eval::{evaluate_expression, evaluate_in};
pub use expression::{emit_expression, format_literal, ExpressionDialect, PowerSyntax};
