use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),

    #[error("non-numeric value {value:?} in column {column:?} at data line {line}")]
    NonNumeric { column: String, line: u64, value: String },

    #[error("label column {0:?} not present in input")]
    MissingLabelColumn(String),

    #[error("invalid label value {value:?} at data line {line}")]
    InvalidLabel { line: u64, value: String },

    #[error("column {0:?} not present in table")]
    MissingColumn(String),

    #[error("table has no labels")]
    Unlabeled,

    #[error("only one class present in labels")]
    SingleClass,

    #[error("not enough rows to split: {0}")]
    SplitTooSmall(String),

    #[error("fold {fold} contains no {class} examples")]
    DegenerateFold { fold: usize, class: &'static str },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("labels contain no positive examples")]
    NoPositives,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("column {0:?} has zero variance on the fitting rows")]
    DegenerateColumn(String),

    #[error("optimizer did not converge after {iterations} iterations (gradient max-norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("all coefficients are zero")]
    ZeroCoefficients,

    #[error("no features left after {0}")]
    EmptySelection(&'static str),

    #[error("feature {spec} is non-finite or out of domain on {rows} row(s)")]
    NonFiniteFeature { spec: String, rows: usize },

    #[error("artifact format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("artifact checksum mismatch")]
    ChecksumMismatch,

    #[error("malformed artifact: {0}")]
    MalformedArtifact(String),

    #[error("no variable mapping for base column {0:?}")]
    UnmappedVariable(String),

    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unbound variable {0:?}")]
    UnboundVariable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsatisfiable prevalence: {0}")]
    UnsatisfiablePrevalence(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
