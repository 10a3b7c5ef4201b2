use std::fmt;

use flowrisk::Error;

/// A failure reported as one machine-parseable line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub class: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(class: &'static str, message: impl Into<String>) -> Self {
        Self {
            class,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config-invalid", message)
    }

    pub fn input_missing(message: impl Into<String>) -> Self {
        Self::new("input-missing", message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new("io-failed", message)
    }

    pub fn stage_order(message: impl Into<String>) -> Self {
        Self::new("stage-order", message)
    }

    pub fn test_guard(message: impl Into<String>) -> Self {
        Self::new("test-guard", message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let escaped = self
            .message
            .replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace('\n', " ");
        write!(f, "error: class={} message=\"{}\"", self.class, escaped)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let class = match &e {
            Error::MissingFile(_) => "input-missing",
            Error::DuplicateColumn(_)
            | Error::NonNumeric { .. }
            | Error::MissingLabelColumn(_)
            | Error::InvalidLabel { .. }
            | Error::MissingColumn(_)
            | Error::Unlabeled
            | Error::DegenerateColumn(_)
            | Error::NonFiniteFeature { .. }
            | Error::LengthMismatch { .. }
            | Error::Csv(_) => "input-invalid",
            Error::SingleClass | Error::SplitTooSmall(_) | Error::DegenerateFold { .. } | Error::NoPositives => {
                "split-degenerate"
            }
            Error::InvalidParameter(_) | Error::UnsatisfiablePrevalence(_) => "config-invalid",
            Error::NonConvergence { .. } => "fit-nonconvergence",
            Error::ZeroCoefficients | Error::EmptySelection(_) => "selection-empty",
            Error::VersionMismatch { .. } | Error::ChecksumMismatch | Error::MalformedArtifact(_) => "artifact-invalid",
            Error::UnmappedVariable(_) | Error::Syntax { .. } | Error::UnboundVariable(_) | Error::Domain(_) => {
                "export-failed"
            }
            Error::Io(_) => "io-failed",
        };
        Self::new(class, e.to_string())
    }
}
