use std::path::{Path, PathBuf};

use flowrisk::dataset::LabelSpec;
use flowrisk::export::ExpressionDialect;
use flowrisk::fselect::{CvConfig, RfeConfig, ScreenConfig};
use flowrisk::linmod::TrainConfig;
use flowrisk::synth::PlantedTruth;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub split: u64,
    pub rfe: u64,
    pub importance: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub folds: usize,
    pub smoothing_window: usize,
    pub decline_rel: f64,
    pub decline_patience: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        let d = RfeConfig::new(0);
        Self {
            folds: d.cv.folds,
            smoothing_window: d.smoothing_window,
            decline_rel: d.decline_rel,
            decline_patience: d.decline_patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImportanceConfig {
    pub repeats: usize,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        Self { repeats: 5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    /// Built-in dialect: `default` or `cfx`.
    pub dialect: Option<String>,
    /// Dialect profile file; overrides `dialect`.
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub rows: usize,
    pub columns: usize,
    pub seed: u64,
    #[serde(default = "PlantedTruth::interaction_and_square")]
    pub truth: PlantedTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub label: LabelSpec,
    pub seeds: Seeds,
    #[serde(default)]
    pub screen: ScreenConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub importance: ImportanceConfig,
    #[serde(default)]
    pub export: ExportConfig,
    pub synth: Option<SynthConfig>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Replaces every seed in the file.
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("{e}").replace('\n', " ")))
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::input_missing(format!("config file {}", path.display())),
            _ => CliError::io(format!("{}: {e}", path.display())),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        cfg.input = resolve(&cfg.input);
        cfg.output_dir = resolve(&cfg.output_dir);
        if let Some(profile) = &cfg.export.profile {
            cfg.export.profile = Some(resolve(profile));
        }
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(input) = &overrides.input {
            self.input = input.clone();
        }
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(seed) = overrides.seed {
            self.seeds = Seeds {
                split: seed,
                rfe: seed,
                importance: seed,
            };
            if let Some(s) = &mut self.synth {
                s.seed = seed;
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.label.validate()?;
        self.screen.validate()?;
        self.train.validate()?;
        self.rfe().validate()?;
        if self.selection.folds < 2 {
            return Err(CliError::config("selection.folds must be >= 2"));
        }
        if self.importance.repeats == 0 {
            return Err(CliError::config("importance.repeats must be >= 1"));
        }
        if let Some(name) = &self.export.dialect {
            if !matches!(name.as_str(), "default" | "cfx") {
                return Err(CliError::config(format!("unknown dialect {name:?}")));
            }
        }
        Ok(())
    }

    pub fn rfe(&self) -> RfeConfig {
        RfeConfig {
            cv: CvConfig {
                folds: self.selection.folds,
                seed: self.seeds.rfe,
            },
            smoothing_window: self.selection.smoothing_window,
            decline_rel: self.selection.decline_rel,
            decline_patience: self.selection.decline_patience,
        }
    }

    pub fn dialect(&self) -> Result<ExpressionDialect, CliError> {
        if let Some(path) = &self.export.profile {
            let text = std::fs::read_to_string(path)
                .map_err(|_| CliError::input_missing(format!("dialect profile {}", path.display())))?;
            return Ok(ExpressionDialect::from_toml(&text)?);
        }
        Ok(match self.export.dialect.as_deref() {
            Some("cfx") => ExpressionDialect::cfx(),
            _ => ExpressionDialect::default(),
        })
    }

    /// sha256 of the effective settings. Input and output locations are
    /// left out so that the same pipeline run elsewhere fingerprints the same.
    pub fn fingerprint(&self) -> String {
        let mut settings = self.clone();
        settings.input = PathBuf::new();
        settings.output_dir = PathBuf::new();
        let text = serde_json::to_string(&settings).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
input = "data.csv"
output_dir = "out"

[label]
column = "Thrombus"
source = "binary"

[seeds]
split = 1
rfe = 2
importance = 3
"#;

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.selection.folds, 5);
        assert_eq!(c.selection.smoothing_window, 5);
        assert_eq!(c.screen.importance_cutoff, 0.01);
        assert_eq!(c.importance.repeats, 5);
        c.validate().unwrap();
    }

    #[test]
    fn missing_seed_is_rejected() {
        let text = MINIMAL.replace("importance = 3\n", "");
        let err = PipelineConfig::from_toml(&text).unwrap_err();
        assert_eq!(err.class, "config-invalid");
    }

    #[test]
    fn overrides_and_fingerprint() {
        let mut c = PipelineConfig::from_toml(MINIMAL).unwrap();
        let before = c.fingerprint();
        c.apply(&Overrides {
            seed: Some(9),
            ..Overrides::default()
        });
        assert_eq!((c.seeds.split, c.seeds.rfe, c.seeds.importance), (9, 9, 9));
        assert_ne!(c.fingerprint(), before);
        assert_eq!(c.fingerprint().len(), 64);
        let fp = c.fingerprint();
        c.output_dir = PathBuf::from("elsewhere");
        assert_eq!(c.fingerprint(), fp);
    }
}
