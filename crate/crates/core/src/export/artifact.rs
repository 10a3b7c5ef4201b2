use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dataset::{format_float, LabelSpec};
use crate::error::{Error, Result};
use crate::linmod::LogisticModel;

pub const FORMAT_VERSION: u64 = 1;

/// A trained model with what is needed to reproduce and audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub format_version: u64,
    pub model: LogisticModel,
    pub label_spec: LabelSpec,
    /// sha256 of the pipeline configuration that produced the model.
    pub config_fingerprint: String,
    pub metrics: BTreeMap<String, f64>,
    /// Producing tool and version. No timestamps, so reruns are identical.
    pub created_by: String,
}

impl ModelArtifact {
    pub fn new(model: LogisticModel, label_spec: LabelSpec, config_fingerprint: impl Into<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            model,
            label_spec,
            config_fingerprint: config_fingerprint.into(),
            metrics: BTreeMap::new(),
            created_by: concat!("flowrisk ", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

/// Hex sha256 of the compact, key-sorted JSON text of `value`.
pub fn json_checksum(value: &Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

/// JSON document `{format_version, checksum, payload}`.
pub fn artifact_to_string(artifact: &ModelArtifact) -> Result<String> {
    let payload = serde_json::to_value(artifact).map_err(|e| Error::MalformedArtifact(e.to_string()))?;
    let mut doc = serde_json::Map::new();
    doc.insert("format_version".into(), Value::from(artifact.format_version));
    doc.insert("checksum".into(), Value::from(json_checksum(&payload)));
    doc.insert("payload".into(), payload);
    let mut text =
        serde_json::to_string_pretty(&Value::Object(doc)).map_err(|e| Error::MalformedArtifact(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn artifact_from_str(text: &str) -> Result<ModelArtifact> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::MalformedArtifact(e.to_string()))?;
    let version = doc
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::MalformedArtifact("missing format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let checksum = doc
        .get("checksum")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::MalformedArtifact("missing checksum".into()))?;
    let payload = doc
        .get("payload")
        .ok_or_else(|| Error::MalformedArtifact("missing payload".into()))?;
    if json_checksum(payload) != checksum {
        return Err(Error::ChecksumMismatch);
    }
    let artifact: ModelArtifact =
        serde_json::from_value(payload.clone()).map_err(|e| Error::MalformedArtifact(e.to_string()))?;
    if artifact.format_version != version {
        return Err(Error::MalformedArtifact("payload and envelope versions differ".into()));
    }
    LogisticModel::new(
        artifact.model.intercept,
        artifact.model.coefficients.clone(),
        artifact.model.feature_specs.clone(),
        artifact.model.standardizer.clone(),
    )
    .map_err(|e| Error::MalformedArtifact(e.to_string()))?;
    Ok(artifact)
}

/// Writes next to `path` and renames into place.
pub fn save_artifact(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    let text = artifact_to_string(artifact)?;
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_artifact(path: &Path) -> Result<ModelArtifact> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingFile(path.to_path_buf())),
        Err(e) => return Err(e.into()),
    };
    artifact_from_str(&text)
}

/// One row per model input with its transform, slope and standardization,
/// preceded by the intercept.
pub fn write_feature_manifest<W: Write>(model: &LogisticModel, mut out: W) -> Result<()> {
    writeln!(out, "feature,kind,operand_a,operand_b,shift,coefficient,mean,std")?;
    writeln!(out, "(intercept),INTERCEPT,,,,{},,", format_float(model.intercept))?;
    for (j, spec) in model.feature_specs.iter().enumerate() {
        writeln!(
            out,
            "\"{}\",{},\"{}\",{},{},{},{},{}",
            spec,
            spec.kind().tag(),
            spec.operand_a(),
            spec.operand_b().map(|b| format!("\"{b}\"")).unwrap_or_default(),
            spec.shift().map(format_float).unwrap_or_default(),
            format_float(model.coefficients[j]),
            format_float(model.standardizer.means[j]),
            format_float(model.standardizer.stds[j]),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fselect::FeatureSpec;
    use crate::linmod::Standardizer;

    fn artifact() -> ModelArtifact {
        let model = LogisticModel::new(
            -std::f64::consts::PI,
            vec![0.1 + 0.2, -1e-300, 6.02214076e23],
            vec![
                FeatureSpec::base("a"),
                FeatureSpec::log("b", 1.0 / 3.0),
                FeatureSpec::interaction("b", "a").unwrap(),
            ],
            Standardizer {
                means: vec![f64::MIN_POSITIVE, 2.5, -7.0],
                stds: vec![1.0 / 7.0, 5e-324, 1e300],
                fitted_on: 10,
            },
        )
        .unwrap();
        let mut a = ModelArtifact::new(model, LabelSpec::binary("Thrombus"), "abc");
        a.metrics.insert("test_pr_auc".into(), 0.912345678901234);
        a
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let a = artifact();
        let back = artifact_from_str(&artifact_to_string(&a).unwrap()).unwrap();
        assert_eq!(back, a);
        for (x, y) in back.model.coefficients.iter().zip(&a.model.coefficients) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(back.model.standardizer.stds[1].to_bits(), 5e-324f64.to_bits());
    }

    #[test]
    fn version_mismatch() {
        let text =
            artifact_to_string(&artifact())
                .unwrap()
                .replacen("\"format_version\": 1", "\"format_version\": 999", 1);
        assert!(matches!(
            artifact_from_str(&text),
            Err(Error::VersionMismatch {
                found: 999,
                expected: 1
            })
        ));
    }

    #[test]
    fn truncated_and_tampered() {
        let text = artifact_to_string(&artifact()).unwrap();
        assert!(matches!(
            artifact_from_str(&text[..text.len() / 2]),
            Err(Error::MalformedArtifact(_))
        ));
        let tampered = text.replace("Thrombus", "Thrombos");
        assert!(matches!(artifact_from_str(&tampered), Err(Error::ChecksumMismatch)));
    }

    #[test]
    fn saves_and_loads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.artifact.json");
        save_artifact(&artifact(), &path).unwrap();
        assert_eq!(load_artifact(&path).unwrap(), artifact());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(matches!(
            load_artifact(&dir.path().join("nope")),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn manifest_lists_every_input() {
        let mut buf = Vec::new();
        write_feature_manifest(&artifact().model, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[3].starts_with("\"LOG(b)\",LOG,\"b\",,0.3333333333333333,"));
        assert!(lines[4].starts_with("\"IX(a,b)\",IX,\"a\",\"b\",,"));
    }
}
