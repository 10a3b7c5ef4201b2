//! Binary thrombus labels from activated-platelet concentrations.
//!
//! The scaled activated-platelet value is the per-mille increase over the
//! initial concentration, `sAP = 1000 * (AP - AP0) / AP0`. A cell is labeled
//! as thrombus when its sAP lies strictly above the scenario threshold
//! (6 for the broad worst-case scenario, 12 for the bearing scenario).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial activated-platelet concentration in platelets per m^3.
pub const DEFAULT_AP0: f64 = 2.5e13;

/// sAP threshold of the worst-case scenario.
pub const WORST_CASE_THRESHOLD: f64 = 6.0;

/// sAP threshold of the bearing scenario.
pub const BEARING_THRESHOLD: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Column already holds 0/1 labels.
    Binary,
    /// Column holds raw AP concentrations; sAP is derived with `ap0`.
    ApConcentration,
    /// Column holds precomputed sAP values.
    SapColumn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    pub column: String,
    pub source: LabelSource,
    #[serde(default = "default_ap0")]
    pub ap0: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_ap0() -> f64 {
    DEFAULT_AP0
}

fn default_threshold() -> f64 {
    WORST_CASE_THRESHOLD
}

impl LabelSpec {
    pub fn binary(column: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            source: LabelSource::Binary,
            ap0: DEFAULT_AP0,
            threshold: WORST_CASE_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ap0 > 0.0 && self.ap0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ap0 must be positive, got {}",
                self.ap0
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidParameter("label threshold must be finite".into()));
        }
        Ok(())
    }

    /// Maps one parsed label-column value to a class.
    pub(crate) fn classify(&self, value: f64) -> Option<bool> {
        match self.source {
            LabelSource::Binary => {
                if value == 0.0 {
                    Some(false)
                } else if value == 1.0 {
                    Some(true)
                } else {
                    None
                }
            }
            LabelSource::ApConcentration => Some(sap(value, self.ap0) > self.threshold),
            LabelSource::SapColumn => Some(value > self.threshold),
        }
    }
}

#[inline]
fn sap(ap: f64, ap0: f64) -> f64 {
    1000.0 * (ap - ap0) / ap0
}

/// Per-mille increase of each concentration over `ap0`.
pub fn compute_sap(ap: &[f64], ap0: f64) -> Result<Vec<f64>> {
    if !(ap0 > 0.0) {
        return Err(Error::InvalidParameter(format!("ap0 must be positive, got {ap0}")));
    }
    Ok(ap.iter().map(|&a| sap(a, ap0)).collect())
}

/// `true` where `sap` is strictly above `threshold`.
pub fn label_threshold(sap: &[f64], threshold: f64) -> Vec<bool> {
    sap.iter().map(|&s| s > threshold).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn sap_reference_values() {
        let s = compute_sap(&[2.5e13, 2.515e13, 2.53e13], DEFAULT_AP0).unwrap();
        assert_eq!(s, vec![0.0, 6.0, 12.0]);
    }

    #[test]
    fn sap_rejects_nonpositive_ap0() {
        assert!(compute_sap(&[1.0], 0.0).is_err());
        assert!(compute_sap(&[1.0], -2.5e13).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        assert_eq!(label_threshold(&[6.0], 6.0), vec![false]);
        assert_eq!(label_threshold(&[6.01, 5.99], 6.0), vec![true, false]);
        assert_eq!(label_threshold(&[-3.0], 12.0), vec![false]);
    }

    #[test]
    fn binary_classification_rejects_other_values() {
        let spec = LabelSpec::binary("Thrombus");
        assert_eq!(spec.classify(1.0), Some(true));
        assert_eq!(spec.classify(0.0), Some(false));
        assert_eq!(spec.classify(0.5), None);
    }

    proptest! {
        #[test]
        fn sap_is_scale_invariant(x in 1e10f64..1e15, ap0 in 1e10f64..1e15, a in 1e-3f64..1e3) {
            let base = compute_sap(&[x], ap0).unwrap()[0];
            let scaled = compute_sap(&[a * x], a * ap0).unwrap()[0];
            prop_assert!((base - scaled).abs() <= 1e-9 * (1.0 + base.abs()));
        }

        #[test]
        fn labels_monotone_in_ap(mut ap in proptest::collection::vec(1e12f64..5e13, 2..50), tau in -100f64..100.0) {
            ap.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let labels = label_threshold(&compute_sap(&ap, DEFAULT_AP0).unwrap(), tau);
            prop_assert!(labels.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
