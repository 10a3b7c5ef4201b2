use serde::{Deserialize, Serialize};

use super::sigmoid;
use super::solver::{fit, Fit, TrainConfig};
use super::standardize::Standardizer;
use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::fselect::{materialize, FeatureSpec};

/// Intercept and slopes over a list of feature specs, with the standardizer
/// that maps raw materialized values onto the scale the slopes refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_specs: Vec<FeatureSpec>,
    pub standardizer: Standardizer,
}

/// Solver diagnostics returned alongside a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub objective: f64,
}

impl From<&Fit> for FitReport {
    fn from(f: &Fit) -> Self {
        Self {
            iterations: f.iterations,
            gradient_norm: f.gradient_norm,
            objective: f.objective,
        }
    }
}

impl LogisticModel {
    pub fn new(
        intercept: f64,
        coefficients: Vec<f64>,
        feature_specs: Vec<FeatureSpec>,
        standardizer: Standardizer,
    ) -> Result<Self> {
        let d = coefficients.len();
        if feature_specs.len() != d {
            return Err(Error::LengthMismatch {
                left: feature_specs.len(),
                right: d,
            });
        }
        if standardizer.len() != d || standardizer.stds.len() != d {
            return Err(Error::LengthMismatch {
                left: standardizer.len(),
                right: d,
            });
        }
        let finite = std::iter::once(&intercept)
            .chain(&coefficients)
            .chain(&standardizer.means)
            .chain(&standardizer.stds)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("model contains non-finite values".into()));
        }
        if standardizer.stds.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameter("standard deviations must be positive".into()));
        }
        Ok(Self {
            intercept,
            coefficients,
            feature_specs,
            standardizer,
        })
    }

    /// Materializes `specs` on the training rows, fits the standardizer on
    /// them, and fits the coefficients on the standardized columns.
    pub fn train(table: &FeatureTable, specs: &[FeatureSpec], config: &TrainConfig) -> Result<(Self, FitReport)> {
        let labels = table.labels()?;
        let raw = materialize(table, specs)?;
        let names: Vec<String> = specs.iter().map(ToString::to_string).collect();
        let refs: Vec<&[f64]> = raw.iter().map(Vec::as_slice).collect();
        let standardizer = Standardizer::fit(&refs, &names)?;
        let standardized = standardizer.transform(&raw);
        let refs: Vec<&[f64]> = standardized.iter().map(Vec::as_slice).collect();
        let f = fit(&refs, labels, config)?;
        let report = FitReport::from(&f);
        let model = Self::new(f.intercept, f.coefficients, specs.to_vec(), standardizer)?;
        Ok((model, report))
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    /// Standardized model inputs for every row.
    pub fn standardized_inputs(&self, rows: &FeatureTable) -> Result<Vec<Vec<f64>>> {
        let raw = materialize(rows, &self.feature_specs)?;
        Ok(self.standardizer.transform(&raw))
    }

    /// `z = b0 + sum_j b_j s_j` from already standardized columns.
    pub fn linear_predictor_from(&self, standardized: &[impl AsRef<[f64]>]) -> Vec<f64> {
        let n = standardized.first().map_or(0, |c| c.as_ref().len());
        let mut z = vec![self.intercept; n];
        for (col, &b) in standardized.iter().zip(&self.coefficients) {
            for (zi, &x) in z.iter_mut().zip(col.as_ref()) {
                *zi += b * x;
            }
        }
        z
    }

    pub fn linear_predictor(&self, rows: &FeatureTable) -> Result<Vec<f64>> {
        let standardized = self.standardized_inputs(rows)?;
        if standardized.is_empty() {
            return Ok(vec![self.intercept; rows.n_rows()]);
        }
        Ok(self.linear_predictor_from(&standardized))
    }

    /// Thrombus probability per row of a raw feature table.
    pub fn predict_proba(&self, rows: &FeatureTable) -> Result<Vec<f64>> {
        Ok(self.linear_predictor(rows)?.into_iter().map(sigmoid).collect())
    }

    /// Distinct base columns the model reads, in first-use order.
    pub fn base_columns(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for name in self.feature_specs.iter().flat_map(FeatureSpec::base_names) {
            if !seen.contains(&name) {
                seen.push(name);
            }
        }
        seen
    }
}

/// `|b_j| / sum_k |b_k|` over the slopes (intercept excluded).
pub fn coefficient_importance(model: &LogisticModel) -> Result<Vec<f64>> {
    normalized_importance(&model.coefficients)
}

pub fn normalized_importance(coefficients: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = coefficients.iter().map(|b| b.abs()).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroCoefficients);
    }
    Ok(coefficients.iter().map(|b| b.abs() / total).collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn identity_model(specs: Vec<FeatureSpec>, coefficients: Vec<f64>) -> LogisticModel {
        let d = specs.len();
        LogisticModel::new(
            0.0,
            coefficients,
            specs,
            Standardizer {
                means: vec![0.0; d],
                stds: vec![1.0; d],
                fitted_on: 1,
            },
        )
        .unwrap()
    }

    #[test]
    fn importance_examples() {
        assert_eq!(normalized_importance(&[0.5, -0.5]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(normalized_importance(&[3.0, 1.0]).unwrap(), vec![0.75, 0.25]);
        assert!(matches!(
            normalized_importance(&[0.0, 0.0]),
            Err(Error::ZeroCoefficients)
        ));
    }

    #[test]
    fn zero_model_predicts_half() {
        let t = FeatureTable::new(vec!["u".into()], vec![vec![-3.0, 0.0, 8.0]], None).unwrap();
        let m = identity_model(vec![FeatureSpec::base("u")], vec![0.0]);
        assert_eq!(m.predict_proba(&t).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn positive_slope_is_increasing() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.3 - 7.0).collect();
        let t = FeatureTable::new(vec!["u".into()], vec![xs], None).unwrap();
        let m = identity_model(vec![FeatureSpec::base("u")], vec![0.8]);
        let p = m.predict_proba(&t).unwrap();
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn prediction_is_sigmoid_of_linear_predictor() {
        let t = FeatureTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0, 3.5], vec![0.5, 0.25, 4.0]],
            None,
        )
        .unwrap();
        let specs = vec![
            FeatureSpec::base("a"),
            FeatureSpec::interaction("a", "b").unwrap(),
            FeatureSpec::log("b", 0.5),
        ];
        let m = LogisticModel::new(
            -0.3,
            vec![1.1, -0.4, 0.7],
            specs,
            Standardizer {
                means: vec![2.0, 1.5, 0.3],
                stds: vec![0.9, 2.5, 0.8],
                fitted_on: 3,
            },
        )
        .unwrap();
        let p = m.predict_proba(&t).unwrap();
        for row in 0..3 {
            let a = t.column("a").unwrap()[row];
            let b = t.column("b").unwrap()[row];
            let s = [(a - 2.0) / 0.9, (a * b - 1.5) / 2.5, ((b + 0.5).ln() - 0.3) / 0.8];
            let z = -0.3 + 1.1 * s[0] + -0.4 * s[1] + 0.7 * s[2];
            let expect = 1.0 / (1.0 + (-z).exp());
            assert!((p[row] - expect).abs() <= 1e-15);
        }
    }

    #[test]
    fn missing_base_column_is_error() {
        let t = FeatureTable::new(vec!["a".into()], vec![vec![1.0]], None).unwrap();
        let m = identity_model(vec![FeatureSpec::base("nope")], vec![1.0]);
        assert!(matches!(m.predict_proba(&t), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn rejects_inconsistent_lengths() {
        let s = Standardizer {
            means: vec![0.0],
            stds: vec![1.0],
            fitted_on: 1,
        };
        assert!(LogisticModel::new(0.0, vec![1.0, 2.0], vec![FeatureSpec::base("a")], s).is_err());
    }

    proptest! {
        #[test]
        fn importances_sum_to_one(beta in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            prop_assume!(beta.iter().any(|b| *b != 0.0));
            let imp = normalized_importance(&beta).unwrap();
            prop_assert!((imp.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(imp.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
