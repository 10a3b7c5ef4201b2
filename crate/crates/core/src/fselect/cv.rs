//! Stratified k-fold cross-validated PR-AUC and leave-one-feature-out
//! importances.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{materialize, FeatureSpec};
use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::linmod::{fit_hinted, sigmoid, Standardizer, TrainConfig};
use crate::metrics::pr_auc;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub seed: u64,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

impl CvConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            seed,
        }
    }
}

/// Fold id for every row. Rows are taken in storage order, which callers
/// keep sorted by original index. Each class is shuffled and dealt
/// round-robin, negatives continuing where the positives stopped so fold
/// sizes differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    let mut assignment = vec![0usize; labels.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dealt = 0usize;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for &i in &members {
            assignment[i] = dealt % k;
            dealt += 1;
        }
    }
    for fold in 0..k {
        for (class, name) in [(true, "positive"), (false, "negative")] {
            if !(0..labels.len()).any(|i| assignment[i] == fold && labels[i] == class) {
                return Err(Error::DegenerateFold { fold, class: name });
            }
        }
    }
    Ok(assignment)
}

struct Fold {
    train: Vec<Vec<f64>>,
    train_labels: Vec<bool>,
    valid: Vec<Vec<f64>>,
    valid_labels: Vec<bool>,
}

/// Every candidate column standardized per fold, ready to score any subset.
///
/// Fold-local standardization of a column does not depend on which other
/// columns are active, so the work is done once up front.
pub struct CrossValidator {
    folds: Vec<Fold>,
    n_columns: usize,
    train_config: TrainConfig,
}

impl CrossValidator {
    pub fn new(
        raw: &[Vec<f64>],
        names: &[String],
        labels: &[bool],
        cv: &CvConfig,
        train_config: &TrainConfig,
    ) -> Result<Self> {
        let assignment = stratified_folds(labels, cv.folds, cv.seed)?;
        let folds = (0..cv.folds)
            .into_par_iter()
            .map(|fold| {
                let train_rows: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != fold).collect();
                let valid_rows: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == fold).collect();
                let gather = |rows: &[usize], col: &[f64]| -> Vec<f64> { rows.iter().map(|&i| col[i]).collect() };
                let train_raw: Vec<Vec<f64>> = raw.iter().map(|c| gather(&train_rows, c)).collect();
                let refs: Vec<&[f64]> = train_raw.iter().map(Vec::as_slice).collect();
                let standardizer = Standardizer::fit(&refs, names)?;
                let train = standardizer.transform(&train_raw);
                let valid = raw
                    .iter()
                    .enumerate()
                    .map(|(j, c)| standardizer.transform_column(j, &gather(&valid_rows, c)))
                    .collect();
                Ok(Fold {
                    train,
                    train_labels: train_rows.iter().map(|&i| labels[i]).collect(),
                    valid,
                    valid_labels: valid_rows.iter().map(|&i| labels[i]).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            folds,
            n_columns: raw.len(),
            train_config: train_config.clone(),
        })
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    fn fold_fit(&self, fold: &Fold, active: &[usize], start: Option<(Vec<f64>, Vec<f64>)>) -> Result<FoldFit> {
        let train: Vec<&[f64]> = active.iter().map(|&j| fold.train[j].as_slice()).collect();
        let (start, hint) = match start {
            Some((p, h)) => (p, Some(h)),
            None => (vec![0.0; active.len() + 1], None),
        };
        let (f, hessian) = fit_hinted(&train, &fold.train_labels, &self.train_config, &start, hint)?;
        let mut z = vec![f.intercept; fold.valid_labels.len()];
        for (&j, &b) in active.iter().zip(&f.coefficients) {
            for (zi, &x) in z.iter_mut().zip(&fold.valid[j]) {
                *zi += b * x;
            }
        }
        let probs: Vec<f64> = z.into_iter().map(sigmoid).collect();
        let score = pr_auc(&probs, &fold.valid_labels)?;
        let mut params = vec![f.intercept];
        params.extend(f.coefficients);
        Ok(FoldFit { score, params, hessian })
    }

    /// Mean validation-fold PR-AUC of models on the `active` columns.
    pub fn score(&self, active: &[usize]) -> Result<f64> {
        let scores = self
            .folds
            .par_iter()
            .map(|fold| self.fold_fit(fold, active, None).map(|f| f.score))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean(&scores))
    }

    /// Baseline score of `active`, plus the drop when each one is left out.
    ///
    /// Each reduced model starts from the full model's solution with the
    /// dropped slope removed; the optimum is the same, it is just reached in
    /// fewer Newton steps.
    pub fn lofo(&self, active: &[usize]) -> Result<LofoResult> {
        self.lofo_with(active, None)
    }

    /// [`lofo`](Self::lofo) reusing `full`, one fit per fold of exactly the
    /// `active` columns, instead of fitting the full set again.
    pub fn lofo_with(&self, active: &[usize], full: Option<Vec<FoldFit>>) -> Result<LofoResult> {
        if active.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "leave-one-feature-out needs at least 2 features, got {}",
                active.len()
            )));
        }
        let k = self.folds.len();
        let full = match full {
            Some(full) => {
                if full.len() != k || full.iter().any(|f| f.params.len() != active.len() + 1) {
                    return Err(Error::InvalidParameter(
                        "reused fold fits do not match the active set".into(),
                    ));
                }
                full
            }
            None => self
                .folds
                .par_iter()
                .map(|fold| self.fold_fit(fold, active, None))
                .collect::<Result<Vec<_>>>()?,
        };
        let dim = active.len() + 1;
        let mut reduced = (0..active.len() * k)
            .into_par_iter()
            .map(|task| {
                let (drop, fold) = (task / k, task % k);
                let cols: Vec<usize> = active
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, &j)| j)
                    .collect();
                let keep = |i: &usize| *i != drop + 1;
                let start: Vec<f64> = (0..dim).filter(keep).map(|i| full[fold].params[i]).collect();
                let hint: Vec<f64> = (0..dim)
                    .filter(keep)
                    .flat_map(|r| (0..dim).filter(keep).map(move |c| (r, c)))
                    .map(|(r, c)| full[fold].hessian[r * dim + c])
                    .collect();
                self.fold_fit(&self.folds[fold], &cols, Some((start, hint)))
            })
            .collect::<Result<Vec<_>>>()?;
        let baseline = mean(&full.iter().map(|f| f.score).collect::<Vec<_>>());
        let mut without = Vec::with_capacity(active.len());
        while !reduced.is_empty() {
            let rest = reduced.split_off(k);
            without.push(std::mem::replace(&mut reduced, rest));
        }
        Ok(LofoResult {
            baseline,
            deltas: without
                .iter()
                .map(|fits| baseline - mean(&fits.iter().map(|f| f.score).collect::<Vec<_>>()))
                .collect(),
            full,
            without,
        })
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// One fold's fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldFit {
    /// PR-AUC on the fold's validation rows.
    pub score: f64,
    /// `[intercept, slopes...]`
    pub params: Vec<f64>,
    hessian: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LofoResult {
    /// Mean cross-validated PR-AUC with every feature.
    pub baseline: f64,
    /// `baseline - PR-AUC without feature j`, aligned with the input specs.
    pub deltas: Vec<f64>,
    /// Full-set fit on each fold.
    pub full: Vec<FoldFit>,
    /// `without[j][fold]`: fits with feature j left out.
    pub without: Vec<Vec<FoldFit>>,
}

/// Leave-one-feature-out importances of `specs` on the training table.
pub fn lofo_importances(
    specs: &[FeatureSpec],
    train: &FeatureTable,
    cv: &CvConfig,
    config: &TrainConfig,
) -> Result<LofoResult> {
    let raw = materialize(train, specs)?;
    let names: Vec<String> = specs.iter().map(ToString::to_string).collect();
    let validator = CrossValidator::new(&raw, &names, train.labels()?, cv, config)?;
    let active: Vec<usize> = (0..specs.len()).collect();
    validator.lofo(&active)
}

#[cfg(test)]
mod tests {
    use flowrisk_testkit::SplitMix64;

    use super::*;

    #[test]
    fn folds_are_stratified_and_balanced() {
        let labels: Vec<bool> = (0..103).map(|i| i % 10 == 0).collect();
        let f = stratified_folds(&labels, 5, 9).unwrap();
        for fold in 0..5 {
            let size = f.iter().filter(|&&x| x == fold).count();
            let pos = (0..103).filter(|&i| f[i] == fold && labels[i]).count();
            assert!((20..=21).contains(&size));
            assert!((2..=3).contains(&pos));
        }
        assert_eq!(f, stratified_folds(&labels, 5, 9).unwrap());
    }

    #[test]
    fn too_few_positives_is_degenerate() {
        let labels: Vec<bool> = (0..100).map(|i| i < 3).collect();
        assert!(matches!(
            stratified_folds(&labels, 5, 1),
            Err(Error::DegenerateFold { class: "positive", .. })
        ));
    }

    fn planted(n: usize, seed: u64) -> FeatureTable {
        let mut rng = SplitMix64::new(seed);
        let names: Vec<String> = (0..4).map(|j| format!("x{j}")).collect();
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.normal()).collect()).collect();
        let labels = (0..n)
            .map(|i| cols[0][i] * cols[1][i] + 0.2 * rng.normal() > 1.2)
            .collect();
        FeatureTable::new(names, cols, Some(labels)).unwrap()
    }

    #[test]
    fn duplicate_feature_has_near_zero_delta() {
        let t = planted(4000, 3);
        let specs = vec![
            FeatureSpec::interaction("x0", "x1").unwrap(),
            FeatureSpec::interaction("x0", "x1").unwrap(),
            FeatureSpec::base("x2"),
        ];
        let r = lofo_importances(&specs, &t, &CvConfig::new(5), &TrainConfig::default()).unwrap();
        assert!(r.deltas[0].abs() <= 0.005, "{:?}", r.deltas);
        assert!(r.deltas[1].abs() <= 0.005, "{:?}", r.deltas);
    }

    #[test]
    fn informative_interaction_dominates() {
        let t = planted(4000, 4);
        let specs = vec![
            FeatureSpec::base("x0"),
            FeatureSpec::base("x1"),
            FeatureSpec::base("x2"),
            FeatureSpec::base("x3"),
            FeatureSpec::interaction("x0", "x1").unwrap(),
            FeatureSpec::interaction("x2", "x3").unwrap(),
        ];
        let r = lofo_importances(&specs, &t, &CvConfig::new(5), &TrainConfig::default()).unwrap();
        assert!(r.deltas[4] > 0.1, "{:?}", r.deltas);
        for (j, d) in r.deltas.iter().enumerate() {
            if j != 4 {
                assert!(d.abs() < 0.02, "{j}: {d}");
            }
        }
    }

    #[test]
    fn single_feature_is_rejected() {
        let t = planted(500, 1);
        let err = lofo_importances(
            &[FeatureSpec::base("x0")],
            &t,
            &CvConfig::new(1),
            &TrainConfig::default(),
        );
        assert!(err.is_err());
    }
}
