//! PR-AUC drop when one model input is shuffled on held-out rows.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::spec::FeatureSpec;
use crate::dataset::{format_float, FeatureTable};
use crate::error::{Error, Result};
use crate::linmod::{sigmoid, LogisticModel};
use crate::metrics::pr_auc;

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationImportance {
    pub spec: FeatureSpec,
    pub mean_drop: f64,
    pub std_drop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationReport {
    pub reference_pr_auc: f64,
    pub repeats: usize,
    /// Aligned with the model's specs.
    pub features: Vec<PermutationImportance>,
}

impl PermutationReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "feature,mean_drop,std_drop")?;
        for f in &self.features {
            writeln!(
                out,
                "\"{}\",{},{}",
                f.spec,
                format_float(f.mean_drop),
                format_float(f.std_drop)
            )?;
        }
        Ok(())
    }
}

/// Shuffles each materialized model input `repeats` times and reports the
/// mean and population std of `PR-AUC(reference) - PR-AUC(shuffled)`.
///
/// Input `j` draws from its own ChaCha8 stream, so results do not depend on
/// evaluation order.
pub fn permutation_importance(
    model: &LogisticModel,
    rows: &FeatureTable,
    repeats: usize,
    seed: u64,
) -> Result<PermutationReport> {
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    let labels = rows.labels()?;
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let inputs = model.standardized_inputs(rows)?;
    let score = |cols: &[&[f64]]| -> Result<f64> {
        let probs: Vec<f64> = model.linear_predictor_from(cols).into_iter().map(sigmoid).collect();
        pr_auc(&probs, labels)
    };
    let base: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let reference = score(&base)?;

    let features = (0..inputs.len())
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let mut shuffled = inputs[j].clone();
            let mut drops = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                shuffled.shuffle(&mut rng);
                let mut cols = base.clone();
                cols[j] = &shuffled;
                drops.push(reference - score(&cols)?);
            }
            let mean = drops.iter().sum::<f64>() / repeats as f64;
            let var = drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / repeats as f64;
            Ok(PermutationImportance {
                spec: model.feature_specs[j].clone(),
                mean_drop: mean,
                std_drop: var.sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PermutationReport {
        reference_pr_auc: reference,
        repeats,
        features,
    })
}

#[cfg(test)]
mod tests {
    use flowrisk_testkit::SplitMix64;

    use super::*;
    use crate::linmod::TrainConfig;

    fn data(n: usize, seed: u64) -> FeatureTable {
        let mut rng = SplitMix64::new(seed);
        let signal: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let flat: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let labels = signal.iter().map(|s| s + 0.3 * rng.normal() > 1.5).collect();
        FeatureTable::new(
            vec!["s".into(), "noise".into(), "flat".into()],
            vec![signal, noise, flat],
            Some(labels),
        )
        .unwrap()
    }

    #[test]
    fn planted_noise_and_constant_columns() {
        let train = data(20_000, 1);
        let valid = data(20_000, 2);
        let specs = vec![FeatureSpec::base("s"), FeatureSpec::base("noise")];
        let (model, _) = LogisticModel::train(&train, &specs, &TrainConfig::default()).unwrap();
        let r = permutation_importance(&model, &valid, 5, 7).unwrap();
        assert!(r.features[0].mean_drop > 0.1, "{:?}", r.features);
        assert!(r.features[1].mean_drop.abs() <= 0.01, "{:?}", r.features);
        assert_eq!(r, permutation_importance(&model, &valid, 5, 7).unwrap());
    }

    #[test]
    fn constant_validation_column_has_zero_drop() {
        let train = data(5_000, 3);
        let specs = vec![FeatureSpec::base("s"), FeatureSpec::base("flat")];
        let (model, _) = LogisticModel::train(&train, &specs, &TrainConfig::default()).unwrap();
        let mut valid = data(5_000, 4);
        // rebuild with an all-zero "flat" column
        let cols: Vec<Vec<f64>> = valid
            .columns()
            .map(|(n, c)| if n == "flat" { vec![0.0; c.len()] } else { c.to_vec() })
            .collect();
        valid = FeatureTable::new(valid.column_names().to_vec(), cols, valid.label().map(<[bool]>::to_vec)).unwrap();
        let r = permutation_importance(&model, &valid, 4, 1).unwrap();
        assert_eq!(r.features[1].mean_drop, 0.0);
        assert_eq!(r.features[1].std_drop, 0.0);
    }
}
