//! Squared, shifted-log and pairwise-interaction features.

use super::spec::FeatureSpec;
use crate::dataset::FeatureTable;
use crate::error::Result;

/// Relative margin added to the log shift.
pub const LOG_SHIFT_EPSILON: f64 = 1e-6;

/// `c = eps * range + max(0, -min)`, which keeps `x + c > 0` on every row
/// the shift was computed from.
pub fn log_shift(training_values: &[f64]) -> f64 {
    let (min, max) = training_values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    LOG_SHIFT_EPSILON * (max - min) + (-min).max(0.0)
}

/// For `k` base columns: `k` SQ specs, then `k` LOG specs with shifts from
/// the training rows, then the `k(k-1)/2` IX pairs. `2k + k(k-1)/2` total.
pub fn engineer_features(train: &FeatureTable, base: &[String]) -> Result<Vec<FeatureSpec>> {
    let k = base.len();
    let mut specs = Vec::with_capacity(2 * k + k * k.saturating_sub(1) / 2);
    specs.extend(base.iter().map(FeatureSpec::square));
    for name in base {
        specs.push(FeatureSpec::log(name, log_shift(train.column(name)?)));
    }
    for (i, a) in base.iter().enumerate() {
        for b in &base[i + 1..] {
            if let Some(ix) = FeatureSpec::interaction(a, b) {
                specs.push(ix);
            }
        }
    }
    Ok(specs)
}

/// Base specs followed by their engineered expansion: the candidate set the
/// recursive elimination starts from.
pub fn candidate_pool(train: &FeatureTable, base: &[String]) -> Result<Vec<FeatureSpec>> {
    let mut pool: Vec<FeatureSpec> = base.iter().map(FeatureSpec::base).collect();
    pool.extend(engineer_features(train, base)?);
    Ok(pool)
}
