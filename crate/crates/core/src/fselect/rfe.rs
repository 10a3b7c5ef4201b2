//! Recursive elimination driven by smoothed LOFO importances.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::cv::{CrossValidator, CvConfig};
use super::spec::{materialize, FeatureSpec};
use crate::dataset::{format_float, FeatureTable};
use crate::error::{Error, Result};
use crate::linmod::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeConfig {
    #[serde(flatten)]
    pub cv: CvConfig,
    /// Number of most recent LOFO values averaged per spec.
    #[serde(default = "default_window")]
    pub smoothing_window: usize,
    /// Relative margin below the best PR-AUC that counts as a decline.
    #[serde(default = "default_decline_rel")]
    pub decline_rel: f64,
    /// Consecutive declining iterations that end the search.
    #[serde(default = "default_patience")]
    pub decline_patience: usize,
}

fn default_window() -> usize {
    5
}

fn default_decline_rel() -> f64 {
    0.005
}

fn default_patience() -> usize {
    3
}

impl RfeConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            cv: CvConfig::new(seed),
            smoothing_window: default_window(),
            decline_rel: default_decline_rel(),
            decline_patience: default_patience(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window == 0 {
            return Err(Error::InvalidParameter("smoothing_window must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.decline_rel) {
            return Err(Error::InvalidParameter(format!(
                "decline_rel must be in [0, 1), got {}",
                self.decline_rel
            )));
        }
        if self.decline_patience == 0 {
            return Err(Error::InvalidParameter("decline_patience must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeIteration {
    pub iteration: usize,
    pub retained: Vec<FeatureSpec>,
    /// Aligned with `retained`.
    pub deltas: Vec<f64>,
    /// Aligned with `retained`.
    pub smoothed: Vec<f64>,
    pub baseline: f64,
    /// `None` on the iteration that stopped the search.
    pub eliminated: Option<FeatureSpec>,
}

impl RfeIteration {
    fn eliminated_smoothed(&self) -> Option<f64> {
        let gone = self.eliminated.as_ref()?;
        self.retained.iter().position(|s| s == gone).map(|i| self.smoothed[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub iterations: Vec<RfeIteration>,
    pub best_iteration: usize,
    pub best_subset: Vec<FeatureSpec>,
    pub best_pr_auc: f64,
}

impl SelectionTrace {
    /// `iteration,retained,baseline_pr_auc,eliminated,eliminated_smoothed_delta`
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "iteration,retained,baseline_pr_auc,eliminated,eliminated_smoothed_delta"
        )?;
        for it in &self.iterations {
            writeln!(
                out,
                "{},{},{},{},{}",
                it.iteration,
                it.retained.len(),
                format_float(it.baseline),
                it.eliminated.as_ref().map(|s| format!("\"{s}\"")).unwrap_or_default(),
                it.eliminated_smoothed().map(format_float).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}

/// Repeatedly drops the spec with the lowest smoothed LOFO importance and
/// returns the retained set of the best-scoring iteration.
///
/// Ties on the best score go to the later, smaller set. Ties on the smoothed
/// importance go to the spec that sorts first canonically.
pub fn rfe_loop(
    specs: &[FeatureSpec],
    train: &FeatureTable,
    config: &RfeConfig,
    train_config: &TrainConfig,
) -> Result<(Vec<FeatureSpec>, SelectionTrace)> {
    config.validate()?;
    if specs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "recursive elimination needs at least 2 specs, got {}",
            specs.len()
        )));
    }
    let raw = materialize(train, specs)?;
    let names: Vec<String> = specs.iter().map(ToString::to_string).collect();
    let validator = CrossValidator::new(&raw, &names, train.labels()?, &config.cv, train_config)?;
    drop(raw);

    let mut active: Vec<usize> = (0..specs.len()).collect();
    let mut history: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut iterations = Vec::new();
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    let mut declining = 0usize;
    let mut reuse = None;

    loop {
        let iteration = iterations.len();
        let mut lofo = validator.lofo_with(&active, reuse.take())?;
        let smoothed: Vec<f64> = active
            .iter()
            .zip(&lofo.deltas)
            .map(|(&j, &d)| {
                let h = history.entry(j).or_default();
                h.push(d);
                let tail = &h[h.len().saturating_sub(config.smoothing_window)..];
                tail.iter().sum::<f64>() / tail.len() as f64
            })
            .collect();

        match &best {
            Some((_, score, _)) if lofo.baseline < *score => {}
            _ => best = Some((iteration, lofo.baseline, active.clone())),
        }
        let best_score = best.as_ref().map_or(lofo.baseline, |b| b.1);
        if lofo.baseline < best_score - config.decline_rel * best_score {
            declining += 1;
        } else {
            declining = 0;
        }
        log::debug!(
            "rfe iteration {iteration}: {} specs, pr_auc {:.6}, declining {declining}",
            active.len(),
            lofo.baseline
        );

        let stop = declining >= config.decline_patience || active.len() <= 2;
        let victim = if stop {
            None
        } else {
            (0..active.len()).min_by(|&a, &b| {
                smoothed[a]
                    .total_cmp(&smoothed[b])
                    .then_with(|| specs[active[a]].cmp(&specs[active[b]]))
                    .then_with(|| active[a].cmp(&active[b]))
            })
        };
        iterations.push(RfeIteration {
            iteration,
            retained: active.iter().map(|&j| specs[j].clone()).collect(),
            deltas: lofo.deltas,
            smoothed,
            baseline: lofo.baseline,
            eliminated: victim.map(|v| specs[active[v]].clone()),
        });
        match victim {
            Some(v) => {
                active.remove(v);
                // the next full-set problem is this iteration's drop-v problem
                reuse = Some(lofo.without.swap_remove(v));
            }
            None => break,
        }
    }

    let (best_iteration, best_pr_auc, subset) = best.expect("at least one iteration ran");
    let best_subset: Vec<FeatureSpec> = subset.iter().map(|&j| specs[j].clone()).collect();
    Ok((
        best_subset.clone(),
        SelectionTrace {
            iterations,
            best_iteration,
            best_subset,
            best_pr_auc,
        },
    ))
}

#[cfg(test)]
mod tests {
    use flowrisk_testkit::SplitMix64;

    use super::*;

    fn planted(n: usize, noise: usize, seed: u64) -> FeatureTable {
        let mut rng = SplitMix64::new(seed);
        let d = 2 + noise;
        let names: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
        let cols: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.normal()).collect()).collect();
        let labels = (0..n)
            .map(|i| cols[0][i] * cols[1][i] + 0.3 * rng.normal() > 1.3)
            .collect();
        FeatureTable::new(names, cols, Some(labels)).unwrap()
    }

    #[test]
    fn two_specs_stop_immediately() {
        let t = planted(2000, 0, 1);
        let specs = vec![FeatureSpec::base("x0"), FeatureSpec::interaction("x0", "x1").unwrap()];
        let (kept, trace) = rfe_loop(&specs, &t, &RfeConfig::new(3), &TrainConfig::default()).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert!(trace.iterations[0].eliminated.is_none());
        assert_eq!(kept, specs);
    }

    #[test]
    fn trace_shrinks_by_one_and_returns_best_snapshot() {
        let t = planted(3000, 4, 8);
        let mut specs = vec![FeatureSpec::interaction("x0", "x1").unwrap()];
        specs.extend((2..6).map(|j| FeatureSpec::base(format!("x{j}"))));
        specs.push(FeatureSpec::square("x2"));
        let (kept, trace) = rfe_loop(&specs, &t, &RfeConfig::new(11), &TrainConfig::default()).unwrap();
        for w in trace.iterations.windows(2) {
            assert_eq!(w[0].retained.len(), w[1].retained.len() + 1);
        }
        let max = trace
            .iterations
            .iter()
            .map(|i| i.baseline)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(trace.best_pr_auc, max);
        assert_eq!(kept, trace.iterations[trace.best_iteration].retained);
        assert!(kept.contains(&specs[0]));

        let mut csv = Vec::new();
        trace.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), trace.iterations.len() + 1);
    }

    #[test]
    fn smoothing_uses_trailing_window() {
        let t = planted(2000, 3, 5);
        let specs: Vec<FeatureSpec> = (0..5).map(|j| FeatureSpec::base(format!("x{j}"))).collect();
        let mut cfg = RfeConfig::new(2);
        cfg.decline_patience = 100;
        let (_, trace) = rfe_loop(&specs, &t, &cfg, &TrainConfig::default()).unwrap();
        let last = trace.iterations.last().unwrap();
        for (pos, spec) in last.retained.iter().enumerate() {
            let seen: Vec<f64> = trace
                .iterations
                .iter()
                .filter_map(|it| it.retained.iter().position(|s| s == spec).map(|p| it.deltas[p]))
                .collect();
            let mean = seen.iter().sum::<f64>() / seen.len() as f64;
            assert!((last.smoothed[pos] - mean).abs() < 1e-15);
        }
    }
}
