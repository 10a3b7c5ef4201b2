//! Column screening and the coefficient-importance cutoff.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::FeatureSpec;
use crate::dataset::{format_float, FeatureTable};
use crate::error::{Error, Result};
use crate::linmod::{coefficient_importance, FitReport, LogisticModel, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreenConfig {
    /// Glob patterns (`*` and `?`) of column names to drop outright.
    pub exclusion_patterns: Vec<String>,
    /// Columns with training variance at or below this are constant.
    pub constant_tolerance: f64,
    /// Pairs with `|r|` at or above this are redundant.
    pub correlation_threshold: f64,
    /// Minimum normalized coefficient importance to survive.
    pub importance_cutoff: f64,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self {
            exclusion_patterns: vec!["Coordinate*".into()],
            constant_tolerance: 1e-12,
            correlation_threshold: 0.95,
            importance_cutoff: 0.01,
        }
    }
}

impl ScreenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.importance_cutoff > 0.0 && self.importance_cutoff < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "importance_cutoff {} outside (0, 1)",
                self.importance_cutoff
            )));
        }
        if !(self.correlation_threshold > 0.0 && self.correlation_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "correlation_threshold {} outside (0, 1]",
                self.correlation_threshold
            )));
        }
        if !(self.constant_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("constant_tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RemovalReason {
    Pattern(String),
    Constant { variance: f64 },
    Correlated { with: String, r: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    pub name: String,
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenOutcome {
    /// Surviving names in table order.
    pub retained: Vec<String>,
    /// Removals in the order they were decided.
    pub removed: Vec<Removal>,
}

impl ScreenOutcome {
    /// `column,reason,detail` CSV.
    pub fn write_report<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["column", "reason", "detail"])?;
        for r in &self.removed {
            let (reason, detail) = match &r.reason {
                RemovalReason::Pattern(p) => ("pattern", p.clone()),
                RemovalReason::Constant { variance } => ("constant", format_float(*variance)),
                RemovalReason::Correlated { with, r } => ("correlated", format!("{with} (r={})", format_float(*r))),
            };
            w.write_record([r.name.as_str(), reason, detail.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shell-style match supporting `*` (any run) and `?` (one character).
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    let (mut pi, mut ni) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ni < n.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == n[ni]) {
            pi += 1;
            ni += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ni));
            pi += 1;
        } else if let Some((sp, sn)) = star {
            pi = sp + 1;
            ni = sn + 1;
            star = Some((sp, sn + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

fn mean_and_variance(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Drops excluded, constant and redundant columns, in that order.
///
/// Redundancy is resolved greedily in priority order (higher variance first,
/// ties by name): a column is dropped if it correlates at or above the
/// threshold with any column already kept.
pub fn screen_columns(table: &FeatureTable, config: &ScreenConfig) -> Result<ScreenOutcome> {
    config.validate()?;
    let mut removed = Vec::new();
    let mut candidates: Vec<(String, f64, f64)> = Vec::new();
    for (name, col) in table.columns() {
        if let Some(p) = config.exclusion_patterns.iter().find(|p| glob_match(p, name)) {
            removed.push(Removal {
                name: name.to_owned(),
                reason: RemovalReason::Pattern(p.clone()),
            });
            continue;
        }
        let (mean, variance) = if col.is_empty() {
            (0.0, 0.0)
        } else {
            mean_and_variance(col)
        };
        candidates.push((name.to_owned(), mean, variance));
    }
    candidates.retain(|(name, _, variance)| {
        if *variance <= config.constant_tolerance {
            removed.push(Removal {
                name: name.clone(),
                reason: RemovalReason::Constant { variance: *variance },
            });
            false
        } else {
            true
        }
    });

    let mut priority: Vec<usize> = (0..candidates.len()).collect();
    priority.sort_by(|&a, &b| {
        candidates[b]
            .2
            .total_cmp(&candidates[a].2)
            .then_with(|| candidates[a].0.cmp(&candidates[b].0))
    });
    let centered: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|(name, mean, variance)| {
            let col = table.column(name).expect("candidate comes from table");
            let scale = (variance * col.len() as f64).sqrt();
            col.iter().map(|x| (x - mean) / scale).collect()
        })
        .collect();
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = vec![false; candidates.len()];
    for &c in &priority {
        let hit = kept
            .par_iter()
            .map(|&k| {
                let r: f64 = centered[c].iter().zip(&centered[k]).map(|(a, b)| a * b).sum();
                (k, r)
            })
            .find_first(|(_, r)| r.abs() >= config.correlation_threshold);
        match hit {
            Some((k, r)) => {
                dropped[c] = true;
                removed.push(Removal {
                    name: candidates[c].0.clone(),
                    reason: RemovalReason::Correlated {
                        with: candidates[k].0.clone(),
                        r,
                    },
                });
            }
            None => kept.push(c),
        }
    }
    let retained: Vec<String> = candidates
        .iter()
        .zip(&dropped)
        .filter(|(_, &d)| !d)
        .map(|(c, _)| c.0.clone())
        .collect();
    if retained.is_empty() {
        return Err(Error::EmptySelection("column screening"));
    }
    Ok(ScreenOutcome { retained, removed })
}

#[derive(Debug, Clone)]
pub struct ImportanceScreen {
    /// Model over every screened column, used for the ranking.
    pub model: LogisticModel,
    pub fit: FitReport,
    /// `(name, normalized importance)` in input order.
    pub importances: Vec<(String, f64)>,
    /// Names at or above the cutoff, in input order.
    pub kept: Vec<String>,
}

impl ImportanceScreen {
    /// `column,coefficient,importance,kept` CSV.
    pub fn write_report<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["column", "coefficient", "importance", "kept"])?;
        for ((name, imp), b) in self.importances.iter().zip(&self.model.coefficients) {
            let kept = self.kept.contains(name);
            w.write_record([
                name.as_str(),
                &format_float(*b),
                &format_float(*imp),
                if kept { "1" } else { "0" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits the class-balanced model on all `names` and keeps those whose
/// normalized coefficient importance reaches `cutoff`.
pub fn importance_screen(
    train: &FeatureTable,
    names: &[String],
    cutoff: f64,
    config: &TrainConfig,
) -> Result<ImportanceScreen> {
    if names.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "importance screening needs at least 2 columns, got {}",
            names.len()
        )));
    }
    let specs: Vec<FeatureSpec> = names.iter().map(FeatureSpec::base).collect();
    let (model, fit) = LogisticModel::train(train, &specs, config)?;
    let imp = coefficient_importance(&model)?;
    let importances: Vec<(String, f64)> = names.iter().cloned().zip(imp).collect();
    let kept: Vec<String> = importances
        .iter()
        .filter(|(_, v)| *v >= cutoff)
        .map(|(n, _)| n.clone())
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptySelection("importance screening"));
    }
    Ok(ImportanceScreen {
        model,
        fit,
        importances,
        kept,
    })
}
