//! Synthetic feature tables with planted nonlinear ground truth.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::fselect::{materialize, FeatureSpec};
use crate::linmod::sigmoid;

pub const DEFAULT_LABEL_COLUMN: &str = "Thrombus";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// The top `round(prevalence * n)` rows by `z*` are positive.
    Quantile,
    /// `y ~ Bernoulli(sigmoid(z*))`.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnDistribution {
    StandardNormal,
    LogNormal { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTerm {
    pub spec: FeatureSpec,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedTruth {
    pub terms: Vec<PlantedTerm>,
    #[serde(default)]
    pub intercept: f64,
    pub prevalence: f64,
    pub mode: LabelMode,
    pub distribution: ColumnDistribution,
    /// Generated columns no term reads. Filled in by [`generate`].
    #[serde(default)]
    pub noise_columns: Vec<String>,
}

impl PlantedTruth {
    /// `2.0 * IX(x1,x2) + 1.5 * SQ(x3)` at 2% prevalence, quantile labels.
    pub fn interaction_and_square() -> Self {
        Self {
            terms: vec![
                PlantedTerm {
                    spec: FeatureSpec::interaction("x1", "x2").expect("distinct operands"),
                    coefficient: 2.0,
                },
                PlantedTerm {
                    spec: FeatureSpec::square("x3"),
                    coefficient: 1.5,
                },
            ],
            intercept: 0.0,
            prevalence: 0.02,
            mode: LabelMode::Quantile,
            distribution: ColumnDistribution::StandardNormal,
            noise_columns: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prevalence > 0.0 && self.prevalence < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "prevalence {} outside (0, 0.5)",
                self.prevalence
            )));
        }
        if let ColumnDistribution::LogNormal { mu, sigma } = self.distribution {
            if !(mu.is_finite() && sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "invalid lognormal parameters ({mu}, {sigma})"
                )));
            }
        }
        if !self.intercept.is_finite() || self.terms.iter().any(|t| !t.coefficient.is_finite()) {
            return Err(Error::InvalidParameter("planted coefficients must be finite".into()));
        }
        Ok(())
    }
}

pub fn column_name(j: usize) -> String {
    format!("x{}", j + 1)
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub table: FeatureTable,
    /// The input truth with `noise_columns` filled in.
    pub truth: PlantedTruth,
    /// Point-biserial correlation of each noise column with the label.
    pub noise_correlations: Vec<(String, f64)>,
    /// `3 / sqrt(n)`.
    pub correlation_bound: f64,
}

impl Synthesized {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.table.write_csv(out, DEFAULT_LABEL_COLUMN)
    }

    pub fn write_truth<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.truth).map_err(std::io::Error::from)?;
        writeln!(out)?;
        Ok(())
    }
}

/// Draws `d` base columns `x1..xd` and labels them from the planted truth.
///
/// Column `j` uses ChaCha8 stream `j + 1` of `seed` and the labels use
/// stream 0, so the output does not depend on thread scheduling.
pub fn generate(truth: &PlantedTruth, n: usize, d: usize, seed: u64) -> Result<Synthesized> {
    truth.validate()?;
    if n < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 rows, got {n}")));
    }
    let names: Vec<String> = (0..d).map(column_name).collect();
    for term in &truth.terms {
        if let Some(missing) = term.spec.base_names().find(|b| !names.iter().any(|n| n == b)) {
            return Err(Error::InvalidParameter(format!(
                "planted term {} reads {missing:?}, which is not among x1..x{d}",
                term.spec
            )));
        }
    }

    let columns: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64 + 1);
            match truth.distribution {
                ColumnDistribution::StandardNormal => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
                ColumnDistribution::LogNormal { mu, sigma } => {
                    let dist = LogNormal::new(mu, sigma).expect("validated parameters");
                    (0..n).map(|_| dist.sample(&mut rng)).collect()
                }
            }
        })
        .collect();
    let unlabeled = FeatureTable::new(names.clone(), columns, None)?;

    let specs: Vec<FeatureSpec> = truth.terms.iter().map(|t| t.spec.clone()).collect();
    let terms = materialize(&unlabeled, &specs)?;
    let mut z = vec![truth.intercept; n];
    for (col, term) in terms.iter().zip(&truth.terms) {
        for (zi, &v) in z.iter_mut().zip(col) {
            *zi += term.coefficient * v;
        }
    }

    let labels = match truth.mode {
        LabelMode::Quantile => quantile_labels(&z, truth.prevalence)?,
        LabelMode::Bernoulli => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0);
            z.iter().map(|&zi| rng.random::<f64>() < sigmoid(zi)).collect()
        }
    };

    let noise_columns: Vec<String> = names
        .iter()
        .filter(|n| !specs.iter().any(|s| s.base_names().any(|b| b == n.as_str())))
        .cloned()
        .collect();
    let noise_correlations: Vec<(String, f64)> = noise_columns
        .iter()
        .map(|name| {
            let col = unlabeled.column(name).expect("generated column");
            (name.clone(), point_biserial(col, &labels))
        })
        .collect();
    let correlation_bound = 3.0 / (n as f64).sqrt();
    for (name, r) in &noise_correlations {
        if r.abs() > correlation_bound {
            log::warn!("noise column {name} has point-biserial r = {r:.5}, above 3/sqrt(n) = {correlation_bound:.5}");
        }
    }

    let (names, columns): (Vec<String>, Vec<Vec<f64>>) =
        unlabeled.columns().map(|(n, c)| (n.to_string(), c.to_vec())).unzip();
    let table = FeatureTable::new(names, columns, Some(labels))?;
    let mut truth = truth.clone();
    truth.noise_columns = noise_columns;
    Ok(Synthesized {
        table,
        truth,
        noise_correlations,
        correlation_bound,
    })
}

fn quantile_labels(z: &[f64], prevalence: f64) -> Result<Vec<bool>> {
    let n = z.len();
    let m = (prevalence * n as f64).round() as usize;
    if m == 0 || m >= n {
        return Err(Error::UnsatisfiablePrevalence(format!("{m} positives out of {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    if z[order[m - 1]] == z[order[m]] {
        return Err(Error::UnsatisfiablePrevalence(format!(
            "score {} is tied across the positive/negative boundary",
            z[order[m]]
        )));
    }
    let mut labels = vec![false; n];
    for &i in &order[..m] {
        labels[i] = true;
    }
    Ok(labels)
}

/// Pearson correlation between a column and 0/1 labels.
pub fn point_biserial(column: &[f64], labels: &[bool]) -> f64 {
    let n = column.len() as f64;
    let mx = column.iter().sum::<f64>() / n;
    let my = labels.iter().filter(|&&y| y).count() as f64 / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in column.iter().zip(labels) {
        let dx = x - mx;
        let dy = if y { 1.0 } else { 0.0 } - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_mode_hits_exact_count() {
        let s = generate(&PlantedTruth::interaction_and_square(), 100_000, 20, 1).unwrap();
        assert_eq!(s.table.positives(), 2000);
        assert_eq!(s.table.column_names()[0], "x1");
        assert_eq!(s.truth.noise_columns.len(), 17);
        assert!(!s.truth.noise_columns.contains(&"x3".to_string()));
    }

    #[test]
    fn zero_truth_bernoulli_is_balanced() {
        let truth = PlantedTruth {
            terms: vec![],
            intercept: 0.0,
            prevalence: 0.02,
            mode: LabelMode::Bernoulli,
            distribution: ColumnDistribution::StandardNormal,
            noise_columns: vec![],
        };
        let s = generate(&truth, 100_000, 3, 9).unwrap();
        let rate = s.table.positives() as f64 / 100_000.0;
        assert!((rate - 0.5).abs() <= 0.01, "{rate}");
    }

    #[test]
    fn same_seed_same_table() {
        let t = PlantedTruth::interaction_and_square();
        let a = generate(&t, 2000, 5, 42).unwrap();
        let b = generate(&t, 2000, 5, 42).unwrap();
        let c = generate(&t, 2000, 5, 43).unwrap();
        let cols = |s: &Synthesized| s.table.columns().map(|(_, c)| c.to_vec()).collect::<Vec<_>>();
        assert_eq!(cols(&a), cols(&b));
        assert_eq!(a.table.label(), b.table.label());
        assert_ne!(cols(&a), cols(&c));
    }

    #[test]
    fn lognormal_columns_are_positive() {
        let mut t = PlantedTruth::interaction_and_square();
        t.distribution = ColumnDistribution::LogNormal { mu: 0.0, sigma: 0.5 };
        let s = generate(&t, 5000, 4, 3).unwrap();
        assert!(s.table.columns().all(|(_, c)| c.iter().all(|&x| x > 0.0)));
    }

    #[test]
    fn noise_is_uncorrelated_with_labels() {
        let s = generate(&PlantedTruth::interaction_and_square(), 50_000, 12, 5).unwrap();
        for (name, r) in &s.noise_correlations {
            assert!(r.abs() <= s.correlation_bound, "{name}: {r}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = PlantedTruth::interaction_and_square();
        assert!(generate(&t, 999, 5, 1).is_err());
        assert!(generate(&t, 5000, 2, 1).is_err());
        let mut p = t.clone();
        p.prevalence = 0.5;
        assert!(generate(&p, 5000, 5, 1).is_err());
    }

    #[test]
    fn boundary_tie_is_unsatisfiable() {
        let z = [3.0, 2.0, 2.0, 1.0];
        assert!(matches!(quantile_labels(&z, 0.25), Ok(l) if l == [true, false, false, false]));
        assert!(matches!(
            quantile_labels(&z, 0.4),
            Err(Error::UnsatisfiablePrevalence(_))
        ));
    }

    #[test]
    fn truth_json_round_trips() {
        let s = generate(&PlantedTruth::interaction_and_square(), 1000, 4, 2).unwrap();
        let mut buf = Vec::new();
        s.write_truth(&mut buf).unwrap();
        let back: PlantedTruth = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, s.truth);
    }
}
