use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature centering and scaling fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviations; all strictly positive.
    pub stds: Vec<f64>,
    pub fitted_on: usize,
}

impl Standardizer {
    /// `names` is only used to label a degenerate column in the error.
    pub fn fit(columns: &[&[f64]], names: &[String]) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        if n == 0 {
            return Err(Error::InvalidParameter("cannot standardize zero rows".into()));
        }
        let mut means = Vec::with_capacity(columns.len());
        let mut stds = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter().enumerate() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            if !(std > 0.0) || !std.is_finite() {
                let name = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
                return Err(Error::DegenerateColumn(name));
            }
            means.push(mean);
            stds.push(std);
        }
        Ok(Self {
            means,
            stds,
            fitted_on: n,
        })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    #[inline]
    pub fn apply(&self, j: usize, x: f64) -> f64 {
        (x - self.means[j]) / self.stds[j]
    }

    pub fn transform_column(&self, j: usize, col: &[f64]) -> Vec<f64> {
        col.iter().map(|&x| self.apply(j, x)).collect()
    }

    pub fn transform(&self, columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
        columns
            .iter()
            .enumerate()
            .map(|(j, c)| self.transform_column(j, c))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_unit_variance() {
        let col = vec![1.0, 2.0, 3.0, 4.0];
        let s = Standardizer::fit(&[&col], &["a".into()]).unwrap();
        assert_eq!(s.means, vec![2.5]);
        let z = s.transform_column(0, &col);
        let var: f64 = z.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!((var - 1.0).abs() < 1e-15);
        assert_eq!(s.fitted_on, 4);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let col = vec![3.0; 5];
        let err = Standardizer::fit(&[&col], &["flat".into()]).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn(n) if n == "flat"));
    }
}
