//! Confusion counts, precision-recall curves and PR-AUC.
//!
//! A score is predicted positive when it is at or above the threshold.
//! PR-AUC is the step-wise average precision `sum_k (R_k - R_{k-1}) * P_k`
//! over distinct thresholds in descending order; tied scores form a single
//! point.

use std::io::Write;

use crate::dataset::format_float;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fp) as f64
    }

    pub fn recall(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }
}

fn check_lengths(probs: &[f64], labels: &[bool]) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: probs.len(),
            right: labels.len(),
        });
    }
    Ok(())
}

pub fn confusion_at(probs: &[f64], labels: &[bool], threshold: f64) -> Result<Confusion> {
    check_lengths(probs, labels)?;
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= threshold, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
}

/// Points ordered by strictly decreasing threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub positives: usize,
    pub negatives: usize,
}

pub fn pr_curve(probs: &[f64], labels: &[bool]) -> Result<PrCurve> {
    check_lengths(probs, labels)?;
    if let Some(bad) = probs.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite score {bad}")));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_unstable_by(|&a, &b| probs[b].total_cmp(&probs[a]));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = probs[order[i]];
        while i < order.len() && probs[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            recall: tp as f64 / positives as f64,
            precision: tp as f64 / (tp + fp) as f64,
            threshold,
            true_positives: tp,
            false_positives: fp,
        });
    }
    Ok(PrCurve {
        points,
        positives,
        negatives: labels.len() - positives,
    })
}

impl PrCurve {
    /// Step-wise average precision.
    ///
    /// Recall steps are accumulated as integer true-positive increments and
    /// divided once at the end, so a perfect ranking gives exactly 1.
    pub fn average_precision(&self) -> f64 {
        let mut previous = 0usize;
        let mut area = 0.0;
        for p in &self.points {
            area += (p.true_positives - previous) as f64 * p.precision;
            previous = p.true_positives;
        }
        area / self.positives as f64
    }

    /// `threshold,recall,precision` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "threshold,recall,precision")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{}",
                format_float(p.threshold),
                format_float(p.recall),
                format_float(p.precision)
            )?;
        }
        Ok(())
    }
}

pub fn pr_auc(probs: &[f64], labels: &[bool]) -> Result<f64> {
    Ok(pr_curve(probs, labels)?.average_precision())
}
