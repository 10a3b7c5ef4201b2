//! Damped Newton method for the class-weighted, L2-penalized logistic loss
//!
//! ```text
//! J(b) = sum_i w_i * [ -y_i ln p_i - (1 - y_i) ln(1 - p_i) ] + lambda/2 * |b_1..d|^2
//! ```
//!
//! with `p_i = sigmoid(b_0 + x_i . b)`. The intercept is not penalized.
//! The data are column-major; every reduction walks rows in storage order
//! with fixed-width lanes or fixed row blocks summed in order, so results do
//! not depend on how rayon schedules the work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use crate::error::{Error, Result};

pub const DEFAULT_L2_STRENGTH: f64 = 1.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    Balanced,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub l2_strength: f64,
    /// Stop once the gradient max-norm is at or below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub class_weighting: ClassWeighting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_strength: DEFAULT_L2_STRENGTH,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            class_weighting: ClassWeighting::Balanced,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_strength > 0.0 && self.l2_strength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l2_strength must be > 0, got {}",
                self.l2_strength
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// `(w_pos, w_neg)` with `w_c = n / (2 n_c)`.
pub fn class_weights(labels: &[bool]) -> Result<(f64, f64)> {
    let n = labels.len();
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((n as f64 / (2.0 * n_pos as f64), n as f64 / (2.0 * n_neg as f64)))
}

/// Converged solution with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub objective: f64,
    /// Objective value after each accepted step, starting at the initial point.
    pub objective_trace: Vec<f64>,
}

/// The penalized objective over a borrowed column-major design.
///
/// Parameter vectors are laid out as `[intercept, b_1, ..., b_d]`.
pub struct Objective<'a> {
    columns: &'a [&'a [f64]],
    labels: &'a [bool],
    weights: Vec<f64>,
    lambda: f64,
}

const LANES: usize = 8;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..LANES {
            acc[k] += x[k] * y[k];
        }
    }
    lane_sum(acc) + tail
}

fn sum(a: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let chunks = a.chunks_exact(LANES);
    let tail: f64 = chunks.remainder().iter().sum();
    for x in chunks {
        for k in 0..LANES {
            acc[k] += x[k];
        }
    }
    lane_sum(acc) + tail
}

fn lane_sum(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

pub(crate) struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `w_i p_i (1 - p_i)`, the Hessian's row weights.
    pub curvature: Vec<f64>,
    pub z: Vec<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(columns: &'a [&'a [f64]], labels: &'a [bool], weights: Vec<f64>, lambda: f64) -> Result<Self> {
        let n = labels.len();
        if weights.len() != n {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: n,
            });
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: n,
            });
        }
        Ok(Self {
            columns,
            labels,
            weights,
            lambda,
        })
    }

    /// Builds per-row weights from the weighting scheme.
    pub fn weighted(
        columns: &'a [&'a [f64]],
        labels: &'a [bool],
        weighting: ClassWeighting,
        lambda: f64,
    ) -> Result<Self> {
        let weights = match weighting {
            ClassWeighting::Balanced => {
                let (wp, wn) = class_weights(labels)?;
                labels.iter().map(|&y| if y { wp } else { wn }).collect()
            }
            ClassWeighting::None => vec![1.0; labels.len()],
        };
        Self::new(columns, labels, weights, lambda)
    }

    pub fn dim(&self) -> usize {
        self.columns.len() + 1
    }

    fn linear_predictor(&self, params: &[f64]) -> Vec<f64> {
        let mut z = vec![params[0]; self.labels.len()];
        for (col, &b) in self.columns.iter().zip(&params[1..]) {
            for (zi, &x) in z.iter_mut().zip(col.iter()) {
                *zi += b * x;
            }
        }
        z
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        0.5 * self.lambda * params[1..].iter().map(|b| b * b).sum::<f64>()
    }

    fn loss_at(&self, z: &[f64]) -> f64 {
        self.loss_terms(z).0
    }

    /// Summed weighted loss and `exp(-|z_i|)`, which the sigmoid reuses.
    fn loss_terms(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let mut decay = Vec::with_capacity(z.len());
        let mut per_row = Vec::with_capacity(z.len());
        for ((&z, &y), &w) in z.iter().zip(self.labels).zip(&self.weights) {
            let e = (-z.abs()).exp();
            let s = if y { -z } else { z };
            per_row.push(w * (s.max(0.0) + e.ln_1p()));
            decay.push(e);
        }
        (sum(&per_row), decay)
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        self.loss_at(&self.linear_predictor(params)) + self.penalty(params)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let z = self.linear_predictor(params);
        let resid = self.residuals(&z);
        self.gradient_from(params, &resid)
    }

    fn residuals(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.labels)
            .zip(&self.weights)
            .map(|((&z, &y), &w)| w * (sigmoid(z) - if y { 1.0 } else { 0.0 }))
            .collect()
    }

    fn gradient_from(&self, params: &[f64], resid: &[f64]) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.dim());
        g.push(sum(resid));
        g.extend(
            self.columns
                .iter()
                .zip(&params[1..])
                .map(|(col, &b)| dot(resid, col) + self.lambda * b),
        );
        g
    }

    pub(crate) fn evaluate(&self, params: &[f64]) -> Evaluation {
        let z = self.linear_predictor(params);
        let (loss, decay) = self.loss_terms(&z);
        self.evaluate_at(params, z, &decay, loss + self.penalty(params))
    }

    /// Gradient and curvature at `params`, given its linear predictor, the
    /// matching `exp(-|z|)` and the objective value.
    fn evaluate_at(&self, params: &[f64], z: Vec<f64>, decay: &[f64], value: f64) -> Evaluation {
        let mut resid = Vec::with_capacity(z.len());
        let mut curvature = Vec::with_capacity(z.len());
        for (((&z, &e), &y), &w) in z.iter().zip(decay).zip(self.labels).zip(&self.weights) {
            let p = if z >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            resid.push(w * (p - if y { 1.0 } else { 0.0 }));
            curvature.push(w * p * (1.0 - p));
        }
        Evaluation {
            value,
            gradient: self.gradient_from(params, &resid),
            curvature,
            z,
        }
    }

    /// Row-major Hessian for the given row weights.
    ///
    /// Rows whose curvature is below `CURVATURE_FLOOR` times the largest are
    /// left out. The matrix only steers the Newton direction, so this trades
    /// a relative error of that order for far fewer rows on nearly
    /// separable data.
    pub(crate) fn hessian(&self, curvature: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let top = curvature.iter().fold(0.0, |m: f64, &h| m.max(h));
        let rows: Vec<usize> = (0..curvature.len())
            .filter(|&i| curvature[i] > 0.0 && curvature[i] >= CURVATURE_FLOOR * top)
            .collect();
        // Blocks are reduced in order, so the result does not depend on the
        // thread count.
        let partial: Vec<Vec<f64>> = rows
            .par_chunks(HESSIAN_BLOCK)
            .map(|block| {
                let m = block.len();
                let mut x = Vec::with_capacity(m * d);
                x.resize(m, 1.0);
                for col in self.columns {
                    x.extend(block.iter().map(|&i| col[i]));
                }
                let mut scaled = Vec::with_capacity(m * d);
                for j in 0..d {
                    scaled.extend(x[j * m..(j + 1) * m].iter().zip(block).map(|(v, &i)| v * curvature[i]));
                }
                let mut out = vec![0.0; d * d];
                // SAFETY: `x` and `scaled` are both m x d column-major and
                // `out` is d x d row-major.
                unsafe {
                    matrixmultiply::dgemm(
                        d,
                        m,
                        d,
                        1.0,
                        x.as_ptr(),
                        m as isize,
                        1,
                        scaled.as_ptr(),
                        1,
                        m as isize,
                        0.0,
                        out.as_mut_ptr(),
                        d as isize,
                        1,
                    );
                }
                out
            })
            .collect();
        let mut hessian = vec![0.0; d * d];
        for a in 0..d {
            for b in a..d {
                let v: f64 = partial.iter().map(|p| p[a * d + b]).sum();
                hessian[a * d + b] = v;
                hessian[b * d + a] = v;
            }
        }
        for a in 1..d {
            hessian[a * d + a] += self.lambda;
        }
        hessian
    }
}

const HESSIAN_BLOCK: usize = 8192;
const CURVATURE_FLOOR: f64 = 1e-8;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// In-place Cholesky solve of `h x = rhs`; `None` when `h` is not numerically
/// positive definite.
fn cholesky_solve(h: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let d = rhs.len();
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = h[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..d {
        for k in 0..i {
            y[i] -= l[i * d + k] * y[k];
        }
        y[i] /= l[i * d + i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            y[i] -= l[k * d + i] * y[k];
        }
        y[i] /= l[i * d + i];
    }
    Some(y)
}

fn newton_direction(hessian: &[f64], gradient: &[f64]) -> Vec<f64> {
    let d = gradient.len();
    let neg: Vec<f64> = gradient.iter().map(|g| -g).collect();
    if let Some(step) = cholesky_solve(hessian, &neg) {
        return step;
    }
    // saturated curvature: damp the diagonal until it factors
    let scale = (0..d).map(|i| hessian[i * d + i].abs()).fold(1e-300, f64::max);
    let mut damping = 1e-12 * scale;
    loop {
        let mut h = hessian.to_vec();
        for i in 0..d {
            h[i * d + i] += damping;
        }
        if let Some(step) = cholesky_solve(&h, &neg) {
            return step;
        }
        damping *= 10.0;
        if !damping.is_finite() {
            return neg;
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-18;
const NEGLIGIBLE_DECREASE: f64 = 1e3 * f64::EPSILON;
/// A full step that shrinks the gradient max-norm at least this much keeps
/// the current Hessian for the next step. So does one whose rate, repeated
/// once more, would reach the tolerance.
const HESSIAN_REUSE: f64 = 0.01;

/// Minimizes the objective from `b = 0`.
///
/// `columns` should already be standardized; the solver itself does not
/// rescale anything.
pub fn fit(columns: &[&[f64]], labels: &[bool], config: &TrainConfig) -> Result<Fit> {
    config.validate()?;
    let objective = Objective::weighted(columns, labels, config.class_weighting, config.l2_strength)?;
    minimize(&objective, config)
}

/// Like [`fit`], starting from `start = [intercept, b_1, ..., b_d]`.
pub fn fit_from(columns: &[&[f64]], labels: &[bool], config: &TrainConfig, start: &[f64]) -> Result<Fit> {
    fit_hinted(columns, labels, config, start, None).map(|(f, _)| f)
}

/// [`fit_from`] whose first Newton step uses `hessian` (row-major, from a
/// closely related problem) instead of computing one. Also returns the last
/// Hessian used.
pub(crate) fn fit_hinted(
    columns: &[&[f64]],
    labels: &[bool],
    config: &TrainConfig,
    start: &[f64],
    hessian: Option<Vec<f64>>,
) -> Result<(Fit, Vec<f64>)> {
    config.validate()?;
    let objective = Objective::weighted(columns, labels, config.class_weighting, config.l2_strength)?;
    minimize_hinted(&objective, config, start, hessian)
}

pub fn minimize(objective: &Objective<'_>, config: &TrainConfig) -> Result<Fit> {
    minimize_from(objective, config, &vec![0.0; objective.dim()])
}

pub fn minimize_from(objective: &Objective<'_>, config: &TrainConfig, start: &[f64]) -> Result<Fit> {
    minimize_hinted(objective, config, start, None).map(|(f, _)| f)
}

// The Hessian only shapes the search direction: steps are accepted on the
// exact objective and convergence is judged on the exact gradient, so a
// reused or borrowed Hessian changes the path but not the minimizer.
fn minimize_hinted(
    objective: &Objective<'_>,
    config: &TrainConfig,
    start: &[f64],
    hint: Option<Vec<f64>>,
) -> Result<(Fit, Vec<f64>)> {
    let dim = objective.dim();
    if start.len() != dim {
        return Err(Error::LengthMismatch {
            left: start.len(),
            right: dim,
        });
    }
    if let Some(h) = &hint {
        if h.len() != dim * dim {
            return Err(Error::LengthMismatch {
                left: h.len(),
                right: dim * dim,
            });
        }
    }
    let mut params = start.to_vec();
    let mut eval = objective.evaluate(&params);
    let mut hint = hint;
    // a start worse than the origin is no head start
    let origin = std::f64::consts::LN_2 * objective.weights.iter().sum::<f64>();
    if eval.value > origin && params.iter().any(|&b| b != 0.0) {
        params.iter_mut().for_each(|b| *b = 0.0);
        eval = objective.evaluate(&params);
        hint = None;
    }
    let mut hessian = match hint {
        Some(h) => h,
        None => objective.hessian(&eval.curvature),
    };
    let mut trace = vec![eval.value];
    for iteration in 0..=config.max_iterations {
        let gnorm = max_abs(&eval.gradient);
        if !gnorm.is_finite() || !eval.value.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iteration,
                gradient_norm: gnorm,
            });
        }
        if gnorm <= config.tolerance {
            let fit = Fit {
                intercept: params[0],
                coefficients: params[1..].to_vec(),
                iterations: iteration,
                gradient_norm: gnorm,
                objective: eval.value,
                objective_trace: trace,
            };
            return Ok((fit, hessian));
        }
        if iteration == config.max_iterations {
            return Err(Error::NonConvergence {
                iterations: iteration,
                gradient_norm: gnorm,
            });
        }

        let direction = newton_direction(&hessian, &eval.gradient);
        let slope: f64 = direction.iter().zip(&eval.gradient).map(|(a, b)| a * b).sum();
        // z along the ray is affine in the step length
        let mut dz = vec![direction[0]; eval.z.len()];
        for (col, &b) in objective.columns.iter().zip(&direction[1..]) {
            for (v, &x) in dz.iter_mut().zip(col.iter()) {
                *v += b * x;
            }
        }
        let value_at = |alpha: f64| {
            let trial: Vec<f64> = params.iter().zip(&direction).map(|(p, s)| p + alpha * s).collect();
            let z: Vec<f64> = eval.z.iter().zip(&dz).map(|(z, dz)| z + alpha * dz).collect();
            let (loss, decay) = objective.loss_terms(&z);
            let v = loss + objective.penalty(&trial);
            (trial, z, decay, v)
        };

        let mut accepted = None;
        // Once the predicted decrease is below the rounding error of the
        // summed loss, function values cannot rank trial points; the Newton
        // decrement is then tiny and the full step is safe.
        if -slope <= NEGLIGIBLE_DECREASE * eval.value.abs().max(1.0) {
            let (trial, z, decay, v) = value_at(1.0);
            if v.is_finite() {
                accepted = Some((1.0, trial, z, decay, v));
            }
        }
        let mut alpha = 1.0;
        while accepted.is_none() && alpha >= MIN_STEP {
            let (trial, z, decay, v) = value_at(alpha);
            if v <= eval.value + ARMIJO * alpha * slope {
                accepted = Some((alpha, trial, z, decay, v));
                break;
            }
            // minimizer of the quadratic through J(0), J'(0) and J(alpha),
            // kept within [alpha/10, alpha/2]
            let bend = v - eval.value - slope * alpha;
            let guess = if bend.is_finite() && bend > 0.0 {
                -slope * alpha * alpha / (2.0 * bend)
            } else {
                0.5 * alpha
            };
            alpha = guess.clamp(0.1 * alpha, 0.5 * alpha);
        }
        let Some((step, next, z, decay, v)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iteration,
                gradient_norm: gnorm,
            });
        };
        eval = objective.evaluate_at(&next, z, &decay, v);
        params = next;
        trace.push(eval.value);
        let next_norm = max_abs(&eval.gradient);
        let rate = next_norm / gnorm;
        let fast = step == 1.0 && (rate <= HESSIAN_REUSE || next_norm * rate <= config.tolerance);
        if !fast && next_norm > config.tolerance {
            hessian = objective.hessian(&eval.curvature);
        }
    }
    unreachable!("loop returns on the final iteration")
}

#[cfg(test)]
mod tests {
    use flowrisk_testkit::{central_difference, SplitMix64};

    use super::*;

    fn random_problem(rng: &mut SplitMix64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
        let cols: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.normal()).collect()).collect();
        let mut labels: Vec<bool> = (0..n).map(|i| cols[0][i] + rng.normal() > 0.8).collect();
        labels[0] = true;
        labels[1] = false;
        (cols, labels)
    }

    #[test]
    fn weights_balance_classes() {
        let labels: Vec<bool> = (0..100).map(|i| i < 2).collect();
        let (wp, wn) = class_weights(&labels).unwrap();
        assert_eq!(wp, 25.0);
        assert!((wn - 100.0 / 196.0).abs() < 1e-15);
        let half: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        assert_eq!(class_weights(&half).unwrap(), (1.0, 1.0));
        assert!(matches!(class_weights(&[true, true]), Err(Error::SingleClass)));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..10 {
            let (cols, labels) = random_problem(&mut rng, 200, 3);
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let obj = Objective::weighted(&refs, &labels, ClassWeighting::Balanced, 0.7).unwrap();
            let params: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let analytic = obj.gradient(&params);
            let numeric = central_difference(|p| obj.value(p), &params, 1e-6);
            for (a, n) in analytic.iter().zip(&numeric) {
                assert!((a - n).abs() <= 1e-5 * a.abs().max(1.0), "{a} vs {n}");
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let mut rng = SplitMix64::new(5);
        let (cols, labels) = random_problem(&mut rng, 150, 2);
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let obj = Objective::weighted(&refs, &labels, ClassWeighting::None, 1.3).unwrap();
        let params = [0.3, -0.4, 0.9];
        let h = obj.hessian(&obj.evaluate(&params).curvature);
        for k in 0..3 {
            let numeric = central_difference(|p| obj.gradient(p)[k], &params, 1e-6);
            for j in 0..3 {
                assert!((h[k * 3 + j] - numeric[j]).abs() <= 1e-5 * h[k * 3 + j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_zero_column_balanced_labels_gives_zero() {
        let col = vec![0.0; 40];
        let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let refs = [col.as_slice()];
        let f = fit(&refs, &labels, &TrainConfig::default()).unwrap();
        assert_eq!(f.intercept, 0.0);
        assert_eq!(f.coefficients, vec![0.0]);
    }

    #[test]
    fn huge_penalty_shrinks_slopes() {
        let mut rng = SplitMix64::new(9);
        let (cols, labels) = random_problem(&mut rng, 300, 2);
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let cfg = TrainConfig {
            l2_strength: 1e8,
            class_weighting: ClassWeighting::None,
            ..TrainConfig::default()
        };
        let f = fit(&refs, &labels, &cfg).unwrap();
        let norm = f.coefficients.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(norm <= 1e-3);
        let prevalence = labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64;
        let logit = (prevalence / (1.0 - prevalence)).ln();
        assert!((f.intercept - logit).abs() < 1e-3, "{} vs {logit}", f.intercept);
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = SplitMix64::new(77);
        let (cols, labels) = random_problem(&mut rng, 500, 3);
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let f = fit(&refs, &labels, &TrainConfig::default()).unwrap();
        for w in f.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 64.0 * f64::EPSILON * w[0].abs());
        }
        assert!(f.gradient_norm <= 1e-8);
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = SplitMix64::new(3);
        let (cols, labels) = random_problem(&mut rng, 200, 2);
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let cfg = TrainConfig {
            max_iterations: 1,
            ..TrainConfig::default()
        };
        assert!(matches!(
            fit(&refs, &labels, &cfg),
            Err(Error::NonConvergence { iterations: 1, .. })
        ));
    }

    #[test]
    fn row_order_does_not_matter() {
        let mut rng = SplitMix64::new(1234);
        let (cols, labels) = random_problem(&mut rng, 400, 3);
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let a = fit(&refs, &labels, &TrainConfig::default()).unwrap();
        let perm: Vec<usize> = (0..400).map(|i| (i * 157) % 400).collect();
        let pcols: Vec<Vec<f64>> = cols.iter().map(|c| perm.iter().map(|&i| c[i]).collect()).collect();
        let plabels: Vec<bool> = perm.iter().map(|&i| labels[i]).collect();
        let prefs: Vec<&[f64]> = pcols.iter().map(Vec::as_slice).collect();
        let b = fit(&prefs, &plabels, &TrainConfig::default()).unwrap();
        assert!((a.intercept - b.intercept).abs() <= 1e-10);
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() <= 1e-10);
        }
    }
}
