//! Brute-force reference implementations used as test oracles.
//!
//! Nothing in here shares code with the `flowrisk` library. Every routine is
//! written the slow, obvious way (row-major loops, exhaustive enumeration,
//! derivative-free search) so that it can check the optimized paths.

/// Row-major dense problem for the weighted, L2-penalized logistic objective.
#[derive(Debug, Clone)]
pub struct LogisticInstance {
    /// `rows[i][j]` is feature `j` of sample `i`.
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub weights: Vec<f64>,
    pub lambda: f64,
}

impl LogisticInstance {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// `params[0]` is the intercept, `params[1..]` the slopes.
    pub fn objective(&self, params: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((row, &y), &w) in self.rows.iter().zip(&self.labels).zip(&self.weights) {
            let mut z = params[0];
            for (x, b) in row.iter().zip(&params[1..]) {
                z += x * b;
            }
            // -ln(sigma(z)) for y=1 and -ln(1-sigma(z)) for y=0, both as softplus
            let signed = if y { -z } else { z };
            let softplus = if signed > 0.0 {
                signed + (-signed).exp().ln_1p()
            } else {
                signed.exp().ln_1p()
            };
            total += w * softplus;
        }
        let penalty: f64 = params[1..].iter().map(|b| b * b).sum();
        total + 0.5 * self.lambda * penalty
    }
}

impl LogisticInstance {
    /// Gaussian features with a noisy linear signal, class-balanced weights
    /// `n / (2 n_c)` and `lambda = 1`. Both classes are always present.
    pub fn random(seed: u64, n: usize, d: usize) -> Self {
        let mut rng = SplitMix64::new(seed);
        let truth: Vec<f64> = (0..d).map(|_| 2.0 * rng.normal()).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.normal()).collect()).collect();
        let mut labels: Vec<bool> = rows
            .iter()
            .map(|r| r.iter().zip(&truth).map(|(x, b)| x * b).sum::<f64>() + rng.normal() > 1.0)
            .collect();
        labels[0] = true;
        labels[1] = false;
        let positives = labels.iter().filter(|&&y| y).count() as f64;
        let negatives = n as f64 - positives;
        let weights = labels
            .iter()
            .map(|&y| n as f64 / (2.0 * if y { positives } else { negatives }))
            .collect();
        Self {
            rows,
            labels,
            weights,
            lambda: 1.0,
        }
    }

    /// Column-major copy of the features.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| self.rows.iter().map(|r| r[j]).collect())
            .collect()
    }
}

/// Central finite-difference gradient.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, at: &[f64], step: f64) -> Vec<f64> {
    let mut point = at.to_vec();
    (0..at.len())
        .map(|k| {
            let orig = point[k];
            point[k] = orig + step;
            let up = f(&point);
            point[k] = orig - step;
            let down = f(&point);
            point[k] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Dense grid over `[-half_width, half_width]^dim` followed by cyclic
/// golden-section coordinate polishing until a full sweep stops improving.
///
/// Only valid for smooth convex objectives, which is all it is used for.
pub fn grid_polish_minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    dim: usize,
    half_width: f64,
    grid_per_axis: usize,
) -> (Vec<f64>, f64) {
    let mut best = vec![0.0; dim];
    let mut best_value = f(&best);
    let mut counter = vec![0usize; dim];
    let step = 2.0 * half_width / (grid_per_axis - 1) as f64;
    let mut point = vec![0.0; dim];
    'grid: loop {
        for (p, &c) in point.iter_mut().zip(&counter) {
            *p = -half_width + c as f64 * step;
        }
        let v = f(&point);
        if v < best_value {
            best_value = v;
            best.copy_from_slice(&point);
        }
        for axis in 0..dim {
            counter[axis] += 1;
            if counter[axis] < grid_per_axis {
                continue 'grid;
            }
            counter[axis] = 0;
        }
        break;
    }

    let mut radius = vec![step; dim];
    for _sweep in 0..20_000 {
        let before = best_value;
        for axis in 0..dim {
            let (arg, value) = golden_section(
                |t| {
                    let mut p = best.clone();
                    p[axis] = t;
                    f(&p)
                },
                best[axis] - radius[axis],
                best[axis] + radius[axis],
            );
            if value < best_value {
                // keep the bracket roughly proportional to the last move
                radius[axis] = (2.0 * (arg - best[axis]).abs()).max(1e-9);
                best[axis] = arg;
                best_value = value;
            } else {
                radius[axis] = (radius[axis] * 0.5).max(1e-9);
            }
        }
        if before - best_value <= 1e-15 * (1.0 + best_value.abs()) && radius.iter().all(|r| *r <= 1e-6) {
            break;
        }
    }
    (best, best_value)
}

fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let (mut arg, mut value) = if fc < fd { (c, fc) } else { (d, fd) };
    for end in [lo, hi] {
        let v = f(end);
        if v < value {
            arg = end;
            value = v;
        }
    }
    (arg, value)
}

/// Average precision by enumerating every candidate threshold and counting
/// the confusion matrix from scratch at each one.
pub fn average_precision_exhaustive(scores: &[f64], labels: &[bool]) -> f64 {
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut previous_recall = 0.0;
    let mut area = 0.0;
    for &t in &thresholds {
        let mut tp = 0.0;
        let mut fp = 0.0;
        for (&s, &l) in scores.iter().zip(labels) {
            if s >= t {
                if l {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        let recall = tp / positives;
        let precision = tp / (tp + fp);
        area += (recall - previous_recall) * precision;
        previous_recall = recall;
    }
    area
}

/// Plain Newton/IRLS on the row-major problem with Gaussian elimination.
/// Used as an independent second optimizer for consistency checks.
pub fn irls(instance: &LogisticInstance, iterations: usize) -> Vec<f64> {
    let p = instance.dim() + 1;
    let mut params = vec![0.0; p];
    for _ in 0..iterations {
        let mut grad = vec![0.0; p];
        let mut hess = vec![vec![0.0; p]; p];
        for ((row, &y), &w) in instance.rows.iter().zip(&instance.labels).zip(&instance.weights) {
            let mut aug = Vec::with_capacity(p);
            aug.push(1.0);
            aug.extend_from_slice(row);
            let z: f64 = aug.iter().zip(&params).map(|(a, b)| a * b).sum();
            let prob = 1.0 / (1.0 + (-z).exp());
            let resid = prob - if y { 1.0 } else { 0.0 };
            for a in 0..p {
                grad[a] += w * resid * aug[a];
                for b in 0..p {
                    hess[a][b] += w * prob * (1.0 - prob) * aug[a] * aug[b];
                }
            }
        }
        for a in 1..p {
            grad[a] += instance.lambda * params[a];
            hess[a][a] += instance.lambda;
        }
        let step = gauss_solve(hess, grad);
        for (x, s) in params.iter_mut().zip(step) {
            *x -= s;
        }
    }
    params
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Small deterministic generator so oracle fixtures do not depend on the
/// library's RNG choices.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_average_precision_hand_case() {
        let ap = average_precision_exhaustive(&[0.9, 0.8, 0.3], &[true, false, true]);
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn grid_polish_finds_quadratic_minimum() {
        let (arg, value) = grid_polish_minimize(
            |p| (p[0] - 1.25).powi(2) + 2.0 * (p[1] + 0.5).powi(2) + 0.5 * p[0] * p[1],
            2,
            4.0,
            21,
        );
        // analytic minimum of the quadratic
        let det = 2.0 * 4.0 - 0.25;
        let x = (2.5 * 4.0 - 0.5 * -2.0) / det;
        let y = (-2.0 * 2.0 - 0.5 * 2.5) / det;
        assert!((arg[0] - x).abs() < 1e-6 && (arg[1] - y).abs() < 1e-6);
        let expect = (x - 1.25f64).powi(2) + 2.0 * (y + 0.5f64).powi(2) + 0.5 * x * y;
        assert!((value - expect).abs() < 1e-12);
    }
}
