//! Stratified test / train / validation split.
//!
//! A fixed fraction of every class goes to the test set, and the remainder is
//! divided into train and validation the same way. Per-class counts are
//! rounded with the largest-remainder rule so that each split's total hits
//! `round(fraction * n)` exactly.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.2;
const MIN_ROWS: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub seed: u64,
    pub test: Vec<usize>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    /// Share of all rows held out for the final test.
    pub test: f64,
    /// Share of the non-test rows used for validation.
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            test: DEFAULT_TEST_FRACTION,
            validation: DEFAULT_VALIDATION_FRACTION,
        }
    }
}

/// Stratified split with the default 20% / (80% x 80/20) fractions.
pub fn stratified_split(labels: &[bool], seed: u64) -> Result<SplitIndices> {
    stratified_split_with(labels, SplitFractions::default(), seed)
}

pub fn stratified_split_with(labels: &[bool], fractions: SplitFractions, seed: u64) -> Result<SplitIndices> {
    for f in [fractions.test, fractions.validation] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidParameter(format!("split fraction {f} outside (0, 1)")));
        }
    }
    if labels.len() < MIN_ROWS {
        return Err(Error::SplitTooSmall(format!(
            "{} rows, need at least {MIN_ROWS}",
            labels.len()
        )));
    }
    let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        classes[usize::from(y)].push(i);
    }
    if classes.iter().any(Vec::is_empty) {
        return Err(Error::SingleClass);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // positives first, then negatives: fixes the RNG consumption order
    for class in classes.iter_mut().rev() {
        class.shuffle(&mut rng);
    }

    let counts = [classes[0].len(), classes[1].len()];
    let test_counts = largest_remainder(counts, fractions.test);
    let rest = [counts[0] - test_counts[0], counts[1] - test_counts[1]];
    let validation_counts = largest_remainder(rest, fractions.validation);

    let mut split = SplitIndices {
        seed,
        test: Vec::new(),
        train: Vec::new(),
        validation: Vec::new(),
    };
    for (c, members) in classes.iter().enumerate() {
        let (test, rest) = members.split_at(test_counts[c]);
        let (validation, train) = rest.split_at(validation_counts[c]);
        split.test.extend_from_slice(test);
        split.validation.extend_from_slice(validation);
        split.train.extend_from_slice(train);
    }
    split.test.sort_unstable();
    split.validation.sort_unstable();
    split.train.sort_unstable();

    for (name, rows) in [
        ("test", &split.test),
        ("train", &split.train),
        ("validation", &split.validation),
    ] {
        let pos = rows.iter().filter(|&&i| labels[i]).count();
        if pos == 0 || pos == rows.len() {
            return Err(Error::SplitTooSmall(format!(
                "{name} split would not contain both classes"
            )));
        }
    }
    Ok(split)
}

/// Per-class allocation of `round(fraction * total)` rows.
///
/// Ties in the fractional part go to the positive class.
fn largest_remainder(counts: [usize; 2], fraction: f64) -> [usize; 2] {
    let total: usize = counts.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let ideal = counts.map(|c| c as f64 * fraction);
    // 1e-9 absorbs representation error such as 0.2 * 15 = 3.0000000000000004
    let mut alloc = ideal.map(|q| (q + 1e-9).floor() as usize);
    let remainders = [ideal[0] - alloc[0] as f64, ideal[1] - alloc[1] as f64];
    let mut order = [1usize, 0];
    order.sort_by(|&a, &b| {
        remainders[b]
            .partial_cmp(&remainders[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // the two fractional parts sum to less than 2, so at most one extra row per class
    let mut deficit = target.saturating_sub(alloc[0] + alloc[1]);
    for &c in &order {
        if deficit > 0 && alloc[c] < counts[c] {
            alloc[c] += 1;
            deficit -= 1;
        }
    }
    alloc
}

/// Summary row of the split manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub rows: usize,
    pub positives: usize,
    pub file: String,
}

/// Text manifest written next to the three index files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub n_rows: usize,
    pub test: SplitSummary,
    pub train: SplitSummary,
    pub validation: SplitSummary,
}

impl SplitIndices {
    pub fn manifest(&self, labels: &[bool]) -> SplitManifest {
        let summary = |rows: &[usize], file: &str| SplitSummary {
            rows: rows.len(),
            positives: rows.iter().filter(|&&i| labels[i]).count(),
            file: file.to_owned(),
        };
        SplitManifest {
            seed: self.seed,
            n_rows: labels.len(),
            test: summary(&self.test, "test.idx"),
            train: summary(&self.train, "train.idx"),
            validation: summary(&self.validation, "validation.idx"),
        }
    }
}

impl SplitManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("split manifest: {e}")))
    }
}

/// One index per line, trailing newline.
pub fn format_index_list(rows: &[usize]) -> String {
    let mut out = String::with_capacity(rows.len() * 8);
    for r in rows {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad index line {l:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn labels_with(n: usize, positives: usize) -> Vec<bool> {
        // spread positives through the index range
        (0..n).map(|i| i * positives / n != (i + 1) * positives / n).collect()
    }

    #[test]
    fn worked_example_counts() {
        let labels = labels_with(1000, 20);
        assert_eq!(labels.iter().filter(|&&y| y).count(), 20);
        let s = stratified_split(&labels, 7).unwrap();
        let pos = |rows: &[usize]| rows.iter().filter(|&&i| labels[i]).count();
        assert_eq!((s.test.len(), pos(&s.test)), (200, 4));
        assert_eq!((s.train.len(), pos(&s.train)), (640, 13));
        assert_eq!((s.validation.len(), pos(&s.validation)), (160, 3));
    }

    #[test]
    fn deterministic_for_seed() {
        let labels = labels_with(1000, 20);
        assert_eq!(
            stratified_split(&labels, 7).unwrap(),
            stratified_split(&labels, 7).unwrap()
        );
        assert_ne!(
            stratified_split(&labels, 7).unwrap(),
            stratified_split(&labels, 8).unwrap()
        );
    }

    #[test]
    fn union_is_all_rows() {
        let labels = labels_with(1000, 20);
        let s = stratified_split(&labels, 7).unwrap();
        let mut all: Vec<usize> = s.test.iter().chain(&s.train).chain(&s.validation).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_single_class_and_tiny_inputs() {
        assert!(matches!(stratified_split(&[false; 100], 1), Err(Error::SingleClass)));
        assert!(matches!(
            stratified_split(&labels_with(20, 5), 1),
            Err(Error::SplitTooSmall(_))
        ));
        // two positives cannot cover three splits
        assert!(matches!(
            stratified_split(&labels_with(100, 2), 1),
            Err(Error::SplitTooSmall(_))
        ));
    }

    #[test]
    fn manifest_round_trip() {
        let labels = labels_with(200, 30);
        let s = stratified_split(&labels, 3).unwrap();
        let m = s.manifest(&labels);
        assert_eq!(SplitManifest::from_toml(&m.to_toml()).unwrap(), m);
        assert_eq!(parse_index_list(&format_index_list(&s.test)).unwrap(), s.test);
    }

    proptest! {
        #[test]
        fn partition_and_stratification(n in 25usize..3000, pos_frac in 0.05f64..0.5, seed in any::<u64>()) {
            let positives = ((n as f64 * pos_frac) as usize).max(3);
            let labels = labels_with(n, positives);
            let s = match stratified_split(&labels, seed) {
                Ok(s) => s,
                Err(Error::SplitTooSmall(_)) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            let mut all: Vec<usize> = s.test.iter().chain(&s.train).chain(&s.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let test_target = (0.2 * n as f64).round() as usize;
            prop_assert_eq!(s.test.len(), test_target);
            prop_assert_eq!(s.validation.len(), (0.2 * (n - test_target) as f64).round() as usize);
            // largest remainder keeps each class within one row of its ideal share
            let total_pos = labels.iter().filter(|&&y| y).count() as f64;
            let test_pos = s.test.iter().filter(|&&i| labels[i]).count() as f64;
            prop_assert!((test_pos - 0.2 * total_pos).abs() <= 1.0 + 1e-9);
        }
    }
}
