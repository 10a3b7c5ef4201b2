use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

/// Columnar table of per-cell flow features with an optional binary label.
///
/// Constructed only through [`FeatureTable::new`], which enforces equal
/// column lengths, unique names and finite values. Immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
    n_rows: usize,
    label: Option<Vec<bool>>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, label: Option<Vec<bool>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: columns.len(),
            });
        }
        let n_rows = match (columns.first(), &label) {
            (Some(c), _) => c.len(),
            (None, Some(l)) => l.len(),
            (None, None) => 0,
        };
        let mut index = HashMap::with_capacity(names.len());
        for (i, (name, col)) in names.iter().zip(&columns).enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateColumn(name.clone()));
            }
            if col.len() != n_rows {
                return Err(Error::LengthMismatch {
                    left: col.len(),
                    right: n_rows,
                });
            }
            let bad = col.iter().filter(|v| !v.is_finite()).count();
            if bad > 0 {
                return Err(Error::NonFiniteFeature {
                    spec: name.clone(),
                    rows: bad,
                });
            }
        }
        if let Some(l) = &label {
            if l.len() != n_rows {
                return Err(Error::LengthMismatch {
                    left: l.len(),
                    right: n_rows,
                });
            }
        }
        Ok(Self {
            names,
            columns,
            index,
            n_rows,
            label,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.index
            .get(name)
            .map(|&i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.columns.iter().map(Vec::as_slice))
    }

    pub fn label(&self) -> Option<&[bool]> {
        self.label.as_deref()
    }

    /// Labels, or [`Error::Unlabeled`] for a table without a label column.
    pub fn labels(&self) -> Result<&[bool]> {
        self.label().ok_or(Error::Unlabeled)
    }

    pub fn positives(&self) -> usize {
        self.label().map_or(0, |l| l.iter().filter(|&&y| y).count())
    }

    /// Copy of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        let label = self.label.as_ref().map(|l| rows.iter().map(|&r| l[r]).collect());
        Self {
            names: self.names.clone(),
            columns,
            index: self.index.clone(),
            n_rows: rows.len(),
            label,
        }
    }

    /// Copy restricted to the named columns (label kept).
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureTable> {
        let columns = names
            .iter()
            .map(|n| self.column(n).map(<[f64]>::to_vec))
            .collect::<Result<Vec<_>>>()?;
        FeatureTable::new(names.to_vec(), columns, self.label.clone())
    }

    /// Writes the table in the ingestion dialect. The label, when present,
    /// goes last as a 0/1 column named `label_name`.
    pub fn write_csv<W: Write>(&self, writer: W, label_name: &str) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        if self.label.is_some() {
            header.push(label_name);
        }
        out.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for row in 0..self.n_rows {
            record.clear();
            record.extend(self.columns.iter().map(|c| format_float(c[row])));
            if let Some(l) = &self.label {
                record.push(if l[row] { "1".into() } else { "0".into() });
            }
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_float(value: f64) -> String {
    format!("{value:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_names() {
        let err = FeatureTable::new(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]], None).unwrap_err();
        assert!(matches!(err, Error::DuplicateColumn(n) if n == "a"));
    }

    #[test]
    fn rejects_ragged_columns() {
        let err = FeatureTable::new(vec!["a".into(), "b".into()], vec![vec![1.0], vec![2.0, 3.0]], None).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn rejects_non_finite() {
        let err = FeatureTable::new(vec!["a".into()], vec![vec![1.0, f64::NAN]], None).unwrap_err();
        assert!(matches!(err, Error::NonFiniteFeature { rows: 1, .. }));
    }

    #[test]
    fn select_rows_keeps_label_alignment() {
        let t = FeatureTable::new(
            vec!["a".into()],
            vec![vec![10.0, 20.0, 30.0]],
            Some(vec![true, false, true]),
        )
        .unwrap();
        let s = t.select_rows(&[2, 1]);
        assert_eq!(s.column("a").unwrap(), &[30.0, 20.0]);
        assert_eq!(s.label().unwrap(), &[true, false]);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1e-7] {
            assert_eq!(format_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
