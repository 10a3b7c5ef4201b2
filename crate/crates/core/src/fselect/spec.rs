use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "BASE")]
    Base,
    #[serde(rename = "SQ")]
    Square,
    #[serde(rename = "LOG")]
    Log,
    #[serde(rename = "IX")]
    Interaction,
}

impl FeatureKind {
    pub fn tag(self) -> &'static str {
        match self {
            FeatureKind::Base => "BASE",
            FeatureKind::Square => "SQ",
            FeatureKind::Log => "LOG",
            FeatureKind::Interaction => "IX",
        }
    }
}

/// One model input derived from one or two base columns.
///
/// Interaction operands are stored in lexicographic order so that
/// `IX(a,b)` and `IX(b,a)` are the same spec. Ordering is canonical:
/// by kind (BASE < SQ < LOG < IX), then operand names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct FeatureSpec {
    kind: FeatureKind,
    a: String,
    b: Option<String>,
    shift: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    kind: FeatureKind,
    a: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shift: Option<f64>,
}

impl TryFrom<RawSpec> for FeatureSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> std::result::Result<Self, String> {
        match (raw.kind, raw.b, raw.shift) {
            (FeatureKind::Base, None, None) => Ok(Self::base(raw.a)),
            (FeatureKind::Square, None, None) => Ok(Self::square(raw.a)),
            (FeatureKind::Log, None, Some(c)) if c.is_finite() => Ok(Self::log(raw.a, c)),
            (FeatureKind::Interaction, Some(b), None) => {
                Self::interaction(raw.a, b).ok_or_else(|| "interaction of a column with itself".to_string())
            }
            (kind, _, _) => Err(format!("inconsistent operands for {} spec", kind.tag())),
        }
    }
}

impl From<FeatureSpec> for RawSpec {
    fn from(s: FeatureSpec) -> Self {
        RawSpec {
            kind: s.kind,
            a: s.a,
            b: s.b,
            shift: s.shift,
        }
    }
}

impl FeatureSpec {
    pub fn base(name: impl Into<String>) -> Self {
        Self {
            kind: FeatureKind::Base,
            a: name.into(),
            b: None,
            shift: None,
        }
    }

    pub fn square(name: impl Into<String>) -> Self {
        Self {
            kind: FeatureKind::Square,
            a: name.into(),
            b: None,
            shift: None,
        }
    }

    /// `ln(x + shift)`.
    pub fn log(name: impl Into<String>, shift: f64) -> Self {
        Self {
            kind: FeatureKind::Log,
            a: name.into(),
            b: None,
            shift: Some(shift),
        }
    }

    /// `None` when both operands are the same column.
    pub fn interaction(a: impl Into<String>, b: impl Into<String>) -> Option<Self> {
        let (a, b) = (a.into(), b.into());
        let (a, b) = match a.cmp(&b) {
            Ordering::Less => (a, b),
            Ordering::Greater => (b, a),
            Ordering::Equal => return None,
        };
        Some(Self {
            kind: FeatureKind::Interaction,
            a,
            b: Some(b),
            shift: None,
        })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn operand_a(&self) -> &str {
        &self.a
    }

    pub fn operand_b(&self) -> Option<&str> {
        self.b.as_deref()
    }

    pub fn shift(&self) -> Option<f64> {
        self.shift
    }

    /// Base columns this spec reads.
    pub fn base_names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.a.as_str()).chain(self.b.as_deref())
    }

    /// Transform applied to raw base values (`b` is ignored unless IX).
    #[inline]
    pub fn apply(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            FeatureKind::Base => a,
            FeatureKind::Square => a * a,
            FeatureKind::Log => (a + self.shift.unwrap_or(0.0)).ln(),
            FeatureKind::Interaction => a * b,
        }
    }

    fn valid(&self, a: f64, value: f64) -> bool {
        match self.kind {
            FeatureKind::Log => a + self.shift.unwrap_or(0.0) > 0.0 && value.is_finite(),
            _ => value.is_finite(),
        }
    }
}

impl PartialEq for FeatureSpec {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for FeatureSpec {}

impl PartialOrd for FeatureSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FeatureSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(&other.kind)
            .then_with(|| self.a.cmp(&other.a))
            .then_with(|| self.b.cmp(&other.b))
            .then_with(|| match (self.shift, other.shift) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                (x, y) => x.is_some().cmp(&y.is_some()),
            })
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, &self.b) {
            (FeatureKind::Base, _) => write!(f, "{}", self.a),
            (FeatureKind::Interaction, Some(b)) => write!(f, "IX({},{})", self.a, b),
            (kind, _) => write!(f, "{}({})", kind.tag(), self.a),
        }
    }
}

/// Evaluates every spec on every row of `table`. Column order follows `specs`.
pub fn materialize(table: &FeatureTable, specs: &[FeatureSpec]) -> Result<Vec<Vec<f64>>> {
    specs.par_iter().map(|spec| materialize_one(table, spec)).collect()
}

pub fn materialize_one(table: &FeatureTable, spec: &FeatureSpec) -> Result<Vec<f64>> {
    let a = table.column(&spec.a)?;
    let b = match &spec.b {
        Some(name) => Some(table.column(name)?),
        None => None,
    };
    let mut bad = 0usize;
    let values: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let v = spec.apply(x, b.map_or(0.0, |b| b[i]));
            if !spec.valid(x, v) {
                bad += 1;
            }
            v
        })
        .collect();
    if bad > 0 {
        return Err(Error::NonFiniteFeature {
            spec: spec.to_string(),
            rows: bad,
        });
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FeatureTable {
        FeatureTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![2.0, -2.0, 0.0], vec![3.0, 1.0, 5.0]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn transforms() {
        let t = table();
        let cols = materialize(
            &t,
            &[
                FeatureSpec::interaction("b", "a").unwrap(),
                FeatureSpec::square("a"),
                FeatureSpec::log("b", 1.0),
                FeatureSpec::base("a"),
            ],
        )
        .unwrap();
        assert_eq!(cols[0][0], 6.0);
        assert_eq!(cols[1][1], 4.0);
        assert_eq!(cols[2][0], 4f64.ln());
        assert_eq!(cols[3], vec![2.0, -2.0, 0.0]);
    }

    #[test]
    fn log_of_zero_shifted_by_one() {
        let t = FeatureTable::new(vec!["x".into()], vec![vec![0.0]], None).unwrap();
        assert_eq!(materialize_one(&t, &FeatureSpec::log("x", 1.0)).unwrap(), vec![0.0]);
    }

    #[test]
    fn log_out_of_domain_reports_rows() {
        let err = materialize_one(&table(), &FeatureSpec::log("a", 0.5)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteFeature { rows: 1, ref spec } if spec == "LOG(a)"));
    }

    #[test]
    fn missing_base_column() {
        assert!(matches!(
            materialize_one(&table(), &FeatureSpec::square("zz")),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn interaction_is_canonical() {
        let ab = FeatureSpec::interaction("a", "b").unwrap();
        assert_eq!(ab, FeatureSpec::interaction("b", "a").unwrap());
        assert_eq!(ab.to_string(), "IX(a,b)");
        assert!(FeatureSpec::interaction("a", "a").is_none());
    }

    #[test]
    fn canonical_order_by_kind_then_name() {
        let mut specs = [
            FeatureSpec::interaction("a", "b").unwrap(),
            FeatureSpec::log("a", 1.0),
            FeatureSpec::square("b"),
            FeatureSpec::square("a"),
            FeatureSpec::base("z"),
        ];
        specs.sort();
        let names: Vec<String> = specs.iter().map(ToString::to_string).collect();
        assert_eq!(names, ["z", "SQ(a)", "SQ(b)", "LOG(a)", "IX(a,b)"]);
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let spec = FeatureSpec::log("shear rate", 0.125);
        let text = serde_json::to_string(&spec).unwrap();
        let back: FeatureSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.shift(), Some(0.125));
        let bad = r#"{"kind":"IX","a":"x"}"#;
        assert!(serde_json::from_str::<FeatureSpec>(bad).is_err());
        let swapped: FeatureSpec = serde_json::from_str(r#"{"kind":"IX","a":"y","b":"x"}"#).unwrap();
        assert_eq!(swapped.operand_a(), "x");
    }
}
