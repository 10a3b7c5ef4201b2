use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fselect::{FeatureKind, FeatureSpec};
use crate::linmod::LogisticModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSyntax {
    /// `x^2`
    Caret,
    /// `x**2`
    DoubleStar,
    /// `(x*x)`
    Multiply,
}

/// Target grammar of an emitted expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpressionDialect {
    pub exp_name: String,
    pub ln_name: String,
    pub power: PowerSyntax,
    /// Base column name to solver variable token.
    pub variables: BTreeMap<String, String>,
    /// Use a column's own name when it has no mapping and is a valid
    /// identifier.
    pub passthrough: bool,
}

impl Default for ExpressionDialect {
    fn default() -> Self {
        Self {
            exp_name: "exp".into(),
            ln_name: "ln".into(),
            power: PowerSyntax::Caret,
            variables: BTreeMap::new(),
            passthrough: true,
        }
    }
}

impl ExpressionDialect {
    /// CFX-style names: `exp`, `loge`, `^`.
    pub fn cfx() -> Self {
        Self {
            ln_name: "loge".into(),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let d: Self = toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("dialect profile: {e}")))?;
        for name in [&d.exp_name, &d.ln_name] {
            if !is_identifier(name) {
                return Err(Error::InvalidParameter(format!(
                    "dialect function name {name:?} is not an identifier"
                )));
            }
        }
        if d.exp_name == d.ln_name {
            return Err(Error::InvalidParameter("exp and ln names must differ".into()));
        }
        Ok(d)
    }

    /// Solver token for a base column.
    pub fn variable(&self, base: &str) -> Result<String> {
        match self.variables.get(base) {
            Some(token) if is_identifier(token) => Ok(token.clone()),
            Some(token) => Err(Error::InvalidParameter(format!(
                "variable token {token:?} is not an identifier"
            ))),
            None if self.passthrough && is_identifier(base) => Ok(base.to_string()),
            None => Err(Error::UnmappedVariable(base.to_string())),
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Shortest decimal text that parses back to the same value; scientific
/// notation outside `[1e-4, 1e15)`.
pub fn format_literal(x: f64) -> String {
    let a = x.abs();
    let body = if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{a}")
    } else {
        format!("{a:e}")
    };
    if x.is_sign_negative() && a != 0.0 {
        format!("(-{body})")
    } else {
        body
    }
}

fn transform(spec: &FeatureSpec, dialect: &ExpressionDialect) -> Result<String> {
    let a = dialect.variable(spec.operand_a())?;
    Ok(match spec.kind() {
        FeatureKind::Base => a,
        FeatureKind::Square => match dialect.power {
            PowerSyntax::Caret => format!("{a}^2"),
            PowerSyntax::DoubleStar => format!("{a}**2"),
            PowerSyntax::Multiply => format!("({a}*{a})"),
        },
        FeatureKind::Log => {
            let c = spec.shift().unwrap_or(0.0);
            format!("{}({a}+{})", dialect.ln_name, format_literal(c))
        }
        FeatureKind::Interaction => {
            let b = dialect.variable(spec.operand_b().unwrap_or_default())?;
            format!("({a}*{b})")
        }
    })
}

/// `1/(1+exp(-(z)))` with standardization and transforms inlined, so the
/// expression reads only raw base variables.
pub fn emit_expression(model: &LogisticModel, dialect: &ExpressionDialect) -> Result<String> {
    let mut z = format_literal(model.intercept);
    for (j, spec) in model.feature_specs.iter().enumerate() {
        z.push_str(&format!(
            "+{}*(({}-{})/{})",
            format_literal(model.coefficients[j]),
            transform(spec, dialect)?,
            format_literal(model.standardizer.means[j]),
            format_literal(model.standardizer.stds[j]),
        ));
    }
    Ok(format!("1/(1+{}(-({z})))", dialect.exp_name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmod::Standardizer;

    fn model(specs: Vec<FeatureSpec>, b: Vec<f64>, means: Vec<f64>, stds: Vec<f64>) -> LogisticModel {
        LogisticModel::new(
            0.0,
            b,
            specs,
            Standardizer {
                means,
                stds,
                fitted_on: 1,
            },
        )
        .unwrap()
    }

    #[test]
    fn identity_model_text() {
        let m = model(vec![FeatureSpec::base("u")], vec![1.0], vec![0.0], vec![1.0]);
        assert_eq!(
            emit_expression(&m, &ExpressionDialect::default()).unwrap(),
            "1/(1+exp(-(0+1*((u-0)/1))))"
        );
    }

    #[test]
    fn log_spec_with_dialects() {
        let m = model(vec![FeatureSpec::log("sr", 0.5)], vec![-2.0], vec![0.25], vec![3.0]);
        let text = emit_expression(&m, &ExpressionDialect::default()).unwrap();
        assert!(text.contains("ln(sr+0.5)"), "{text}");
        assert!(text.contains("(-2)*((ln(sr+0.5)-0.25)/3)"), "{text}");
        let cfx = emit_expression(&m, &ExpressionDialect::cfx()).unwrap();
        assert!(cfx.contains("loge(sr+0.5)"), "{cfx}");
    }

    #[test]
    fn power_syntax_and_mapping() {
        let m = model(
            vec![
                FeatureSpec::square("Shear Rate"),
                FeatureSpec::interaction("a", "b").unwrap(),
            ],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        );
        let mut d = ExpressionDialect::default();
        assert!(matches!(emit_expression(&m, &d), Err(Error::UnmappedVariable(n)) if n == "Shear Rate"));
        d.variables.insert("Shear Rate".into(), "sstrnr".into());
        d.power = PowerSyntax::DoubleStar;
        let text = emit_expression(&m, &d).unwrap();
        assert!(text.contains("sstrnr**2") && text.contains("(a*b)"), "{text}");
        d.passthrough = false;
        assert!(matches!(emit_expression(&m, &d), Err(Error::UnmappedVariable(n)) if n == "a"));
    }

    #[test]
    fn literals_round_trip() {
        for x in [
            0.1 + 0.2,
            1e-300,
            -5e-324,
            6.02e23,
            123456.789,
            -0.0,
            1e15,
            9.99e-5,
            1.0 / 3.0,
        ] {
            let s = format_literal(x);
            let parsed: f64 = s.trim_start_matches("(-").trim_end_matches(')').parse().unwrap();
            assert_eq!(parsed, x.abs(), "{s}");
        }
        assert_eq!(format_literal(1e-7), "1e-7");
        assert_eq!(format_literal(-2.5), "(-2.5)");
    }

    #[test]
    fn profile_from_toml() {
        let d = ExpressionDialect::from_toml(
            "ln_name = \"loge\"\npower = \"multiply\"\n[variables]\n\"Shear Rate\" = \"sstrnr\"\n",
        )
        .unwrap();
        assert_eq!(d.ln_name, "loge");
        assert_eq!(d.power, PowerSyntax::Multiply);
        assert_eq!(d.variable("Shear Rate").unwrap(), "sstrnr");
        assert!(ExpressionDialect::from_toml("exp_name = \"e x\"").is_err());
    }
}
