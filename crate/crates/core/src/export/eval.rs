//! Reference evaluator for emitted expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary (('^' | '**') unary)?
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```

use std::collections::HashMap;

use super::expression::ExpressionDialect;
use crate::error::{Error, Result};

/// Evaluates `text` with the default function names (`exp`, `ln`) plus `loge`.
pub fn evaluate_expression(text: &str, bindings: &HashMap<String, f64>) -> Result<f64> {
    evaluate_in(&ExpressionDialect::default(), text, bindings)
}

/// Evaluates `text` accepting the dialect's function names as well as the
/// defaults.
pub fn evaluate_in(dialect: &ExpressionDialect, text: &str, bindings: &HashMap<String, f64>) -> Result<f64> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        bindings,
        dialect,
    };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    if v.is_nan() {
        return Err(Error::Domain("result is not a number".into()));
    }
    Ok(v)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    bindings: &'a HashMap<String, f64>,
    dialect: &'a ExpressionDialect,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<f64> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc += self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc -= self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<f64> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') if self.src.get(self.pos + 1) != Some(&b'*') => {
                    self.pos += 1;
                    acc *= self.unary()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.unary()?;
                    if d == 0.0 {
                        return Err(Error::Domain(format!("division by zero at position {at}")));
                    }
                    acc /= d;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        if self.eat("-") {
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<f64> {
        let base = self.primary()?;
        if self.eat("^") || self.eat("**") {
            let e = self.unary()?;
            // integral exponents multiply exactly like the model does
            if e.fract() == 0.0 && e.abs() <= 64.0 {
                return Ok(base.powi(e as i32));
            }
            return Ok(base.powf(e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<f64> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(")") {
                    return Err(self.syntax("expected ')'"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                return Err(self.syntax("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse().map_err(|_| Error::Syntax {
            position: start,
            message: format!("malformed number {text:?}"),
        })
    }

    fn identifier(&mut self) -> Result<f64> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(")") {
                return Err(self.syntax("expected ')'"));
            }
            let d = self.dialect;
            return if name == "exp" || name == d.exp_name {
                Ok(arg.exp())
            } else if name == "ln" || name == "loge" || name == d.ln_name {
                if arg > 0.0 {
                    Ok(arg.ln())
                } else {
                    Err(Error::Domain(format!(
                        "{name} of non-positive value {arg} at position {start}"
                    )))
                }
            } else {
                Err(Error::Syntax {
                    position: start,
                    message: format!("unknown function {name:?}"),
                })
            };
        }
        self.bindings
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnboundVariable(name.to_string()))
    }
}
