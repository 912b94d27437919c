//! Parser for catalog function names.
//!
//! ```text
//! quadratic:diag:<λ1>,<λ2>,...        f(x) = ½ xᵀ diag(λ) x
//! quadratic:dense:<a11>,<a12>,...     f(x) = ½ xᵀ A x, A given row-major (n² entries)
//! cubic-perturbed:<λ1>,...:<β>        ½ xᵀ diag(λ) x + (β/6) Σ xᵢ³
//! trig-multiwell:<d>                  −Σ cos xᵢ in dimension d
//! ```

use std::sync::Arc;

use saddlelab_core::{CubicPerturbedQuadratic, DMatrix, ObjectiveFunction, QuadraticForm, TrigMultiWell};
use thiserror::Error;

/// A malformed function spec; `position` is the 1-based character column of
/// the offending token.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid function spec {spec:?} at position {position}: {message}")]
pub struct SpecError {
    pub spec: String,
    pub position: usize,
    pub message: String,
}

struct Token<'a> {
    text: &'a str,
    /// 0-based byte offset in the spec.
    offset: usize,
}

struct Parser<'a> {
    spec: &'a str,
    tokens: Vec<Token<'a>>,
}

impl<'a> Parser<'a> {
    fn new(spec: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut offset = 0;
        for text in spec.split(':') {
            tokens.push(Token { text, offset });
            offset += text.len() + 1;
        }
        Self { spec, tokens }
    }

    fn error_at(&self, byte_offset: usize, message: impl Into<String>) -> SpecError {
        SpecError {
            spec: self.spec.to_string(),
            position: self.spec[..byte_offset.min(self.spec.len())].chars().count() + 1,
            message: message.into(),
        }
    }

    fn token(&self, i: usize, what: &str) -> Result<&Token<'a>, SpecError> {
        self.tokens
            .get(i)
            .ok_or_else(|| self.error_at(self.spec.len(), format!("missing {what}")))
    }

    fn expect_len(&self, n: usize) -> Result<(), SpecError> {
        match self.tokens.get(n) {
            Some(extra) => Err(self.error_at(extra.offset, format!("unexpected token {:?}", extra.text))),
            None => Ok(()),
        }
    }

    fn number(&self, text: &str, offset: usize) -> Result<f64, SpecError> {
        let trimmed = text.trim();
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ if trimmed.is_empty() => Err(self.error_at(offset, "expected a number")),
            _ => Err(self.error_at(offset, format!("{trimmed:?} is not a finite number"))),
        }
    }

    fn numbers(&self, i: usize, what: &str) -> Result<Vec<f64>, SpecError> {
        let tok = self.token(i, what)?;
        if tok.text.trim().is_empty() {
            return Err(self.error_at(tok.offset, format!("empty {what}")));
        }
        let mut out = Vec::new();
        let mut offset = tok.offset;
        for item in tok.text.split(',') {
            out.push(self.number(item, offset)?);
            offset += item.len() + 1;
        }
        Ok(out)
    }
}

/// Builds the catalog objective named by `spec`.
pub fn parse_function_spec(spec: &str) -> Result<Arc<dyn ObjectiveFunction>, SpecError> {
    let p = Parser::new(spec);
    let head = p.token(0, "function name")?;
    let catalog_err = |offset: usize, e: saddlelab_core::CatalogError| p.error_at(offset, e.to_string());
    match head.text {
        "quadratic" => {
            let form = p.token(1, "quadratic form kind (diag or dense)")?;
            let values = p.numbers(2, "matrix entries")?;
            p.expect_len(3)?;
            let at = p.tokens[2].offset;
            let f = match form.text {
                "diag" => QuadraticForm::diagonal(&values).map_err(|e| catalog_err(at, e))?,
                "dense" => {
                    let n = (values.len() as f64).sqrt().round() as usize;
                    if n * n != values.len() {
                        return Err(p.error_at(at, format!("{} entries do not form a square matrix", values.len())));
                    }
                    QuadraticForm::new(DMatrix::from_row_slice(n, n, &values)).map_err(|e| catalog_err(at, e))?
                }
                other => {
                    return Err(p.error_at(form.offset, format!("unknown quadratic kind {other:?}, expected diag or dense")))
                }
            };
            Ok(Arc::new(f))
        }
        "cubic-perturbed" => {
            let values = p.numbers(1, "eigenvalues")?;
            let beta_tok = p.token(2, "cubic coefficient")?;
            let beta = p.number(beta_tok.text, beta_tok.offset)?;
            p.expect_len(3)?;
            let f = CubicPerturbedQuadratic::diagonal(&values, beta).map_err(|e| catalog_err(p.tokens[1].offset, e))?;
            Ok(Arc::new(f))
        }
        "trig-multiwell" => {
            let tok = p.token(1, "dimension")?;
            let d: usize = tok
                .text
                .trim()
                .parse()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| p.error_at(tok.offset, format!("{:?} is not a positive integer dimension", tok.text)))?;
            p.expect_len(2)?;
            let f = TrigMultiWell::new(d).map_err(|e| catalog_err(tok.offset, e))?;
            Ok(Arc::new(f))
        }
        other => Err(p.error_at(
            head.offset,
            format!("unknown function {other:?}, expected quadratic, cubic-perturbed or trig-multiwell"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use saddlelab_core::DVector;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn parses_catalog_grammar() {
        let f = parse_function_spec("quadratic:diag:1,-1").unwrap();
        assert_eq!(f.dim(), 2);
        assert_eq!(f.value(&v(&[2.0, 1.0])), 1.5);

        let f = parse_function_spec("trig-multiwell:2").unwrap();
        assert_eq!(f.third_derivative_bound(), Some(1.0));
        assert!((f.value(&v(&[0.0, 0.0])) + 2.0).abs() < 1e-15);

        let f = parse_function_spec("cubic-perturbed:1,-1:0.5").unwrap();
        assert_eq!(f.third_derivative_bound(), Some(0.5));
        let x = v(&[1.0, 2.0]);
        let expected = 0.5 * (1.0 - 4.0) + 0.5 / 6.0 * (1.0 + 8.0);
        assert!((f.value(&x) - expected).abs() < 1e-14);

        let f = parse_function_spec("quadratic:dense:0,1,1,0").unwrap();
        assert_eq!(f.value(&v(&[1.0, 1.0])), 1.0);
    }

    #[test]
    fn reports_offending_position() {
        let e = parse_function_spec("quadratic:diag:").err().unwrap();
        assert_eq!(e.position, 16);
        let e = parse_function_spec("quadratic:diag:1,x").err().unwrap();
        assert_eq!(e.position, 18);
        let e = parse_function_spec("quadratic:circ:1").err().unwrap();
        assert_eq!(e.position, 11);
        let e = parse_function_spec("bowl:2").err().unwrap();
        assert_eq!(e.position, 1);
        let e = parse_function_spec("trig-multiwell:0").err().unwrap();
        assert_eq!(e.position, 16);
        let e = parse_function_spec("trig-multiwell:2:3").err().unwrap();
        assert_eq!(e.position, 18);
        let e = parse_function_spec("cubic-perturbed:1,-1").err().unwrap();
        assert!(e.message.contains("missing"));
        let e = parse_function_spec("quadratic:dense:1,2,3").err().unwrap();
        assert!(e.message.contains("square"));
        let e = parse_function_spec("quadratic:dense:1,2,3,4").err().unwrap();
        assert_eq!(e.position, 17);
        assert!(parse_function_spec("quadratic:diag:1,inf").is_err());
    }
}
