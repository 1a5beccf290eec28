//! Target functions: the builtin `f_omega` family and parsed expressions.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::PointSet;

thread_local! {
    static BUILTINS: meval::Context<'static> = meval::Context::new();
}

/// A parsed arithmetic expression in the variables `x`, `y`, `z`.
#[derive(Clone)]
pub struct Expression {
    source: String,
    expr: meval::Expr,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Expression").field(&self.source).finish()
    }
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Expression {
    /// Parses `source`; unknown variables or functions are rejected here
    /// rather than at evaluation time.
    pub fn parse(source: &str) -> Result<Self> {
        let expr: meval::Expr = source
            .parse()
            .map_err(|e| Error::Parse(format!("expression `{source}`: {e}")))?;
        let parsed = Self {
            source: source.to_string(),
            expr,
        };
        parsed.try_eval(&[0.5, 0.5, 0.5])?;
        Ok(parsed)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_eval(&self, p: &[f64]) -> Result<f64> {
        let get = |k: usize| p.get(k).copied().unwrap_or(0.0);
        let vars = [("x", get(0)), ("y", get(1)), ("z", get(2))];
        BUILTINS.with(|ctx| {
            self.expr
                .eval_with_context((vars, ctx))
                .map_err(|e| Error::Parse(format!("expression `{}`: {e}", self.source)))
        })
    }

    /// Value at `p`; coordinates beyond the third are ignored.
    pub fn eval(&self, p: &[f64]) -> f64 {
        self.try_eval(p).unwrap_or(f64::NAN)
    }
}

/// A function to be interpolated.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetFunction {
    /// `prod_i x_i^omega (1 - x_i)^omega`, defined on the unit cube.
    Omega(f64),
    Constant(f64),
    Expression(Expression),
}

impl TargetFunction {
    pub fn omega(omega: f64) -> Self {
        TargetFunction::Omega(omega)
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            TargetFunction::Omega(w) => p.iter().map(|&x| f_omega(*w, x)).product(),
            TargetFunction::Constant(c) => *c,
            TargetFunction::Expression(e) => e.eval(p),
        }
    }

    pub fn values(&self, points: &PointSet) -> Vec<f64> {
        points.iter().map(|p| self.eval(p)).collect()
    }

    pub fn label(&self) -> String {
        match self {
            TargetFunction::Omega(w) => format!("f_omega(omega={w})"),
            TargetFunction::Constant(c) => format!("constant({c})"),
            TargetFunction::Expression(e) => e.source().to_string(),
        }
    }
}

/// `x^omega (1 - x)^omega`.
pub fn f_omega(omega: f64, x: f64) -> f64 {
    x.powf(omega) * (1.0 - x).powf(omega)
}
