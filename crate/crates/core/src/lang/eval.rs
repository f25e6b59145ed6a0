//! Evaluation of expression trees over plain floats or jets.

use thiserror::Error;

use super::ast::{BinOp, Dot, Expr, Func};
use crate::chart::Chart;
use crate::jets::{Jet, JetError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{function} undefined at {value}")]
    Domain { function: &'static str, value: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression refers to F but no metric value is available")]
    MissingMetric,
    #[error("expression refers to coordinate {0} beyond the chart dimension")]
    Coordinate(usize),
    #[error(transparent)]
    Jet(JetError),
}

impl From<JetError> for EvalError {
    fn from(e: JetError) -> Self {
        match e {
            JetError::Domain { function, value } => EvalError::Domain { function, value },
            JetError::DivisionByZero => EvalError::DivisionByZero,
            other => EvalError::Jet(other),
        }
    }
}

/// Number types an expression can be evaluated over.
pub trait Scalar: Clone {
    /// A constant of the same kind (and, for jets, the same context).
    fn lift(&self, c: f64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self, EvalError>;
    fn neg(&self) -> Self;
    fn powi(&self, n: i32) -> Result<Self, EvalError>;
    fn powf(&self, e: f64) -> Result<Self, EvalError>;
    fn call(&self, f: Func) -> Result<Self, EvalError>;
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        if *rhs == 0.0 {
            Err(EvalError::DivisionByZero)
        } else {
            Ok(self / rhs)
        }
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        if n < 0 && *self == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(f64::powi(*self, n))
    }
    fn powf(&self, e: f64) -> Result<Self, EvalError> {
        if !(*self > 0.0) {
            return Err(EvalError::Domain {
                function: "pow",
                value: *self,
            });
        }
        Ok(f64::powf(*self, e))
    }
    fn call(&self, f: Func) -> Result<Self, EvalError> {
        let x = *self;
        match f {
            Func::Sqrt if !(x > 0.0) => Err(EvalError::Domain { function: "sqrt", value: x }),
            Func::Log if !(x > 0.0) => Err(EvalError::Domain { function: "log", value: x }),
            Func::Sqrt => Ok(x.sqrt()),
            Func::Log => Ok(x.ln()),
            Func::Exp => Ok(x.exp()),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
        }
    }
}

impl Scalar for Jet {
    fn lift(&self, c: f64) -> Self {
        Jet::constant(self.context(), c)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        Ok(self.checked_div(rhs)?)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        Ok(Jet::powi(self, n)?)
    }
    fn powf(&self, e: f64) -> Result<Self, EvalError> {
        Ok(Jet::powf(self, e)?)
    }
    fn call(&self, f: Func) -> Result<Self, EvalError> {
        Ok(match f {
            Func::Sqrt => self.sqrt()?,
            Func::Log => self.ln()?,
            Func::Exp => self.exp(),
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
        })
    }
}

/// Values bound to the expression's free symbols.
pub struct Env<'a, T> {
    pub x: &'a [T],
    pub y: &'a [T],
    pub metric: Option<&'a T>,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = a[0].mul(&b[0]);
    for (u, v) in a.iter().zip(b).skip(1) {
        acc = acc.add(&u.mul(v));
    }
    acc
}

/// Largest exponent treated as an integer power (evaluated by repeated
/// multiplication, valid for bases of any sign).
const MAX_INTEGER_EXPONENT: f64 = 64.0;

pub fn eval<T: Scalar>(expr: &Expr, env: &Env<'_, T>) -> Result<T, EvalError> {
    let coordinate = |v: &'_ [T], i: usize| v.get(i).cloned().ok_or(EvalError::Coordinate(i + 1));
    Ok(match expr {
        Expr::Num(v) => env.x[0].lift(*v),
        Expr::X(i) => coordinate(env.x, *i)?,
        Expr::Y(i) => coordinate(env.y, *i)?,
        Expr::Metric => env.metric.cloned().ok_or(EvalError::MissingMetric)?,
        Expr::Dot(Dot::Xx) => dot(env.x, env.x),
        Expr::Dot(Dot::Xy) => dot(env.x, env.y),
        Expr::Dot(Dot::Yy) => dot(env.y, env.y),
        Expr::Neg(e) => eval(e, env)?.neg(),
        Expr::Binary(op, a, b) => {
            let (a, b) = (eval(a, env)?, eval(b, env)?);
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b)?,
            }
        }
        Expr::Pow(base, e) => {
            let base = eval(base, env)?;
            if e.fract() == 0.0 && e.abs() <= MAX_INTEGER_EXPONENT {
                base.powi(*e as i32)?
            } else {
                base.powf(*e)?
            }
        }
        Expr::Call(f, arg) => eval(arg, env)?.call(*f)?,
    })
}

/// Pointwise evaluation.
pub fn eval_f64(expr: &Expr, x: &[f64], y: &[f64], metric: Option<f64>) -> Result<f64, EvalError> {
    eval(
        expr,
        &Env {
            x,
            y,
            metric: metric.as_ref(),
        },
    )
}

/// Jet of the expression expanded at the chart's point, with `x` and `y`
/// seeded as independent variables.
pub fn eval_jet(expr: &Expr, chart: &Chart, metric: Option<&Jet>) -> Result<Jet, EvalError> {
    eval(
        expr,
        &Env {
            x: chart.x(),
            y: chart.y(),
            metric,
        },
    )
}
