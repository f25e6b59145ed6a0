//! The metric description language: expressions, their evaluation in
//! floats or jets, and metric specification files.

mod ast;
mod eval;
mod parser;
mod spec;

pub use ast::{BinOp, Dot, Expr, Func};
pub use eval::{eval, eval_f64, eval_jet, Env, EvalError, Scalar};
pub use parser::{parse_expr, ParseError, ParseErrorKind};
pub use spec::{parse_rho, parse_volume, MetricSpec, RhoSpec, VolumeSpec};
