// `!(v > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod classify;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod jets;
pub mod lang;
pub mod projective;
pub mod report;
