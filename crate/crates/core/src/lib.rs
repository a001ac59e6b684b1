//! Generalized complex Monge-Ampere equations on flat complex tori.

// index loops mirror the matrix formulas; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod grid;
mod krylov;
pub mod operator;
pub mod solver;
pub mod symfunc;

pub use error::{Error, Result};
