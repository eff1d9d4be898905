#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod expansion;
pub mod expr;
pub mod number;
pub mod riemannian;
pub mod spray;

pub use error::{Error, Result};
