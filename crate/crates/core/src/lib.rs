// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod bodyfile;
pub mod curvature;
pub mod discrete;
pub mod error;
pub mod expr;
pub mod hyperbolic;
pub mod parallel;
pub mod quadrature;
pub mod radial;
pub mod spaceform;

pub use error::{Error, Result};
