//! Confounder-controlled demographic bias audits for landmark-style error
//! metrics.

// Guards like `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod emmeans;
pub mod geometry;
pub mod inference;
pub mod linmod;
pub mod report;
pub mod synth;
pub mod transform;
