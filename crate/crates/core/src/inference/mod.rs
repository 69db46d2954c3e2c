//! Hypothesis tests: F and t distribution functions and Type III ANOVA.

mod anova;
mod special;

use thiserror::Error;

use crate::linmod::ModelError;

pub use anova::{round_significant, significance_stars, type3_anova, AnovaRow, AnovaTable, P_VALUE_DIGITS};
pub use special::{f_sf, log_gamma, reg_incomplete_beta, t_cdf, t_quantile, t_sf};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("model has no residual degrees of freedom")]
    NoResidualDf,
    #[error("fit does not belong to this design: {0}")]
    FitMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
