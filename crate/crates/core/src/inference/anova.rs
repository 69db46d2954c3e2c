//! Type III sums of squares by full-versus-reduced model comparison.

use rayon::prelude::*;
use serde::Serialize;

use super::special::f_sf;
use super::InferenceError;
use crate::linmod::{residual_sum_of_squares, DesignMatrix, LinearModelFit};

/// Significant digits kept when p-values are reported.
pub const P_VALUE_DIGITS: i32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub term: String,
    pub df: usize,
    pub sum_sq: f64,
    pub f_value: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub df_residual: usize,
    pub rss: f64,
}

impl AnovaTable {
    pub fn row(&self, term: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.term == term)
    }
}

/// Rounds `x` to `digits` significant digits.
pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", (digits - 1).max(0) as usize, x).parse().unwrap_or(x)
}

/// `***` below 0.001, `**` below 0.01, `*` below 0.05. The p-value is
/// rounded to the reported precision first so the stars agree with the
/// printed number.
pub fn significance_stars(p: f64) -> &'static str {
    let p = round_significant(p, P_VALUE_DIGITS);
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// One row per term: `F = ((RSS_reduced - RSS_full) / df) / (RSS_full / df_res)`
/// where the reduced model drops only that term's columns.
pub fn type3_anova(design: &DesignMatrix, y: &[f64], fit: &LinearModelFit) -> Result<AnovaTable, InferenceError> {
    if fit.nobs() != design.nrows() || fit.coefficients.len() != design.ncols() {
        return Err(InferenceError::FitMismatch(format!(
            "fit has {} rows and {} coefficients, design is {}x{}",
            fit.nobs(),
            fit.coefficients.len(),
            design.nrows(),
            design.ncols()
        )));
    }
    if fit.df_residual == 0 {
        return Err(InferenceError::NoResidualDf);
    }
    let df_res = fit.df_residual as f64;
    let rows = design
        .terms()
        .par_iter()
        .map(|term| {
            let reduced = design.without_term(&term.label)?;
            let rss_reduced = residual_sum_of_squares(&reduced, y)?;
            let sum_sq = (rss_reduced - fit.rss).max(0.0);
            let df = term.df();
            let f_value = if fit.rss > 0.0 {
                (sum_sq / df as f64) / (fit.rss / df_res)
            } else if sum_sq > 0.0 {
                f64::INFINITY
            } else {
                f64::NAN
            };
            let p_value = if f_value.is_nan() { f64::NAN } else { f_sf(f_value, df as f64, df_res)? };
            Ok(AnovaRow {
                term: term.label.clone(),
                df,
                sum_sq,
                f_value,
                p_value,
                stars: significance_stars(p_value).to_string(),
            })
        })
        .collect::<Result<Vec<_>, InferenceError>>()?;
    Ok(AnovaTable { rows, df_residual: fit.df_residual, rss: fit.rss })
}
