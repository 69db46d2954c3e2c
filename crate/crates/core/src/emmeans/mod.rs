//! Estimated marginal means on an equal-weight reference grid, Šidák
//! intervals, back-transformation and interval-overlap letter groups.

mod grid;
mod groups;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{t_quantile, InferenceError};
use crate::linmod::{DesignMatrix, LinearModelFit};
use crate::transform::{BoxCoxTransform, TransformError};

pub use grid::{CovariateAnchor, ReferenceGrid};
pub use groups::{format_letters, overlap_groups};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmmeansError {
    #[error("focus factor {0:?} is not a factor term of the model")]
    FocusNotInModel(String),
    #[error("fit has {fit} coefficients but the design has {design} columns")]
    DimensionMismatch { fit: usize, design: usize },
    #[error("alpha must be in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("need at least one level")]
    NoLevels,
    #[error("interval {index} is not an ordered finite pair: [{lower}, {upper}]")]
    InvalidInterval { index: usize, lower: f64, upper: f64 },
    #[error("back-transform of level {level:?} failed: {source}")]
    BackTransform { level: String, source: TransformError },
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

/// Marginal mean of one focus level on the model (transformed) scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalMean {
    pub level: String,
    pub estimate: f64,
    pub se: f64,
    pub df: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// `c^T beta` and `sqrt(c^T Cov(beta) c)` for each focus level, where `c` is
/// the equal-weight average of that level's grid rows.
pub fn marginal_means(fit: &LinearModelFit, grid: &ReferenceGrid) -> Result<Vec<MarginalMean>, EmmeansError> {
    let p = fit.coefficients.len();
    if grid.width() != p {
        return Err(EmmeansError::DimensionMismatch { fit: p, design: grid.width() });
    }
    Ok(grid
        .levels()
        .iter()
        .enumerate()
        .map(|(i, level)| {
            let c = grid.average_row(i);
            let estimate = c.dot(&fit.coefficients);
            let var = (&fit.covariance * &c).dot(&c);
            MarginalMean { level: level.clone(), estimate, se: var.max(0.0).sqrt(), df: fit.df_residual }
        })
        .collect())
}

/// Per-interval level `1 - (1 - alpha)^(1/m)`.
pub fn sidak_alpha(alpha: f64, m: usize) -> Result<f64, EmmeansError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EmmeansError::InvalidAlpha(alpha));
    }
    if m == 0 {
        return Err(EmmeansError::NoLevels);
    }
    Ok(-((1.0 - alpha).ln() / m as f64).exp_m1())
}

/// Šidák-adjusted intervals with `m = means.len()`.
pub fn sidak_cis(means: &[MarginalMean], alpha: f64) -> Result<Vec<Interval>, EmmeansError> {
    let adj = sidak_alpha(alpha, means.len())?;
    means
        .iter()
        .map(|m| {
            let half = t_quantile(1.0 - adj / 2.0, m.df as f64)? * m.se;
            Ok(Interval { lower: m.estimate - half, upper: m.estimate + half })
        })
        .collect()
}

/// One row of a marginal-means table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmmRow {
    pub level: String,
    pub emmean: f64,
    pub se: f64,
    pub df: usize,
    pub lower: f64,
    pub upper: f64,
    /// Estimate and limits on the original response scale.
    pub original: Option<OriginalScale>,
    pub groups: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginalScale {
    pub emmean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmmSummary {
    pub focus: String,
    pub alpha: f64,
    pub alpha_adjusted: f64,
    pub anchor: CovariateAnchor,
    pub rows: Vec<EmmRow>,
}

/// Inverts the Box-Cox transform on estimate and limits and removes the
/// response offset that was added before transforming.
pub fn back_transform(rows: &mut [EmmRow], transform: &BoxCoxTransform, offset: f64) -> Result<(), EmmeansError> {
    for row in rows.iter_mut() {
        let inv = |z: f64| {
            transform
                .invert_one(z)
                .map(|v| v - offset)
                .map_err(|source| EmmeansError::BackTransform { level: row.level.clone(), source })
        };
        row.original = Some(OriginalScale { emmean: inv(row.emmean)?, lower: inv(row.lower)?, upper: inv(row.upper)? });
    }
    Ok(())
}

/// Options for [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmmOptions {
    pub alpha: f64,
    pub anchor: CovariateAnchor,
}

impl Default for EmmOptions {
    fn default() -> Self {
        Self { alpha: 0.05, anchor: CovariateAnchor::default() }
    }
}

/// Grid, means, Šidák intervals, optional back-transform and letters.
pub fn summarize(
    design: &DesignMatrix,
    fit: &LinearModelFit,
    focus: &str,
    options: EmmOptions,
    transform: Option<(&BoxCoxTransform, f64)>,
) -> Result<EmmSummary, EmmeansError> {
    let grid = ReferenceGrid::new(design, focus, options.anchor)?;
    let means = marginal_means(fit, &grid)?;
    let cis = sidak_cis(&means, options.alpha)?;
    let pairs: Vec<(f64, f64)> = cis.iter().map(|c| (c.lower, c.upper)).collect();
    let letters = overlap_groups(&pairs)?;
    let mut rows: Vec<EmmRow> = means
        .into_iter()
        .zip(cis)
        .zip(letters)
        .map(|((m, ci), groups)| EmmRow {
            level: m.level,
            emmean: m.estimate,
            se: m.se,
            df: m.df,
            lower: ci.lower,
            upper: ci.upper,
            original: None,
            groups,
        })
        .collect();
    if let Some((bc, offset)) = transform {
        back_transform(&mut rows, bc, offset)?;
    }
    Ok(EmmSummary {
        focus: focus.to_string(),
        alpha: options.alpha,
        alpha_adjusted: sidak_alpha(options.alpha, rows.len())?,
        anchor: options.anchor,
        rows,
    })
}
