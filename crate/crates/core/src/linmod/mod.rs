//! Main-effects linear models: design assembly with sum-to-zero factor
//! contrasts and least-squares fitting by pivoted QR.

mod design;
mod qr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::data::DataError;
use crate::transform::TransformError;

pub use design::{
    build_design, build_design_with, Contrasts, DesignMatrix, DesignedModel, LevelSubset, ModelSpec, ResponseKind,
    Term, TermColumns, TermEncoding,
};
pub use qr::{QrFactorization, RANK_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("term {0:?} appears more than once")]
    DuplicateTerm(String),
    #[error("variable {0:?} is not declared in the dataset")]
    UnknownVariable(String),
    #[error("term {0:?} is not in the model")]
    UnknownTerm(String),
    #[error("level {level:?} is not in the taxonomy of {factor:?}")]
    UnknownLevel { factor: String, level: String },
    #[error("response offset must be finite and non-negative, got {0}")]
    InvalidOffset(f64),
    #[error("model {0:?} has no complete-case rows")]
    NoRows(String),
    #[error("factor {factor:?} has {observed} observed level(s); at least 2 are needed")]
    FactorCollapsed { factor: String, observed: usize },
    #[error("design is rank deficient: term {term:?} is linearly dependent on earlier columns")]
    RankDeficient { term: String },
    #[error("no residual degrees of freedom ({n} rows, {p} columns)")]
    NoResidualDf { n: usize, p: usize },
    #[error("response length {response} does not match {rows} design rows")]
    LengthMismatch { rows: usize, response: usize },
    #[error("sample {sample_id:?}: response does not support mode {expected:?}")]
    ResponseMismatch { sample_id: String, expected: ResponseKind },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Least-squares fit with its inferential by-products.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelFit {
    pub coefficients: DVector<f64>,
    pub rss: f64,
    pub df_residual: usize,
    /// `rss / df_residual`.
    pub sigma2: f64,
    /// `sigma2 * (X^T X)^{-1}`.
    pub covariance: DMatrix<f64>,
    pub r_squared: f64,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
}

impl LinearModelFit {
    pub fn nobs(&self) -> usize {
        self.fitted.len()
    }

    pub fn standard_errors(&self) -> DVector<f64> {
        self.covariance.diagonal().map(f64::sqrt)
    }
}

/// Fits `y ~ X` by column-pivoted Householder QR.
pub fn fit_ols(design: &DesignMatrix, y: &[f64]) -> Result<LinearModelFit, ModelError> {
    let x = design.matrix();
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(ModelError::LengthMismatch { rows: n, response: y.len() });
    }
    let qr = QrFactorization::new(x);
    if let Some(&col) = qr.dependent_columns().first() {
        return Err(ModelError::RankDeficient { term: design.column_owner(col).to_string() });
    }
    if n <= p {
        return Err(ModelError::NoResidualDf { n, p });
    }

    let coefficients = qr.solve(y);
    let yv = DVector::from_column_slice(y);
    let fitted = x * &coefficients;
    let residuals = &yv - &fitted;
    let rss = residuals.norm_squared();
    let df_residual = n - p;
    let sigma2 = rss / df_residual as f64;
    let covariance = qr.unscaled_covariance() * sigma2;
    let mean = yv.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };

    Ok(LinearModelFit { coefficients, rss, df_residual, sigma2, covariance, r_squared, fitted, residuals })
}

/// Residual sum of squares of `y` on `design`, with the same rank check
/// as [`fit_ols`].
pub fn residual_sum_of_squares(design: &DesignMatrix, y: &[f64]) -> Result<f64, ModelError> {
    let qr = QrFactorization::new(design.matrix());
    if let Some(&col) = qr.dependent_columns().first() {
        return Err(ModelError::RankDeficient { term: design.column_owner(col).to_string() });
    }
    if y.len() != design.nrows() {
        return Err(ModelError::LengthMismatch { rows: design.nrows(), response: y.len() });
    }
    Ok(qr.residual_sum_of_squares(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualDiagnostics {
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Moment skewness `m3 / m2^1.5` and excess kurtosis `m4 / m2^2 - 3` of the
/// residuals. Both are NaN when the residuals are constant.
pub fn residual_diagnostics(fit: &LinearModelFit) -> ResidualDiagnostics {
    moment_shape(fit.residuals.as_slice())
}

pub(crate) fn moment_shape(values: &[f64]) -> ResidualDiagnostics {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return ResidualDiagnostics { skewness: f64::NAN, excess_kurtosis: f64::NAN };
    }
    ResidualDiagnostics { skewness: m3 / m2.powf(1.5), excess_kurtosis: m4 / (m2 * m2) - 3.0 }
}
