//! Response and covariate transformations.
//!
//! The response is Box-Cox transformed with the power chosen by maximizing
//! the profile log-likelihood of the regression it will enter:
//!
//! ```text
//! l(lambda) = -(n/2) ln(RSS(lambda)/n) + (lambda - 1) * sum(ln y_i)
//! ```
//!
//! where `RSS(lambda)` is the residual sum of squares of the transformed
//! response regressed on the design matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linmod::QrFactorization;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("Box-Cox needs strictly positive values; element {index} is {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("element {index} ({value}) is outside the inverse Box-Cox domain for lambda = {lambda}")]
    OutOfDomain { index: usize, value: f64, lambda: f64 },
    #[error("covariate {name:?}: reciprocal transform needs positive values; element {index} is {value}")]
    NonPositiveCovariate { name: String, index: usize, value: f64 },
    #[error("invalid lambda search interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("design matrix for the lambda search is rank deficient")]
    RankDeficient,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("input has zero variance")]
    ZeroVariance,
}

/// Box-Cox transform of each element: `(y^lambda - 1)/lambda`, or `ln y` at
/// `lambda = 0`.
pub fn boxcox_apply(y: &[f64], lambda: f64) -> Result<Vec<f64>, TransformError> {
    y.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 && value.is_finite() {
                Ok(boxcox_scalar(value, lambda))
            } else {
                Err(TransformError::NonPositive { index, value })
            }
        })
        .collect()
}

fn boxcox_scalar(y: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        y.ln()
    } else {
        (lambda * y.ln()).exp_m1() / lambda
    }
}

/// Exact inverse of [`boxcox_apply`].
pub fn boxcox_invert(z: &[f64], lambda: f64) -> Result<Vec<f64>, TransformError> {
    z.iter()
        .enumerate()
        .map(|(index, &value)| invert_scalar(value, lambda).ok_or(TransformError::OutOfDomain { index, value, lambda }))
        .collect()
}

fn invert_scalar(z: f64, lambda: f64) -> Option<f64> {
    if !z.is_finite() {
        return None;
    }
    if lambda == 0.0 {
        return Some(z.exp());
    }
    let t = lambda * z;
    if t <= -1.0 {
        return None;
    }
    let y = (t.ln_1p() / lambda).exp();
    (y > 0.0 && y.is_finite()).then_some(y)
}

/// Search settings for [`fit_boxcox_lambda`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoxCoxSettings {
    pub interval: (f64, f64),
    pub tolerance: f64,
}

impl Default for BoxCoxSettings {
    fn default() -> Self {
        Self { interval: (-2.0, 3.0), tolerance: 1e-5 }
    }
}

/// A fitted (or fixed) Box-Cox power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCoxTransform {
    pub lambda: f64,
    /// Profile log-likelihood at `lambda`; NaN for a fixed transform.
    pub log_likelihood: f64,
    pub interval: (f64, f64),
}

impl BoxCoxTransform {
    /// A transform with a given power, not fitted to data.
    pub fn fixed(lambda: f64) -> Self {
        Self { lambda, log_likelihood: f64::NAN, interval: (lambda, lambda) }
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>, TransformError> {
        boxcox_apply(y, self.lambda)
    }

    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>, TransformError> {
        boxcox_invert(z, self.lambda)
    }

    pub fn invert_one(&self, z: f64) -> Result<f64, TransformError> {
        invert_scalar(z, self.lambda).ok_or(TransformError::OutOfDomain { index: 0, value: z, lambda: self.lambda })
    }
}

/// Profile log-likelihood of the Box-Cox power for a fixed design.
///
/// The design is factorized once; each evaluation only transforms the
/// response and applies the stored reflections.
pub struct BoxCoxProfile {
    qr: QrFactorization,
    y: Vec<f64>,
    sum_log_y: f64,
}

impl BoxCoxProfile {
    pub fn new(y: &[f64], design: &DMatrix<f64>) -> Result<Self, TransformError> {
        if y.len() != design.nrows() {
            return Err(TransformError::LengthMismatch { left: y.len(), right: design.nrows() });
        }
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(TransformError::NonPositive { index, value });
        }
        let qr = QrFactorization::new(design);
        if !qr.is_full_rank() {
            return Err(TransformError::RankDeficient);
        }
        if y.len() <= design.ncols() {
            return Err(TransformError::TooShort { needed: design.ncols() + 1, got: y.len() });
        }
        let sum_log_y = y.iter().map(|v| v.ln()).sum();
        Ok(Self { qr, y: y.to_vec(), sum_log_y })
    }

    pub fn log_likelihood(&self, lambda: f64) -> f64 {
        let n = self.y.len() as f64;
        let z: Vec<f64> = self.y.iter().map(|&v| boxcox_scalar(v, lambda)).collect();
        let rss = self.qr.residual_sum_of_squares(&z);
        -0.5 * n * (rss / n).ln() + (lambda - 1.0) * self.sum_log_y
    }
}

const GRID_INTERVALS: usize = 40;

/// Maximum-likelihood Box-Cox power for `y` regressed on `design`.
///
/// A coarse grid over the interval brackets the maximum, which is then
/// refined by golden-section search until the bracket is narrower than
/// `settings.tolerance`. The interval endpoints are always candidates.
pub fn fit_boxcox_lambda(
    y: &[f64],
    design: &DMatrix<f64>,
    settings: &BoxCoxSettings,
) -> Result<BoxCoxTransform, TransformError> {
    let (lo, hi) = settings.interval;
    if !(lo < hi && lo.is_finite() && hi.is_finite() && settings.tolerance > 0.0) {
        return Err(TransformError::InvalidInterval { lo, hi });
    }
    let profile = BoxCoxProfile::new(y, design)?;
    let ll = |l: f64| {
        let v = profile.log_likelihood(l);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let step = (hi - lo) / GRID_INTERVALS as f64;
    let grid: Vec<f64> = (0..=GRID_INTERVALS).map(|i| lo + step * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&l| ll(l)).collect();
    let best = (0..grid.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(GRID_INTERVALS)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (ll(c), ll(d));
    while (b - a).abs() > settings.tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ll(d);
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [(mid, ll(mid)), (grid[best], values[best]), (lo, values[0]), (hi, values[GRID_INTERVALS])];
    let (lambda, log_likelihood) =
        candidates.into_iter().fold((f64::NAN, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    Ok(BoxCoxTransform { lambda, log_likelihood, interval: (lo, hi) })
}

/// Transform applied to a numeric covariate before it enters a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateTransform {
    #[default]
    Identity,
    /// `f(x) = 1/x`; requires strictly positive values.
    Reciprocal,
}

impl CovariateTransform {
    /// Transforms one value without domain checks.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CovariateTransform::Identity => x,
            CovariateTransform::Reciprocal => 1.0 / x,
        }
    }

    pub fn apply_all(&self, name: &str, values: &[f64]) -> Result<Vec<f64>, TransformError> {
        values
            .iter()
            .enumerate()
            .map(|(index, &value)| match self {
                CovariateTransform::Reciprocal if value <= 0.0 => {
                    Err(TransformError::NonPositiveCovariate { name: name.to_string(), index, value })
                }
                _ => Ok(self.eval(value)),
            })
            .collect()
    }
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(u: &[f64], v: &[f64]) -> Result<f64, TransformError> {
    if u.len() != v.len() {
        return Err(TransformError::LengthMismatch { left: u.len(), right: v.len() });
    }
    if u.len() < 2 {
        return Err(TransformError::TooShort { needed: 2, got: u.len() });
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        suv += da * db;
        suu += da * da;
        svv += db * db;
    }
    if suu == 0.0 || svv == 0.0 {
        return Err(TransformError::ZeroVariance);
    }
    Ok((suv / (suu.sqrt() * svv.sqrt())).clamp(-1.0, 1.0))
}
