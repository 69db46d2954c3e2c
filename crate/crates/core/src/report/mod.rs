//! Audit configuration, the end-to-end pipeline and table rendering.

mod config;
mod metrics;
mod pipeline;
mod render;

use serde::Serialize;
use thiserror::Error;

use crate::data::{DataError, IngestLog};
use crate::emmeans::{CovariateAnchor, EmmSummary, EmmeansError};
use crate::inference::{AnovaTable, InferenceError};
use crate::linmod::ModelError;
use crate::synth::SynthError;
use crate::transform::{CovariateTransform, TransformError};

pub use config::{
    AuditConfig, BoxCoxConfig, EmmeansConfig, FactorConfig, Format, InputConfig, ModelConfig, OutputConfig,
    ResponseSource, TermConfig, HEADPOSE,
};
pub use metrics::emit_metrics;
pub use pipeline::{audit_bytes, audit_dataset, derive_headpose, run_audit, sha256_hex};
pub use render::{format_p_value, format_significant, parse_p_value, render_tables, Document};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("model {model:?}: {source}")]
    Model { model: String, source: ModelError },
    #[error("{context}: {source}")]
    Transform { context: String, source: TransformError },
    #[error("model {model:?}: {source}")]
    Inference { model: String, source: InferenceError },
    #[error("model {model:?}, factor {factor:?}: {source}")]
    Emmeans { model: String, factor: String, source: EmmeansError },
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numeric,
    Other,
}

impl ReportError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ReportError::Config(_) => ErrorCategory::Config,
            ReportError::Io { .. } => ErrorCategory::Other,
            ReportError::Data(_) => ErrorCategory::Data,
            ReportError::Model { source, .. } => match source {
                ModelError::DuplicateTerm(_)
                | ModelError::UnknownVariable(_)
                | ModelError::UnknownTerm(_)
                | ModelError::UnknownLevel { .. }
                | ModelError::InvalidOffset(_) => ErrorCategory::Config,
                ModelError::NoRows(_)
                | ModelError::FactorCollapsed { .. }
                | ModelError::ResponseMismatch { .. }
                | ModelError::Data(_) => ErrorCategory::Data,
                ModelError::RankDeficient { .. }
                | ModelError::NoResidualDf { .. }
                | ModelError::LengthMismatch { .. }
                | ModelError::Transform(_) => ErrorCategory::Numeric,
            },
            ReportError::Transform { source, .. } => match source {
                TransformError::NonPositive { .. } | TransformError::NonPositiveCovariate { .. } => ErrorCategory::Data,
                _ => ErrorCategory::Numeric,
            },
            ReportError::Inference { .. } | ReportError::Emmeans { .. } => ErrorCategory::Numeric,
            ReportError::Synth(_) => ErrorCategory::Config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub provenance: Provenance,
    pub alpha: f64,
    pub lambda: LambdaSummary,
    /// Marginal-mean weighting across non-focus level combinations.
    pub emmeans_weighting: &'static str,
    pub covariate_anchor: CovariateAnchor,
    pub correlations: Vec<Correlation>,
    pub models: Vec<ModelReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    /// SHA-256 of the config with the input path and output options cleared.
    pub config_sha256: String,
    pub input: Option<String>,
    pub input_sha256: Option<String>,
    pub ingest: IngestLog,
    pub derived_covariates: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    Fixed,
    Shared,
    PerModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub mode: LambdaMode,
    /// The common lambda (absent in per-model mode).
    pub lambda: Option<f64>,
    pub fitted_on: Option<String>,
    pub log_likelihood: Option<f64>,
}

/// Pearson correlation of the transformed response with a covariate (and
/// with its reciprocal when some model uses it that way), on
/// the rows of the model lambda was estimated on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub covariate: String,
    pub transform: CovariateTransform,
    pub r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub name: String,
    pub title: String,
    pub nobs: usize,
    pub df_residual: usize,
    pub lambda: f64,
    pub offset: f64,
    pub r_squared: f64,
    pub residual_skewness: f64,
    pub residual_excess_kurtosis: f64,
    pub anova: AnovaTable,
    pub emmeans: Vec<FactorMeans>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorMeans {
    /// Display name: the factor's term label in this model.
    pub label: String,
    pub summary: EmmSummary,
}

impl AuditReport {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.name == name)
    }
}

impl ModelReport {
    pub fn means(&self, factor: &str) -> Option<&EmmSummary> {
        self.emmeans.iter().map(|f| &f.summary).find(|s| s.focus == factor)
    }
}
