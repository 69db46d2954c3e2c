//! TOML audit configuration.

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::data::{presets, ErrorPolicy, FactorTaxonomy, ResponseMode, RowFilter, Schema};
use crate::emmeans::CovariateAnchor;
use crate::linmod::{LevelSubset, ModelSpec, ResponseKind, Term};
use crate::transform::{BoxCoxSettings, CovariateTransform};

pub const HEADPOSE: &str = "headpose";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default)]
    pub input: InputConfig,
    pub factors: Vec<FactorConfig>,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub filters: Vec<RowFilter>,
    pub models: Vec<ModelConfig>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub boxcox: BoxCoxConfig,
    #[serde(default)]
    pub emmeans: EmmeansConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseSource {
    #[default]
    Precomputed,
    Landmarks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    /// Relative paths resolve against the config file's directory.
    pub path: Option<PathBuf>,
    pub delimiter: char,
    pub id_column: String,
    pub response: ResponseSource,
    pub response_column: String,
    pub on_error: ErrorPolicy,
    /// Add a `headpose` covariate (geodesic deviation from frontal, in
    /// radians) when pitch/yaw/roll columns are declared.
    pub derive_headpose: bool,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            path: None,
            delimiter: ',',
            id_column: "sample_id".into(),
            response: ResponseSource::Precomputed,
            response_column: "nme".into(),
            on_error: ErrorPolicy::Fail,
            derive_headpose: true,
        }
    }
}

/// Either `preset = "rafdb_age"` (optionally renamed with `name`) or an
/// explicit `name` + `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
    #[serde(default)]
    pub ordinal: bool,
}

impl FactorConfig {
    pub fn taxonomy(&self) -> Result<FactorTaxonomy, ReportError> {
        match (&self.preset, &self.name, &self.levels) {
            (Some(p), name, None) => {
                let t = presets::by_name(p).ok_or_else(|| {
                    ReportError::Config(format!("unknown factor preset {p:?}; known: {}", presets::NAMES.join(", ")))
                })?;
                Ok(match name {
                    Some(n) => t.renamed(n.clone()),
                    None => t,
                })
            }
            (None, Some(name), Some(levels)) => FactorTaxonomy::new(name.clone(), levels.iter().cloned(), self.ordinal)
                .map_err(|e| ReportError::Config(e.to_string())),
            _ => Err(ReportError::Config(
                "a factor needs either `preset` (optionally with `name`) or `name` and `levels`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub terms: Vec<TermConfig>,
    #[serde(default)]
    pub subset: Vec<LevelSubset>,
    /// Added to the response before the Box-Cox transform.
    #[serde(default)]
    pub offset: f64,
}

impl ModelConfig {
    pub fn title(&self) -> String {
        match &self.description {
            Some(d) => format!("{} ({d})", self.name),
            None => self.name.clone(),
        }
    }
}

/// `{ factor = "age" }` or `{ covariate = "bbox_height_px", transform = "reciprocal" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariate: Option<String>,
    #[serde(default)]
    pub transform: CovariateTransform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl TermConfig {
    pub fn term(&self) -> Result<Term, ReportError> {
        let term = match (&self.factor, &self.covariate) {
            (Some(f), None) if self.transform == CovariateTransform::Identity => Term::factor(f.clone()),
            (Some(f), None) => return Err(ReportError::Config(format!("factor term {f:?} cannot take a transform"))),
            (None, Some(c)) => Term::covariate(c.clone(), self.transform),
            _ => return Err(ReportError::Config("a term needs exactly one of `factor` or `covariate`".into())),
        };
        Ok(match &self.label {
            Some(l) => term.with_label(l.clone()),
            None => term,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxCoxConfig {
    pub interval: (f64, f64),
    pub tolerance: f64,
    /// Skip estimation and use this lambda.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Estimate lambda separately for every model instead of once on the
    /// model with the most terms.
    pub per_model: bool,
}

impl Default for BoxCoxConfig {
    fn default() -> Self {
        let s = BoxCoxSettings::default();
        Self { interval: s.interval, tolerance: s.tolerance, lambda: None, per_model: false }
    }
}

impl BoxCoxConfig {
    pub fn settings(&self) -> BoxCoxSettings {
        BoxCoxSettings { interval: self.interval, tolerance: self.tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmmeansConfig {
    /// Factors to summarize; each is summarized in every model containing it.
    pub focus: Vec<String>,
    pub covariate_mean: CovariateAnchor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Plain,
    Markdown,
    Delimited,
    Json,
}

impl std::str::FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Format::Plain),
            "markdown" => Ok(Format::Markdown),
            "delimited" => Ok(Format::Delimited),
            "json" => Ok(Format::Json),
            other => Err(ReportError::Config(format!(
                "unsupported format {other:?}; expected plain, markdown, delimited or json"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Field separator of delimited output.
    pub delimiter: char,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, formats: vec![Format::Plain, Format::Delimited], delimiter: ',' }
    }
}

impl AuditConfig {
    pub fn from_toml(text: &str) -> Result<Self, ReportError> {
        let config: AuditConfig = toml::from_str(text).map_err(|e| ReportError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.models.is_empty() {
            return Err(ReportError::Config("at least one model is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ReportError::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        let mut names = HashSet::new();
        for m in &self.models {
            if !names.insert(m.name.as_str()) {
                return Err(ReportError::Config(format!("model name {:?} is used twice", m.name)));
            }
            for t in &m.terms {
                t.term()?;
            }
        }
        let factors: Vec<FactorTaxonomy> = self.factors.iter().map(FactorConfig::taxonomy).collect::<Result<_, _>>()?;
        for f in &self.emmeans.focus {
            if !factors.iter().any(|t| t.name() == f) {
                return Err(ReportError::Config(format!("emmeans focus {f:?} is not a declared factor")));
            }
        }
        if !self.input.delimiter.is_ascii() || !self.output.delimiter.is_ascii() {
            return Err(ReportError::Config("delimiters must be single ASCII characters".into()));
        }
        let (lo, hi) = self.boxcox.interval;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) || !(self.boxcox.tolerance > 0.0) {
            return Err(ReportError::Config(format!("invalid Box-Cox search interval [{lo}, {hi}]")));
        }
        if let Some(l) = self.boxcox.lambda {
            if !l.is_finite() {
                return Err(ReportError::Config(format!("fixed lambda must be finite, got {l}")));
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<Schema, ReportError> {
        let factors = self.factors.iter().map(FactorConfig::taxonomy).collect::<Result<Vec<_>, _>>()?;
        let mut schema = Schema::new(factors, self.covariates.clone());
        schema.id_column = self.input.id_column.clone();
        schema.delimiter = self.input.delimiter as u8;
        schema.response = match self.input.response {
            ResponseSource::Precomputed => ResponseMode::Precomputed { column: self.input.response_column.clone() },
            ResponseSource::Landmarks => ResponseMode::Landmarks,
        };
        schema.filters = self.filters.clone();
        schema.on_error = self.input.on_error;
        Ok(schema)
    }

    pub fn model_specs(&self) -> Result<Vec<ModelSpec>, ReportError> {
        let response = match self.input.response {
            ResponseSource::Precomputed => ResponseKind::Precomputed,
            ResponseSource::Landmarks => ResponseKind::Nme,
        };
        self.models
            .iter()
            .map(|m| {
                let terms = m.terms.iter().map(TermConfig::term).collect::<Result<Vec<_>, _>>()?;
                let mut spec = ModelSpec::new(m.name.clone(), terms);
                spec.response = response;
                spec.subset = m.subset.clone();
                spec.response_offset = m.offset;
                Ok(spec)
            })
            .collect()
    }
}
