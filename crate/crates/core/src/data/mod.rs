//! Audit dataset schema, ingestion and demographic label handling.

mod ensemble;
mod io;
mod taxonomy;

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::geometry::{compute_nme, GeometryError, LandmarkSet};

pub use ensemble::{
    aggregate_ensemble, read_predictions, write_labels, EnsembleLabels, EnsemblePrediction, EnsembleTaxonomies,
};
pub use io::{parse_records, write_records, ErrorPolicy, IngestLog, Ingested, ResponseMode, RowFilter, Schema};
pub use taxonomy::{merge_age_buckets, presets, FactorTaxonomy};

/// Covariate used as the NME normalizer (face bounding-box height, pixels).
pub const BBOX_HEIGHT: &str = "bbox_height_px";
/// Head-pose Euler angle columns, degrees.
pub const PITCH: &str = "pitch_deg";
pub const YAW: &str = "yaw_deg";
pub const ROLL: &str = "roll_deg";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("invalid taxonomy {name:?}: {reason}")]
    InvalidTaxonomy { name: String, reason: String },
    #[error("declared column {column:?} is missing from the header")]
    MissingColumn { column: String },
    #[error("row {row}, column {column:?}: {value:?} is not a finite number")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("row {row}, column {column:?}: missing value")]
    MissingValue { row: usize, column: String },
    #[error("row {row}, column {column:?}: level {value:?} is not in the taxonomy")]
    TaxonomyViolation { row: usize, column: String, value: String },
    #[error("row {row}: duplicate sample id {sample_id:?}")]
    DuplicateSampleId { row: usize, sample_id: String },
    #[error("row {row}, column {column:?}: {reason}")]
    InvalidValue { row: usize, column: String, reason: String },
    #[error("row {row}: {source}")]
    Landmarks { row: usize, source: GeometryError },
    #[error("sample {sample_id:?}: {source}")]
    Metric { sample_id: String, source: GeometryError },
    #[error("unknown FairFace age level {0:?}")]
    UnknownAgeLevel(String),
    #[error("sample {sample_id:?}: {factor} prediction {value:?} is not in the taxonomy")]
    EnsembleLevel { sample_id: String, factor: String, value: String },
    #[error("sample {sample_id:?}: no majority among {factor} votes")]
    NoMajority { sample_id: String, factor: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("malformed delimited input: {0}")]
    Csv(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl DataError {
    pub(crate) fn from_csv(err: csv::Error) -> Self {
        DataError::Csv(err.to_string())
    }
}

/// The per-sample response before any transformation.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseInput {
    /// Non-negative error already computed upstream.
    Precomputed(f64),
    Landmarks {
        gt: LandmarkSet,
        pred: LandmarkSet,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub sample_id: String,
    pub response: ResponseInput,
    /// Factor name to level. Absent keys are missing cells.
    pub factors: BTreeMap<String, String>,
    pub covariates: BTreeMap<String, f64>,
}

impl AuditRecord {
    pub fn factor(&self, name: &str) -> Option<&str> {
        self.factors.get(name).map(String::as_str)
    }

    pub fn covariate(&self, name: &str) -> Option<f64> {
        self.covariates.get(name).copied()
    }

    /// The error metric of this sample: the precomputed value, or the NME
    /// of its landmark sets normalized by the bounding-box height.
    pub fn error_value(&self) -> Result<f64, DataError> {
        match &self.response {
            ResponseInput::Precomputed(v) => Ok(*v),
            ResponseInput::Landmarks { gt, pred } => {
                let height = self.covariate(BBOX_HEIGHT).ok_or_else(|| {
                    DataError::Schema(format!(
                        "sample {:?}: landmark response needs covariate {BBOX_HEIGHT}",
                        self.sample_id
                    ))
                })?;
                compute_nme(gt, pred, height)
                    .map_err(|source| DataError::Metric { sample_id: self.sample_id.clone(), source })
            }
        }
    }
}

/// A validated, immutable collection of audit records.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditDataset {
    taxonomies: Vec<FactorTaxonomy>,
    covariate_names: Vec<String>,
    records: Vec<AuditRecord>,
}

impl AuditDataset {
    pub fn new(
        taxonomies: Vec<FactorTaxonomy>,
        covariate_names: Vec<String>,
        records: Vec<AuditRecord>,
    ) -> Result<Self, DataError> {
        let mut names = HashSet::new();
        for t in &taxonomies {
            if !names.insert(t.name()) {
                return Err(DataError::Schema(format!("factor {:?} declared twice", t.name())));
            }
        }
        for c in &covariate_names {
            if !names.insert(c.as_str()) {
                return Err(DataError::Schema(format!("variable {c:?} declared twice")));
            }
        }
        let mut ids = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            if !ids.insert(r.sample_id.as_str()) {
                return Err(DataError::DuplicateSampleId { row, sample_id: r.sample_id.clone() });
            }
            validate_record(row, r, &taxonomies, &covariate_names)?;
        }
        Ok(Self { taxonomies, covariate_names, records })
    }

    pub fn taxonomies(&self) -> &[FactorTaxonomy] {
        &self.taxonomies
    }

    pub fn taxonomy(&self, name: &str) -> Option<&FactorTaxonomy> {
        self.taxonomies.iter().find(|t| t.name() == name)
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn has_covariate(&self, name: &str) -> bool {
        self.covariate_names.iter().any(|c| c == name)
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Count of records per level of `factor`, in taxonomy order.
    pub fn level_counts(&self, factor: &str) -> Option<Vec<(String, usize)>> {
        let tax = self.taxonomy(factor)?;
        let mut counts = vec![0usize; tax.levels().len()];
        for r in &self.records {
            if let Some(i) = r.factor(factor).and_then(|l| tax.index_of(l)) {
                counts[i] += 1;
            }
        }
        Some(tax.levels().iter().cloned().zip(counts).collect())
    }

    /// Returns a new dataset with covariate `name` computed for every record.
    pub fn with_derived_covariate<F>(&self, name: &str, derive: F) -> Result<Self, DataError>
    where
        F: Fn(&AuditRecord) -> Result<f64, DataError>,
    {
        if self.has_covariate(name) || self.taxonomy(name).is_some() {
            return Err(DataError::Schema(format!("derived covariate {name:?} already exists")));
        }
        let records = self
            .records
            .iter()
            .map(|r| {
                let mut r = r.clone();
                let value = derive(&r)?;
                r.covariates.insert(name.to_string(), value);
                Ok(r)
            })
            .collect::<Result<Vec<_>, DataError>>()?;
        let mut covariate_names = self.covariate_names.clone();
        covariate_names.push(name.to_string());
        Self::new(self.taxonomies.clone(), covariate_names, records)
    }
}

fn validate_record(
    row: usize,
    r: &AuditRecord,
    taxonomies: &[FactorTaxonomy],
    covariates: &[String],
) -> Result<(), DataError> {
    for (name, level) in &r.factors {
        let tax = taxonomies
            .iter()
            .find(|t| t.name() == name)
            .ok_or_else(|| DataError::Schema(format!("row {row}: undeclared factor {name:?}")))?;
        if !tax.contains(level) {
            return Err(DataError::TaxonomyViolation { row, column: name.clone(), value: level.clone() });
        }
    }
    for name in covariates {
        let value = r.covariate(name).ok_or_else(|| DataError::MissingValue { row, column: name.clone() })?;
        if !value.is_finite() {
            return Err(DataError::NonNumeric { row, column: name.clone(), value: value.to_string() });
        }
        if name == BBOX_HEIGHT && value <= 0.0 {
            return Err(DataError::InvalidValue {
                row,
                column: name.clone(),
                reason: format!("bounding-box height must be positive, got {value}"),
            });
        }
    }
    if r.covariates.len() != covariates.len() {
        return Err(DataError::Schema(format!("row {row}: undeclared covariate present")));
    }
    match &r.response {
        ResponseInput::Precomputed(v) if !(v.is_finite() && *v >= 0.0) => Err(DataError::InvalidValue {
            row,
            column: "response".into(),
            reason: format!("error must be finite and non-negative, got {v}"),
        }),
        ResponseInput::Landmarks { gt, pred } if gt.len() != pred.len() => Err(DataError::Landmarks {
            row,
            source: GeometryError::LandmarkCountMismatch { gt: gt.len(), pred: pred.len() },
        }),
        _ => Ok(()),
    }
}
