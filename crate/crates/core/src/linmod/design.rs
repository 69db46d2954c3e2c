//! Model specification and design-matrix assembly.

use std::collections::HashSet;
use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::data::{AuditDataset, AuditRecord, ResponseInput};
use crate::transform::CovariateTransform;

/// Which response a model regresses on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    /// The error column supplied with the data.
    #[default]
    Precomputed,
    /// NME computed from landmark coordinates.
    Nme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Factor { name: String, label: Option<String> },
    Covariate { name: String, transform: CovariateTransform, label: Option<String> },
}

impl Term {
    pub fn factor(name: impl Into<String>) -> Self {
        Term::Factor { name: name.into(), label: None }
    }

    pub fn covariate(name: impl Into<String>, transform: CovariateTransform) -> Self {
        Term::Covariate { name: name.into(), transform, label: None }
    }

    pub fn with_label(mut self, text: impl Into<String>) -> Self {
        match &mut self {
            Term::Factor { label, .. } | Term::Covariate { label, .. } => *label = Some(text.into()),
        }
        self
    }

    /// Dataset variable this term reads.
    pub fn source(&self) -> &str {
        match self {
            Term::Factor { name, .. } | Term::Covariate { name, .. } => name,
        }
    }

    /// Display name: the explicit label or the source variable name.
    pub fn label(&self) -> &str {
        match self {
            Term::Factor { label, name } | Term::Covariate { label, name, .. } => label.as_deref().unwrap_or(name),
        }
    }
}

/// Restricts a model to rows whose `factor` level is in `levels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSubset {
    pub factor: String,
    pub levels: Vec<String>,
}

/// A main-effects linear model over dataset variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub response: ResponseKind,
    pub terms: Vec<Term>,
    #[serde(default)]
    pub subset: Vec<LevelSubset>,
    /// Positive constant added to the raw response before transformation.
    #[serde(default)]
    pub response_offset: f64,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, terms: Vec<Term>) -> Self {
        Self { name: name.into(), response: ResponseKind::Precomputed, terms, subset: Vec::new(), response_offset: 0.0 }
    }

    pub fn validate(&self, dataset: &AuditDataset) -> Result<(), ModelError> {
        let mut labels = HashSet::new();
        let mut sources = HashSet::new();
        for term in &self.terms {
            if !labels.insert(term.label()) || !sources.insert(term.source()) {
                return Err(ModelError::DuplicateTerm(term.label().to_string()));
            }
            let known = match term {
                Term::Factor { name, .. } => dataset.taxonomy(name).is_some(),
                Term::Covariate { name, .. } => dataset.has_covariate(name),
            };
            if !known {
                return Err(ModelError::UnknownVariable(term.source().to_string()));
            }
        }
        for s in &self.subset {
            let tax = dataset.taxonomy(&s.factor).ok_or_else(|| ModelError::UnknownVariable(s.factor.clone()))?;
            if let Some(bad) = s.levels.iter().find(|l| !tax.contains(l)) {
                return Err(ModelError::UnknownLevel { factor: s.factor.clone(), level: bad.clone() });
            }
        }
        if !(self.response_offset >= 0.0 && self.response_offset.is_finite()) {
            return Err(ModelError::InvalidOffset(self.response_offset));
        }
        Ok(())
    }

    fn includes(&self, record: &AuditRecord) -> bool {
        let in_subset =
            self.subset.iter().all(|s| record.factor(&s.factor).is_some_and(|l| s.levels.iter().any(|v| v == l)));
        let complete = self.terms.iter().all(|t| match t {
            Term::Factor { name, .. } => record.factor(name).is_some(),
            Term::Covariate { name, .. } => record.covariate(name).is_some(),
        });
        in_subset && complete
    }
}

/// Factor coding scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contrasts {
    /// Level `j < k-1` is the unit vector `e_j`; the last level is all `-1`.
    #[default]
    Sum,
    /// First level is the all-zero baseline; level `j > 0` is `e_{j-1}`.
    Treatment,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermEncoding {
    /// Observed levels in taxonomy order.
    Factor { levels: Vec<String>, contrasts: Contrasts },
    /// Mean of the transformed covariate over the rows used; the column
    /// holds `transform(x) - mean`.
    Covariate { transform: CovariateTransform, mean: f64, raw_mean: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermColumns {
    pub label: String,
    pub source: String,
    pub columns: Range<usize>,
    pub encoding: TermEncoding,
}

impl TermColumns {
    pub fn df(&self) -> usize {
        self.columns.len()
    }

    /// Contrast row for `level`, or `None` if the level was not observed.
    pub fn factor_row(&self, level: &str) -> Option<Vec<f64>> {
        match &self.encoding {
            TermEncoding::Factor { levels, contrasts } => {
                let i = levels.iter().position(|l| l == level)?;
                Some(contrast_row(*contrasts, levels.len(), i))
            }
            TermEncoding::Covariate { .. } => None,
        }
    }
}

fn contrast_row(contrasts: Contrasts, k: usize, i: usize) -> Vec<f64> {
    let mut row = vec![0.0; k - 1];
    match contrasts {
        Contrasts::Sum if i == k - 1 => row.iter_mut().for_each(|v| *v = -1.0),
        Contrasts::Sum => row[i] = 1.0,
        Contrasts::Treatment if i > 0 => row[i - 1] = 1.0,
        Contrasts::Treatment => {}
    }
    row
}

/// The regression design of one model: intercept column first, then each
/// term's columns in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    terms: Vec<TermColumns>,
    rows: Vec<usize>,
}

impl DesignMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn terms(&self) -> &[TermColumns] {
        &self.terms
    }

    pub fn term(&self, label: &str) -> Option<&TermColumns> {
        self.terms.iter().find(|t| t.label == label)
    }

    /// Term whose source variable is `source`.
    pub fn term_for_source(&self, source: &str) -> Option<&TermColumns> {
        self.terms.iter().find(|t| t.source == source)
    }

    /// Dataset record indices contributing a row, in row order.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Label of the term owning design column `col` (`"(Intercept)"` for 0).
    pub fn column_owner(&self, col: usize) -> &str {
        self.terms.iter().find(|t| t.columns.contains(&col)).map(|t| t.label.as_str()).unwrap_or("(Intercept)")
    }

    /// The same rows with one term's columns removed.
    pub fn without_term(&self, label: &str) -> Result<DesignMatrix, ModelError> {
        let idx = self
            .terms
            .iter()
            .position(|t| t.label == label)
            .ok_or_else(|| ModelError::UnknownTerm(label.to_string()))?;
        let span = self.terms[idx].columns.clone();
        let keep: Vec<usize> = (0..self.ncols()).filter(|c| !span.contains(c)).collect();
        let matrix = self.matrix.select_columns(&keep);
        let width = span.len();
        let terms = self
            .terms
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(i, t)| {
                let mut t = t.clone();
                if i > idx {
                    t.columns = t.columns.start - width..t.columns.end - width;
                }
                t
            })
            .collect();
        Ok(DesignMatrix { matrix, terms, rows: self.rows.clone() })
    }
}

/// A design matrix together with its untransformed response.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignedModel {
    pub design: DesignMatrix,
    /// Raw error values of the rows used, plus the spec's offset.
    pub response: Vec<f64>,
}

pub fn build_design(dataset: &AuditDataset, spec: &ModelSpec) -> Result<DesignedModel, ModelError> {
    build_design_with(dataset, spec, Contrasts::Sum)
}

/// Builds the design under an explicit contrast scheme. Type III tests and
/// marginal means assume [`Contrasts::Sum`].
pub fn build_design_with(
    dataset: &AuditDataset,
    spec: &ModelSpec,
    contrasts: Contrasts,
) -> Result<DesignedModel, ModelError> {
    spec.validate(dataset)?;
    let records = dataset.records();
    let rows: Vec<usize> = (0..records.len()).filter(|&i| spec.includes(&records[i])).collect();
    if rows.is_empty() {
        return Err(ModelError::NoRows(spec.name.clone()));
    }

    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; rows.len()]];
    let mut terms = Vec::with_capacity(spec.terms.len());
    for term in &spec.terms {
        let start = columns.len();
        let encoding = match term {
            Term::Factor { name, .. } => {
                let tax = dataset.taxonomy(name).expect("validated");
                let mut seen = vec![false; tax.levels().len()];
                let idx: Vec<usize> = rows
                    .iter()
                    .map(|&r| tax.index_of(records[r].factor(name).expect("complete case")).expect("validated"))
                    .collect();
                idx.iter().for_each(|&i| seen[i] = true);
                let observed: Vec<usize> = (0..seen.len()).filter(|&i| seen[i]).collect();
                if observed.len() < 2 {
                    return Err(ModelError::FactorCollapsed { factor: name.clone(), observed: observed.len() });
                }
                let k = observed.len();
                let mut position = vec![usize::MAX; seen.len()];
                observed.iter().enumerate().for_each(|(p, &i)| position[i] = p);
                let mut cols = vec![vec![0.0; rows.len()]; k - 1];
                for (r, &i) in idx.iter().enumerate() {
                    for (c, v) in contrast_row(contrasts, k, position[i]).into_iter().enumerate() {
                        cols[c][r] = v;
                    }
                }
                columns.extend(cols);
                TermEncoding::Factor { levels: observed.iter().map(|&i| tax.levels()[i].clone()).collect(), contrasts }
            }
            Term::Covariate { name, transform, .. } => {
                let raw: Vec<f64> = rows.iter().map(|&r| records[r].covariate(name).expect("complete case")).collect();
                let values = transform.apply_all(name, &raw)?;
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let raw_mean = raw.iter().sum::<f64>() / n;
                columns.push(values.into_iter().map(|v| v - mean).collect());
                TermEncoding::Covariate { transform: *transform, mean, raw_mean }
            }
        };
        terms.push(TermColumns {
            label: term.label().to_string(),
            source: term.source().to_string(),
            columns: start..columns.len(),
            encoding,
        });
    }

    let response = rows.iter().map(|&r| response_value(&records[r], spec)).collect::<Result<Vec<_>, _>>()?;

    let matrix = DMatrix::from_fn(rows.len(), columns.len(), |i, j| columns[j][i]);
    Ok(DesignedModel { design: DesignMatrix { matrix, terms, rows }, response })
}

fn response_value(record: &AuditRecord, spec: &ModelSpec) -> Result<f64, ModelError> {
    match (spec.response, &record.response) {
        (ResponseKind::Precomputed, ResponseInput::Precomputed(_))
        | (ResponseKind::Nme, ResponseInput::Landmarks { .. }) => Ok(record.error_value()? + spec.response_offset),
        _ => Err(ModelError::ResponseMismatch { sample_id: record.sample_id.clone(), expected: spec.response }),
    }
}
