//! Reference grid: every combination of the non-focus factor levels, with
//! covariates held at a fixed anchor.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::EmmeansError;
use crate::linmod::{DesignMatrix, TermEncoding};

/// Where covariates are held on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateAnchor {
    /// Mean of the transformed covariate (e.g. mean of `1/height`).
    #[default]
    TransformedMean,
    /// Transform applied to the raw mean (e.g. `1/mean(height)`).
    RawMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGrid {
    focus: String,
    levels: Vec<String>,
    /// Non-focus factors and their observed levels, in model order.
    others: Vec<(String, Vec<String>)>,
    /// Design rows per focus level; every row has weight `1 / rows.len()`.
    rows: Vec<Vec<DVector<f64>>>,
    width: usize,
}

impl ReferenceGrid {
    pub fn new(design: &DesignMatrix, focus: &str, anchor: CovariateAnchor) -> Result<Self, EmmeansError> {
        let focus_term = design
            .terms()
            .iter()
            .find(|t| t.source == focus && matches!(t.encoding, TermEncoding::Factor { .. }))
            .ok_or_else(|| EmmeansError::FocusNotInModel(focus.to_string()))?;
        let TermEncoding::Factor { levels, .. } = &focus_term.encoding else { unreachable!() };

        let width = design.ncols();
        let mut base = DVector::zeros(width);
        base[0] = 1.0;
        let mut others = Vec::new();
        let mut other_terms = Vec::new();
        for term in design.terms() {
            match &term.encoding {
                TermEncoding::Covariate { transform, mean, raw_mean } => {
                    base[term.columns.start] = match anchor {
                        CovariateAnchor::TransformedMean => 0.0,
                        CovariateAnchor::RawMean => transform.eval(*raw_mean) - mean,
                    };
                }
                TermEncoding::Factor { levels, .. } if term.label != focus_term.label => {
                    others.push((term.source.clone(), levels.clone()));
                    other_terms.push(term);
                }
                TermEncoding::Factor { .. } => {}
            }
        }

        // Odometer over the non-focus level combinations, last factor fastest.
        let mut combos: Vec<DVector<f64>> = vec![base];
        for term in &other_terms {
            let TermEncoding::Factor { levels, .. } = &term.encoding else { unreachable!() };
            let mut next = Vec::with_capacity(combos.len() * levels.len());
            for row in &combos {
                for level in levels {
                    let mut r = row.clone();
                    let code = term.factor_row(level).expect("observed level");
                    r.rows_mut(term.columns.start, code.len()).copy_from_slice(&code);
                    next.push(r);
                }
            }
            combos = next;
        }

        let rows = levels
            .iter()
            .map(|level| {
                let code = focus_term.factor_row(level).expect("observed level");
                combos
                    .iter()
                    .map(|row| {
                        let mut r = row.clone();
                        r.rows_mut(focus_term.columns.start, code.len()).copy_from_slice(&code);
                        r
                    })
                    .collect()
            })
            .collect();

        Ok(Self { focus: focus.to_string(), levels: levels.clone(), others, rows, width })
    }

    pub fn focus(&self) -> &str {
        &self.focus
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn non_focus(&self) -> &[(String, Vec<String>)] {
        &self.others
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Grid design rows for focus level `i`.
    pub fn rows(&self, i: usize) -> &[DVector<f64>] {
        &self.rows[i]
    }

    /// Equal-weight average of the grid rows for focus level `i`.
    pub fn average_row(&self, i: usize) -> DVector<f64> {
        let rows = &self.rows[i];
        let mut sum = DVector::zeros(self.width);
        for r in rows {
            sum += r;
        }
        sum / rows.len() as f64
    }
}
