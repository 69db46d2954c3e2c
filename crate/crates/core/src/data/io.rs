//! Delimited-text ingestion and serialization of audit records.
//!
//! The header row names the columns. The id column, every declared factor
//! and covariate, and the response columns must be present; any other
//! column is ignored and reported in [`IngestLog::unknown_columns`].
//! Landmark responses use `gt_x{i}`, `gt_y{i}`, `pred_x{i}`, `pred_y{i}` for
//! `i = 0..k`.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AuditDataset, AuditRecord, DataError, FactorTaxonomy, ResponseInput, BBOX_HEIGHT};
use crate::geometry::{LandmarkSet, Point2};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseMode {
    /// A single non-negative error column.
    Precomputed { column: String },
    /// Ground-truth and predicted landmark coordinates.
    Landmarks,
}

impl Default for ResponseMode {
    fn default() -> Self {
        ResponseMode::Precomputed { column: "nme".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    /// The first invalid row aborts ingestion.
    #[default]
    Fail,
    /// Invalid rows are dropped and counted in the ingest log.
    Skip,
}

/// Drops every row whose raw `column` cell equals one of `values`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFilter {
    pub column: String,
    pub values: Vec<String>,
}

impl RowFilter {
    pub fn describe(&self) -> String {
        format!("{} in [{}]", self.column, self.values.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub id_column: String,
    pub delimiter: u8,
    pub response: ResponseMode,
    pub factors: Vec<FactorTaxonomy>,
    pub covariates: Vec<String>,
    pub filters: Vec<RowFilter>,
    pub on_error: ErrorPolicy,
}

impl Schema {
    pub fn new(factors: Vec<FactorTaxonomy>, covariates: Vec<String>) -> Self {
        Self {
            id_column: "sample_id".into(),
            delimiter: b',',
            response: ResponseMode::default(),
            factors,
            covariates,
            filters: Vec::new(),
            on_error: ErrorPolicy::Fail,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestLog {
    pub rows_in: usize,
    pub rows_kept: usize,
    pub rows_filtered: usize,
    pub rows_errored: usize,
    /// Rows removed by each configured filter, in declaration order.
    pub filter_counts: Vec<(String, usize)>,
    pub unknown_columns: Vec<String>,
    pub row_errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: AuditDataset,
    pub log: IngestLog,
}

struct Columns {
    id: usize,
    factors: Vec<usize>,
    covariates: Vec<usize>,
    response: ResponseColumns,
    filters: Vec<usize>,
}

enum ResponseColumns {
    Precomputed(usize),
    Landmarks(Vec<[usize; 4]>),
}

fn locate(headers: &csv::StringRecord, schema: &Schema) -> Result<(Columns, Vec<String>), DataError> {
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn { column: name.to_string() })
    };
    let mut used = HashSet::new();
    let id = find(&schema.id_column)?;
    used.insert(id);
    let factors = schema.factors.iter().map(|t| find(t.name())).collect::<Result<Vec<_>, _>>()?;
    let covariates = schema.covariates.iter().map(|c| find(c)).collect::<Result<Vec<_>, _>>()?;
    used.extend(factors.iter().copied());
    used.extend(covariates.iter().copied());
    let response = match &schema.response {
        ResponseMode::Precomputed { column } => {
            let c = find(column)?;
            used.insert(c);
            ResponseColumns::Precomputed(c)
        }
        ResponseMode::Landmarks => {
            if !schema.covariates.iter().any(|c| c == BBOX_HEIGHT) {
                return Err(DataError::Schema(format!(
                    "landmark responses need the {BBOX_HEIGHT} covariate as normalizer"
                )));
            }
            let mut cols = Vec::new();
            while let Ok(gx) = find(&format!("gt_x{}", cols.len())) {
                let i = cols.len();
                let quad = [gx, find(&format!("gt_y{i}"))?, find(&format!("pred_x{i}"))?, find(&format!("pred_y{i}"))?];
                used.extend(quad);
                cols.push(quad);
            }
            if cols.is_empty() {
                return Err(DataError::MissingColumn { column: "gt_x0".into() });
            }
            ResponseColumns::Landmarks(cols)
        }
    };
    // Filters may reference any column, declared or not.
    let filters = schema.filters.iter().map(|f| find(&f.column)).collect::<Result<Vec<_>, _>>()?;
    used.extend(filters.iter().copied());
    let unknown = headers.iter().enumerate().filter(|(i, _)| !used.contains(i)).map(|(_, h)| h.to_string()).collect();
    Ok((Columns { id, factors, covariates, response, filters }, unknown))
}

fn parse_number(row: usize, column: &str, cell: &str) -> Result<f64, DataError> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Err(DataError::MissingValue { row, column: column.to_string() });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DataError::NonNumeric { row, column: column.to_string(), value: cell.to_string() }),
    }
}

fn parse_row(
    row: usize,
    rec: &csv::StringRecord,
    headers: &csv::StringRecord,
    cols: &Columns,
    schema: &Schema,
) -> Result<AuditRecord, DataError> {
    let cell = |i: usize| rec.get(i).unwrap_or("").trim();
    let sample_id = cell(cols.id).to_string();
    if sample_id.is_empty() {
        return Err(DataError::MissingValue { row, column: schema.id_column.clone() });
    }

    let mut factors = BTreeMap::new();
    for (tax, &c) in schema.factors.iter().zip(&cols.factors) {
        let value = cell(c);
        if value.is_empty() {
            continue;
        }
        if !tax.contains(value) {
            return Err(DataError::TaxonomyViolation { row, column: tax.name().to_string(), value: value.to_string() });
        }
        factors.insert(tax.name().to_string(), value.to_string());
    }

    let mut covariates = BTreeMap::new();
    for (name, &c) in schema.covariates.iter().zip(&cols.covariates) {
        let v = parse_number(row, name, cell(c))?;
        if name == BBOX_HEIGHT && v <= 0.0 {
            return Err(DataError::InvalidValue {
                row,
                column: name.clone(),
                reason: format!("bounding-box height must be positive, got {v}"),
            });
        }
        covariates.insert(name.clone(), v);
    }

    let response = match &cols.response {
        ResponseColumns::Precomputed(c) => {
            let v = parse_number(row, &headers[*c], cell(*c))?;
            if v < 0.0 {
                return Err(DataError::InvalidValue {
                    row,
                    column: headers[*c].to_string(),
                    reason: format!("error must be non-negative, got {v}"),
                });
            }
            ResponseInput::Precomputed(v)
        }
        ResponseColumns::Landmarks(quads) => {
            let mut gt = Vec::with_capacity(quads.len());
            let mut pred = Vec::with_capacity(quads.len());
            for q in quads {
                let v = q.map(|c| parse_number(row, &headers[c], cell(c)));
                let [gx, gy, px, py] = v;
                gt.push(Point2::new(gx?, gy?));
                pred.push(Point2::new(px?, py?));
            }
            let to_set = |pts| LandmarkSet::new(pts).map_err(|source| DataError::Landmarks { row, source });
            ResponseInput::Landmarks { gt: to_set(gt)?, pred: to_set(pred)? }
        }
    };

    Ok(AuditRecord { sample_id, response, factors, covariates })
}

/// Reads delimited text into a validated dataset.
///
/// Row filters are applied to raw cells before any validation, so a
/// filtered level (e.g. an "unsure" gender) need not be in the taxonomy.
/// Empty factor cells are kept as missing values; empty covariate cells
/// are errors.
pub fn parse_records<R: Read>(reader: R, schema: &Schema) -> Result<Ingested, DataError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(schema.delimiter).has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(DataError::from_csv)?.clone();
    let (cols, unknown_columns) = locate(&headers, schema)?;
    for col in &unknown_columns {
        log::warn!("ignoring undeclared column {col:?}");
    }

    let mut log = IngestLog {
        unknown_columns,
        filter_counts: schema.filters.iter().map(|f| (f.describe(), 0)).collect(),
        ..Default::default()
    };
    let mut records = Vec::new();
    let mut ids = HashSet::new();

    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        log.rows_in += 1;
        let rec = rec.map_err(DataError::from_csv)?;

        let hit = schema
            .filters
            .iter()
            .zip(&cols.filters)
            .position(|(f, &c)| f.values.iter().any(|v| v == rec.get(c).unwrap_or("").trim()));
        if let Some(k) = hit {
            log.filter_counts[k].1 += 1;
            log.rows_filtered += 1;
            continue;
        }

        let parsed = parse_row(row, &rec, &headers, &cols, schema).and_then(|r| {
            if ids.contains(&r.sample_id) {
                Err(DataError::DuplicateSampleId { row, sample_id: r.sample_id })
            } else {
                Ok(r)
            }
        });
        match parsed {
            Ok(r) => {
                ids.insert(r.sample_id.clone());
                records.push(r);
                log.rows_kept += 1;
            }
            Err(e) if schema.on_error == ErrorPolicy::Skip => {
                log::warn!("skipping row: {e}");
                log.row_errors.push(e.to_string());
                log.rows_errored += 1;
            }
            Err(e) => return Err(e),
        }
    }

    let dataset = AuditDataset::new(schema.factors.clone(), schema.covariates.clone(), records)?;
    Ok(Ingested { dataset, log })
}

/// Writes `dataset` in the layout [`parse_records`] reads under `schema`.
pub fn write_records<W: Write>(writer: W, dataset: &AuditDataset, schema: &Schema) -> Result<(), DataError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(schema.delimiter).from_writer(writer);
    let landmark_count = match (&schema.response, dataset.records().first().map(|r| &r.response)) {
        (ResponseMode::Landmarks, Some(ResponseInput::Landmarks { gt, .. })) => gt.len(),
        _ => 0,
    };

    let mut header = vec![schema.id_column.clone()];
    header.extend(schema.factors.iter().map(|t| t.name().to_string()));
    header.extend(schema.covariates.iter().cloned());
    match &schema.response {
        ResponseMode::Precomputed { column } => header.push(column.clone()),
        ResponseMode::Landmarks => {
            for i in 0..landmark_count {
                header.extend([format!("gt_x{i}"), format!("gt_y{i}"), format!("pred_x{i}"), format!("pred_y{i}")]);
            }
        }
    }
    wtr.write_record(&header).map_err(DataError::from_csv)?;

    for r in dataset.records() {
        let mut row = vec![r.sample_id.clone()];
        row.extend(schema.factors.iter().map(|t| r.factor(t.name()).unwrap_or("").to_string()));
        for c in &schema.covariates {
            row.push(r.covariate(c).map(|v| v.to_string()).unwrap_or_default());
        }
        match (&schema.response, &r.response) {
            (ResponseMode::Precomputed { .. }, ResponseInput::Precomputed(v)) => row.push(v.to_string()),
            (ResponseMode::Landmarks, ResponseInput::Landmarks { gt, pred }) if gt.len() == landmark_count => {
                for (g, p) in gt.points().iter().zip(pred.points()) {
                    row.extend([g.x, g.y, p.x, p.y].map(|v| v.to_string()));
                }
            }
            _ => {
                return Err(DataError::Schema(format!(
                    "sample {:?}: response does not match the schema's response mode",
                    r.sample_id
                )))
            }
        }
        wtr.write_record(&row).map_err(DataError::from_csv)?;
    }
    wtr.flush().map_err(|e| DataError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::presets;
    use proptest::prelude::*;

    fn schema() -> Schema {
        Schema::new(vec![presets::rafdb_gender(), presets::rafdb_race()], vec![BBOX_HEIGHT.to_string()])
    }

    #[test]
    fn three_rows() {
        let src = "sample_id,gender,race,bbox_height_px,nme,extra\n\
                   a,Female,Asian,120,0.02,x\n\
                   b,Male,African,80.5,0.031,y\n\
                   c,Female,Caucasian,200,0.015,z\n";
        let out = parse_records(src.as_bytes(), &schema()).unwrap();
        assert_eq!(out.dataset.len(), 3);
        assert_eq!(out.log.unknown_columns, vec!["extra".to_string()]);
        assert_eq!(out.dataset.records()[1].covariate(BBOX_HEIGHT), Some(80.5));
        assert_eq!(out.dataset.records()[1].error_value().unwrap(), 0.031);
    }

    #[test]
    fn taxonomy_violation_names_row_and_column() {
        let src = "sample_id,gender,race,bbox_height_px,nme\na,Female,Asian,120,0.02\nb,Male,Martian,80,0.03\n";
        let err = parse_records(src.as_bytes(), &schema()).unwrap_err();
        assert_eq!(err, DataError::TaxonomyViolation { row: 2, column: "race".into(), value: "Martian".into() });
        assert!(err.to_string().contains("row 2") && err.to_string().contains("race"));
    }

    #[test]
    fn error_paths() {
        let s = schema();
        let missing = "sample_id,gender,bbox_height_px,nme\na,Female,120,0.02\n";
        assert_eq!(
            parse_records(missing.as_bytes(), &s).unwrap_err(),
            DataError::MissingColumn { column: "race".into() }
        );
        let nonnum = "sample_id,gender,race,bbox_height_px,nme\na,Female,Asian,tall,0.02\n";
        assert!(matches!(parse_records(nonnum.as_bytes(), &s), Err(DataError::NonNumeric { row: 1, .. })));
        let empty_cov = "sample_id,gender,race,bbox_height_px,nme\na,Female,Asian,,0.02\n";
        assert!(matches!(parse_records(empty_cov.as_bytes(), &s), Err(DataError::MissingValue { .. })));
        let dup = "sample_id,gender,race,bbox_height_px,nme\na,Female,Asian,1,0.02\na,Male,Asian,1,0.02\n";
        assert!(matches!(parse_records(dup.as_bytes(), &s), Err(DataError::DuplicateSampleId { row: 2, .. })));
        let neg = "sample_id,gender,race,bbox_height_px,nme\na,Female,Asian,-4,0.02\n";
        assert!(matches!(parse_records(neg.as_bytes(), &s), Err(DataError::InvalidValue { .. })));
    }

    #[test]
    fn filters_and_skip_policy_balance_the_log() {
        let mut s = schema();
        s.filters.push(RowFilter { column: "gender".into(), values: vec!["unsure".into()] });
        s.on_error = ErrorPolicy::Skip;
        let src = "sample_id,gender,race,bbox_height_px,nme\n\
                   a,unsure,Asian,1,0.1\n\
                   b,Male,Martian,1,0.1\n\
                   c,Male,Asian,1,0.1\n\
                   d,,Asian,2,0.1\n";
        let out = parse_records(src.as_bytes(), &s).unwrap();
        let log = &out.log;
        assert_eq!((log.rows_in, log.rows_kept, log.rows_filtered, log.rows_errored), (4, 2, 1, 1));
        assert_eq!(log.filter_counts, vec![("gender in [unsure]".to_string(), 1)]);
        assert_eq!(out.dataset.records()[1].factor("gender"), None);
    }

    #[test]
    fn landmark_mode() {
        let mut s = schema();
        s.response = ResponseMode::Landmarks;
        let src = "sample_id,gender,race,bbox_height_px,gt_x0,gt_y0,pred_x0,pred_y0,gt_x1,gt_y1,pred_x1,pred_y1\n\
                   a,Male,Asian,50,0,0,0,0,1,1,7,9\n";
        let out = parse_records(src.as_bytes(), &s).unwrap();
        assert!((out.dataset.records()[0].error_value().unwrap() - 0.10).abs() < 1e-15);
        let mut buf = Vec::new();
        write_records(&mut buf, &out.dataset, &s).unwrap();
        let again = parse_records(buf.as_slice(), &s).unwrap();
        assert_eq!(again.dataset, out.dataset);
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(
            rows in proptest::collection::vec((0usize..3, 0usize..4, 1e-3f64..1e4, 0f64..10.0), 0..30)
        ) {
            let s = schema();
            let genders = ["Female", "Male", ""];
            let races = ["African", "Asian", "Caucasian", ""];
            let src: String = std::iter::once("sample_id,gender,race,bbox_height_px,nme\n".to_string())
                .chain(rows.iter().enumerate().map(|(i, (g, r, h, e))| {
                    format!("id{i},{},{},{h},{e}\n", genders[*g], races[*r])
                }))
                .collect();
            let first = parse_records(src.as_bytes(), &s).unwrap().dataset;
            let mut buf = Vec::new();
            write_records(&mut buf, &first, &s).unwrap();
            let second = parse_records(buf.as_slice(), &s).unwrap().dataset;
            prop_assert_eq!(first, second);
        }
    }
}
