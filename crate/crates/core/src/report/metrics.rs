//! Per-row NME and head-pose deviation from raw landmark/angle columns.

use std::io::{Read, Write};

use super::config::HEADPOSE;
use super::ReportError;
use crate::data::{DataError, BBOX_HEIGHT, PITCH, ROLL, YAW};
use crate::geometry::{compute_nme, frontal_deviation, EulerAngles, LandmarkSet, Point2};

/// Writes `id,nme,headpose` (whichever are computable from the header) and
/// returns the number of rows written. `nme` needs landmark columns and
/// `bbox_height_px`; `headpose` needs all three angle columns.
pub fn emit_metrics<R: Read, W: Write>(
    reader: R,
    writer: W,
    delimiter: u8,
    id_column: &str,
) -> Result<usize, ReportError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(reader);
    let header = rdr.headers().map_err(DataError::from_csv)?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let id = find(id_column).ok_or_else(|| DataError::MissingColumn { column: id_column.to_string() })?;

    let mut landmarks = Vec::new();
    while let (Some(gx), Some(gy), Some(px), Some(py)) = (
        find(&format!("gt_x{}", landmarks.len())),
        find(&format!("gt_y{}", landmarks.len())),
        find(&format!("pred_x{}", landmarks.len())),
        find(&format!("pred_y{}", landmarks.len())),
    ) {
        landmarks.push([gx, gy, px, py]);
    }
    let bbox = find(BBOX_HEIGHT);
    let nme_cols = if landmarks.is_empty() { None } else { bbox.map(|b| (b, &landmarks)) };
    let angle_cols = match (find(PITCH), find(YAW), find(ROLL)) {
        (Some(p), Some(y), Some(r)) => Some([p, y, r]),
        _ => None,
    };
    if nme_cols.is_none() && angle_cols.is_none() {
        return Err(ReportError::Data(DataError::Schema(format!(
            "nothing to compute: need gt_x0/gt_y0/pred_x0/pred_y0 with {BBOX_HEIGHT}, or {PITCH}/{YAW}/{ROLL}"
        ))));
    }

    let mut wtr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    let mut out_header = vec![id_column.to_string()];
    if nme_cols.is_some() {
        out_header.push("nme".into());
    }
    if angle_cols.is_some() {
        out_header.push(HEADPOSE.into());
    }
    wtr.write_record(&out_header).map_err(DataError::from_csv)?;

    let mut count = 0;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(DataError::from_csv)?;
        let cell = |c: usize| -> Result<f64, DataError> {
            let raw = rec.get(c).unwrap_or("").trim();
            if raw.is_empty() {
                return Err(DataError::MissingValue { row, column: header[c].to_string() });
            }
            raw.parse::<f64>().map_err(|_| DataError::NonNumeric {
                row,
                column: header[c].to_string(),
                value: raw.to_string(),
            })
        };
        let sample_id = rec.get(id).unwrap_or("").to_string();
        let mut out = vec![sample_id.clone()];
        if let Some((b, cols)) = nme_cols {
            let mut gt = Vec::with_capacity(cols.len());
            let mut pred = Vec::with_capacity(cols.len());
            for &[gx, gy, px, py] in cols.iter() {
                gt.push(Point2::new(cell(gx)?, cell(gy)?));
                pred.push(Point2::new(cell(px)?, cell(py)?));
            }
            let landmarks = |pts| LandmarkSet::new(pts).map_err(|source| DataError::Landmarks { row, source });
            let nme = compute_nme(&landmarks(gt)?, &landmarks(pred)?, cell(b)?)
                .map_err(|source| DataError::Metric { sample_id: sample_id.clone(), source })?;
            out.push(nme.to_string());
        }
        if let Some([p, y, r]) = angle_cols {
            let theta = frontal_deviation(&EulerAngles::new(cell(p)?, cell(y)?, cell(r)?))
                .map_err(|source| DataError::Metric { sample_id: sample_id.clone(), source })?;
            out.push(theta.to_string());
        }
        wtr.write_record(&out).map_err(DataError::from_csv)?;
        count += 1;
    }
    wtr.flush().map_err(|e| ReportError::Io { path: "<metrics output>".into(), message: e.to_string() })?;
    Ok(count)
}
