//! Aggregation of the three-model demographic annotation ensemble.
//!
//! Race comes from the first model alone. Gender is a majority vote. Age is
//! the category chosen by at least two models, or the middle of the three
//! votes under the taxonomy's order when all three differ.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::taxonomy::{merge_age_buckets, FactorTaxonomy};
use super::DataError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsemblePrediction {
    pub sample_id: String,
    pub gender: [String; 3],
    /// Only the first model's race prediction is used.
    pub race: String,
    pub age: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleLabels {
    pub gender: String,
    pub race: String,
    pub age: String,
}

/// Taxonomies the ensemble votes are validated against.
#[derive(Debug, Clone)]
pub struct EnsembleTaxonomies {
    pub gender: FactorTaxonomy,
    pub race: FactorTaxonomy,
    pub age: FactorTaxonomy,
}

impl Default for EnsembleTaxonomies {
    fn default() -> Self {
        use super::taxonomy::presets;
        Self { gender: presets::fairface_gender(), race: presets::fairface_race(), age: presets::fairface_age() }
    }
}

fn check_member(tax: &FactorTaxonomy, id: &str, value: &str) -> Result<usize, DataError> {
    tax.index_of(value).ok_or_else(|| DataError::EnsembleLevel {
        sample_id: id.to_string(),
        factor: tax.name().to_string(),
        value: value.to_string(),
    })
}

pub fn aggregate_ensemble(
    pred: &EnsemblePrediction,
    taxonomies: &EnsembleTaxonomies,
) -> Result<EnsembleLabels, DataError> {
    let id = pred.sample_id.as_str();
    check_member(&taxonomies.race, id, &pred.race)?;

    let gender_idx =
        pred.gender.iter().map(|g| check_member(&taxonomies.gender, id, g)).collect::<Result<Vec<_>, _>>()?;
    let gender = majority(&gender_idx).ok_or_else(|| DataError::NoMajority {
        sample_id: id.to_string(),
        factor: taxonomies.gender.name().to_string(),
    })?;

    if !taxonomies.age.is_ordinal() {
        return Err(DataError::InvalidTaxonomy {
            name: taxonomies.age.name().to_string(),
            reason: "age aggregation needs an ordinal taxonomy".into(),
        });
    }
    let mut age_idx = pred.age.iter().map(|a| check_member(&taxonomies.age, id, a)).collect::<Result<Vec<_>, _>>()?;
    let age = match majority(&age_idx) {
        Some(agreed) => agreed,
        None => {
            age_idx.sort_unstable();
            age_idx[1]
        }
    };

    Ok(EnsembleLabels {
        gender: taxonomies.gender.levels()[gender].clone(),
        race: pred.race.clone(),
        age: taxonomies.age.levels()[age].clone(),
    })
}

/// The value held by at least two of the three votes, if any.
fn majority(votes: &[usize]) -> Option<usize> {
    votes.iter().copied().find(|v| votes.iter().filter(|w| *w == v).count() >= 2)
}

/// Reads a prediction table with columns `sample_id`, `gender_1..3`,
/// `race_1` and `age_1..3`. Other columns (e.g. `race_2`) are ignored.
pub fn read_predictions<R: Read>(reader: R, delimiter: u8) -> Result<Vec<EnsemblePrediction>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(reader);
    let headers = rdr.headers().map_err(DataError::from_csv)?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn { column: name.to_string() })
    };
    let id = col("sample_id")?;
    let g = [col("gender_1")?, col("gender_2")?, col("gender_3")?];
    let race = col("race_1")?;
    let a = [col("age_1")?, col("age_2")?, col("age_3")?];

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(DataError::from_csv)?;
        let get = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        out.push(EnsemblePrediction { sample_id: get(id), gender: g.map(get), race: get(race), age: a.map(get) });
    }
    Ok(out)
}

/// Aggregates every prediction and writes `sample_id,gender,race,age,age_fairface`,
/// where `age` is the merged five-bucket level.
pub fn write_labels<W: Write>(
    writer: W,
    predictions: &[EnsemblePrediction],
    taxonomies: &EnsembleTaxonomies,
    delimiter: u8,
) -> Result<(), DataError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    wtr.write_record(["sample_id", "gender", "race", "age", "age_fairface"]).map_err(DataError::from_csv)?;
    for pred in predictions {
        let labels = aggregate_ensemble(pred, taxonomies)?;
        let merged = merge_age_buckets(&labels.age)?;
        wtr.write_record([pred.sample_id.as_str(), &labels.gender, &labels.race, merged, &labels.age])
            .map_err(DataError::from_csv)?;
    }
    wtr.flush().map_err(|e| DataError::Io(e.to_string()))?;
    Ok(())
}
