//! Margins taken from published demographic counts.

use super::{BboxGenerator, HeadposeGenerator, SynthError, SyntheticFactor, SyntheticSpec};
use crate::data::presets;

pub const PRESET_NAMES: [&str; 3] = ["wflw_train_like", "raf_db_like", "balanced"];

/// Named spec with zero effects; callers inject effects as needed.
pub fn preset(name: &str, n: usize, seed: u64) -> Result<SyntheticSpec, SynthError> {
    let factors = match name {
        // WFLW train partition, 7500 faces, age merged to five buckets
        "wflw_train_like" => vec![
            SyntheticFactor::from_counts(&presets::fairface_gender(), &[3613, 3887]),
            SyntheticFactor::from_counts(&presets::fairface_race(), &[989, 879, 5084, 548]),
            SyntheticFactor::from_counts(&presets::merged_age(), &[63, 1501, 4024, 1869, 43]),
        ],
        // RAF-DB after dropping unsure gender, 18183 faces
        "raf_db_like" => vec![
            SyntheticFactor::from_counts(&presets::rafdb_gender(), &[10170, 8013]),
            SyntheticFactor::from_counts(&presets::rafdb_race(), &[1298, 2653, 14232]),
            SyntheticFactor::from_counts(&presets::rafdb_age(), &[924, 3153, 10499, 3053, 554]),
        ],
        "balanced" => vec![
            SyntheticFactor::from_counts(&presets::fairface_gender(), &[1; 2]),
            SyntheticFactor::from_counts(&presets::fairface_race(), &[1; 4]),
            SyntheticFactor::from_counts(&presets::merged_age(), &[1; 5]),
        ],
        other => return Err(SynthError::UnknownPreset(other.to_string())),
    };
    Ok(SyntheticSpec {
        seed,
        n,
        mu: -3.0,
        sigma: 0.5,
        factors,
        headpose: Some(HeadposeGenerator { scale: 0.35, coefficient: 0.0 }),
        bbox: Some(BboxGenerator { lo: 60.0, hi: 400.0, coefficient: 0.0 }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins() {
        let w = preset("wflw_train_like", 1, 0).unwrap();
        assert!((w.factors[2].probabilities[4] - 43.0 / 7500.0).abs() < 1e-15);
        assert!((w.factors[1].probabilities[2] - 5084.0 / 7500.0).abs() < 1e-15);
        let r = preset("raf_db_like", 1, 0).unwrap();
        assert!((r.factors[2].probabilities[4] - 554.0 / 18183.0).abs() < 1e-15);
        for name in PRESET_NAMES {
            preset(name, 10, 1).unwrap().validate().unwrap();
        }
    }
}
