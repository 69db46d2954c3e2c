use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::DataError;

/// A categorical variable and its admissible levels.
///
/// Level order is significant: it fixes the contrast encoding, the row order
/// of marginal-mean tables and, for ordinal taxonomies (age buckets), the
/// ordering used by the ensemble median rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTaxonomy", into = "RawTaxonomy")]
pub struct FactorTaxonomy {
    name: String,
    levels: Vec<String>,
    ordinal: bool,
}

#[derive(Serialize, Deserialize)]
struct RawTaxonomy {
    name: String,
    levels: Vec<String>,
    #[serde(default)]
    ordinal: bool,
}

impl TryFrom<RawTaxonomy> for FactorTaxonomy {
    type Error = DataError;

    fn try_from(raw: RawTaxonomy) -> Result<Self, Self::Error> {
        FactorTaxonomy::new(raw.name, raw.levels, raw.ordinal)
    }
}

impl From<FactorTaxonomy> for RawTaxonomy {
    fn from(t: FactorTaxonomy) -> Self {
        RawTaxonomy { name: t.name, levels: t.levels, ordinal: t.ordinal }
    }
}

impl FactorTaxonomy {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
        ordinal: bool,
    ) -> Result<Self, DataError> {
        let name = name.into();
        let levels: Vec<String> = levels.into_iter().map(Into::into).collect();
        if levels.is_empty() {
            return Err(DataError::InvalidTaxonomy { name, reason: "no levels declared".into() });
        }
        let mut seen = HashSet::new();
        for level in &levels {
            if level.is_empty() {
                return Err(DataError::InvalidTaxonomy { name, reason: "empty level name".into() });
            }
            if !seen.insert(level.as_str()) {
                return Err(DataError::InvalidTaxonomy { name, reason: format!("duplicate level {level:?}") });
            }
        }
        Ok(Self { name, levels, ordinal })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn is_ordinal(&self) -> bool {
        self.ordinal
    }

    pub fn index_of(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }

    pub fn contains(&self, level: &str) -> bool {
        self.index_of(level).is_some()
    }

    /// Same levels under a different variable name.
    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self { name: name.into(), ..self.clone() }
    }
}

/// Taxonomies shipped with the engine.
///
/// RAF-DB levels follow the dataset's own annotation; the FairFace levels
/// are those produced by the three-model annotation ensemble, and the
/// merged age buckets align the FairFace ages with RAF-DB's five groups.
pub mod presets {
    use super::FactorTaxonomy;

    pub const FAIRFACE_AGE_LEVELS: [&str; 9] =
        ["0-2", "3-9", "10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70+"];
    pub const MERGED_AGE_LEVELS: [&str; 5] = ["0-2", "3-19", "20-39", "40-69", "70+"];

    fn build(name: &str, levels: &[&str], ordinal: bool) -> FactorTaxonomy {
        FactorTaxonomy::new(name, levels.iter().copied(), ordinal).expect("preset taxonomy is valid")
    }

    pub fn rafdb_gender() -> FactorTaxonomy {
        build("gender", &["Female", "Male"], false)
    }

    pub fn rafdb_race() -> FactorTaxonomy {
        build("race", &["African", "Asian", "Caucasian"], false)
    }

    pub fn rafdb_age() -> FactorTaxonomy {
        build("age", &["0-3", "4-19", "20-39", "40-69", "70+"], true)
    }

    /// The seven basic expressions kept for the expression-controlled model.
    pub fn rafdb_expression() -> FactorTaxonomy {
        build("expression", &["Surprise", "Fear", "Disgust", "Happiness", "Sadness", "Anger", "Neutral"], false)
    }

    pub fn fairface_gender() -> FactorTaxonomy {
        build("gender", &["Female", "Male"], false)
    }

    pub fn fairface_race() -> FactorTaxonomy {
        build("race", &["Asian", "Black", "White", "Indian"], false)
    }

    pub fn fairface_age() -> FactorTaxonomy {
        build("age", &FAIRFACE_AGE_LEVELS, true)
    }

    pub fn merged_age() -> FactorTaxonomy {
        build("age", &MERGED_AGE_LEVELS, true)
    }

    pub fn wflw_pose() -> FactorTaxonomy {
        build("pose", &["small", "large"], false)
    }

    pub fn wflw_expression() -> FactorTaxonomy {
        build("expression", &["neutral", "exaggerated"], false)
    }

    pub fn wflw_illumination() -> FactorTaxonomy {
        build("illumination", &["normal", "extreme"], false)
    }

    pub fn wflw_makeup() -> FactorTaxonomy {
        build("makeup", &["absent", "present"], false)
    }

    pub fn wflw_occlusion() -> FactorTaxonomy {
        build("occlusion", &["absent", "present"], false)
    }

    pub fn wflw_blur() -> FactorTaxonomy {
        build("blur", &["clear", "blurry"], false)
    }

    pub const NAMES: [&str; 14] = [
        "rafdb_gender",
        "rafdb_race",
        "rafdb_age",
        "rafdb_expression",
        "fairface_gender",
        "fairface_race",
        "fairface_age",
        "merged_age",
        "wflw_pose",
        "wflw_expression",
        "wflw_illumination",
        "wflw_makeup",
        "wflw_occlusion",
        "wflw_blur",
    ];

    /// Looks a preset up by its config name (see [`NAMES`]).
    pub fn by_name(name: &str) -> Option<FactorTaxonomy> {
        Some(match name {
            "rafdb_gender" => rafdb_gender(),
            "rafdb_race" => rafdb_race(),
            "rafdb_age" => rafdb_age(),
            "rafdb_expression" => rafdb_expression(),
            "fairface_gender" => fairface_gender(),
            "fairface_race" => fairface_race(),
            "fairface_age" => fairface_age(),
            "merged_age" => merged_age(),
            "wflw_pose" => wflw_pose(),
            "wflw_expression" => wflw_expression(),
            "wflw_illumination" => wflw_illumination(),
            "wflw_makeup" => wflw_makeup(),
            "wflw_occlusion" => wflw_occlusion(),
            "wflw_blur" => wflw_blur(),
            _ => return None,
        })
    }
}

/// Maps a FairFace age bucket onto the five merged buckets.
pub fn merge_age_buckets(level: &str) -> Result<&'static str, DataError> {
    Ok(match level {
        "0-2" => "0-2",
        "3-9" | "10-19" => "3-19",
        "20-29" | "30-39" => "20-39",
        "40-49" | "50-59" | "60-69" => "40-69",
        "70+" => "70+",
        other => return Err(DataError::UnknownAgeLevel(other.to_string())),
    })
}
