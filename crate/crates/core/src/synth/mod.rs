//! Synthetic audit datasets with known log-scale effects.
//!
//! Responses follow `exp(mu + sum of level effects + covariate terms + sigma z)`,
//! so the true Box-Cox lambda is 0.
//!
//! Random stream: ChaCha8 seeded with `seed_from_u64(seed)`, uniforms from
//! `random::<f64>()` (53-bit, in [0, 1)). Normals use Box-Muller with
//! `sqrt(-2 ln(1 - u1)) cos(2 pi u2)` and discard the sine partner. Levels
//! are drawn by inverse CDF over the declared probabilities. Per record the
//! draws happen in this order: one uniform per factor; for head pose a
//! normal, an axis uniform and a sign uniform; one uniform for the box
//! height; one normal for the noise.

mod presets;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{AuditDataset, AuditRecord, DataError, FactorTaxonomy, ResponseInput, ResponseMode, Schema};
pub use crate::data::{BBOX_HEIGHT, PITCH, ROLL, YAW};

pub use presets::{preset, PRESET_NAMES};

pub const RESPONSE_COLUMN: &str = "nme";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("factor {factor:?}: {reason}")]
    InvalidFactor { factor: String, reason: String },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("noise scale must be finite and >= 0, got {0}")]
    InvalidSigma(f64),
    #[error("invalid covariate generator: {0}")]
    InvalidGenerator(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticFactor {
    pub name: String,
    pub levels: Vec<String>,
    #[serde(default)]
    pub ordinal: bool,
    pub probabilities: Vec<f64>,
    /// Additive log-scale effect per level; empty means all zero.
    #[serde(default)]
    pub effects: Vec<f64>,
}

impl SyntheticFactor {
    /// Levels with probabilities proportional to `counts`.
    pub fn from_counts(taxonomy: &FactorTaxonomy, counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        Self {
            name: taxonomy.name().to_string(),
            levels: taxonomy.levels().to_vec(),
            ordinal: taxonomy.is_ordinal(),
            probabilities: counts.iter().map(|&c| c as f64 / total as f64).collect(),
            effects: Vec::new(),
        }
    }

    pub fn with_effect(mut self, level: &str, effect: f64) -> Self {
        if self.effects.is_empty() {
            self.effects = vec![0.0; self.levels.len()];
        }
        if let Some(i) = self.levels.iter().position(|l| l == level) {
            self.effects[i] = effect;
        }
        self
    }

    pub fn effect(&self, i: usize) -> f64 {
        self.effects.get(i).copied().unwrap_or(0.0)
    }

    fn validate(&self) -> Result<FactorTaxonomy, SynthError> {
        let bad = |reason: String| SynthError::InvalidFactor { factor: self.name.clone(), reason };
        let taxonomy = FactorTaxonomy::new(self.name.clone(), self.levels.iter().cloned(), self.ordinal)?;
        if self.probabilities.len() != self.levels.len() {
            return Err(bad(format!("{} probabilities for {} levels", self.probabilities.len(), self.levels.len())));
        }
        if self.probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(bad("probabilities must be finite and non-negative".into()));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(bad(format!("probabilities sum to {sum}, not 1")));
        }
        if !self.effects.is_empty() && self.effects.len() != self.levels.len() {
            return Err(bad(format!("{} effects for {} levels", self.effects.len(), self.levels.len())));
        }
        if self.effects.iter().any(|e| !e.is_finite()) {
            return Err(bad("effects must be finite".into()));
        }
        Ok(taxonomy)
    }

    fn draw(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // rounding left a sliver above the last cumulative sum
        self.probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Deviation from frontal pose: `|N(0, scale)|` radians (redrawn above pi)
/// about one random axis with random sign, so the geodesic equals the draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadposeGenerator {
    pub scale: f64,
    #[serde(default)]
    pub coefficient: f64,
}

/// Box height log-uniform on `[lo, hi]` pixels; the coefficient multiplies
/// `1 / height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BboxGenerator {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n: usize,
    /// Log-scale intercept.
    pub mu: f64,
    pub sigma: f64,
    #[serde(default)]
    pub factors: Vec<SyntheticFactor>,
    #[serde(default)]
    pub headpose: Option<HeadposeGenerator>,
    #[serde(default)]
    pub bbox: Option<BboxGenerator>,
}

impl SyntheticSpec {
    pub fn factor_mut(&mut self, name: &str) -> Option<&mut SyntheticFactor> {
        self.factors.iter_mut().find(|f| f.name == name)
    }

    pub fn validate(&self) -> Result<Vec<FactorTaxonomy>, SynthError> {
        if self.n == 0 {
            return Err(SynthError::EmptySample);
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(SynthError::InvalidSigma(self.sigma));
        }
        if !self.mu.is_finite() {
            return Err(SynthError::InvalidGenerator(format!("mu must be finite, got {}", self.mu)));
        }
        if let Some(h) = self.headpose {
            if !(h.scale.is_finite() && h.scale > 0.0 && h.coefficient.is_finite()) {
                return Err(SynthError::InvalidGenerator(format!(
                    "head pose scale {} / coefficient {}",
                    h.scale, h.coefficient
                )));
            }
        }
        if let Some(b) = self.bbox {
            if !(b.lo > 0.0 && b.hi >= b.lo && b.hi.is_finite() && b.coefficient.is_finite()) {
                return Err(SynthError::InvalidGenerator(format!("box height range [{}, {}]", b.lo, b.hi)));
            }
        }
        self.factors.iter().map(SyntheticFactor::validate).collect()
    }

    pub fn covariate_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.headpose.is_some() {
            names.extend([PITCH, YAW, ROLL].map(String::from));
        }
        if self.bbox.is_some() {
            names.push(BBOX_HEIGHT.to_string());
        }
        names
    }
}

/// Effects and settings a generated dataset was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub factors: Vec<FactorTruth>,
    pub headpose: Option<HeadposeGenerator>,
    pub bbox: Option<BboxGenerator>,
    pub generator: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorTruth {
    pub name: String,
    pub levels: Vec<LevelTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelTruth {
    pub level: String,
    pub probability: f64,
    pub effect: f64,
    pub count: usize,
}

impl GroundTruth {
    pub fn effect(&self, factor: &str, level: &str) -> Option<f64> {
        let f = self.factors.iter().find(|f| f.name == factor)?;
        f.levels.iter().find(|l| l.level == level).map(|l| l.effect)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: AuditDataset,
    pub truth: GroundTruth,
}

impl SyntheticData {
    /// Schema that reads the written CSV back into the same dataset.
    pub fn schema(&self) -> Schema {
        let mut schema = Schema::new(self.dataset.taxonomies().to_vec(), self.dataset.covariate_names().to_vec());
        schema.response = ResponseMode::Precomputed { column: RESPONSE_COLUMN.to_string() };
        schema
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * PI * u2).cos()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData, SynthError> {
    let taxonomies = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut counts: Vec<Vec<usize>> = spec.factors.iter().map(|f| vec![0; f.levels.len()]).collect();
    let mut records = Vec::with_capacity(spec.n);

    for i in 0..spec.n {
        let mut eta = spec.mu;
        let mut factors = BTreeMap::new();
        for (k, f) in spec.factors.iter().enumerate() {
            let level = f.draw(rng.random());
            counts[k][level] += 1;
            eta += f.effect(level);
            factors.insert(f.name.clone(), f.levels[level].clone());
        }

        let mut covariates = BTreeMap::new();
        if let Some(h) = spec.headpose {
            let theta = loop {
                let t = (h.scale * normal(&mut rng)).abs();
                if t <= PI {
                    break t;
                }
            };
            let axis = ((3.0 * rng.random::<f64>()) as usize).min(2);
            let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            let mut angles = [0.0; 3];
            angles[axis] = sign * theta.to_degrees();
            for (name, value) in [PITCH, YAW, ROLL].iter().zip(angles) {
                covariates.insert(name.to_string(), value);
            }
            eta += h.coefficient * theta;
        }
        if let Some(b) = spec.bbox {
            let u: f64 = rng.random();
            let height = (b.lo.ln() + u * (b.hi.ln() - b.lo.ln())).exp();
            covariates.insert(BBOX_HEIGHT.to_string(), height);
            eta += b.coefficient / height;
        }
        let z = if spec.sigma > 0.0 { normal(&mut rng) } else { 0.0 };
        let response = (eta + spec.sigma * z).exp();

        records.push(AuditRecord {
            sample_id: format!("syn{i:06}"),
            response: ResponseInput::Precomputed(response),
            factors,
            covariates,
        });
    }

    let dataset = AuditDataset::new(taxonomies, spec.covariate_names(), records)?;
    let truth = GroundTruth {
        seed: spec.seed,
        n: spec.n,
        mu: spec.mu,
        sigma: spec.sigma,
        lambda: 0.0,
        factors: spec
            .factors
            .iter()
            .zip(&counts)
            .map(|(f, c)| FactorTruth {
                name: f.name.clone(),
                levels: f
                    .levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| LevelTruth {
                        level: l.clone(),
                        probability: f.probabilities[i],
                        effect: f.effect(i),
                        count: c[i],
                    })
                    .collect(),
            })
            .collect(),
        headpose: spec.headpose,
        bbox: spec.bbox,
        generator: "chacha8 seed_from_u64; box-muller cosine; inverse-cdf levels",
    };
    Ok(SyntheticData { dataset, truth })
}
