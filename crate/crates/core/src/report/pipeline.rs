//! ingest -> derive -> Box-Cox -> fit -> ANOVA -> marginal means.

use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::HEADPOSE;
use super::{
    AuditConfig, AuditReport, Correlation, FactorMeans, LambdaMode, LambdaSummary, ModelReport, Provenance, ReportError,
};
use crate::data::{parse_records, AuditDataset, DataError, Ingested, PITCH, ROLL, YAW};
use crate::emmeans::{summarize, EmmOptions};
use crate::geometry::{frontal_deviation, EulerAngles};
use crate::inference::type3_anova;
use crate::linmod::{build_design, fit_ols, residual_diagnostics, DesignedModel, ModelSpec, Term};
use crate::transform::{fit_boxcox_lambda, pearson_correlation, BoxCoxTransform, CovariateTransform};

/// Hash of the analysis settings only: the input location and the output
/// options do not change the results, so they are left out.
fn analysis_hash(config: &AuditConfig) -> String {
    let mut analysis = config.clone();
    analysis.input.path = None;
    analysis.output = Default::default();
    sha256_hex(analysis.to_toml().as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Adds the `headpose` covariate when pitch, yaw and roll are present.
/// Returns the dataset unchanged otherwise.
pub fn derive_headpose(dataset: &AuditDataset) -> Result<Option<AuditDataset>, DataError> {
    if dataset.has_covariate(HEADPOSE) || ![PITCH, YAW, ROLL].iter().all(|c| dataset.has_covariate(c)) {
        return Ok(None);
    }
    dataset
        .with_derived_covariate(HEADPOSE, |r| {
            let angles = EulerAngles::new(
                r.covariate(PITCH).unwrap_or(f64::NAN),
                r.covariate(YAW).unwrap_or(f64::NAN),
                r.covariate(ROLL).unwrap_or(f64::NAN),
            );
            frontal_deviation(&angles).map_err(|source| DataError::Metric { sample_id: r.sample_id.clone(), source })
        })
        .map(Some)
}

/// Reads the configured input (relative to `base_dir`) and runs the audit.
pub fn run_audit(config: &AuditConfig, base_dir: &Path) -> Result<AuditReport, ReportError> {
    let path = config.input.path.as_ref().ok_or_else(|| ReportError::Config("no input path given".into()))?;
    let resolved = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
    let bytes = std::fs::read(&resolved)
        .map_err(|e| ReportError::Io { path: resolved.display().to_string(), message: e.to_string() })?;
    audit_bytes(config, &bytes, &path.display().to_string())
}

/// Runs the audit on in-memory delimited text; `label` is recorded in the
/// provenance block.
pub fn audit_bytes(config: &AuditConfig, bytes: &[u8], label: &str) -> Result<AuditReport, ReportError> {
    config.validate()?;
    let ingested = parse_records(bytes, &config.schema()?)?;
    let mut report = audit_dataset(config, ingested)?;
    report.provenance.input = Some(label.to_string());
    report.provenance.input_sha256 = Some(sha256_hex(bytes));
    Ok(report)
}

pub fn audit_dataset(config: &AuditConfig, ingested: Ingested) -> Result<AuditReport, ReportError> {
    config.validate()?;
    let Ingested { dataset, log } = ingested;
    let mut derived_covariates = Vec::new();
    let dataset = if config.input.derive_headpose {
        match derive_headpose(&dataset)? {
            Some(d) => {
                derived_covariates.push(HEADPOSE.to_string());
                d
            }
            None => dataset,
        }
    } else {
        dataset
    };

    let specs = config.model_specs()?;
    let designed: Vec<DesignedModel> = specs
        .iter()
        .map(|s| build_design(&dataset, s).map_err(|source| ReportError::Model { model: s.name.clone(), source }))
        .collect::<Result<_, _>>()?;

    let largest = largest_model(&specs);
    let settings = config.boxcox.settings();
    let estimate = |i: usize| {
        let m = &designed[i];
        fit_boxcox_lambda(&m.response, m.design.matrix(), &settings).map_err(|source| ReportError::Transform {
            context: format!("Box-Cox estimation on model {:?}", specs[i].name),
            source,
        })
    };

    let (transforms, lambda) = match (config.boxcox.lambda, config.boxcox.per_model) {
        (Some(l), _) => (
            vec![BoxCoxTransform::fixed(l); specs.len()],
            LambdaSummary { mode: LambdaMode::Fixed, lambda: Some(l), fitted_on: None, log_likelihood: None },
        ),
        (None, false) => {
            let t = estimate(largest)?;
            let summary = LambdaSummary {
                mode: LambdaMode::Shared,
                lambda: Some(t.lambda),
                fitted_on: Some(specs[largest].name.clone()),
                log_likelihood: Some(t.log_likelihood),
            };
            (vec![t; specs.len()], summary)
        }
        (None, true) => (
            (0..specs.len()).map(estimate).collect::<Result<Vec<_>, _>>()?,
            LambdaSummary { mode: LambdaMode::PerModel, lambda: None, fitted_on: None, log_likelihood: None },
        ),
    };

    let options = EmmOptions { alpha: config.alpha, anchor: config.emmeans.covariate_mean };
    let models = designed
        .par_iter()
        .zip(specs.par_iter())
        .zip(config.models.par_iter())
        .zip(transforms.par_iter())
        .map(|(((m, spec), mc), bc)| fit_model(m, spec, &mc.title(), bc, config, options))
        .collect::<Result<Vec<_>, _>>()?;

    let correlations = correlations(&dataset, &designed[largest], &transforms[largest], &specs, largest)?;

    Ok(AuditReport {
        provenance: Provenance {
            tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            config_sha256: analysis_hash(config),
            input: None,
            input_sha256: None,
            ingest: log,
            derived_covariates,
        },
        alpha: config.alpha,
        lambda,
        emmeans_weighting: "equal",
        covariate_anchor: config.emmeans.covariate_mean,
        correlations,
        models,
    })
}

/// Index of the model with the most terms (first on ties).
fn largest_model(specs: &[ModelSpec]) -> usize {
    let mut best = 0;
    for (i, s) in specs.iter().enumerate() {
        if s.terms.len() > specs[best].terms.len() {
            best = i;
        }
    }
    best
}

fn fit_model(
    model: &DesignedModel,
    spec: &ModelSpec,
    title: &str,
    transform: &BoxCoxTransform,
    config: &AuditConfig,
    options: EmmOptions,
) -> Result<ModelReport, ReportError> {
    let name = &spec.name;
    let z = transform.apply(&model.response).map_err(|source| ReportError::Transform {
        context: format!("Box-Cox transform for model {name:?}"),
        source,
    })?;
    let fit = fit_ols(&model.design, &z).map_err(|source| ReportError::Model { model: name.clone(), source })?;
    let anova = type3_anova(&model.design, &z, &fit)
        .map_err(|source| ReportError::Inference { model: name.clone(), source })?;
    let shape = residual_diagnostics(&fit);

    let mut emmeans = Vec::new();
    for focus in &config.emmeans.focus {
        let Some(term) = model.design.term_for_source(focus) else { continue };
        let summary = summarize(&model.design, &fit, focus, options, Some((transform, spec.response_offset)))
            .map_err(|source| ReportError::Emmeans { model: name.clone(), factor: focus.clone(), source })?;
        emmeans.push(FactorMeans { label: term.label.clone(), summary });
    }

    Ok(ModelReport {
        name: name.clone(),
        title: title.to_string(),
        nobs: fit.nobs(),
        df_residual: fit.df_residual,
        lambda: transform.lambda,
        offset: spec.response_offset,
        r_squared: fit.r_squared,
        residual_skewness: shape.skewness,
        residual_excess_kurtosis: shape.excess_kurtosis,
        anova,
        emmeans,
    })
}

fn correlations(
    dataset: &AuditDataset,
    model: &DesignedModel,
    transform: &BoxCoxTransform,
    specs: &[ModelSpec],
    on: usize,
) -> Result<Vec<Correlation>, ReportError> {
    let spec = &specs[on];
    let z = transform.apply(&model.response).map_err(|source| ReportError::Transform {
        context: format!("Box-Cox transform for model {:?}", spec.name),
        source,
    })?;
    let records = dataset.records();
    let mut out = Vec::new();
    for name in dataset.covariate_names() {
        let raw: Vec<f64> =
            model.design.rows().iter().map(|&i| records[i].covariate(name).unwrap_or(f64::NAN)).collect();
        let mut candidates = vec![(CovariateTransform::Identity, raw.clone())];
        let reciprocal_in_use = specs.iter().flat_map(|s| &s.terms).any(
            |t| matches!(t, Term::Covariate { name: n, transform: CovariateTransform::Reciprocal, .. } if n == name),
        );
        if reciprocal_in_use && raw.iter().all(|v| *v > 0.0) {
            candidates.push((CovariateTransform::Reciprocal, raw.iter().map(|v| 1.0 / v).collect()));
        }
        for (t, values) in candidates {
            // constant covariates have no defined correlation; leave them out
            if let Ok(r) = pearson_correlation(&z, &values) {
                out.push(Correlation { covariate: name.clone(), transform: t, r, n: values.len() });
            }
        }
    }
    Ok(out)
}
