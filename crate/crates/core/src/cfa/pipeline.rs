use rayon::prelude::*;

use super::builtin::{model_specs, BuiltinModel};
use super::estimate::{fit_ml_scored, CovarianceInput, FitOptions};
use super::report::FitReport;
use super::SemModel;
use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;
use crate::responses::{drop_zero_variance_items, score_matrix, ResponseMatrix};

/// One model fitted to response data.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub kind: Option<BuiltinModel>,
    pub facet: Option<String>,
    /// Model items removed for zero variance before fitting.
    pub dropped: Vec<String>,
    pub report: FitReport,
}

impl FitReport {
    /// A fit that could not be attempted. All indices are NA.
    pub fn not_available(model: &SemModel, label: &str, n: usize, correlation_input: bool, reason: String) -> FitReport {
        FitReport {
            model: model.name.clone(),
            label: label.to_string(),
            converged: false,
            valid: false,
            issues: vec![reason],
            iterations: 0,
            f_min: f64::NAN,
            chi_square: f64::NAN,
            df: model.degrees_of_freedom(),
            baseline_chi_square: f64::NAN,
            baseline_df: 0,
            cfi: None,
            tli: None,
            rmsea: None,
            n,
            n_items: model.items.len(),
            ridge: None,
            correlation_input,
            estimates: Vec::new(),
        }
    }
}

/// Fits `model` to key-corrected scores after dropping its zero-variance items. Data that
/// cannot support the fit (too few respondents, no items left, non-positive-definite
/// covariance) yields an NA report rather than an error.
pub fn fit_responses(
    model: &SemModel,
    label: &str,
    responses: &ResponseMatrix,
    q: &Questionnaire,
    opts: &FitOptions,
) -> Result<FitReport> {
    Ok(fit_responses_detailed(model, label, responses, q, opts)?.1)
}

pub(crate) fn fit_responses_detailed(
    model: &SemModel,
    label: &str,
    responses: &ResponseMatrix,
    q: &Questionnaire,
    opts: &FitOptions,
) -> Result<(Vec<String>, FitReport)> {
    let corr = opts.input == CovarianceInput::Correlation;
    let n = responses.n_respondents();
    for id in &model.items {
        if responses.item_position(id).is_none() {
            return Err(Error::Data(format!("model item `{id}` is not in the response matrix")));
        }
    }
    let drop = drop_zero_variance_items(responses, q);
    let dropped: Vec<String> = model.items.iter().filter(|i| drop.dropped.contains(i)).cloned().collect();
    let reduced = match model.without_items(&dropped) {
        Ok(m) => m,
        Err(e) => return Ok((dropped, FitReport::not_available(model, label, n, corr, e.to_string()))),
    };
    let scored = score_matrix(&drop.matrix, q)?;
    let report = match fit_ml_scored(&reduced, &scored, opts) {
        Ok(mut r) => {
            r.label = label.to_string();
            if !dropped.is_empty() {
                r.issues.push(format!("zero-variance items dropped: {}", dropped.join(", ")));
            }
            r
        }
        Err(e @ (Error::Numerical(_) | Error::Data(_) | Error::Structural(_))) => {
            FitReport::not_available(&reduced, label, n, corr, e.to_string())
        }
        Err(e) => return Err(e),
    };
    Ok((dropped, report))
}

/// Fits every spec of the given builtin models, `jobs` at a time. Results keep the order of
/// `kinds`, facets in questionnaire order within each kind.
pub fn fit_builtin(
    q: &Questionnaire,
    responses: &ResponseMatrix,
    kinds: &[BuiltinModel],
    opts: &FitOptions,
    jobs: usize,
) -> Result<Vec<ModelFit>> {
    let mut specs = Vec::new();
    for &kind in kinds {
        specs.extend(model_specs(q, kind)?);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let label = match &spec.facet {
                    Some(f) => format!("{f}/{}", spec.kind.name()),
                    None => spec.kind.name().to_string(),
                };
                let (dropped, report) = fit_responses_detailed(&spec.model, &label, responses, q, opts)?;
                Ok(ModelFit {
                    kind: Some(spec.kind),
                    facet: spec.facet.clone(),
                    dropped,
                    report,
                })
            })
            .collect()
    })
}
