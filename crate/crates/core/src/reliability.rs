//! Cronbach's α, hierarchical ω, and the rule that neither is interpretable unless the
//! measurement model behind it fits.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cfa::{acceptability_flags, Acceptability, BuiltinModel, FitReport, ModelFit, GENERAL_FACTOR};
use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;
use crate::responses::{score_matrix, ResponseMatrix, ScoredMatrix};
use crate::stats::covariance_matrix;

/// A coefficient or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Coefficient {
    Value(f64),
    NotAvailable(String),
}

impl Coefficient {
    pub fn value(&self) -> Option<f64> {
        match self {
            Coefficient::Value(v) => Some(*v),
            Coefficient::NotAvailable(_) => None,
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Value(v) => write!(f, "{v:.2}"),
            Coefficient::NotAvailable(_) => write!(f, "NA"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    Interpretable,
    NotInterpretable(String),
}

impl Gate {
    pub fn is_interpretable(&self) -> bool {
        *self == Gate::Interpretable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub facet: String,
    pub alpha: Coefficient,
    pub omega_h: Coefficient,
    pub gating: Gate,
    /// Labels of the fits the gate was based on.
    pub source_fits: Vec<String>,
}

/// α from an items-in-columns data matrix; NA when the sum score has no variance.
pub fn cronbach_alpha_matrix(data: &DMatrix<f64>) -> Result<Coefficient> {
    let k = data.ncols();
    if k < 2 {
        return Err(Error::Structural(format!("alpha needs at least 2 items, got {k}")));
    }
    if data.nrows() < 2 {
        return Err(Error::Data("alpha needs at least 2 respondents".into()));
    }
    let cov = covariance_matrix(data);
    let item_var: f64 = cov.diagonal().sum();
    let total_var = cov.sum();
    if !(total_var > 0.0) {
        return Ok(Coefficient::NotAvailable("sum score has zero variance".into()));
    }
    let k = k as f64;
    Ok(Coefficient::Value(k / (k - 1.0) * (1.0 - item_var / total_var)))
}

/// α over the given items of a key-corrected score matrix.
pub fn cronbach_alpha(scored: &ScoredMatrix, items: &[&str]) -> Result<Coefficient> {
    cronbach_alpha_matrix(&scored.columns(items)?)
}

/// ω_h from a fitted hierarchical model: the share of model-implied sum-score variance
/// due to the general factor. NA unless the fit converged to a valid solution.
pub fn omega_h(fit: &FitReport) -> Coefficient {
    omega_h_with(fit, GENERAL_FACTOR)
}

pub fn omega_h_with(fit: &FitReport, general: &str) -> Coefficient {
    if !fit.converged {
        return Coefficient::NotAvailable("non-convergence".into());
    }
    if !fit.valid {
        return Coefficient::NotAvailable(format!("invalid solution: {}", fit.issues.join("; ")));
    }
    let factors = fit.factors();
    if !factors.iter().any(|f| f == general) {
        return Coefficient::NotAvailable(format!("model has no `{general}` factor"));
    }
    let sums: Vec<f64> = factors
        .iter()
        .map(|f| fit.loadings_of(f).iter().map(|(_, v)| v).sum())
        .collect();
    let mut var_s: f64 = fit.residual_variances().iter().map(|(_, v)| v).sum();
    for (a, fa) in factors.iter().enumerate() {
        for (b, fb) in factors.iter().enumerate() {
            let phi = if a == b {
                1.0
            } else {
                fit.estimates
                    .iter()
                    .find(|e| e.op == "~~" && ((e.lhs == *fa && e.rhs == *fb) || (e.lhs == *fb && e.rhs == *fa)))
                    .map(|e| e.value)
                    .unwrap_or(0.0)
            };
            var_s += sums[a] * sums[b] * phi;
        }
    }
    let g = factors.iter().position(|f| f == general).expect("checked above");
    if !(var_s > 0.0) {
        return Coefficient::NotAvailable("implied sum-score variance is not positive".into());
    }
    Coefficient::Value(sums[g] * sums[g] / var_s)
}

/// Builds the report from precomputed acceptability flags.
pub fn gated_report_from_flags(
    facet: &str,
    alpha: Coefficient,
    omega_h: Coefficient,
    sources: &[(String, Acceptability)],
) -> ReliabilityReport {
    let mut reasons: Vec<String> = Vec::new();
    if sources.is_empty() {
        reasons.push("no measurement model fitted".into());
    }
    for (label, flags) in sources {
        let f = flags.failures();
        if !f.is_empty() {
            reasons.push(format!("{label}: {}", f.join(", ")));
        }
    }
    if let Coefficient::NotAvailable(r) = &omega_h {
        reasons.push(format!("omega_h: {r}"));
    }
    if let Coefficient::NotAvailable(r) = &alpha {
        reasons.push(format!("alpha: {r}"));
    }
    ReliabilityReport {
        facet: facet.to_string(),
        alpha,
        omega_h,
        gating: if reasons.is_empty() {
            Gate::Interpretable
        } else {
            Gate::NotInterpretable(reasons.join("; "))
        },
        source_fits: sources.iter().map(|(l, _)| l.clone()).collect(),
    }
}

/// Reliability values with a gate: interpretable only if every source fit passes
/// CFI ≥ 0.95, TLI ≥ 0.95 and RMSEA ≤ 0.06. Raw values are always kept.
pub fn gated_report(facet: &str, alpha: Coefficient, omega_h: Coefficient, fits: &[&FitReport]) -> ReliabilityReport {
    let sources: Vec<(String, Acceptability)> = fits.iter().map(|f| (f.label.clone(), acceptability_flags(f))).collect();
    gated_report_from_flags(facet, alpha, omega_h, &sources)
}

/// Per-facet reliability from response data and the builtin fits made on it.
///
/// ω_h is read from the general factor of `omega_model`: the facet factor of the
/// single-component model, or the acquiescence factor of the 3+1 model. The gate uses the
/// single-component fit and, when different, the ω_h source fit.
pub fn facet_reliability(
    q: &Questionnaire,
    responses: &ResponseMatrix,
    fits: &[ModelFit],
    omega_model: BuiltinModel,
) -> Result<Vec<ReliabilityReport>> {
    if !matches!(omega_model, BuiltinModel::SingleComponent | BuiltinModel::ThreePlusAcquiescence) {
        return Err(Error::Usage(format!(
            "omega_h needs a general factor; `{}` has none",
            omega_model.name()
        )));
    }
    let scored = score_matrix(responses, q)?;
    let find = |kind: BuiltinModel, facet: &str| {
        fits.iter()
            .find(|f| f.kind == Some(kind) && f.facet.as_deref() == Some(facet))
            .map(|f| &f.report)
    };
    let mut out = Vec::new();
    for facet in &q.facets {
        let ids: Vec<&str> = q
            .facet_items(&facet.id)
            .iter()
            .map(|i| i.id.as_str())
            .filter(|id| scored.item_position(id).is_some())
            .collect();
        let alpha = if ids.len() < 2 {
            Coefficient::NotAvailable(format!("{} item(s) answered", ids.len()))
        } else {
            cronbach_alpha(&scored, &ids)?
        };
        let omega_fit = find(omega_model, &facet.id);
        let omega = match omega_fit {
            None => Coefficient::NotAvailable(format!("{} not fitted", omega_model.name())),
            Some(fit) if omega_model == BuiltinModel::SingleComponent => omega_h_with(fit, &facet.id),
            Some(fit) => omega_h(fit),
        };
        let mut sources: Vec<&FitReport> = find(BuiltinModel::SingleComponent, &facet.id).into_iter().collect();
        if omega_model != BuiltinModel::SingleComponent {
            sources.extend(omega_fit);
        }
        out.push(gated_report(&facet.id, alpha, omega, &sources));
    }
    Ok(out)
}
