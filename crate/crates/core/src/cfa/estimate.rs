use nalgebra::{DMatrix, DVector};

use super::report::{fit_indices, Estimate, FitReport};
use super::{Param, SemModel};
use crate::error::{Error, Result};
use crate::optim::{minimize, BfgsOptions};
use crate::responses::ScoredMatrix;
use crate::stats::{cov_to_corr, covariance_matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceInput {
    #[default]
    Covariance,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub bfgs: BfgsOptions,
    /// Add `1e-6·I` to a sample covariance that is not positive definite.
    pub ridge: bool,
    pub input: CovarianceInput,
    pub standard_errors: bool,
    /// Smallest admissible eigenvalue ratio of the information matrix.
    pub identification_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            bfgs: BfgsOptions::default(),
            ridge: false,
            input: CovarianceInput::Covariance,
            standard_errors: true,
            identification_tol: 1e-10,
        }
    }
}

pub const RIDGE: f64 = 1e-6;

/// `Σ(θ) = ΛΦΛᵀ + Θ`.
pub fn implied_covariance(model: &SemModel, params: &DVector<f64>) -> DMatrix<f64> {
    let (lambda, phi, theta) = model.matrices(params);
    let mut sigma = &lambda * &phi * lambda.transpose();
    for i in 0..theta.len() {
        sigma[(i, i)] += theta[i];
    }
    sigma
}

fn log_det_pd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `F_ML = ln|Σ| + tr(SΣ⁻¹) − ln|S| − p`; infinite when `Σ` is not positive definite.
pub fn ml_discrepancy(model: &SemModel, sample_cov: &DMatrix<f64>, params: &DVector<f64>) -> f64 {
    let log_det_s = log_det_pd(sample_cov).unwrap_or(f64::NAN);
    Objective::new(model, sample_cov, log_det_s).value_and_gradient(params).0
}

/// `F_ML` and its analytic gradient.
pub fn ml_value_and_gradient(model: &SemModel, sample_cov: &DMatrix<f64>, params: &DVector<f64>) -> (f64, DVector<f64>) {
    let log_det_s = log_det_pd(sample_cov).unwrap_or(f64::NAN);
    Objective::new(model, sample_cov, log_det_s).value_and_gradient(params)
}

struct Objective<'a> {
    model: &'a SemModel,
    s: &'a DMatrix<f64>,
    log_det_s: f64,
    cov_pairs: Vec<(usize, usize)>,
}

impl<'a> Objective<'a> {
    fn new(model: &'a SemModel, s: &'a DMatrix<f64>, log_det_s: f64) -> Self {
        Objective {
            model,
            s,
            log_det_s,
            cov_pairs: model.free_covariance_pairs(),
        }
    }

    fn value_and_gradient(&self, params: &DVector<f64>) -> (f64, DVector<f64>) {
        let p = self.model.items.len();
        let (lambda, phi, theta) = self.model.matrices(params);
        let lp = &lambda * &phi;
        let mut sigma = &lp * lambda.transpose();
        for i in 0..p {
            sigma[(i, i)] += theta[i];
        }
        let Some(chol) = sigma.cholesky() else {
            return (f64::INFINITY, DVector::from_element(params.len(), f64::NAN));
        };
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let inv = chol.inverse();
        let trace = self.s.component_mul(&inv).sum();
        let value = log_det + trace - self.log_det_s - p as f64;

        // dF/dΣ = Σ⁻¹ − Σ⁻¹ S Σ⁻¹
        let m = &inv - &inv * self.s * &inv;
        let mlp = &m * &lp;
        let ltml = lambda.transpose() * &m * &lambda;
        let mut grad = DVector::zeros(params.len());
        let mut k = 0;
        for l in self.model.loadings.iter().filter(|l| l.param == Param::Free) {
            grad[k] = 2.0 * mlp[(l.item, l.factor)];
            k += 1;
        }
        for &(a, b) in &self.cov_pairs {
            grad[k] = 2.0 * ltml[(a, b)];
            k += 1;
        }
        for i in 0..p {
            grad[k + i] = m[(i, i)];
        }
        (value, grad)
    }

    /// Derivatives of `Σ` with respect to each free parameter.
    fn sigma_derivatives(&self, params: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let p = self.model.items.len();
        let (lambda, phi, _) = self.model.matrices(params);
        let lp = &lambda * &phi;
        let mut out = Vec::with_capacity(params.len());
        for l in self.model.loadings.iter().filter(|l| l.param == Param::Free) {
            let mut d = DMatrix::zeros(p, p);
            for k in 0..p {
                d[(l.item, k)] += lp[(k, l.factor)];
                d[(k, l.item)] += lp[(k, l.factor)];
            }
            out.push(d);
        }
        for &(a, b) in &self.cov_pairs {
            let la = lambda.column(a);
            let lb = lambda.column(b);
            out.push(la * lb.transpose() + lb * la.transpose());
        }
        for i in 0..p {
            let mut d = DMatrix::zeros(p, p);
            d[(i, i)] = 1.0;
            out.push(d);
        }
        out
    }

    /// Expected information `(n−1)/2 · tr(Σ⁻¹ Σ_a Σ⁻¹ Σ_b)`.
    fn information(&self, params: &DVector<f64>, n: usize) -> Option<DMatrix<f64>> {
        let sigma = implied_covariance(self.model, params);
        let inv = sigma.cholesky()?.inverse();
        let w: Vec<DMatrix<f64>> = self.sigma_derivatives(params).iter().map(|d| &inv * d).collect();
        let q = w.len();
        let scale = (n as f64 - 1.0) / 2.0;
        let mut info = DMatrix::zeros(q, q);
        for a in 0..q {
            for b in a..q {
                let t = w[a].component_mul(&w[b].transpose()).sum();
                info[(a, b)] = scale * t;
                info[(b, a)] = scale * t;
            }
        }
        Some(info)
    }
}

/// Flips each factor whose free loadings sum negative, with its covariances.
fn orient_factors(model: &SemModel, params: &mut DVector<f64>) {
    let cov_pairs = model.free_covariance_pairs();
    let n_load = model.n_free_loadings();
    for f in 0..model.factors.len() {
        let mine: Vec<usize> = model
            .loadings
            .iter()
            .filter(|l| l.param == Param::Free)
            .enumerate()
            .filter(|(_, l)| l.factor == f)
            .map(|(k, _)| k)
            .collect();
        let has_fixed = model.loadings.iter().any(|l| l.factor == f && l.param != Param::Free);
        let has_fixed_cov = (0..model.factors.len())
            .any(|g| g != f && matches!(model.covariance_param(f, g), Param::Fixed(v) if v != 0.0));
        if has_fixed || has_fixed_cov || mine.iter().map(|&k| params[k]).sum::<f64>() >= 0.0 {
            continue;
        }
        for &k in &mine {
            params[k] = -params[k];
        }
        for (c, &(a, b)) in cov_pairs.iter().enumerate() {
            if a == f || b == f {
                params[n_load + c] = -params[n_load + c];
            }
        }
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= 1e-10 * scale
}

/// Maximum-likelihood fit of `model` to a sample covariance matrix from `n` respondents.
///
/// Non-convergence and improper solutions are reported in the returned [`FitReport`]
/// with NA indices; only unusable input is an error.
pub fn fit_ml(model: &SemModel, sample_cov: &DMatrix<f64>, n: usize, opts: &FitOptions) -> Result<FitReport> {
    let p = model.items.len();
    if sample_cov.nrows() != p || sample_cov.ncols() != p {
        return Err(Error::Data(format!(
            "sample covariance is {}x{}, model `{}` has {p} items",
            sample_cov.nrows(),
            sample_cov.ncols(),
            model.name
        )));
    }
    if !is_symmetric(sample_cov) {
        return Err(Error::Numerical("sample covariance is not symmetric".into()));
    }
    if n <= p {
        return Err(Error::Data(format!("need more respondents than items (n = {n}, p = {p})")));
    }
    let df = model.degrees_of_freedom();
    if df < 0 {
        return Err(Error::Structural(format!(
            "model `{}` has more free parameters than sample moments (df = {df})",
            model.name
        )));
    }
    let mut s = sample_cov.clone();
    let mut ridge = None;
    let log_det_s = match log_det_pd(&s) {
        Some(v) => v,
        None if opts.ridge => {
            for i in 0..p {
                s[(i, i)] += RIDGE;
            }
            ridge = Some(RIDGE);
            log_det_pd(&s).ok_or_else(|| Error::Numerical("sample covariance not positive definite after ridge".into()))?
        }
        None => {
            return Err(Error::Numerical(
                "sample covariance is not positive definite (enable the ridge repair to proceed)".into(),
            ))
        }
    };

    let objective = Objective::new(model, &s, log_det_s);
    let start = model.start_values(&s);
    let result = minimize(|x| objective.value_and_gradient(x), start, &opts.bfgs);
    let mut params = result.x.clone();
    orient_factors(model, &mut params);

    let mut issues = Vec::new();
    let converged = result.converged && result.value.is_finite();
    if !converged {
        issues.push(format!("optimizer: {}", result.message));
    }
    let (lambda, phi, theta) = model.matrices(&params);
    for (i, t) in theta.iter().enumerate() {
        if !(*t > 0.0) {
            issues.push(format!("negative residual variance for {} ({t:.4})", model.items[i]));
        }
    }
    let m = model.factors.len();
    for a in 0..m {
        for b in a + 1..m {
            if phi[(a, b)].abs() > 1.0 {
                issues.push(format!(
                    "factor correlation {} ~~ {} out of range ({:.4})",
                    model.factors[a],
                    model.factors[b],
                    phi[(a, b)]
                ));
            }
        }
    }
    if m > 1 && phi.clone().cholesky().is_none() {
        issues.push("factor correlation matrix not positive definite".into());
    }
    let info = if converged { objective.information(&params, n) } else { None };
    let mut covariance_of_estimates = None;
    if let Some(info) = &info {
        let eig = info.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
        if !(lo > opts.identification_tol * hi) {
            issues.push("information matrix singular: model not identified at the solution".into());
        } else if opts.standard_errors {
            covariance_of_estimates = info.clone().try_inverse();
        }
    }
    let valid = converged && issues.is_empty();

    let f_min = result.value.max(0.0);
    let chi_square = (n as f64 - 1.0) * f_min;
    let diag_log: f64 = (0..p).map(|i| s[(i, i)].ln()).sum();
    let baseline_chi_square = ((n as f64 - 1.0) * (diag_log - log_det_s)).max(0.0);
    let baseline_df = (p * (p - 1) / 2) as i64;
    let indices = if valid {
        fit_indices(chi_square, df, baseline_chi_square, baseline_df, n)
    } else {
        None
    };

    let se = |k: usize| covariance_of_estimates.as_ref().map(|c| c[(k, k)].max(0.0).sqrt());
    let mut estimates = Vec::new();
    let mut k = 0;
    for l in &model.loadings {
        let free = l.param == Param::Free;
        estimates.push(Estimate {
            lhs: model.factors[l.factor].clone(),
            op: "=~".into(),
            rhs: model.items[l.item].clone(),
            value: lambda[(l.item, l.factor)],
            se: if free { se(k) } else { None },
            free,
        });
        if free {
            k += 1;
        }
    }
    for a in 0..m {
        estimates.push(Estimate {
            lhs: model.factors[a].clone(),
            op: "~~".into(),
            rhs: model.factors[a].clone(),
            value: 1.0,
            se: None,
            free: false,
        });
    }
    for a in 0..m {
        for b in a + 1..m {
            let free = model.covariance_param(a, b) == Param::Free;
            estimates.push(Estimate {
                lhs: model.factors[a].clone(),
                op: "~~".into(),
                rhs: model.factors[b].clone(),
                value: phi[(a, b)],
                se: if free { se(k) } else { None },
                free,
            });
            if free {
                k += 1;
            }
        }
    }
    for i in 0..p {
        estimates.push(Estimate {
            lhs: model.items[i].clone(),
            op: "~~".into(),
            rhs: model.items[i].clone(),
            value: theta[i],
            se: se(k + i),
            free: true,
        });
    }

    Ok(FitReport {
        model: model.name.clone(),
        label: model.name.clone(),
        converged,
        valid,
        issues,
        iterations: result.iterations,
        f_min,
        chi_square,
        df,
        baseline_chi_square,
        baseline_df,
        cfi: indices.map(|x| x.cfi),
        tli: indices.map(|x| x.tli),
        rmsea: indices.map(|x| x.rmsea),
        n,
        n_items: p,
        ridge,
        correlation_input: opts.input == CovarianceInput::Correlation,
        estimates,
    })
}

/// Fits `model` to the columns of a scored matrix.
pub fn fit_ml_scored(model: &SemModel, scored: &ScoredMatrix, opts: &FitOptions) -> Result<FitReport> {
    let ids: Vec<&str> = model.items.iter().map(String::as_str).collect();
    let data = scored.columns(&ids)?;
    let mut s = covariance_matrix(&data);
    if opts.input == CovarianceInput::Correlation {
        s = cov_to_corr(&s);
    }
    fit_ml(model, &s, data.nrows(), opts)
}
