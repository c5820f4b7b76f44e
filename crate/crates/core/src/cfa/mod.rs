//! Confirmatory factor analysis: model specification in a small lavaan-style syntax,
//! maximum-likelihood estimation, fit indices and acceptability flags.
//!
//! Identification fixes every factor variance to 1 and frees all declared loadings.
//! Factor covariances are free unless a `A ~~ 0*B` line fixes them.

mod builtin;
mod estimate;
mod pipeline;
mod report;
mod syntax;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use builtin::{applicable_models, builtin_model_text, builtin_models, model_specs, BuiltinModel, ModelSpec, GENERAL_FACTOR};
pub use pipeline::{fit_builtin, fit_responses, ModelFit};
pub use estimate::{fit_ml, fit_ml_scored, implied_covariance, ml_discrepancy, ml_value_and_gradient, CovarianceInput, FitOptions};
pub use report::{
    acceptability_flags, fit_indices, Acceptability, Estimate, FitIndices, FitReport, IndexFlag, CFI_MIN, RMSEA_MAX, TLI_MIN,
};
pub use syntax::parse_model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Free,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loading {
    pub item: usize,
    pub factor: usize,
    pub param: Param,
}

/// Measurement model `Σ = ΛΦΛᵀ + Θ` with unit factor variances and diagonal `Θ`.
///
/// Free parameters are laid out as: free loadings in declaration order, free factor
/// covariances by factor pair `(a, b)` with `a < b`, then one residual variance per item.
#[derive(Debug, Clone, PartialEq)]
pub struct SemModel {
    pub name: String,
    /// Observed variables grouped by facet and sub-facet.
    pub items: Vec<String>,
    pub factors: Vec<String>,
    pub loadings: Vec<Loading>,
    /// Constrained factor covariances keyed by `(a, b)` with `a < b`; pairs not listed are free.
    pub factor_covariances: BTreeMap<(usize, usize), Param>,
}

impl SemModel {
    pub fn covariance_param(&self, a: usize, b: usize) -> Param {
        let key = (a.min(b), a.max(b));
        self.factor_covariances.get(&key).copied().unwrap_or(Param::Free)
    }

    fn free_covariance_pairs(&self) -> Vec<(usize, usize)> {
        let m = self.factors.len();
        let mut pairs = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                if self.covariance_param(a, b) == Param::Free {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    pub fn n_free_loadings(&self) -> usize {
        self.loadings.iter().filter(|l| l.param == Param::Free).count()
    }

    pub fn n_free(&self) -> usize {
        self.n_free_loadings() + self.free_covariance_pairs().len() + self.items.len()
    }

    /// Sample moments minus free parameters.
    pub fn degrees_of_freedom(&self) -> i64 {
        let p = self.items.len() as i64;
        p * (p + 1) / 2 - self.n_free() as i64
    }

    /// `(lhs, op, rhs)` for each free parameter in layout order.
    pub fn parameter_labels(&self) -> Vec<(String, &'static str, String)> {
        let mut out = Vec::with_capacity(self.n_free());
        for l in self.loadings.iter().filter(|l| l.param == Param::Free) {
            out.push((self.factors[l.factor].clone(), "=~", self.items[l.item].clone()));
        }
        for (a, b) in self.free_covariance_pairs() {
            out.push((self.factors[a].clone(), "~~", self.factors[b].clone()));
        }
        for item in &self.items {
            out.push((item.clone(), "~~", item.clone()));
        }
        out
    }

    /// Splits a parameter vector into `(Λ, Φ, θ)`.
    pub fn matrices(&self, params: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let (p, m) = (self.items.len(), self.factors.len());
        let mut lambda = DMatrix::zeros(p, m);
        let mut phi = DMatrix::identity(m, m);
        let mut k = 0;
        for l in &self.loadings {
            lambda[(l.item, l.factor)] = match l.param {
                Param::Free => {
                    k += 1;
                    params[k - 1]
                }
                Param::Fixed(v) => v,
            };
        }
        for a in 0..m {
            for b in a + 1..m {
                let v = match self.covariance_param(a, b) {
                    Param::Free => {
                        k += 1;
                        params[k - 1]
                    }
                    Param::Fixed(v) => v,
                };
                phi[(a, b)] = v;
                phi[(b, a)] = v;
            }
        }
        let theta = DVector::from_fn(p, |i, _| params[k + i]);
        (lambda, phi, theta)
    }

    /// Start values: free loadings 0.5, free covariances 0, residual variances half the
    /// observed variances.
    pub fn start_values(&self, sample_cov: &DMatrix<f64>) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.n_free());
        v.extend(std::iter::repeat_n(0.5, self.n_free_loadings()));
        v.extend(std::iter::repeat_n(0.0, self.free_covariance_pairs().len()));
        v.extend((0..self.items.len()).map(|i| 0.5 * sample_cov[(i, i)]));
        DVector::from_vec(v)
    }

    /// The model restricted to the given items. Factors left without indicators are removed
    /// together with their covariance constraints.
    pub fn without_items(&self, drop: &[String]) -> Result<SemModel> {
        let keep: Vec<usize> = (0..self.items.len()).filter(|&i| !drop.contains(&self.items[i])).collect();
        if keep.is_empty() {
            return Err(Error::Structural(format!("model `{}` has no items left", self.name)));
        }
        let item_map: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let loadings: Vec<(usize, usize, Param)> = self
            .loadings
            .iter()
            .filter_map(|l| item_map.get(&l.item).map(|&i| (i, l.factor, l.param)))
            .collect();
        let live: Vec<usize> = (0..self.factors.len()).filter(|&f| loadings.iter().any(|l| l.1 == f)).collect();
        let factor_map: BTreeMap<usize, usize> = live.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        Ok(SemModel {
            name: self.name.clone(),
            items: keep.iter().map(|&i| self.items[i].clone()).collect(),
            factors: live.iter().map(|&f| self.factors[f].clone()).collect(),
            loadings: loadings
                .into_iter()
                .map(|(item, f, param)| Loading {
                    item,
                    factor: factor_map[&f],
                    param,
                })
                .collect(),
            factor_covariances: self
                .factor_covariances
                .iter()
                .filter_map(|(&(a, b), &p)| match (factor_map.get(&a), factor_map.get(&b)) {
                    (Some(&x), Some(&y)) => Some(((x, y), p)),
                    _ => None,
                })
                .collect(),
        })
    }
}
