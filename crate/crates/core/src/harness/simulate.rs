use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;
use crate::responses::{ResponseMatrix, ScoredMatrix};

/// Cut points on the standardized latent response separating codes 1..5.
pub const THRESHOLDS: [f64; 4] = [-1.5, -0.5, 0.5, 1.5];

/// Linear factor model `x = λw + ε` over a questionnaire's items.
///
/// Loadings are stated toward the keyed direction; false-key items get the opposite sign on
/// the raw response scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingModel {
    pub item_ids: Vec<String>,
    pub factor_names: Vec<String>,
    /// Items (questionnaire order) × factors.
    pub loadings: DMatrix<f64>,
    pub noise_sd: f64,
    /// Raw-scale sign per item: +1 true key, -1 false key.
    key_signs: Vec<f64>,
}

impl GeneratingModel {
    pub fn new(q: &Questionnaire, factor_names: Vec<String>, loadings: DMatrix<f64>, noise_sd: f64) -> Result<Self> {
        if loadings.nrows() != q.items.len() || loadings.ncols() != factor_names.len() {
            return Err(Error::Structural(format!(
                "loading spec is {}x{}, questionnaire has {} items and {} factors were named",
                loadings.nrows(),
                loadings.ncols(),
                q.items.len(),
                factor_names.len()
            )));
        }
        if !(noise_sd >= 0.0) {
            return Err(Error::Domain(format!("noise sd must be nonnegative, got {noise_sd}")));
        }
        Ok(GeneratingModel {
            item_ids: q.item_ids(),
            factor_names,
            loadings,
            noise_sd,
            key_signs: q.items.iter().map(|i| if i.key.is_true() { 1.0 } else { -1.0 }).collect(),
        })
    }

    /// Each item loads `loading` on its own facet and nothing else.
    pub fn facets(q: &Questionnaire, loading: f64, noise_sd: f64) -> Result<Self> {
        let names: Vec<String> = q.facets.iter().map(|f| f.id.clone()).collect();
        let l = DMatrix::from_fn(q.items.len(), names.len(), |i, f| {
            if q.items[i].facet == names[f] {
                loading
            } else {
                0.0
            }
        });
        Self::new(q, names, l, noise_sd)
    }

    /// General factor per facet plus one factor per sub-facet, all orthogonal.
    pub fn hierarchical(q: &Questionnaire, general: f64, sub: f64, noise_sd: f64) -> Result<Self> {
        let mut names: Vec<String> = q.facets.iter().map(|f| f.id.clone()).collect();
        for f in &q.facets {
            if f.sub_facets.is_empty() {
                return Err(Error::Structural(format!("facet `{}` has no sub-facets", f.id)));
            }
            names.extend(f.sub_facets.iter().map(|s| format!("{}.{s}", f.id)));
        }
        let l = DMatrix::from_fn(q.items.len(), names.len(), |i, k| {
            let item = &q.items[i];
            if names[k] == item.facet {
                general
            } else if item.sub_facet.as_ref().is_some_and(|s| names[k] == format!("{}.{s}", item.facet)) {
                sub
            } else {
                0.0
            }
        });
        Self::new(q, names, l, noise_sd)
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    /// Model-implied standard deviation of each item's latent response.
    pub fn item_sd(&self) -> Vec<f64> {
        self.loadings
            .row_iter()
            .map(|r| (r.iter().map(|v| v * v).sum::<f64>() + self.noise_sd * self.noise_sd).sqrt())
            .collect()
    }

    /// Key-corrected continuous responses for one respondent.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let w: Vec<f64> = (0..self.n_factors()).map(|_| StandardNormal.sample(rng)).collect();
        (0..self.n_items())
            .map(|i| {
                let e: f64 = StandardNormal.sample(rng);
                let signal: f64 = (0..self.n_factors()).map(|k| self.loadings[(i, k)] * w[k]).sum();
                signal + self.noise_sd * e
            })
            .collect()
    }

    /// Likert code for item `i` from a key-corrected continuous response.
    pub fn discretize(&self, i: usize, value: f64, sd: f64) -> u8 {
        let z = if sd > 0.0 { self.key_signs[i] * value / sd } else { 0.0 };
        1 + THRESHOLDS.iter().filter(|&&t| z > t).count() as u8
    }
}

/// Seed for respondent `r` of a run seeded with `seed`.
pub fn respondent_seed(seed: u64, r: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (r as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn respondent_rng(seed: u64, r: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(respondent_seed(seed, r))
}

/// Discretized responses, false-key items reversed on the raw scale.
pub fn simulate_respondents(model: &GeneratingModel, q: &Questionnaire, n: usize, seed: u64) -> Result<ResponseMatrix> {
    check(model, q, n)?;
    let sd = model.item_sd();
    let scores = (0..n)
        .map(|r| {
            let x = model.draw(&mut respondent_rng(seed, r));
            x.iter().enumerate().map(|(i, v)| Some(model.discretize(i, *v, sd[i]))).collect()
        })
        .collect();
    ResponseMatrix::new(
        q,
        (0..n).map(|r| format!("sim-{r:04}")).collect(),
        model.item_ids.clone(),
        scores,
        format!("simulator seed={seed}"),
    )
}

/// Key-corrected continuous responses, before discretization.
pub fn simulate_continuous(model: &GeneratingModel, q: &Questionnaire, n: usize, seed: u64) -> Result<ScoredMatrix> {
    check(model, q, n)?;
    let rows: Vec<Vec<f64>> = (0..n).map(|r| model.draw(&mut respondent_rng(seed, r))).collect();
    Ok(ScoredMatrix {
        respondents: (0..n).map(|r| format!("sim-{r:04}")).collect(),
        item_ids: model.item_ids.clone(),
        values: DMatrix::from_fn(n, model.n_items(), |r, i| rows[r][i]),
    })
}

fn check(model: &GeneratingModel, q: &Questionnaire, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 respondents, got {n}")));
    }
    if model.item_ids != q.item_ids() {
        return Err(Error::Structural("generating model items do not match the questionnaire".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{cov_to_corr, covariance_matrix};

    #[test]
    fn null_model_is_noise() {
        let q = Questionnaire::bfi2();
        let m = GeneratingModel::facets(&q, 0.0, 1.0).unwrap();
        let s = simulate_continuous(&m, &q, 2000, 1).unwrap();
        let c = cov_to_corr(&covariance_matrix(&s.values));
        let off: f64 = (0..60).flat_map(|i| (0..60).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| c[(i, j)].abs()).fold(0.0, f64::max);
        assert!(off < 0.1);
    }

    #[test]
    fn single_factor_correlation() {
        let q = Questionnaire::bfi2();
        let m = GeneratingModel::facets(&q, 0.8, 0.6).unwrap();
        let s = simulate_continuous(&m, &q, 500, 2).unwrap();
        let e: Vec<usize> = (0..60).filter(|&i| q.items[i].facet == "E").collect();
        let c = cov_to_corr(&covariance_matrix(&s.values));
        let mut total = 0.0;
        let mut k = 0;
        for &i in &e {
            for &j in &e {
                if i < j {
                    total += c[(i, j)];
                    k += 1;
                }
            }
        }
        // λ² / (λ² + σ²) = 0.64
        assert!((total / k as f64 - 0.64).abs() < 0.03);
    }

    #[test]
    fn keys_reverse_raw_scores() {
        let q = Questionnaire::bfi2();
        let m = GeneratingModel::facets(&q, 0.8, 0.5).unwrap();
        let r = simulate_respondents(&m, &q, 300, 3).unwrap();
        let t = q.items.iter().position(|i| i.facet == "E" && i.key.is_true()).unwrap();
        let f = q.items.iter().position(|i| i.facet == "E" && !i.key.is_true()).unwrap();
        let raw = r.imputed(&q.scale);
        let c = cov_to_corr(&covariance_matrix(&raw.select_columns(&[t, f])));
        assert!(c[(0, 1)] < -0.3);
        assert_eq!(r, simulate_respondents(&m, &q, 300, 3).unwrap());
    }

    #[test]
    fn shape_mismatch() {
        let q = Questionnaire::bfi2();
        assert!(matches!(
            GeneratingModel::new(&q, vec!["a".into()], DMatrix::zeros(50, 1), 1.0),
            Err(Error::Structural(_))
        ));
        let ipip = Questionnaire::ipip_bffm();
        let m = GeneratingModel::facets(&q, 0.5, 1.0).unwrap();
        assert!(simulate_respondents(&m, &ipip, 10, 1).is_err());
    }

    #[test]
    fn thresholds_are_symmetric() {
        let q = Questionnaire::bfi2();
        let m = GeneratingModel::facets(&q, 0.0, 1.0).unwrap();
        for v in [-2.0, -1.0, 0.0, 0.7, 1.6] {
            let t = q.items.iter().position(|i| i.key.is_true()).unwrap();
            let f = q.items.iter().position(|i| !i.key.is_true()).unwrap();
            assert_eq!(m.discretize(t, v, 1.0), 6 - m.discretize(f, v, 1.0));
        }
    }
}
