use nalgebra::DMatrix;

use super::LoadingMatrix;
use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;

/// What to align components against.
#[derive(Debug, Clone, Copy)]
pub enum AlignmentReference<'a> {
    /// Signed facet-membership indicators: +1 for true-key items, -1 for false-key items.
    Facets(&'a Questionnaire),
    /// Another solution, e.g. a human-sample loading matrix. Rows are matched by item id.
    Loadings(&'a LoadingMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `permutation[r]` is the input column placed at reference position `r`.
    pub permutation: Vec<usize>,
    /// Sign applied to each output column.
    pub signs: Vec<f64>,
    /// Tucker congruence of each output column with its reference column, after flipping.
    pub congruences: Vec<f64>,
    pub loadings: LoadingMatrix,
}

fn congruence(x: &[f64], y: &[f64]) -> f64 {
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let xx: f64 = x.iter().map(|a| a * a).sum();
    let yy: f64 = y.iter().map(|b| b * b).sum();
    if xx == 0.0 || yy == 0.0 {
        0.0
    } else {
        xy / (xx * yy).sqrt()
    }
}

fn reference_matrix(loadings: &LoadingMatrix, reference: AlignmentReference<'_>) -> (DMatrix<f64>, Vec<String>) {
    match reference {
        AlignmentReference::Facets(q) => {
            let facets: Vec<String> = q.facets.iter().map(|f| f.id.clone()).collect();
            let m = DMatrix::from_fn(loadings.n_items(), facets.len(), |i, f| match q.item(&loadings.item_ids[i]) {
                Some(item) if item.facet == facets[f] => {
                    if item.key.is_true() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                _ => 0.0,
            });
            (m, facets)
        }
        AlignmentReference::Loadings(r) => {
            let m = DMatrix::from_fn(loadings.n_items(), r.n_components(), |i, g| {
                r.item_ids
                    .iter()
                    .position(|id| *id == loadings.item_ids[i])
                    .map(|ri| r.loadings[(ri, g)])
                    .unwrap_or(0.0)
            });
            (m, r.labels())
        }
    }
}

/// Lexicographically first permutation maximizing the summed score; greedy beyond 8 columns.
fn best_assignment(score: &DMatrix<f64>) -> Vec<usize> {
    let k = score.nrows();
    if k > 8 {
        let mut used = vec![false; k];
        return (0..k)
            .map(|r| {
                let c = (0..k)
                    .filter(|&c| !used[c])
                    .fold(None, |best: Option<usize>, c| match best {
                        Some(b) if score[(r, b)] >= score[(r, c)] => Some(b),
                        _ => Some(c),
                    })
                    .expect("a free column remains");
                used[c] = true;
                c
            })
            .collect();
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let total = |p: &[usize]| p.iter().enumerate().map(|(r, &c)| score[(r, c)]).sum::<f64>();
    let mut best_total = total(&perm);
    while next_permutation(&mut perm) {
        let t = total(&perm);
        if t > best_total + 1e-12 {
            best_total = t;
            best = perm.clone();
        }
    }
    best
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Reorders and re-signs columns to best match the reference.
pub fn align_components(loadings: &LoadingMatrix, reference: AlignmentReference<'_>) -> Result<Alignment> {
    let (refm, labels) = reference_matrix(loadings, reference);
    let k = loadings.n_components();
    if refm.ncols() != k {
        return Err(Error::Structural(format!(
            "cannot align {k} components against {} reference factors",
            refm.ncols()
        )));
    }
    let cols: Vec<Vec<f64>> = loadings.loadings.column_iter().map(|c| c.iter().copied().collect()).collect();
    let refs: Vec<Vec<f64>> = refm.column_iter().map(|c| c.iter().copied().collect()).collect();
    let signed = DMatrix::from_fn(k, k, |r, c| congruence(&cols[c], &refs[r]));
    let permutation = best_assignment(&signed.map(f64::abs));

    let mut out = DMatrix::zeros(loadings.n_items(), k);
    let mut signs = Vec::with_capacity(k);
    let mut congruences = Vec::with_capacity(k);
    for (r, &c) in permutation.iter().enumerate() {
        let sign = if signed[(r, c)] < 0.0 { -1.0 } else { 1.0 };
        out.set_column(r, &(loadings.loadings.column(c) * sign));
        signs.push(sign);
        congruences.push(signed[(r, c)] * sign);
    }
    let rotation = loadings.rotation.as_ref().map(|rot| {
        let mut m = DMatrix::zeros(rot.nrows(), k);
        for (r, &c) in permutation.iter().enumerate() {
            m.set_column(r, &(rot.column(c) * signs[r]));
        }
        m
    });
    let pick = |v: &[f64]| permutation.iter().map(|&c| v.get(c).copied().unwrap_or(f64::NAN)).collect::<Vec<_>>();
    Ok(Alignment {
        loadings: LoadingMatrix {
            item_ids: loadings.item_ids.clone(),
            loadings: out,
            eigenvalues: pick(&loadings.eigenvalues),
            explained_variance_ratio: pick(&loadings.explained_variance_ratio),
            component_labels: Some(labels),
            rotation,
            converged: loadings.converged,
        },
        permutation,
        signs,
        congruences,
    })
}

/// Shorthand for aligning against the questionnaire's facets.
pub fn align_to_facets(loadings: &LoadingMatrix, q: &Questionnaire) -> Result<Alignment> {
    align_components(loadings, AlignmentReference::Facets(q))
}
