use nalgebra::DMatrix;

use super::LoadingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarimaxOptions {
    /// Row-normalize by the square root of communalities before rotating.
    pub kaiser_normalize: bool,
    /// Stop when one sweep improves the criterion by less than this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for VarimaxOptions {
    fn default() -> Self {
        VarimaxOptions {
            kaiser_normalize: true,
            tol: 1e-8,
            max_sweeps: 1000,
        }
    }
}

/// Sum over columns of the variance of squared loadings.
pub fn varimax_criterion(loadings: &DMatrix<f64>) -> f64 {
    let p = loadings.nrows() as f64;
    loadings
        .column_iter()
        .map(|col| {
            let sq: Vec<f64> = col.iter().map(|v| v * v).collect();
            let m = sq.iter().sum::<f64>() / p;
            sq.iter().map(|s| s * s).sum::<f64>() / p - m * m
        })
        .sum()
}

/// Optimal plane rotation angle for columns `j`, `k`.
fn pair_angle(b: &DMatrix<f64>, j: usize, k: usize) -> f64 {
    let p = b.nrows() as f64;
    let (mut a, mut bb, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..b.nrows() {
        let (x, y) = (b[(i, j)], b[(i, k)]);
        let u = x * x - y * y;
        let v = 2.0 * x * y;
        a += u;
        bb += v;
        c += u * u - v * v;
        d += 2.0 * u * v;
    }
    let num = d - 2.0 * a * bb / p;
    let den = c - (a * a - bb * bb) / p;
    num.atan2(den) / 4.0
}

fn rotate_columns(m: &mut DMatrix<f64>, j: usize, k: usize, cos: f64, sin: f64) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, j)], m[(i, k)]);
        m[(i, j)] = x * cos + y * sin;
        m[(i, k)] = -x * sin + y * cos;
    }
}

/// Varimax rotation by cyclic pairwise plane rotations.
///
/// The returned columns are re-signed so each column's largest absolute loading is positive
/// and ordered by sum of squared loadings, descending; `rotation` records the full
/// orthogonal transform from the input loadings.
pub fn varimax(input: &LoadingMatrix, opts: &VarimaxOptions) -> Result<LoadingMatrix> {
    varimax_traced(input, opts).map(|(l, _)| l)
}

/// Like [`varimax`] but also returns the criterion after every sweep (first entry: start).
pub fn varimax_traced(input: &LoadingMatrix, opts: &VarimaxOptions) -> Result<(LoadingMatrix, Vec<f64>)> {
    let k = input.n_components();
    if k < 2 {
        return Err(Error::Domain("varimax needs at least two components".into()));
    }
    let p = input.n_items();
    let weights: Vec<f64> = if opts.kaiser_normalize {
        input.communalities().iter().map(|h| if *h > 0.0 { h.sqrt() } else { 1.0 }).collect()
    } else {
        vec![1.0; p]
    };
    let mut b = DMatrix::from_fn(p, k, |i, g| input.loadings[(i, g)] / weights[i]);
    let mut rot = DMatrix::<f64>::identity(k, k);
    let mut trace = vec![varimax_criterion(&b)];
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        for j in 0..k {
            for l in j + 1..k {
                let phi = pair_angle(&b, j, l);
                let (s, c) = phi.sin_cos();
                rotate_columns(&mut b, j, l, c, s);
                rotate_columns(&mut rot, j, l, c, s);
            }
        }
        let v = varimax_criterion(&b);
        let improvement = v - trace[trace.len() - 1];
        trace.push(v);
        if improvement < opts.tol {
            converged = true;
            break;
        }
    }

    let mut rotated = DMatrix::from_fn(p, k, |i, g| b[(i, g)] * weights[i]);
    for g in 0..k {
        let col = rotated.column(g);
        if col[col.iamax()] < 0.0 {
            rotated.column_mut(g).neg_mut();
            rot.column_mut(g).neg_mut();
        }
    }
    let ss: Vec<f64> = rotated.column_iter().map(|c| c.norm_squared()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &c| ss[c].total_cmp(&ss[a]).then(a.cmp(&c)));
    let rotated = rotated.select_columns(&order);
    let rot = rot.select_columns(&order);

    let rotation = match &input.rotation {
        Some(prev) => prev * &rot,
        None => rot,
    };
    Ok((
        LoadingMatrix {
            item_ids: input.item_ids.clone(),
            loadings: rotated,
            eigenvalues: input.eigenvalues.clone(),
            explained_variance_ratio: input.explained_variance_ratio.clone(),
            component_labels: None,
            rotation: Some(rotation),
            converged,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn wrap(m: DMatrix<f64>) -> LoadingMatrix {
        LoadingMatrix {
            item_ids: (0..m.nrows()).map(|i| format!("i{i}")).collect(),
            eigenvalues: vec![1.0; m.ncols()],
            explained_variance_ratio: vec![0.0; m.ncols()],
            loadings: m,
            component_labels: None,
            rotation: None,
            converged: true,
        }
    }

    fn plane(theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
    }

    fn two_factor_simple() -> DMatrix<f64> {
        DMatrix::from_row_slice(6, 2, &[0.8, 0.0, 0.7, 0.0, 0.6, 0.0, 0.0, 0.75, 0.0, 0.65, 0.0, 0.7])
    }

    fn random_loadings(seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(12, 3, |_, _| rng.random_range(-0.7..0.7))
    }

    #[test]
    fn simple_structure_is_fixed_point() {
        let a = two_factor_simple();
        let r = varimax(&wrap(a.clone()), &VarimaxOptions::default()).unwrap();
        for i in 0..a.nrows() {
            let mut x: Vec<f64> = a.row(i).iter().map(|v| v.abs()).collect();
            let mut y: Vec<f64> = r.loadings.row(i).iter().map(|v| v.abs()).collect();
            x.sort_by(f64::total_cmp);
            y.sort_by(f64::total_cmp);
            for (u, v) in x.iter().zip(&y) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn recovers_mixed_structure_and_preserves_communalities() {
        let a = two_factor_simple();
        let mixed = &a * plane(FRAC_PI_4);
        let input = wrap(mixed.clone());
        let r = varimax(&input, &VarimaxOptions::default()).unwrap();
        assert!(r.converged);
        for (h0, h1) in input.communalities().iter().zip(r.communalities()) {
            assert!((h0 - h1).abs() < 1e-10);
        }
        let rot = r.rotation.as_ref().unwrap();
        assert!((rot.transpose() * rot - DMatrix::identity(2, 2)).abs().max() < 1e-10);
        assert!((&mixed * rot - &r.loadings).abs().max() < 1e-12);
        // Each row loads on exactly one column again.
        for row in r.loadings.row_iter() {
            let small = row.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            assert!(small < 1e-8);
        }
    }

    #[test]
    fn criterion_is_nondecreasing() {
        for seed in 0..20 {
            let l = wrap(random_loadings(seed));
            for kaiser in [true, false] {
                let opts = VarimaxOptions {
                    kaiser_normalize: kaiser,
                    ..Default::default()
                };
                let (_, trace) = varimax_traced(&l, &opts).unwrap();
                assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-14), "seed {seed}: {trace:?}");
            }
        }
    }

    #[test]
    fn pair_angle_beats_grid() {
        let b = random_loadings(3).columns(0, 2).into_owned();
        let phi = pair_angle(&b, 0, 1);
        let mut best = f64::NEG_INFINITY;
        let mut t = -FRAC_PI_4;
        while t < FRAC_PI_4 {
            best = best.max(varimax_criterion(&(&b * plane(t))));
            t += 1e-3;
        }
        // rotate_columns with angle phi right-multiplies by plane(phi).
        let at_phi = varimax_criterion(&(&b * plane(phi)));
        assert!(at_phi >= best - 1e-9);
    }

    #[test]
    fn sweep_limit_flags_nonconvergence() {
        let l = wrap(random_loadings(9));
        let r = varimax(&l, &VarimaxOptions { max_sweeps: 1, tol: 0.0, ..Default::default() }).unwrap();
        assert!(!r.converged);
        assert!(varimax(&wrap(DMatrix::from_element(4, 1, 0.5)), &VarimaxOptions::default()).is_err());
    }
}
