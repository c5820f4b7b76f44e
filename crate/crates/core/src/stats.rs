//! Small descriptive-statistics helpers shared by the analysis modules.

use nalgebra::DMatrix;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n - 1 denominator.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Column covariance matrix with the n - 1 denominator.
pub fn covariance_matrix(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows();
    let means = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    (centered.transpose() * &centered) / (n as f64 - 1.0)
}

/// Rescales a covariance matrix to correlations. Zero-variance entries yield NaN.
pub fn cov_to_corr(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let sd: Vec<f64> = (0..cov.nrows()).map(|i| cov[(i, i)].sqrt()).collect();
    DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| {
        if i == j {
            1.0
        } else {
            cov[(i, j)] / (sd[i] * sd[j])
        }
    })
}
