use nalgebra::{DMatrix, SymmetricEigen};

use super::LoadingMatrix;
use crate::error::{Error, Result};
use crate::responses::standardize;
use crate::stats::{cov_to_corr, covariance_matrix};

const PSD_TOLERANCE: f64 = 1e-8;

/// Pearson correlation matrix of the columns of `data`.
pub fn correlation_matrix(data: &DMatrix<f64>, names: &[String]) -> Result<DMatrix<f64>> {
    if data.nrows() < 2 {
        return Err(Error::Data("correlation needs at least two respondents".into()));
    }
    // Reuses the zero-variance check of standardization for a named error.
    standardize(data, names)?;
    let mut corr = cov_to_corr(&covariance_matrix(data));
    let p = corr.nrows();
    for i in 0..p {
        corr[(i, i)] = 1.0;
        for j in 0..i {
            let v = corr[(i, j)].clamp(-1.0, 1.0);
            corr[(i, j)] = v;
            corr[(j, i)] = v;
        }
    }
    Ok(corr)
}

/// Result of a principal component extraction.
#[derive(Debug, Clone)]
pub struct Pca {
    pub loadings: LoadingMatrix,
    /// Unit eigenvectors of the retained components (items × components).
    pub eigenvectors: DMatrix<f64>,
    /// All eigenvalues, descending.
    pub all_eigenvalues: Vec<f64>,
}

impl Pca {
    /// Component scores of standardized data: `Z · V`.
    pub fn scores(&self, standardized: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if standardized.ncols() != self.eigenvectors.nrows() {
            return Err(Error::Data(format!(
                "data has {} columns, components were fit on {}",
                standardized.ncols(),
                self.eigenvectors.nrows()
            )));
        }
        Ok(standardized * &self.eigenvectors)
    }
}

/// Principal components of a correlation matrix. Column `g` of the loadings is
/// `eigenvector_g * sqrt(eigenvalue_g)`; each column is signed so that its largest
/// absolute entry is positive.
pub fn pca(corr: &DMatrix<f64>, item_ids: &[String], ncomp: usize) -> Result<Pca> {
    let p = corr.nrows();
    if corr.ncols() != p || item_ids.len() != p {
        return Err(Error::Data("correlation matrix must be square and match the item list".into()));
    }
    if ncomp == 0 || ncomp > p {
        return Err(Error::Domain(format!("cannot extract {ncomp} components from {p} items")));
    }
    let asym = (corr - corr.transpose()).abs().max();
    if asym > PSD_TOLERANCE {
        return Err(Error::Numerical(format!("correlation matrix not symmetric (max asymmetry {asym:.2e})")));
    }
    let eig = SymmetricEigen::new(corr.clone());
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if let Some(&min) = values.last() {
        if min < -PSD_TOLERANCE {
            return Err(Error::Numerical(format!(
                "correlation matrix is not positive semi-definite (eigenvalue {min:.3e}); \
                 drop near-duplicate or zero-variance items and retry"
            )));
        }
    }
    let rank = values.iter().filter(|&&v| v > PSD_TOLERANCE * values[0].max(1.0)).count();
    if ncomp > rank {
        return Err(Error::Numerical(format!(
            "requested {ncomp} components but the correlation matrix has rank {rank}"
        )));
    }
    let trace: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let mut vectors = DMatrix::zeros(p, ncomp);
    let mut loadings = DMatrix::zeros(p, ncomp);
    for g in 0..ncomp {
        let mut v = eig.eigenvectors.column(order[g]).into_owned();
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, x)| if x.abs() > bv + 1e-12 { (i, x.abs()) } else { (bi, bv) });
        if v[imax] < 0.0 {
            v = -v;
        }
        let scale = values[g].max(0.0).sqrt();
        vectors.set_column(g, &v);
        loadings.set_column(g, &(v * scale));
    }
    Ok(Pca {
        loadings: LoadingMatrix {
            item_ids: item_ids.to_vec(),
            loadings,
            eigenvalues: values[..ncomp].to_vec(),
            explained_variance_ratio: values[..ncomp].iter().map(|v| v.max(0.0) / trace).collect(),
            component_labels: None,
            rotation: None,
            converged: true,
        },
        eigenvectors: vectors,
        all_eigenvalues: values,
    })
}
