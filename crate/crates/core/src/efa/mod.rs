//! Exploratory structure recovery: PCA of standardized item scores, varimax rotation,
//! component alignment against facets, and simple-structure diagnostics.
//!
//! PCA here is principal components, not maximum-likelihood exploratory factor analysis.
//! Loadings are item–component correlations; the two methods differ in whether unique
//! variance is modeled, and only the component version is provided.

mod align;
mod export;
mod pca;
mod structure;
mod varimax;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;
use crate::responses::{drop_zero_variance_items, ResponseMatrix};

pub use align::{align_components, align_to_facets, Alignment, AlignmentReference};
pub use export::{heatmap_row_order, loadings_heatmap_svg, write_loadings_csv};
pub use pca::{correlation_matrix, pca, Pca};
pub use structure::{simple_structure_report, ItemDiagnostic, StructureReport};
pub use varimax::{varimax, varimax_criterion, varimax_traced, VarimaxOptions};

/// Items × components loading matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingMatrix {
    pub item_ids: Vec<String>,
    pub loadings: DMatrix<f64>,
    /// Eigenvalues of the retained components, as extracted (pre-rotation).
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Facet aligned with each column, set by alignment.
    pub component_labels: Option<Vec<String>>,
    /// Accumulated orthogonal rotation applied to the unrotated loadings.
    pub rotation: Option<DMatrix<f64>>,
    /// False when varimax stopped at its sweep limit.
    pub converged: bool,
}

impl LoadingMatrix {
    pub fn n_items(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.loadings.ncols()
    }

    /// Row sums of squared loadings.
    pub fn communalities(&self) -> Vec<f64> {
        self.loadings.row_iter().map(|r| r.iter().map(|v| v * v).sum()).collect()
    }

    /// Column sums of squared loadings (variance accounted for by each column).
    pub fn ss_loadings(&self) -> Vec<f64> {
        self.loadings.column_iter().map(|c| c.iter().map(|v| v * v).sum()).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.component_labels
            .clone()
            .unwrap_or_else(|| (1..=self.n_components()).map(|g| format!("PC{g}")).collect())
    }
}

/// Outcome of the exploratory pipeline on one response matrix.
#[derive(Debug, Clone)]
pub struct Exploratory {
    /// Zero-variance items removed before extraction.
    pub dropped: Vec<String>,
    pub warnings: Vec<String>,
    pub alignment: Alignment,
    pub structure: StructureReport,
}

/// Drops zero-variance items, extracts `ncomp` principal components of the standardized
/// raw scores, rotates them by varimax and aligns them with the questionnaire's facets.
pub fn exploratory_analysis(responses: &ResponseMatrix, q: &Questionnaire, ncomp: usize) -> Result<Exploratory> {
    let drop = drop_zero_variance_items(responses, q);
    let kept = drop.matrix.n_items();
    if kept < ncomp {
        let dropped = if drop.dropped.is_empty() {
            "none".to_string()
        } else {
            drop.dropped.join(", ")
        };
        return Err(Error::Structural(format!(
            "{kept} item(s) left after dropping zero-variance items, {ncomp} components requested (dropped: {dropped})"
        )));
    }
    let data = drop.matrix.imputed(&q.scale);
    let corr = correlation_matrix(&data, &drop.matrix.item_ids)?;
    let extracted = pca(&corr, &drop.matrix.item_ids, ncomp)?;
    let rotated = varimax(&extracted.loadings, &VarimaxOptions::default())?;
    let alignment = align_to_facets(&rotated, q)?;
    let structure = simple_structure_report(&alignment.loadings, q);
    Ok(Exploratory {
        dropped: drop.dropped,
        warnings: drop.warnings,
        alignment,
        structure,
    })
}
