use super::LoadingMatrix;
use crate::questionnaire::{Key, Questionnaire};

#[derive(Debug, Clone, PartialEq)]
pub struct ItemDiagnostic {
    pub item_id: String,
    pub facet: String,
    pub key: Key,
    /// Label of the column with the largest absolute loading.
    pub dominant: String,
    pub dominant_loading: f64,
    /// Dominant column is the item's own facet.
    pub hit: bool,
    /// Loading on the item's own facet column is positive for true-key items and
    /// negative for false-key items.
    pub key_sign_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub items: Vec<ItemDiagnostic>,
    pub hit_rate: f64,
    pub key_separation_rate: f64,
}

impl StructureReport {
    /// Key-sign failures split by (true-key, false-key) items.
    pub fn key_sign_failures(&self) -> (usize, usize) {
        self.items.iter().filter(|d| !d.key_sign_ok).fold((0, 0), |(t, f), d| match d.key {
            Key::True => (t + 1, f),
            Key::False => (t, f + 1),
        })
    }
}

/// Per-item simple-structure diagnostics for facet-aligned loadings.
pub fn simple_structure_report(loadings: &LoadingMatrix, q: &Questionnaire) -> StructureReport {
    let labels = loadings.labels();
    let mut items = Vec::new();
    for (i, id) in loadings.item_ids.iter().enumerate() {
        let Some(item) = q.item(id) else { continue };
        let row = loadings.loadings.row(i);
        let g = (0..row.len()).fold(0, |b, c| if row[c].abs() > row[b].abs() { c } else { b });
        let own = labels.iter().position(|l| *l == item.facet);
        let key_sign_ok = own.is_some_and(|c| {
            let v = row[c];
            match item.key {
                Key::True => v > 0.0,
                Key::False => v < 0.0,
            }
        });
        items.push(ItemDiagnostic {
            item_id: id.clone(),
            facet: item.facet.clone(),
            key: item.key,
            dominant: labels[g].clone(),
            dominant_loading: row[g].abs(),
            hit: labels[g] == item.facet,
            key_sign_ok,
        });
    }
    let n = items.len().max(1) as f64;
    StructureReport {
        hit_rate: items.iter().filter(|d| d.hit).count() as f64 / n,
        key_separation_rate: items.iter().filter(|d| d.key_sign_ok).count() as f64 / n,
        items,
    }
}
