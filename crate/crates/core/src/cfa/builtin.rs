use super::syntax::parse_model;
use super::SemModel;
use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;

/// Name of the acquiescence factor in the hierarchical model.
pub const GENERAL_FACTOR: &str = "general_factor";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinModel {
    /// One factor per facet.
    SingleComponent,
    /// Three orthogonal sub-facet factors per facet.
    ThreeSubcomponents,
    /// Three orthogonal sub-facet factors plus an orthogonal general factor on all items.
    ThreePlusAcquiescence,
    /// All facets at once, factors correlated.
    FullFiveFactor,
}

impl BuiltinModel {
    pub const ALL: [BuiltinModel; 4] = [
        BuiltinModel::SingleComponent,
        BuiltinModel::ThreeSubcomponents,
        BuiltinModel::ThreePlusAcquiescence,
        BuiltinModel::FullFiveFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinModel::SingleComponent => "single_component",
            BuiltinModel::ThreeSubcomponents => "three_subcomponents",
            BuiltinModel::ThreePlusAcquiescence => "three_plus_acquiescence",
            BuiltinModel::FullFiveFactor => "full_five_factor",
        }
    }

    pub fn from_name(name: &str) -> Option<BuiltinModel> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn per_facet(self) -> bool {
        self != BuiltinModel::FullFiveFactor
    }

    pub fn needs_sub_facets(self) -> bool {
        matches!(self, BuiltinModel::ThreeSubcomponents | BuiltinModel::ThreePlusAcquiescence)
    }
}

/// A generated model: its text and the facet it covers (`None` for the full model).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: BuiltinModel,
    pub facet: Option<String>,
    pub text: String,
    pub model: SemModel,
}

fn loading_line(factor: &str, items: &[String]) -> String {
    format!("{factor} =~ {}", items.join(" + "))
}

/// Model text for a builtin model. Per-facet models need `facet`; the full model ignores it.
pub fn builtin_model_text(q: &Questionnaire, kind: BuiltinModel, facet: Option<&str>) -> Result<String> {
    if kind == BuiltinModel::FullFiveFactor {
        let lines: Vec<String> = q
            .facets
            .iter()
            .map(|f| {
                let ids: Vec<String> = q.facet_items(&f.id).iter().map(|i| i.id.clone()).collect();
                loading_line(&f.id, &ids)
            })
            .collect();
        return Ok(format!("full_model <- '\n{}'\n", lines.join("\n")));
    }
    let facet_id = facet.ok_or_else(|| Error::Usage(format!("model `{}` needs a facet", kind.name())))?;
    let f = q
        .facet(facet_id)
        .ok_or_else(|| Error::Structural(format!("unknown facet `{facet_id}`")))?;
    let all: Vec<String> = q.facet_items(&f.id).iter().map(|i| i.id.clone()).collect();
    let model_name: String = f
        .name
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect();
    let mut lines = Vec::new();
    if kind == BuiltinModel::SingleComponent {
        lines.push(loading_line(&f.id, &all));
    } else {
        if f.sub_facets.is_empty() {
            return Err(Error::Structural(format!(
                "questionnaire `{}` declares no sub-facets for facet `{}`",
                q.name, f.id
            )));
        }
        for s in &f.sub_facets {
            let ids: Vec<String> = q.sub_facet_items(&f.id, s).iter().map(|i| i.id.clone()).collect();
            lines.push(loading_line(s, &ids));
        }
        let mut factors = f.sub_facets.clone();
        if kind == BuiltinModel::ThreePlusAcquiescence {
            lines.push(loading_line(GENERAL_FACTOR, &all));
            factors.push(GENERAL_FACTOR.to_string());
        }
        for a in 0..factors.len() {
            for b in a + 1..factors.len() {
                lines.push(format!("{} ~~ 0*{}", factors[a], factors[b]));
            }
        }
    }
    Ok(format!("{model_name} <- '{}'\n", lines.join("\n")))
}

/// Specs of one builtin model: one per facet, or a single spec for the full model.
pub fn model_specs(q: &Questionnaire, kind: BuiltinModel) -> Result<Vec<ModelSpec>> {
    let facets: Vec<Option<String>> = if kind.per_facet() {
        q.facets.iter().map(|f| Some(f.id.clone())).collect()
    } else {
        vec![None]
    };
    facets
        .into_iter()
        .map(|facet| {
            let text = builtin_model_text(q, kind, facet.as_deref())?;
            Ok(ModelSpec {
                kind,
                model: parse_model(&text, q)?,
                facet,
                text,
            })
        })
        .collect()
}

/// Builtin models the questionnaire's structure supports.
pub fn applicable_models(q: &Questionnaire) -> Vec<BuiltinModel> {
    let subs = q.facets.iter().all(|f| !f.sub_facets.is_empty());
    BuiltinModel::ALL.into_iter().filter(|k| subs || !k.needs_sub_facets()).collect()
}

/// Every builtin model the questionnaire supports: per-facet models for each facet, then the
/// full model. Fails when the questionnaire has no sub-facets.
pub fn builtin_models(q: &Questionnaire) -> Result<Vec<ModelSpec>> {
    let mut out = Vec::new();
    for kind in BuiltinModel::ALL {
        out.extend(model_specs(q, kind)?);
    }
    Ok(out)
}
