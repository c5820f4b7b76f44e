//! Alpha and omega_h per facet, gated on the fit of the single-component model.

use llm_psychometrics::cfa::{fit_builtin, BuiltinModel, FitOptions};
use llm_psychometrics::harness::{simulate_respondents, GeneratingModel};
use llm_psychometrics::reliability::facet_reliability;
use llm_psychometrics::Questionnaire;

fn main() -> llm_psychometrics::Result<()> {
    let q = Questionnaire::bfi2();
    let data = simulate_respondents(&GeneratingModel::hierarchical(&q, 0.6, 0.4, 0.6)?, &q, 1000, 4)?;
    let fits = fit_builtin(&q, &data, &[BuiltinModel::SingleComponent], &FitOptions::default(), 4)?;
    for r in facet_reliability(&q, &data, &fits, BuiltinModel::SingleComponent)? {
        println!("{}: alpha {} omega_h {} interpretable {}", r.facet, r.alpha, r.omega_h, r.gating.is_interpretable());
    }
    Ok(())
}
