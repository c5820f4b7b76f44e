//! Maximum-likelihood CFA of a hand-written model and a builtin one.

use llm_psychometrics::cfa::{builtin_model_text, fit_ml_scored, parse_model, BuiltinModel, FitOptions};
use llm_psychometrics::harness::{simulate_continuous, GeneratingModel};
use llm_psychometrics::Questionnaire;

fn main() -> llm_psychometrics::Result<()> {
    let q = Questionnaire::bfi2();
    let data = simulate_continuous(&GeneratingModel::hierarchical(&q, 0.6, 0.4, 0.6)?, &q, 2000, 8)?;

    let single = parse_model(&builtin_model_text(&q, BuiltinModel::SingleComponent, Some("E"))?, &q)?;
    let fit = fit_ml_scored(&single, &data, &FitOptions::default())?;
    println!("{}", fit.to_text());

    let text = "sociability <- '\nE =~ E0 + E5 + E10 + E15\n'";
    let fit = fit_ml_scored(&parse_model(text, &q)?, &data, &FitOptions::default())?;
    println!("four-item model: chi2 {:.2} on {} df, CFI {:?}", fit.chi_square, fit.df, fit.cfi);
    Ok(())
}
