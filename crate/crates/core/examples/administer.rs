//! Administer the BFI-2 to simulated respondents through the chat harness.

use llm_psychometrics::harness::{
    administer, AdministerOptions, ContextMode, GeneratingModel, PersonaMode, PromptRegime, SimulatorBot,
};
use llm_psychometrics::Questionnaire;

fn main() -> llm_psychometrics::Result<()> {
    let q = Questionnaire::bfi2();
    let bot = SimulatorBot::new(&q, GeneratingModel::facets(&q, 0.7, 0.5)?);
    let regime = PromptRegime::new(ContextMode::InContext, PersonaMode::Empty, None);
    let opts = AdministerOptions { runs: 20, seed: 1, ..AdministerOptions::default() };
    let result = administer(&q, &regime, &[], &bot, &opts)?;
    println!("{} respondents, {} queries, complete: {}", result.matrix.n_respondents(), result.queried, result.is_complete());
    let first: Vec<String> = result.matrix.scores[0].iter().take(12).map(|c| c.map_or("-".into(), |v| v.to_string())).collect();
    println!("first respondent, items 1-12: {}", first.join(" "));
    Ok(())
}
