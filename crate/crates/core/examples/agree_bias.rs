//! Agree bias of the agree bot against a simulated reference sample.

use llm_psychometrics::bias::{agree_bias, percentile_test, ReferenceDistribution};
use llm_psychometrics::harness::{administer, simulate_respondents, AdministerOptions, AgreeBot, ContextMode, GeneratingModel, PersonaMode, PromptRegime};
use llm_psychometrics::responses::score_matrix;
use llm_psychometrics::Questionnaire;

fn main() -> llm_psychometrics::Result<()> {
    let q = Questionnaire::ipip_bffm();
    let regime = PromptRegime::new(ContextMode::NoContext, PersonaMode::Empty, None);
    let bot = administer(&q, &regime, &[], &AgreeBot::new(&q.scale), &AdministerOptions { runs: 10, ..Default::default() })?;
    let bot_bias = agree_bias(&score_matrix(&bot.matrix, &q)?, &q)?;

    let humans = simulate_respondents(&GeneratingModel::facets(&q, 0.6, 0.6)?, &q, 999, 5)?;
    let reference = ReferenceDistribution::new(agree_bias(&score_matrix(&humans, &q)?, &q)?.values())?;
    let mean = bot_bias.values().iter().sum::<f64>() / bot_bias.values().len() as f64;
    let test = percentile_test(mean, &reference);
    println!("agree bot bias {mean:.2}, percentile {:.3}, p = {:.4}", test.percentile, test.p_value);
    Ok(())
}
