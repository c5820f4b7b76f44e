//! PCA with varimax rotation on simulated five-factor data, then simple-structure checks.

use llm_psychometrics::efa::exploratory_analysis;
use llm_psychometrics::harness::{simulate_respondents, GeneratingModel};
use llm_psychometrics::Questionnaire;

fn main() -> llm_psychometrics::Result<()> {
    let q = Questionnaire::bfi2();
    let data = simulate_respondents(&GeneratingModel::facets(&q, 0.7, 0.5)?, &q, 500, 3)?;
    let ex = exploratory_analysis(&data, &q, 5)?;
    println!("hit rate {:.3}, key separation {:.3}", ex.structure.hit_rate, ex.structure.key_separation_rate);
    for d in ex.structure.items.iter().take(5) {
        println!("{} ({}) -> {} {:+.2}", d.item_id, d.facet, d.dominant, d.dominant_loading);
    }
    Ok(())
}
