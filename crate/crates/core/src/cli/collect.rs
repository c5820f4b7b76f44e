use std::fs::File;
use std::io::BufWriter;
use std::time::Duration;

use serde_json::json;

use super::output::{config_hash, questionnaire_digest, sha256_hex, Header};
use super::{jobs_or_default, AdministerArgs, StageOutput, TransportArg, EXIT_PARTIAL};
use crate::error::{Error, Result};
use crate::harness::{
    administer, builtin_personas, load_personas, AdministerOptions, AgreeBot, ChatTransport, GeneratingModel,
    OpenAiConfig, OpenAiTransport, PersonaMode, PromptRegime, RandomBot, SimulatorBot,
};
use crate::questionnaire::Questionnaire;

/// Administers the questionnaire and writes `responses.csv` plus `journal.jsonl`. A rerun
/// with the same arguments reuses journaled replies and only queries what is missing.
pub fn cmd_administer(args: &AdministerArgs) -> Result<StageOutput> {
    let q = Questionnaire::resolve(&args.questionnaire)?;
    let (persona_mode, personas) = match args.personas.as_str() {
        "none" => (PersonaMode::Empty, Vec::new()),
        "builtin" => (PersonaMode::WithPersona, builtin_personas()),
        path => (PersonaMode::WithPersona, load_personas(path)?),
    };
    let regime = PromptRegime::new(args.regime.into(), persona_mode, args.seed_answer);
    regime.validate(&q.scale)?;
    if args.runs == 0 {
        return Err(Error::Usage("--runs must be at least 1".into()));
    }
    if persona_mode == PersonaMode::WithPersona && personas.len() < args.runs {
        return Err(Error::Usage(format!(
            "--runs {} needs at least as many personas, the persona set has {}",
            args.runs,
            personas.len()
        )));
    }
    if !(args.temperature >= 0.0) {
        return Err(Error::Usage("--temperature must be nonnegative".into()));
    }

    let transport: Box<dyn ChatTransport> = match args.transport {
        TransportArg::AgreeBot => Box::new(AgreeBot::new(&q.scale)),
        TransportArg::RandomBot => Box::new(RandomBot::new(&q.scale)),
        TransportArg::Simulator => {
            let model = match args.sim_sub_loading {
                Some(sub) => GeneratingModel::hierarchical(&q, args.sim_loading, sub, args.sim_noise)?,
                None => GeneratingModel::facets(&q, args.sim_loading, args.sim_noise)?,
            };
            Box::new(SimulatorBot::new(&q, model))
        }
        TransportArg::OpenaiCompatible => Box::new(OpenAiTransport::from_env(OpenAiConfig {
            endpoint: args.endpoint.clone(),
            model: args.remote_model.clone(),
            api_key_env: args.api_key_env.clone(),
            max_in_flight: args.max_in_flight,
            logprobs: args.logprobs,
            ..OpenAiConfig::default()
        })?),
    };
    let transport_config = match args.transport {
        TransportArg::OpenaiCompatible => json!({
            "endpoint": args.endpoint, "model": args.remote_model, "logprobs": args.logprobs
        }),
        TransportArg::Simulator => json!({
            "loading": args.sim_loading, "sub_loading": args.sim_sub_loading, "noise": args.sim_noise
        }),
        _ => json!(null),
    };
    let persona_digest = sha256_hex(serde_json::to_string(&personas)?.as_bytes());
    let config = json!({
        "command": "administer",
        "questionnaire": questionnaire_digest(&q),
        "regime": regime.to_string(),
        "personas": persona_digest,
        "transport": args.transport.name(),
        "transport_config": transport_config,
        "runs": args.runs,
        "temperature": args.temperature,
        "max_tokens": args.max_tokens,
        "seed": args.seed,
    });

    std::fs::create_dir_all(&args.out)?;
    let journal = args.out.join("journal.jsonl");
    let opts = AdministerOptions {
        runs: args.runs,
        temperature: args.temperature,
        max_tokens: args.max_tokens,
        jobs: jobs_or_default(args.jobs),
        seed: args.seed,
        max_attempts: args.max_attempts,
        backoff: Duration::from_millis(500),
        journal: Some(journal.clone()),
    };
    let result = administer(&q, &regime, &personas, transport.as_ref(), &opts)?;

    let label = args.label.clone().unwrap_or_else(|| match args.transport {
        TransportArg::OpenaiCompatible => args.remote_model.clone(),
        t => t.name().to_string(),
    });
    let header = Header {
        command: "administer".into(),
        config: config_hash(&config),
        seed: Some(args.seed),
        questionnaire: q.name.clone(),
        label,
        regime: regime.to_string(),
    };
    let path = args.out.join("responses.csv");
    result.matrix.write_csv(BufWriter::new(File::create(&path)?), &header.lines())?;

    let mut messages = vec![format!(
        "{} respondents, {} queries sent, {} reused from the journal",
        result.matrix.n_respondents(),
        result.queried,
        result.resumed
    )];
    let exit_code = if result.is_complete() {
        0
    } else {
        messages.push(format!(
            "{} queries failed after {} attempts and are recorded as missing; rerun to retry them",
            result.failures.len(),
            args.max_attempts
        ));
        messages.extend(result.failures.iter().take(10).map(|f| f.to_error().to_string()));
        EXIT_PARTIAL
    };
    Ok(StageOutput {
        files: vec![path, journal],
        messages,
        exit_code,
    })
}
