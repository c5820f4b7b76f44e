use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::persona::Persona;
use super::prompt::{build_prompt, parse_reply, ContextMode, PersonaMode, PromptRegime, SelectionPolicy, TransportReply};
use super::simulate::respondent_seed;
use super::transport::ChatTransport;
use crate::error::{Error, Result};
use crate::questionnaire::{Item, Questionnaire};
use crate::responses::{Code, ResponseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct AdministerOptions {
    /// Completed questionnaires to collect.
    pub runs: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Respondents administered concurrently.
    pub jobs: usize,
    pub seed: u64,
    /// Attempts per query before the answer is recorded as missing.
    pub max_attempts: u32,
    /// Delay before the first retry; doubled on each further retry.
    pub backoff: Duration,
    /// Append-only JSONL record of every query; existing records are reused on rerun.
    pub journal: Option<PathBuf>,
}

impl Default for AdministerOptions {
    fn default() -> Self {
        AdministerOptions {
            runs: 100,
            temperature: 0.0,
            max_tokens: 1,
            jobs: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            seed: 0,
            max_attempts: 3,
            backoff: Duration::from_millis(500),
            journal: None,
        }
    }
}

/// One query and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub timestamp: String,
    pub regime: String,
    pub persona_id: String,
    pub respondent: usize,
    pub item_id: String,
    pub raw_reply: Option<TransportReply>,
    pub parsed_code: Code,
    /// Set when every attempt failed.
    pub error: Option<String>,
}

/// A query whose attempts were exhausted; its entry is missing in the matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailedQuery {
    pub respondent: usize,
    pub item_id: String,
    pub message: String,
}

impl FailedQuery {
    pub fn to_error(&self) -> Error {
        Error::Transport {
            respondent: self.respondent,
            item: self.item_id.clone(),
            message: self.message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Administration {
    pub matrix: ResponseMatrix,
    pub failures: Vec<FailedQuery>,
    /// Queries sent in this invocation.
    pub queried: usize,
    /// Queries answered from an existing journal.
    pub resumed: usize,
}

impl Administration {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Reads journal records, skipping a torn final line.
pub fn read_journal(path: &Path) -> Result<Vec<JournalEntry>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<std::io::Result<_>>()?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(e) => out.push(e),
            Err(_) if Some(i) == last => {}
            Err(e) => return Err(Error::parse(path, Some(i + 1), e.to_string())),
        }
    }
    Ok(out)
}

struct Journal {
    writer: Option<Mutex<File>>,
    regime: String,
}

impl Journal {
    fn record(&self, entry: &JournalEntry) -> Result<()> {
        if let Some(w) = &self.writer {
            let mut line = serde_json::to_string(entry)?;
            line.push('\n');
            w.lock().unwrap_or_else(|e| e.into_inner()).write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

struct Outcome {
    codes: Vec<Code>,
    failures: Vec<FailedQuery>,
    queried: usize,
    resumed: usize,
}

/// Administers `q` once per run. In persona mode run `r` is answered by `personas[r]`.
pub fn administer(
    q: &Questionnaire,
    regime: &PromptRegime,
    personas: &[Persona],
    transport: &dyn ChatTransport,
    opts: &AdministerOptions,
) -> Result<Administration> {
    regime.validate(&q.scale)?;
    if opts.runs == 0 {
        return Err(Error::Usage("runs must be at least 1".into()));
    }
    if !(opts.temperature >= 0.0) {
        return Err(Error::Usage(format!("temperature must be nonnegative, got {}", opts.temperature)));
    }
    if opts.max_attempts == 0 {
        return Err(Error::Usage("max attempts must be at least 1".into()));
    }
    let respondents: Vec<Persona> = match regime.persona_mode {
        PersonaMode::WithPersona => {
            if personas.len() < opts.runs {
                return Err(Error::Usage(format!(
                    "{} runs need at least as many personas, got {}",
                    opts.runs,
                    personas.len()
                )));
            }
            personas[..opts.runs].to_vec()
        }
        PersonaMode::Empty => vec![Persona::empty(); opts.runs],
    };

    let regime_tag = regime.to_string();
    let mut previous: HashMap<(usize, String), JournalEntry> = HashMap::new();
    let writer = match &opts.journal {
        Some(path) => {
            for e in read_journal(path)? {
                if e.regime != regime_tag {
                    return Err(Error::Consistency(format!(
                        "journal {} was written for regime {}, not {regime_tag}",
                        path.display(),
                        e.regime
                    )));
                }
                if e.error.is_none() {
                    previous.insert((e.respondent, e.item_id.clone()), e);
                }
            }
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Some(Mutex::new(OpenOptions::new().create(true).append(true).open(path)?))
        }
        None => None,
    };
    let journal = Journal {
        writer,
        regime: regime_tag.clone(),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<Outcome>> = pool.install(|| {
        respondents
            .par_iter()
            .enumerate()
            .map(|(r, persona)| administer_one(q, regime, persona, r, transport, opts, &journal, &previous))
            .collect()
    });

    let mut scores = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    let (mut queried, mut resumed) = (0, 0);
    for o in outcomes {
        let o = o?;
        scores.push(o.codes);
        failures.extend(o.failures);
        queried += o.queried;
        resumed += o.resumed;
    }
    let ids = match regime.persona_mode {
        PersonaMode::WithPersona => respondents.iter().map(|p| p.id.clone()).collect(),
        PersonaMode::Empty => (0..opts.runs).map(|r| format!("run-{r:04}")).collect(),
    };
    let matrix = ResponseMatrix::new(
        q,
        ids,
        q.item_ids(),
        scores,
        format!("transport={} regime={regime_tag} seed={}", transport.name(), opts.seed),
    )?;
    Ok(Administration {
        matrix,
        failures,
        queried,
        resumed,
    })
}

#[allow(clippy::too_many_arguments)]
fn administer_one(
    q: &Questionnaire,
    regime: &PromptRegime,
    persona: &Persona,
    r: usize,
    transport: &dyn ChatTransport,
    opts: &AdministerOptions,
    journal: &Journal,
    previous: &HashMap<(usize, String), JournalEntry>,
) -> Result<Outcome> {
    let seed = respondent_seed(opts.seed, r);
    let mut out = Outcome {
        codes: Vec::with_capacity(q.items.len()),
        failures: Vec::new(),
        queried: 0,
        resumed: 0,
    };
    let mut history: Vec<(&Item, String)> = Vec::new();
    for (k, item) in q.items.iter().enumerate() {
        if k == 0 {
            if let Some(code) = regime.seed_answer {
                out.codes.push(Some(code));
                history.push((item, code.to_string()));
                continue;
            }
        }
        let policy = if opts.temperature > 0.0 {
            SelectionPolicy::Sample(respondent_seed(seed, k))
        } else {
            SelectionPolicy::Argmax
        };
        let reply = match previous.get(&(r, item.id.clone())) {
            Some(e) if e.persona_id == persona.id => {
                out.resumed += 1;
                e.raw_reply.clone()
            }
            _ => {
                let ctx: &[(&Item, String)] = match regime.context {
                    ContextMode::InContext => &history,
                    ContextMode::NoContext => &[],
                };
                let mut request = build_prompt(q, item, regime, persona, ctx);
                request.temperature = opts.temperature;
                request.max_tokens = opts.max_tokens;
                request.seed = Some(seed);
                out.queried += 1;
                let (reply, error) = send_with_retry(transport, &request, opts);
                let parsed = reply.as_ref().and_then(|rep| parse_reply(rep, &q.scale, policy));
                journal.record(&JournalEntry {
                    timestamp: chrono::Utc::now().to_rfc3339(),
                    regime: journal.regime.clone(),
                    persona_id: persona.id.clone(),
                    respondent: r,
                    item_id: item.id.clone(),
                    raw_reply: reply.clone(),
                    parsed_code: parsed,
                    error: error.clone(),
                })?;
                if let Some(message) = error {
                    out.failures.push(FailedQuery {
                        respondent: r,
                        item_id: item.id.clone(),
                        message,
                    });
                }
                reply
            }
        };
        let code = reply.as_ref().and_then(|rep| parse_reply(rep, &q.scale, policy));
        out.codes.push(code);
        if regime.context == ContextMode::InContext {
            history.push((item, assistant_text(reply.as_ref(), code)));
        }
    }
    Ok(out)
}

/// What the model is shown as its own earlier answer.
fn assistant_text(reply: Option<&TransportReply>, code: Code) -> String {
    match (code, reply) {
        (Some(c), _) => c.to_string(),
        (None, Some(TransportReply::Token(t))) => t.trim().to_string(),
        (None, _) => String::new(),
    }
}

fn send_with_retry(
    transport: &dyn ChatTransport,
    request: &super::prompt::TransportRequest,
    opts: &AdministerOptions,
) -> (Option<TransportReply>, Option<String>) {
    let mut delay = opts.backoff;
    let mut last = String::new();
    for attempt in 1..=opts.max_attempts {
        match transport.send(request) {
            Ok(reply) => return (Some(reply), None),
            Err(f) => {
                last = format!("attempt {attempt}/{}: {}", opts.max_attempts, f.message);
                if !f.retriable {
                    break;
                }
                if attempt < opts.max_attempts {
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
    (None, Some(last))
}
