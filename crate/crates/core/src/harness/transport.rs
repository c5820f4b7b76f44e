use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::prompt::{TransportReply, TransportRequest};
use super::simulate::GeneratingModel;
use crate::questionnaire::{LikertScale, Questionnaire};

/// Why a transport call failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportFailure {
    pub message: String,
    /// Worth another attempt (timeouts, rate limits, server errors).
    pub retriable: bool,
}

impl TransportFailure {
    pub fn retriable(message: impl Into<String>) -> Self {
        TransportFailure {
            message: message.into(),
            retriable: true,
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        TransportFailure {
            message: message.into(),
            retriable: false,
        }
    }
}

impl fmt::Display for TransportFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Anything that answers a chat request.
pub trait ChatTransport: Send + Sync {
    fn name(&self) -> &str;
    fn send(&self, request: &TransportRequest) -> Result<TransportReply, TransportFailure>;
}

/// Always answers with the strongest agreement code.
#[derive(Debug, Clone)]
pub struct AgreeBot {
    code: u8,
}

impl AgreeBot {
    pub fn new(scale: &LikertScale) -> Self {
        AgreeBot { code: scale.max_code() }
    }
}

impl ChatTransport for AgreeBot {
    fn name(&self) -> &str {
        "agree-bot"
    }

    fn send(&self, _: &TransportRequest) -> Result<TransportReply, TransportFailure> {
        Ok(TransportReply::Token(self.code.to_string()))
    }
}

/// Always answers with the strongest disagreement code.
#[derive(Debug, Clone)]
pub struct DisagreeBot {
    code: u8,
}

impl DisagreeBot {
    pub fn new(scale: &LikertScale) -> Self {
        DisagreeBot { code: scale.min_code() }
    }
}

impl ChatTransport for DisagreeBot {
    fn name(&self) -> &str {
        "disagree-bot"
    }

    fn send(&self, _: &TransportRequest) -> Result<TransportReply, TransportFailure> {
        Ok(TransportReply::Token(self.code.to_string()))
    }
}

/// Stable digest of a request's content and seed.
pub fn request_digest(request: &TransportRequest) -> u64 {
    let mut h = Sha256::new();
    h.update(request.seed.unwrap_or(0).to_le_bytes());
    h.update(request.system_text.as_bytes());
    for t in &request.turns {
        h.update([0u8]);
        h.update(t.content.as_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Uniform random codes, a deterministic function of the request and its seed.
#[derive(Debug, Clone)]
pub struct RandomBot {
    min: u8,
    max: u8,
}

impl RandomBot {
    pub fn new(scale: &LikertScale) -> Self {
        RandomBot {
            min: scale.min_code(),
            max: scale.max_code(),
        }
    }
}

impl ChatTransport for RandomBot {
    fn name(&self) -> &str {
        "random-bot"
    }

    fn send(&self, request: &TransportRequest) -> Result<TransportReply, TransportFailure> {
        let mut rng = ChaCha8Rng::seed_from_u64(request_digest(request));
        Ok(TransportReply::Token(rng.random_range(self.min..=self.max).to_string()))
    }
}

/// Answers from a latent factor model. The request seed selects the respondent, so a run
/// administered with seed `s` reproduces `simulate_respondents(model, q, n, s)`.
#[derive(Debug, Clone)]
pub struct SimulatorBot {
    questionnaire: Questionnaire,
    model: GeneratingModel,
    statements: Vec<String>,
    sd: Vec<f64>,
}

impl SimulatorBot {
    pub fn new(q: &Questionnaire, model: GeneratingModel) -> Self {
        SimulatorBot {
            statements: q.items.iter().map(|i| q.statement(i)).collect(),
            sd: model.item_sd(),
            questionnaire: q.clone(),
            model,
        }
    }

    /// The item whose statement opens the last user turn.
    fn locate(&self, text: &str) -> Option<usize> {
        (0..self.statements.len())
            .filter(|&i| text.starts_with(&self.statements[i]))
            .max_by_key(|&i| self.statements[i].len())
    }
}

impl ChatTransport for SimulatorBot {
    fn name(&self) -> &str {
        "simulator"
    }

    fn send(&self, request: &TransportRequest) -> Result<TransportReply, TransportFailure> {
        let Some(i) = self.locate(request.last_user_text()) else {
            return Ok(TransportReply::Token("?".into()));
        };
        let seed = request
            .seed
            .ok_or_else(|| TransportFailure::fatal("simulator requests need a respondent seed"))?;
        let x = self.model.draw(&mut ChaCha8Rng::seed_from_u64(seed));
        let code = self.model.discretize(i, x[i], self.sd[i]);
        debug_assert!(self.questionnaire.scale.contains(code as i64));
        Ok(TransportReply::Token(code.to_string()))
    }
}
