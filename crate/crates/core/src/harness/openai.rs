//! Client for OpenAI-compatible chat-completion endpoints.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::prompt::{Role, TransportReply, TransportRequest};
use super::transport::{ChatTransport, TransportFailure};
use crate::error::{Error, Result};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenAiConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub timeout: Duration,
    /// Ask for the top answer-token log probabilities instead of a single token.
    pub logprobs: bool,
}

impl Default for OpenAiConfig {
    fn default() -> Self {
        OpenAiConfig {
            endpoint: DEFAULT_ENDPOINT.into(),
            model: "gpt-4-0613".into(),
            api_key_env: DEFAULT_KEY_ENV.into(),
            max_in_flight: 4,
            timeout: Duration::from_secs(60),
            logprobs: false,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct OpenAiTransport {
    config: OpenAiConfig,
    api_key: String,
    agent: ureq::Agent,
    in_flight: Semaphore,
}

impl OpenAiTransport {
    /// Reads the token from `config.api_key_env`; a missing or empty variable is a usage
    /// error, raised before any request is made.
    pub fn from_env(config: OpenAiConfig) -> Result<Self> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| {
                Error::Usage(format!(
                    "environment variable {} must hold the API token for the remote transport",
                    config.api_key_env
                ))
            })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(OpenAiTransport {
            in_flight: Semaphore::new(config.max_in_flight),
            config,
            api_key,
            agent,
        })
    }
}

/// JSON body for a chat-completion call.
pub fn request_body(model: &str, request: &TransportRequest, logprobs: bool) -> Value {
    let mut messages = vec![json!({"role": "system", "content": request.system_text})];
    for t in &request.turns {
        let role = match t.role {
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        messages.push(json!({"role": role, "content": t.content}));
    }
    let mut body = json!({
        "model": model,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    });
    if let Some(seed) = request.seed {
        body["seed"] = json!(seed);
    }
    if logprobs {
        body["logprobs"] = json!(true);
        body["top_logprobs"] = json!(20);
    }
    body
}

/// Reply from a chat-completion response body: the top log probabilities of the first
/// generated token when present, otherwise the message text.
pub fn parse_response_body(body: &Value) -> std::result::Result<TransportReply, TransportFailure> {
    if let Some(err) = body.get("error") {
        let msg = err.get("message").and_then(Value::as_str).unwrap_or("unknown error");
        return Err(TransportFailure::fatal(format!("API error: {msg}")));
    }
    let choice = body
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| TransportFailure::fatal("response has no choices"))?;
    let top = choice
        .pointer("/logprobs/content/0/top_logprobs")
        .and_then(Value::as_array);
    if let Some(top) = top {
        let probs: Vec<(String, f64)> = top
            .iter()
            .filter_map(|t| Some((t.get("token")?.as_str()?.to_string(), t.get("logprob")?.as_f64()?.exp())))
            .collect();
        if !probs.is_empty() {
            return Ok(TransportReply::Probabilities(probs));
        }
    }
    let content = choice.pointer("/message/content").and_then(Value::as_str).unwrap_or("");
    Ok(TransportReply::Token(content.to_string()))
}

impl ChatTransport for OpenAiTransport {
    fn name(&self) -> &str {
        "openai-compatible"
    }

    fn send(&self, request: &TransportRequest) -> std::result::Result<TransportReply, TransportFailure> {
        let _permit = self.in_flight.acquire();
        let body = request_body(&self.config.model, request, self.config.logprobs);
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| TransportFailure::retriable(e.to_string()))?;
        let status = resp.status().as_u16();
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| TransportFailure::retriable(format!("HTTP {status}: unreadable body: {e}")))?;
        match status {
            200..=299 => parse_response_body(&value),
            429 | 500..=599 => Err(TransportFailure::retriable(format!("HTTP {status}"))),
            _ => Err(parse_response_body(&value)
                .err()
                .unwrap_or_else(|| TransportFailure::fatal(format!("HTTP {status}")))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::prompt::Turn;

    fn request() -> TransportRequest {
        TransportRequest {
            system_text: "sys".into(),
            turns: vec![
                Turn { role: Role::User, content: "q1".into() },
                Turn { role: Role::Assistant, content: "5".into() },
                Turn { role: Role::User, content: "q2".into() },
            ],
            temperature: 0.0,
            max_tokens: 1,
            seed: Some(7),
        }
    }

    #[test]
    fn body_layout() {
        let b = request_body("m", &request(), false);
        assert_eq!(b["model"], "m");
        assert_eq!(b["messages"].as_array().unwrap().len(), 4);
        assert_eq!(b["messages"][0]["role"], "system");
        assert_eq!(b["messages"][2]["role"], "assistant");
        assert_eq!(b["messages"][2]["content"], "5");
        assert_eq!(b["max_tokens"], 1);
        assert_eq!(b["temperature"], 0.0);
        assert_eq!(b["seed"], 7);
        assert!(b.get("logprobs").is_none());
        assert_eq!(request_body("m", &request(), true)["top_logprobs"], 20);
    }

    #[test]
    fn response_parsing() {
        let token = json!({"choices": [{"message": {"role": "assistant", "content": "4"}}]});
        assert_eq!(parse_response_body(&token).unwrap(), TransportReply::Token("4".into()));
        let lp = json!({"choices": [{"message": {"content": "4"}, "logprobs": {"content": [{"token": "4",
            "top_logprobs": [{"token": "4", "logprob": -0.1}, {"token": "5", "logprob": -2.5}]}]}}]});
        match parse_response_body(&lp).unwrap() {
            TransportReply::Probabilities(p) => {
                assert_eq!(p[0].0, "4");
                assert!((p[0].1 - (-0.1f64).exp()).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let err = json!({"error": {"message": "bad key"}});
        assert!(!parse_response_body(&err).unwrap_err().retriable);
        assert!(parse_response_body(&json!({})).is_err());
    }

    #[test]
    fn missing_key_is_usage_error() {
        let cfg = OpenAiConfig {
            api_key_env: "LLM_PSYCHOMETRICS_TEST_UNSET_KEY".into(),
            ..Default::default()
        };
        assert!(matches!(OpenAiTransport::from_env(cfg), Err(Error::Usage(_))));
    }
}
