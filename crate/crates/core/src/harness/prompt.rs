use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::persona::Persona;
use crate::error::{Error, Result};
use crate::questionnaire::{Item, LikertScale, Questionnaire};
use crate::responses::Code;

/// Appended to every system prompt.
pub const ANSWER_INSTRUCTION: &str = "Please answer with a single letter or number.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextMode {
    /// Every item in a fresh conversation.
    NoContext,
    /// All previous items and answers precede the current item.
    InContext,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PersonaMode {
    WithPersona,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptRegime {
    pub context: ContextMode,
    pub persona_mode: PersonaMode,
    /// Recorded answer to the first item, which is then not asked.
    pub seed_answer: Option<u8>,
}

impl PromptRegime {
    pub fn new(context: ContextMode, persona_mode: PersonaMode, seed_answer: Option<u8>) -> Self {
        PromptRegime {
            context,
            persona_mode,
            seed_answer,
        }
    }

    pub fn validate(&self, scale: &LikertScale) -> Result<()> {
        if let Some(code) = self.seed_answer {
            if self.context != ContextMode::InContext || self.persona_mode != PersonaMode::Empty {
                return Err(Error::Usage(
                    "a seed answer requires the in-context regime without personas".into(),
                ));
            }
            if !scale.contains(code as i64) {
                return Err(Error::Usage(format!(
                    "seed answer {code} outside the scale {}..{}",
                    scale.min_code(),
                    scale.max_code()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for PromptRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let context = match self.context {
            ContextMode::NoContext => "no-context",
            ContextMode::InContext => "in-context",
        };
        let persona = match self.persona_mode {
            PersonaMode::WithPersona => "personas",
            PersonaMode::Empty => "empty-persona",
        };
        write!(f, "{context}/{persona}")?;
        if let Some(s) = self.seed_answer {
            write!(f, "/seed-{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRequest {
    pub system_text: String,
    /// Alternating user/assistant turns ending with the user turn to answer.
    pub turns: Vec<Turn>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Per-respondent seed for transports that sample.
    pub seed: Option<u64>,
}

impl TransportRequest {
    pub fn last_user_text(&self) -> &str {
        self.turns
            .iter()
            .rev()
            .find(|t| t.role == Role::User)
            .map(|t| t.content.as_str())
            .unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportReply {
    /// The generated answer token.
    Token(String),
    /// Probabilities over candidate next tokens.
    Probabilities(Vec<(String, f64)>),
}

/// User text for one item: instruction and statement, the enumerated answer codes, then
/// `Answer:`.
pub fn item_text(q: &Questionnaire, item: &Item) -> String {
    let mut s = q.statement(item);
    for c in &q.scale.codes {
        s.push_str(&format!("\n{} = {}", c.code, c.label));
    }
    s.push_str("\nAnswer:");
    s
}

pub fn system_text(persona: &Persona) -> String {
    if persona.statements.is_empty() {
        ANSWER_INSTRUCTION.to_string()
    } else {
        format!("{} {ANSWER_INSTRUCTION}", persona.statements.join(" "))
    }
}

/// Request for `item`. `history` holds prior `(item, assistant text)` pairs and must be
/// empty in the no-context regime.
pub fn build_prompt(
    q: &Questionnaire,
    item: &Item,
    regime: &PromptRegime,
    persona: &Persona,
    history: &[(&Item, String)],
) -> TransportRequest {
    debug_assert!(regime.context == ContextMode::InContext || history.is_empty());
    let mut turns = Vec::with_capacity(2 * history.len() + 1);
    for (prior, answer) in history {
        turns.push(Turn {
            role: Role::User,
            content: item_text(q, prior),
        });
        turns.push(Turn {
            role: Role::Assistant,
            content: answer.clone(),
        });
    }
    turns.push(Turn {
        role: Role::User,
        content: item_text(q, item),
    });
    TransportRequest {
        system_text: system_text(persona),
        turns,
        temperature: 0.0,
        max_tokens: 1,
        seed: None,
    }
}

/// How a probability reply becomes one answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPolicy {
    Argmax,
    Sample(u64),
}

fn normalize_token(t: &str) -> &str {
    t.trim().trim_start_matches('\u{2581}').trim()
}

fn token_code(token: &str, scale: &LikertScale) -> Code {
    let t = normalize_token(token);
    scale.codes.iter().find(|c| c.code.to_string() == t).map(|c| c.code)
}

/// Probability per answer code after restricting to answer tokens and renormalizing.
/// `None` when no answer token has positive probability.
pub fn renormalize(probabilities: &[(String, f64)], scale: &LikertScale) -> Option<Vec<(u8, f64)>> {
    let mut mass: Vec<(u8, f64)> = scale.codes.iter().map(|c| (c.code, 0.0)).collect();
    for (token, p) in probabilities {
        if let Some(code) = token_code(token, scale) {
            if p.is_finite() && *p > 0.0 {
                mass.iter_mut().find(|(c, _)| *c == code).expect("code from scale").1 += p;
            }
        }
    }
    let total: f64 = mass.iter().map(|(_, p)| p).sum();
    if !(total > 0.0) {
        return None;
    }
    Some(mass.into_iter().map(|(c, p)| (c, p / total)).collect())
}

/// Restricts to the answer tokens, renormalizes and picks a code. Ties under argmax go to
/// the lowest code.
pub fn renormalize_and_sample(probabilities: &[(String, f64)], scale: &LikertScale, policy: SelectionPolicy) -> Code {
    let probs = renormalize(probabilities, scale)?;
    match policy {
        SelectionPolicy::Argmax => probs
            .iter()
            .fold(None, |best: Option<(u8, f64)>, &(c, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((c, p)),
            })
            .map(|(c, _)| c),
        SelectionPolicy::Sample(seed) => {
            let u: f64 = ChaCha8Rng::seed_from_u64(seed).random();
            let mut acc = 0.0;
            for &(c, p) in &probs {
                acc += p;
                if u < acc {
                    return Some(c);
                }
            }
            probs.iter().rev().find(|(_, p)| *p > 0.0).map(|(c, _)| *c)
        }
    }
}

/// Answer code of a reply; anything that is not an answer code is a non-response.
pub fn parse_reply(reply: &TransportReply, scale: &LikertScale, policy: SelectionPolicy) -> Code {
    match reply {
        TransportReply::Token(t) => token_code(t, scale),
        TransportReply::Probabilities(p) => renormalize_and_sample(p, scale, policy),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn probs(v: &[(&str, f64)]) -> Vec<(String, f64)> {
        v.iter().map(|(t, p)| (t.to_string(), *p)).collect()
    }

    #[test]
    fn prompt_layout() {
        let q = Questionnaire::bfi2();
        let persona = Persona {
            id: "p".into(),
            statements: vec!["I love to hike.".into(), "I have two dogs.".into()],
        };
        let regime = PromptRegime::new(ContextMode::NoContext, PersonaMode::WithPersona, None);
        let r = build_prompt(&q, &q.items[0], &regime, &persona, &[]);
        assert_eq!(r.system_text, format!("I love to hike. I have two dogs. {ANSWER_INSTRUCTION}"));
        assert_eq!(r.turns.len(), 1);
        let user = r.last_user_text();
        assert!(user.starts_with("Please indicate the extent to which"));
        assert!(user.contains(&q.items[0].text));
        assert!(user.contains("\n1 = Disagree strongly\n"));
        assert!(user.ends_with("Answer:"));
        assert_eq!((r.temperature, r.max_tokens), (0.0, 1));

        let empty = build_prompt(&q, &q.items[0], &regime, &Persona::empty(), &[]);
        assert_eq!(empty.system_text, ANSWER_INSTRUCTION);
    }

    #[test]
    fn in_context_history() {
        let q = Questionnaire::bfi2();
        let regime = PromptRegime::new(ContextMode::InContext, PersonaMode::Empty, Some(5));
        let history = vec![(&q.items[0], "5".to_string())];
        let r = build_prompt(&q, &q.items[1], &regime, &Persona::empty(), &history);
        assert_eq!(r.turns.len(), 3);
        assert_eq!(r.turns[1], Turn { role: Role::Assistant, content: "5".into() });
        assert!(r.turns[0].content.contains(&q.items[0].text));
    }

    #[test]
    fn regime_validation() {
        let s = LikertScale::five_point();
        assert!(PromptRegime::new(ContextMode::InContext, PersonaMode::Empty, Some(5)).validate(&s).is_ok());
        assert!(PromptRegime::new(ContextMode::NoContext, PersonaMode::Empty, Some(5)).validate(&s).is_err());
        assert!(PromptRegime::new(ContextMode::InContext, PersonaMode::WithPersona, Some(5)).validate(&s).is_err());
        assert!(PromptRegime::new(ContextMode::InContext, PersonaMode::Empty, Some(6)).validate(&s).is_err());
    }

    #[test]
    fn token_replies() {
        let s = LikertScale::five_point();
        let p = SelectionPolicy::Argmax;
        assert_eq!(parse_reply(&TransportReply::Token("4".into()), &s, p), Some(4));
        assert_eq!(parse_reply(&TransportReply::Token(" 2\n".into()), &s, p), Some(2));
        assert_eq!(parse_reply(&TransportReply::Token("Sure".into()), &s, p), None);
        assert_eq!(parse_reply(&TransportReply::Token("6".into()), &s, p), None);
        assert_eq!(parse_reply(&TransportReply::Token(String::new()), &s, p), None);
    }

    #[test]
    fn probability_replies() {
        let s = LikertScale::five_point();
        let p = probs(&[("1", 0.1), ("2", 0.2), ("3", 0.3), ("4", 0.2), ("5", 0.2)]);
        assert_eq!(parse_reply(&TransportReply::Probabilities(p), &s, SelectionPolicy::Argmax), Some(3));

        let junk = probs(&[("1", 0.1), ("2", 0.1), ("3", 0.1), ("4", 0.1), ("5", 0.1), ("Sure", 0.5)]);
        let r = renormalize(&junk, &s).unwrap();
        assert!(r.iter().all(|(_, p)| (p - 0.2).abs() < 1e-12));

        let none = probs(&[("1", 0.0), ("Sure", 1.0)]);
        assert_eq!(renormalize_and_sample(&none, &s, SelectionPolicy::Argmax), None);

        let sp = probs(&[("\u{2581}1", 0.3), ("5", 0.7)]);
        let a = renormalize_and_sample(&sp, &s, SelectionPolicy::Sample(42));
        assert_eq!(a, renormalize_and_sample(&sp, &s, SelectionPolicy::Sample(42)));
        assert!(matches!(a, Some(1) | Some(5)));
    }

    proptest! {
        #[test]
        fn renormalized_sums_to_one(ps in proptest::collection::vec(0.0f64..1.0, 5), junk in 0.0f64..10.0) {
            let s = LikertScale::five_point();
            let mut v: Vec<(String, f64)> = ps.iter().enumerate().map(|(i, p)| ((i + 1).to_string(), *p)).collect();
            v.push(("x".into(), junk));
            if let Some(r) = renormalize(&v, &s) {
                let total: f64 = r.iter().map(|(_, p)| p).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
            } else {
                prop_assert!(ps.iter().all(|p| *p == 0.0));
            }
        }

        #[test]
        fn parse_never_fails(t in ".{0,6}") {
            let s = LikertScale::five_point();
            let c = parse_reply(&TransportReply::Token(t), &s, SelectionPolicy::Argmax);
            prop_assert!(c.is_none() || (1..=5).contains(&c.unwrap()));
        }
    }
}
