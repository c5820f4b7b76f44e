//! Prompting language models (or simulated respondents) with questionnaire items.

mod administer;
mod openai;
mod persona;
mod prompt;
mod simulate;
mod transport;

pub use administer::{administer, read_journal, AdministerOptions, Administration, FailedQuery, JournalEntry};
pub use openai::{parse_response_body, request_body, OpenAiConfig, OpenAiTransport, DEFAULT_ENDPOINT, DEFAULT_KEY_ENV};
pub use persona::{builtin_personas, load_personas, Persona};
pub use prompt::{
    build_prompt, item_text, parse_reply, renormalize, renormalize_and_sample, system_text, ContextMode, PersonaMode,
    PromptRegime, Role, SelectionPolicy, TransportReply, TransportRequest, Turn, ANSWER_INSTRUCTION,
};
pub use simulate::{
    respondent_rng, respondent_seed, simulate_continuous, simulate_respondents, GeneratingModel, THRESHOLDS,
};
pub use transport::{request_digest, AgreeBot, ChatTransport, DisagreeBot, RandomBot, SimulatorBot, TransportFailure};
