//! Psychometric quality control for language-model questionnaire responses.
//!
//! The crate administers Likert personality questionnaires to chat models (or simulated
//! respondents) and runs the checks needed before any personality score can be read as
//! such: agree-bias testing against human data, PCA with varimax rotation, confirmatory
//! factor analysis with fit indices, and reliability coefficients that are only reported
//! as interpretable when the underlying factor model fits.

pub mod bias;
pub mod cfa;
pub mod cli;
pub mod efa;
pub mod error;
pub mod harness;
pub mod optim;
pub mod questionnaire;
pub mod reliability;
pub mod responses;
pub mod stats;

pub use error::{Error, Result};
pub use questionnaire::{Facet, Item, Key, LikertScale, Questionnaire};
pub use responses::{Code, ResponseMatrix, ScoredMatrix};
