use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A short first-person character description prepended to the system prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub id: String,
    pub statements: Vec<String>,
}

impl Persona {
    /// No statements: the system prompt holds only the answer instruction.
    pub fn empty() -> Self {
        Persona {
            id: "empty".into(),
            statements: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

const BUILTIN: &str = include_str!("../../data/personas.jsonl");

/// The 100 shipped personas.
pub fn builtin_personas() -> Vec<Persona> {
    parse_personas(BUILTIN, Path::new("personas.jsonl")).expect("shipped persona file is valid")
}

/// Reads a JSONL persona file: one `{"id": ..., "statements": [...]}` object per line.
pub fn load_personas(path: impl AsRef<Path>) -> Result<Vec<Persona>> {
    let path = path.as_ref();
    parse_personas(&std::fs::read_to_string(path)?, path)
}

fn parse_personas(text: &str, path: &Path) -> Result<Vec<Persona>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let p: Persona = serde_json::from_str(line).map_err(|e| Error::parse(path, Some(i + 1), e.to_string()))?;
        if p.statements.is_empty() || p.statements.iter().any(|s| s.trim().is_empty()) {
            return Err(Error::parse(path, Some(i + 1), format!("persona `{}` has empty statements", p.id)));
        }
        if !seen.insert(p.id.clone()) {
            return Err(Error::parse(path, Some(i + 1), format!("duplicate persona id `{}`", p.id)));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::parse(path, None, "no personas"));
    }
    Ok(out)
}
