use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::questionnaire::Questionnaire;
use crate::responses::read_header_metadata;

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Short digest of a command's effective configuration. Paths are left out so that the same
/// inputs give the same hash wherever they live.
pub fn config_hash(config: &Value) -> String {
    sha256_hex(config.to_string().as_bytes())[..16].to_string()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

pub fn questionnaire_digest(q: &Questionnaire) -> String {
    sha256_hex(q.to_toml_string().as_bytes())
}

/// Metadata opening every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub command: String,
    pub config: String,
    pub seed: Option<u64>,
    pub questionnaire: String,
    pub label: String,
    pub regime: String,
}

fn clean(s: &str) -> String {
    s.chars().map(|c| if matches!(c, ';' | '=' | '\n' | '\r') { '_' } else { c }).collect()
}

impl Header {
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!(
                "tool={TOOL}; command={}; config={}; seed={}",
                self.command,
                self.config,
                self.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())
            ),
            format!(
                "questionnaire={}; label={}; regime={}",
                clean(&self.questionnaire),
                clean(&self.label),
                clean(&self.regime)
            ),
        ]
    }

    fn write_to(&self, out: &mut impl Write, prefix: &str) -> Result<()> {
        for line in self.lines() {
            writeln!(out, "{prefix}{line}")?;
        }
        Ok(())
    }
}

/// Seed, label and regime recorded in an input file's header.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputMeta {
    pub seed: Option<u64>,
    pub label: Option<String>,
    pub regime: Option<String>,
    pub questionnaire: Option<String>,
}

impl InputMeta {
    pub fn read(path: &Path) -> Result<InputMeta> {
        let meta = read_header_metadata(path)?;
        Ok(InputMeta {
            seed: meta.get("seed").and_then(|s| s.parse().ok()),
            label: meta.get("label").cloned(),
            regime: meta.get("regime").cloned(),
            questionnaire: meta.get("questionnaire").cloned(),
        })
    }
}

/// CSV writer whose file opens with the header as `# ` comment lines.
pub fn csv_writer(path: &Path, header: &Header) -> Result<csv::Writer<BufWriter<File>>> {
    let mut out = BufWriter::new(File::create(path)?);
    header.write_to(&mut out, "# ")?;
    Ok(csv::Writer::from_writer(out))
}

pub fn write_text(path: &Path, header: &Header, comment: &str, body: &str) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    header.write_to(&mut out, comment)?;
    out.write_all(body.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn fmt_num(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) if x.is_finite() => {
            let s = format!("{x:.decimals$}");
            // Avoid "-0.00".
            if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                s.trim_start_matches('-').to_string()
            } else {
                s
            }
        }
        _ => "NA".into(),
    }
}

pub fn parse_num(s: &str) -> Option<f64> {
    match s.trim() {
        "NA" | "" => None,
        t => t.parse().ok(),
    }
}

/// File-name-safe version of a label.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
