//! Questionnaire definitions: items, facets, keys and the Likert answer scale.
//!
//! Instruments are data, not code. Two are bundled ([`Questionnaire::bfi2`] and
//! [`Questionnaire::ipip_bffm`]) and any other can be loaded from a TOML file with
//! the same layout:
//!
//! ```toml
//! name = "My instrument"
//! instruction = "Please indicate ... statement: \""
//! statement_suffix = "\""
//!
//! [scale]
//! neutral = 3
//! codes = [{ code = 1, label = "Disagree" }, { code = 2, label = "..." }]
//!
//! [[facets]]
//! id = "E"
//! name = "Extraversion"
//! sub_facets = ["Sociability", "Assertiveness", "EnergyLevel"]
//!
//! [[items]]
//! id = "E0"
//! facet = "E"
//! sub_facet = "Sociability"
//! key = "true"
//! text = "is outgoing, sociable."
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BFI2_TOML: &str = include_str!("../data/bfi2.toml");
const IPIP_BFFM_TOML: &str = include_str!("../data/ipip_bffm.toml");

/// Scoring direction of an item relative to its facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Key {
    #[serde(rename = "true")]
    True,
    #[serde(rename = "false")]
    False,
}

impl Key {
    pub fn is_true(self) -> bool {
        matches!(self, Key::True)
    }

    /// `+` for true-key items, `-` for false-key items.
    pub fn marker(self) -> char {
        match self {
            Key::True => '+',
            Key::False => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub facet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_facet: Option<String>,
    pub key: Key,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_facets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleCode {
    pub code: u8,
    pub label: String,
}

/// Ordered Likert answer codes, consecutive integers starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertScale {
    pub codes: Vec<ScaleCode>,
    #[serde(rename = "neutral")]
    pub neutral_code: u8,
}

impl LikertScale {
    /// The conventional five-point agree/disagree scale.
    pub fn five_point() -> Self {
        let labels = ["Disagree strongly", "Disagree a little", "Neutral; no opinion", "Agree a little", "Agree strongly"];
        LikertScale {
            codes: labels
                .iter()
                .enumerate()
                .map(|(i, l)| ScaleCode {
                    code: i as u8 + 1,
                    label: l.to_string(),
                })
                .collect(),
            neutral_code: 3,
        }
    }

    pub fn min_code(&self) -> u8 {
        self.codes.first().map(|c| c.code).unwrap_or(1)
    }

    pub fn max_code(&self) -> u8 {
        self.codes.last().map(|c| c.code).unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn contains(&self, code: i64) -> bool {
        code >= self.min_code() as i64 && code <= self.max_code() as i64
    }

    fn validate(&self) -> Result<()> {
        if self.codes.len() < 2 {
            return Err(Error::Structural("scale needs at least two codes".into()));
        }
        for (i, c) in self.codes.iter().enumerate() {
            if c.code as usize != i + 1 {
                return Err(Error::Structural(format!(
                    "scale codes must be consecutive integers starting at 1, found {} at position {}",
                    c.code,
                    i + 1
                )));
            }
        }
        if !self.contains(self.neutral_code as i64) {
            return Err(Error::Structural(format!("neutral code {} outside scale", self.neutral_code)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub name: String,
    /// Test instruction placed directly before each item statement.
    #[serde(default)]
    pub instruction: String,
    /// Text closing the statement (e.g. a closing quote).
    #[serde(default)]
    pub statement_suffix: String,
    pub scale: LikertScale,
    pub facets: Vec<Facet>,
    pub items: Vec<Item>,
}

impl Questionnaire {
    /// Builds a questionnaire and checks its invariants.
    pub fn new(name: impl Into<String>, scale: LikertScale, facets: Vec<Facet>, items: Vec<Item>) -> Result<Self> {
        let q = Questionnaire {
            name: name.into(),
            instruction: String::new(),
            statement_suffix: String::new(),
            scale,
            facets,
            items,
        };
        q.validate()?;
        Ok(q)
    }

    /// The Big Five Inventory-2: 60 items, 5 domains with 3 sub-facets of 4 items each.
    pub fn bfi2() -> Self {
        Self::from_toml_str(BFI2_TOML).expect("bundled BFI-2 definition is valid")
    }

    /// The IPIP Big-Five Factor Markers: 50 items, 5 facets of 10 items, no sub-facets.
    pub fn ipip_bffm() -> Self {
        Self::from_toml_str(IPIP_BFFM_TOML).expect("bundled IPIP-BFFM definition is valid")
    }

    /// Resolves `bfi2`, `ipip-bffm`, or a path to a TOML definition.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path.to_ascii_lowercase().as_str() {
            "bfi2" | "bfi-2" => Ok(Self::bfi2()),
            "ipip-bffm" | "ipip_bffm" | "ipip" => Ok(Self::ipip_bffm()),
            _ => Self::load(name_or_path),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let q: Questionnaire = toml::from_str(&text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1));
            Error::parse(path, line, e.message().to_string())
        })?;
        q.validate()?;
        Ok(q)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let q: Questionnaire =
            toml::from_str(text).map_err(|e| Error::parse("<inline>", None, e.message().to_string()))?;
        q.validate()?;
        Ok(q)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("questionnaire serializes")
    }

    fn validate(&self) -> Result<()> {
        self.scale.validate()?;
        let facet_ids: HashSet<&str> = self.facets.iter().map(|f| f.id.as_str()).collect();
        if facet_ids.len() != self.facets.len() {
            return Err(Error::Structural("duplicate facet id".into()));
        }
        let mut seen = HashSet::new();
        for item in &self.items {
            if !seen.insert(item.id.as_str()) {
                return Err(Error::Structural(format!("duplicate item id `{}`", item.id)));
            }
            if item.text.trim().is_empty() {
                return Err(Error::Structural(format!("item `{}` has empty text", item.id)));
            }
            let facet = self
                .facet(&item.facet)
                .ok_or_else(|| Error::Structural(format!("item `{}` references unknown facet `{}`", item.id, item.facet)))?;
            match (&item.sub_facet, facet.sub_facets.is_empty()) {
                (Some(sub), false) if !facet.sub_facets.contains(sub) => {
                    return Err(Error::Structural(format!(
                        "item `{}` references unknown sub-facet `{sub}` of `{}`",
                        item.id, facet.id
                    )))
                }
                (None, false) => {
                    return Err(Error::Structural(format!(
                        "facet `{}` declares sub-facets but item `{}` has none",
                        facet.id, item.id
                    )))
                }
                (Some(sub), true) => {
                    return Err(Error::Structural(format!(
                        "item `{}` names sub-facet `{sub}` but facet `{}` declares none",
                        item.id, facet.id
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn facet(&self, id: &str) -> Option<&Facet> {
        self.facets.iter().find(|f| f.id == id)
    }

    pub fn item(&self, id: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.id == id)
    }

    /// Map from item id to position in questionnaire order.
    pub fn index_map(&self) -> HashMap<&str, usize> {
        self.items.iter().enumerate().map(|(i, it)| (it.id.as_str(), i)).collect()
    }

    pub fn item_ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.id.clone()).collect()
    }

    /// Items of a facet, grouped by sub-facet in declaration order, then administration order.
    pub fn facet_items(&self, facet: &str) -> Vec<&Item> {
        let mut items: Vec<&Item> = self.items.iter().filter(|i| i.facet == facet).collect();
        items.sort_by_key(|i| self.structural_rank(i));
        items
    }

    /// Sort key placing items by facet, sub-facet, then administration order.
    pub fn structural_rank(&self, item: &Item) -> (usize, usize, usize) {
        let f = self.facets.iter().position(|f| f.id == item.facet).unwrap_or(usize::MAX);
        let s = self
            .facets
            .get(f)
            .and_then(|fa| item.sub_facet.as_ref().and_then(|sf| fa.sub_facets.iter().position(|x| x == sf)))
            .unwrap_or(usize::MAX);
        (f, s, self.item_index(&item.id).unwrap_or(usize::MAX))
    }

    pub fn sub_facet_items(&self, facet: &str, sub_facet: &str) -> Vec<&Item> {
        self.items
            .iter()
            .filter(|i| i.facet == facet && i.sub_facet.as_deref() == Some(sub_facet))
            .collect()
    }

    pub fn has_sub_facets(&self) -> bool {
        self.facets.iter().any(|f| !f.sub_facets.is_empty())
    }

    /// Statement text as presented to a respondent: instruction, item, suffix.
    pub fn statement(&self, item: &Item) -> String {
        format!("{}{}{}", self.instruction, item.text, self.statement_suffix)
    }
}

impl fmt::Display for Questionnaire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} items, {} facets)", self.name, self.items.len(), self.facets.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfi2_structure() {
        let q = Questionnaire::bfi2();
        assert_eq!(q.items.len(), 60);
        assert_eq!(q.facets.len(), 5);
        for f in &q.facets {
            assert_eq!(q.facet_items(&f.id).len(), 12);
            assert_eq!(f.sub_facets.len(), 3);
            for s in &f.sub_facets {
                let items = q.sub_facet_items(&f.id, s);
                assert_eq!(items.len(), 4);
            }
            let falses = q.facet_items(&f.id).iter().filter(|i| i.key == Key::False).count();
            assert_eq!(falses, 6);
        }
        assert_eq!(q.items[0].id, "E0");
        assert_eq!(q.item("E4").unwrap().sub_facet.as_deref(), Some("Assertiveness"));
    }

    #[test]
    fn ipip_structure() {
        let q = Questionnaire::ipip_bffm();
        assert_eq!(q.items.len(), 50);
        assert!(!q.has_sub_facets());
        for f in &q.facets {
            assert_eq!(q.facet_items(&f.id).len(), 10);
        }
        assert_eq!(q.item("EXT2").unwrap().key, Key::False);
        assert_eq!(q.scale.max_code(), 5);
        assert_eq!(q.scale.neutral_code, 3);
    }

    #[test]
    fn item_texts_unique() {
        for q in [Questionnaire::bfi2(), Questionnaire::ipip_bffm()] {
            let texts: HashSet<_> = q.items.iter().map(|i| i.text.as_str()).collect();
            assert_eq!(texts.len(), q.items.len());
        }
    }

    #[test]
    fn rejects_duplicate_ids_and_unknown_facets() {
        let facet = Facet {
            id: "E".into(),
            name: "E".into(),
            sub_facets: vec![],
        };
        let item = |id: &str, facet: &str| Item {
            id: id.into(),
            facet: facet.into(),
            sub_facet: None,
            key: Key::True,
            text: "x".into(),
        };
        let dup = Questionnaire::new("q", LikertScale::five_point(), vec![facet.clone()], vec![item("a", "E"), item("a", "E")]);
        assert!(matches!(dup, Err(Error::Structural(_))));
        let unknown = Questionnaire::new("q", LikertScale::five_point(), vec![facet], vec![item("a", "X")]);
        assert!(matches!(unknown, Err(Error::Structural(_))));
    }

    #[test]
    fn toml_round_trip() {
        let q = Questionnaire::bfi2();
        let back = Questionnaire::from_toml_str(&q.to_toml_string()).unwrap();
        assert_eq!(q, back);
    }
}
