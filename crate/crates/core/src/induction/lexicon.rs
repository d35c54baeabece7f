use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InductionError;
use crate::inventory::TraitDimension;

/// Trait words for one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub candidates: Vec<String>,
}

/// Per-dimension adjectives driving keyword prompts and the word search pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraitLexicon {
    entries: BTreeMap<TraitDimension, LexiconEntry>,
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|w| w.to_string()).collect()
}

/// Dimension, positives, negatives, search candidates.
type Row = (TraitDimension, &'static [&'static str], &'static [&'static str], &'static [&'static str]);

impl Default for TraitLexicon {
    fn default() -> Self {
        use TraitDimension::*;
        let table: [Row; 5] = [
            (
                Openness,
                &["artistic", "curious", "imaginative", "insightful", "original"],
                &["unimaginative", "uncreative", "incurious", "conventional", "unartistic", "narrow-minded"],
                &["artistic", "curious", "imaginative", "insightful", "original", "creative", "inventive", "adventurous", "intellectual", "open-minded"],
            ),
            (
                Conscientiousness,
                &["efficient", "organized", "planful", "reliable", "responsible", "thorough"],
                &["disorganized", "careless", "sloppy", "inefficient", "irresponsible", "unreliable"],
                &["efficient", "organized", "planful", "reliable", "responsible", "thorough", "disciplined", "diligent", "careful", "punctual"],
            ),
            (
                Extraversion,
                &["active", "assertive", "energetic", "enthusiastic", "outgoing", "talkative"],
                &["quiet", "reserved", "shy", "withdrawn", "untalkative", "inactive"],
                &["active", "assertive", "energetic", "enthusiastic", "outgoing", "talkative", "sociable", "friendly", "lively", "bold"],
            ),
            (
                Agreeableness,
                &["appreciative", "forgiving", "generous", "kind", "sympathetic"],
                &["cold", "unkind", "uncooperative", "unsympathetic", "harsh", "rude"],
                &["appreciative", "forgiving", "generous", "kind", "sympathetic", "warm", "cooperative", "trusting", "helpful", "considerate"],
            ),
            (
                Neuroticism,
                &["anxious", "self-pitying", "tense", "touchy", "unstable", "worrying"],
                &["emotionally stable", "calm", "relaxed", "secure", "composed", "even-tempered"],
                &["anxious", "self-pitying", "tense", "touchy", "unstable", "worrying", "nervous", "moody", "insecure", "irritable"],
            ),
        ];
        let entries = table
            .into_iter()
            .map(|(d, p, n, c)| {
                (
                    d,
                    LexiconEntry {
                        positive: words(p),
                        negative: words(n),
                        candidates: words(c),
                    },
                )
            })
            .collect();
        TraitLexicon { entries }
    }
}

/// File row: absent lists keep the default, explicit lists replace it.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryOverride {
    positive: Option<Vec<String>>,
    negative: Option<Vec<String>>,
    candidates: Option<Vec<String>>,
}

impl TraitLexicon {
    pub fn entry(&self, dimension: TraitDimension) -> Option<&LexiconEntry> {
        self.entries.get(&dimension)
    }

    pub fn positive(&self, dimension: TraitDimension) -> &[String] {
        self.entry(dimension).map_or(&[], |e| &e.positive)
    }

    pub fn negative(&self, dimension: TraitDimension) -> &[String] {
        self.entry(dimension).map_or(&[], |e| &e.negative)
    }

    pub fn candidates(&self, dimension: TraitDimension) -> &[String] {
        self.entry(dimension).map_or(&[], |e| &e.candidates)
    }

    pub fn set(&mut self, dimension: TraitDimension, entry: LexiconEntry) {
        self.entries.insert(dimension, entry);
    }

    /// Drops every negative list so negative keywords come from the model.
    pub fn without_negatives(mut self) -> Self {
        for entry in self.entries.values_mut() {
            entry.negative.clear();
        }
        self
    }

    pub fn validate(&self) -> Result<(), InductionError> {
        for d in TraitDimension::ALL {
            if self.positive(d).iter().all(|w| w.trim().is_empty()) {
                return Err(InductionError::Lexicon(format!("no positive adjectives for {d}")));
            }
        }
        Ok(())
    }

    /// Parses a lexicon file layered over the defaults.
    pub fn from_json(text: &str) -> Result<Self, InductionError> {
        let rows: BTreeMap<String, EntryOverride> =
            serde_json::from_str(text).map_err(|e| InductionError::Lexicon(e.to_string()))?;
        let mut lexicon = TraitLexicon::default();
        for (key, row) in rows {
            let d: TraitDimension = key.parse().map_err(|_| InductionError::Lexicon(format!("unknown dimension {key:?}")))?;
            let entry = lexicon.entries.get_mut(&d).expect("defaults cover every dimension");
            if let Some(p) = row.positive {
                entry.positive = p;
            }
            if let Some(n) = row.negative {
                entry.negative = n;
            }
            if let Some(c) = row.candidates {
                entry.candidates = c;
            }
        }
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self, InductionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InductionError::Lexicon(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_every_dimension() {
        let lex = TraitLexicon::default();
        lex.validate().unwrap();
        assert_eq!(lex.negative(TraitDimension::Neuroticism)[0], "emotionally stable");
        assert_eq!(lex.positive(TraitDimension::Agreeableness).len(), 5);
    }

    #[test]
    fn file_overrides_are_layered() {
        let lex = TraitLexicon::from_json(r#"{"E":{"negative":[]},"O":{"candidates":["a","b"]}}"#).unwrap();
        assert!(lex.negative(TraitDimension::Extraversion).is_empty());
        assert_eq!(lex.positive(TraitDimension::Extraversion)[0], "active");
        assert_eq!(lex.candidates(TraitDimension::Openness), ["a", "b"]);
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(TraitLexicon::from_json(r#"{"X":{}}"#).is_err());
        assert!(TraitLexicon::from_json(r#"{"E":{"positive":[]}}"#).is_err());
        assert!(TraitLexicon::from_json(r#"{"E":{"positve":["x"]}}"#).is_err());
        assert!(TraitLexicon::from_json("[").is_err());
    }
}
