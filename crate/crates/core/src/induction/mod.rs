//! Personality-inducing prompts.
//!
//! The P² chain turns a naive one-line prompt into keywords and then asks
//! the model itself for a short portrait, which becomes the prefix for
//! downstream tasks. The naive prompt and a per-word search serve as
//! baselines.

mod lexicon;
mod search;

pub use lexicon::{LexiconEntry, TraitLexicon};
pub use search::{persona_prefix, rank_words, word_search, word_search_for, words_induction, WordScore, WordSearchResult};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Complete, GatewayError};
use crate::inventory::TraitDimension;
use crate::scoring::AdministerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn symbol(self) -> char {
        match self {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Polarity {
    type Err = InductionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+" | "positive" | "pos" => Ok(Polarity::Positive),
            "-" | "−" | "negative" | "neg" => Ok(Polarity::Negative),
            other => Err(InductionError::Polarity(other.to_string())),
        }
    }
}

/// A single trait and the direction to push it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InductionTarget {
    pub dimension: TraitDimension,
    pub polarity: Polarity,
}

impl InductionTarget {
    pub fn new(dimension: TraitDimension, polarity: Polarity) -> Self {
        InductionTarget { dimension, polarity }
    }
}

impl fmt::Display for InductionTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.dimension, self.polarity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    P2,
    Naive,
    Words,
}

impl FromStr for Method {
    type Err = InductionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p2" | "p²" => Ok(Method::P2),
            "naive" => Ok(Method::Naive),
            "words" => Ok(Method::Words),
            other => Err(InductionError::Method(other.to_string())),
        }
    }
}

/// An induction artifact with every intermediate stage kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonalityPrompt {
    pub target: InductionTarget,
    pub method: Method,
    pub naive_text: String,
    pub keywords: Vec<String>,
    /// Model-written description; empty unless `method` is p2.
    pub portrait: String,
    /// The text actually prepended to tasks.
    pub final_prefix: String,
}

impl PersonalityPrompt {
    pub fn validate(&self) -> Result<(), InductionError> {
        if self.final_prefix.trim().is_empty() {
            return Err(InductionError::Invalid("final_prefix is empty".into()));
        }
        if self.method == Method::P2 && self.portrait.trim().is_empty() {
            return Err(InductionError::EmptyPortrait);
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, InductionError> {
        let prompt: PersonalityPrompt =
            serde_json::from_str(text).map_err(|e| InductionError::Invalid(e.to_string()))?;
        prompt.validate()?;
        Ok(prompt)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("prompt serializes")
    }
}

#[derive(Debug, Error)]
pub enum InductionError {
    #[error("unknown polarity {0:?} (expected + or -)")]
    Polarity(String),
    #[error("unknown method {0:?} (expected p2, naive or words)")]
    Method(String),
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("no {polarity} adjective for {dimension}")]
    MissingAdjective { dimension: TraitDimension, polarity: Polarity },
    #[error("negative keywords for {0} need a model to generate antonyms")]
    NeedsModel(TraitDimension),
    #[error("antonym reply yielded {found} usable words, need at least 3")]
    TooFewAntonyms { found: usize },
    #[error("no keywords")]
    NoKeywords,
    #[error("empty portrait")]
    EmptyPortrait,
    #[error("empty question")]
    EmptyQuestion,
    #[error("invalid personality prompt: {0}")]
    Invalid(String),
    #[error("k must be ≥1")]
    ZeroK,
    #[error("k = {k} exceeds the {candidates} candidates")]
    KTooLarge { k: usize, candidates: usize },
    #[error("every candidate administration was invalid")]
    AllInvalid,
    #[error("candidate {word:?}: {source}")]
    Administer {
        word: String,
        #[source]
        source: AdministerError,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<InductionError>,
    },
}

impl InductionError {
    fn in_stage(self, stage: &'static str) -> Self {
        InductionError::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &InductionError {
        match self {
            InductionError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

/// "a" or "an" by the word's first letter.
pub fn article(word: &str) -> &'static str {
    match word.trim_start().chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn positive_adjective(dimension: TraitDimension) -> &'static str {
    match dimension {
        TraitDimension::Openness => "open",
        TraitDimension::Conscientiousness => "conscientious",
        TraitDimension::Extraversion => "extraversive",
        TraitDimension::Agreeableness => "agreeable",
        TraitDimension::Neuroticism => "neurotic",
    }
}

/// "You are a/an X person." for the target.
pub fn naive_prompt(target: InductionTarget, lexicon: &TraitLexicon) -> Result<String, InductionError> {
    let adjective = match target.polarity {
        Polarity::Positive => positive_adjective(target.dimension),
        Polarity::Negative => lexicon
            .negative(target.dimension)
            .iter()
            .map(|w| w.trim())
            .find(|w| !w.is_empty())
            .ok_or(InductionError::MissingAdjective {
                dimension: target.dimension,
                polarity: target.polarity,
            })?,
    };
    Ok(format!("You are {} {adjective} person.", article(adjective)))
}

/// The naive baseline as a full prompt record.
pub fn naive_induction(target: InductionTarget, lexicon: &TraitLexicon) -> Result<PersonalityPrompt, InductionError> {
    let naive_text = naive_prompt(target, lexicon)?;
    Ok(PersonalityPrompt {
        target,
        method: Method::Naive,
        naive_text: naive_text.clone(),
        keywords: Vec::new(),
        portrait: String::new(),
        final_prefix: naive_text,
    })
}

pub fn antonym_prompt(words: &[String]) -> String {
    format!(
        "Give one antonym for each of the following words, as a comma-separated list: {}.",
        words.join(", ")
    )
}

/// Splits a list-like reply into distinct lowercase words.
fn parse_word_list(reply: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for piece in reply.split([',', '\n', ';']) {
        let word = piece
            .trim()
            .trim_start_matches(|c: char| c.is_ascii_digit() || matches!(c, '.' | ')' | '-' | '*' | '•'))
            .trim()
            .trim_end_matches(['.', '!'])
            .trim()
            .trim_start_matches("and ")
            .to_lowercase();
        let plausible = !word.is_empty()
            && word.split_whitespace().count() <= 3
            && word.chars().all(|c| c.is_alphabetic() || c == '-' || c == ' ' || c == '\'');
        if plausible && !out.contains(&word) {
            out.push(word);
        }
    }
    out
}

/// Keywords for the second chain stage.
pub fn select_keywords(
    target: InductionTarget,
    lexicon: &TraitLexicon,
    model: Option<&dyn Complete>,
) -> Result<Vec<String>, InductionError> {
    let positive = lexicon.positive(target.dimension);
    if positive.is_empty() {
        return Err(InductionError::MissingAdjective {
            dimension: target.dimension,
            polarity: Polarity::Positive,
        });
    }
    match target.polarity {
        Polarity::Positive => Ok(positive.to_vec()),
        Polarity::Negative => {
            let negative = lexicon.negative(target.dimension);
            if !negative.is_empty() {
                return Ok(negative.to_vec());
            }
            let model = model.ok_or(InductionError::NeedsModel(target.dimension))?;
            let reply = model.complete(&antonym_prompt(positive))?;
            let words = parse_word_list(&reply.text);
            if words.len() < 3 {
                return Err(InductionError::TooFewAntonyms { found: words.len() });
            }
            Ok(words)
        }
    }
}

pub fn portrait_meta_prompt(keywords: &[String]) -> String {
    format!("Describe in a few short sentences a person who is {}.", keywords.join(", "))
}

/// Asks the model to describe a person with the given traits.
pub fn generate_portrait(
    model: &dyn Complete,
    keywords: &[String],
    _target: InductionTarget,
) -> Result<String, InductionError> {
    if keywords.is_empty() {
        return Err(InductionError::NoKeywords);
    }
    let reply = model.complete(&portrait_meta_prompt(keywords))?;
    let portrait = reply.text.trim();
    if portrait.is_empty() {
        return Err(InductionError::EmptyPortrait);
    }
    Ok(portrait.to_string())
}

/// Naive prompt, then keywords, then a self-written portrait.
pub fn p2_chain(
    model: &dyn Complete,
    target: InductionTarget,
    lexicon: &TraitLexicon,
) -> Result<PersonalityPrompt, InductionError> {
    // Without a lexicon negative the naive text waits for the model's antonyms.
    let naive = match naive_prompt(target, lexicon) {
        Err(InductionError::MissingAdjective { polarity: Polarity::Negative, .. }) => None,
        other => Some(other.map_err(|e| e.in_stage("naive prompt"))?),
    };
    let keywords = select_keywords(target, lexicon, Some(model)).map_err(|e| e.in_stage("keyword prompt"))?;
    let naive_text = naive.unwrap_or_else(|| format!("You are {} {} person.", article(&keywords[0]), keywords[0]));
    let portrait = generate_portrait(model, &keywords, target).map_err(|e| e.in_stage("portrait"))?;
    Ok(PersonalityPrompt {
        target,
        method: Method::P2,
        naive_text,
        keywords,
        final_prefix: portrait.clone(),
        portrait,
    })
}

/// Prefix, context and question separated by blank lines; empty parts
/// are left out.
pub fn assemble_parts(prefix: &str, context: &str, question: &str) -> String {
    [prefix, context, question]
        .into_iter()
        .filter(|part| !part.is_empty())
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn assemble_prompt(prompt: &PersonalityPrompt, context: &str, question: &str) -> Result<String, InductionError> {
    if question.trim().is_empty() {
        return Err(InductionError::EmptyQuestion);
    }
    Ok(assemble_parts(&prompt.final_prefix, context, question))
}
