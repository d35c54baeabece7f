//! Vignette study: essays written under induced and neutral prompts,
//! paired into blind comparisons for human raters, and scored as success
//! rates per trait and direction.

mod dir;
mod ratings;
mod session;

pub use dir::SessionDir;
pub use ratings::{success_rates, CellRate, Judgment, RatingRecord, RatingStore, SuccessReport};
pub use session::{
    build_questionnaire, displayed_judgment, normalize_judgment, session_view, submission_records, Comparison,
    RatingSession, RatingSubmission, SessionStatus, SubmittedAnswer,
};

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Complete, GatewayError};
use crate::induction::{Method, PersonalityPrompt, Polarity};
use crate::inventory::TraitDimension;

pub const ESSAY_QUESTION: &str = "Describe how you would feel and what you would do in the situation.";

/// A scenario used to elicit an essay for one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VignetteContext {
    pub dimension: TraitDimension,
    pub scenario: String,
    pub question: String,
}

const SCENARIOS: [(TraitDimension, &str); 5] = [
    (
        TraitDimension::Openness,
        "You have won an Air Canada paid vacation package for one person to any destination worldwide. Your package includes round-trip plane tickets, accommodations for any type of lodging, and $5,000 spending money. Assuming that you were available to go, where would you choose to go and why?",
    ),
    (
        TraitDimension::Conscientiousness,
        "You're working alone late at the office, and you notice a strange smell and a hazy mist hanging in the corridor air. You suspect it's some gas or vapor leak from some equipment or machinery in the building. You have no idea whether the leaked vapor is hazardous. As honestly as possible, describe what you would do in this situation.",
    ),
    (
        TraitDimension::Extraversion,
        "Your friend wants you to attend an important party to which he/she has been invited. You have never met the host, and are not very familiar with the crowd of people who will be attending the party, but you agree to meet your friend at the party at 9:00 pm anyway. When you arrive there, you realize that your friend is late. How would you feel, and what would you do while you waited for your friend?",
    ),
    (
        TraitDimension::Agreeableness,
        "Your housemate decides to paint her bedroom a new color. One night, when you come home from class, you discover that she also painted your room in the same color because she had paint left over and didn't want it to go to waste. As realistically as possible, describe how you would feel and how you would you handle the situation.",
    ),
    (
        TraitDimension::Neuroticism,
        "You have developed an email friendship with someone. In your latest email, you ask your friend a more personal question. Your friend usually replies quite promptly but has taken unusually long to reply to your latest questions. Discuss how you would interpret this long period of silence, how you would react, and what you would do about it?",
    ),
];

/// The five built-in scenarios in OCEAN order.
pub fn builtin_contexts() -> Vec<VignetteContext> {
    SCENARIOS
        .iter()
        .map(|(d, s)| VignetteContext {
            dimension: *d,
            scenario: s.to_string(),
            question: ESSAY_QUESTION.to_string(),
        })
        .collect()
}

pub fn builtin_context(dimension: TraitDimension) -> VignetteContext {
    builtin_contexts().swap_remove(dimension.index())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Positive,
    Neutral,
    Negative,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Positive, Condition::Neutral, Condition::Negative];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Positive => "positive",
            Condition::Neutral => "neutral",
            Condition::Negative => "negative",
        }
    }

    pub fn of(prompt: Option<&PersonalityPrompt>) -> Self {
        match prompt.map(|p| p.target.polarity) {
            None => Condition::Neutral,
            Some(Polarity::Positive) => Condition::Positive,
            Some(Polarity::Negative) => Condition::Negative,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Who wrote an essay and under which induction method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub model: String,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Essay {
    pub id: String,
    pub dimension: TraitDimension,
    pub condition: Condition,
    pub text: String,
    pub generator: Generator,
}

pub fn essay_id(dimension: TraitDimension, condition: Condition) -> String {
    format!("{dimension}-{condition}")
}

#[derive(Debug, Error)]
pub enum VignetteError {
    #[error("empty essay for {0}")]
    EmptyEssay(String),
    #[error("prompt targets {prompt} but the context is for {context}")]
    DimensionMismatch { prompt: TraitDimension, context: TraitDimension },
    #[error("missing essay for {dimension} {condition}")]
    MissingCell { dimension: TraitDimension, condition: Condition },
    #[error("more than one essay for {dimension} {condition}")]
    DuplicateCell { dimension: TraitDimension, condition: Condition },
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} is closed")]
    Closed(String),
    #[error("unknown item {0:?}")]
    UnknownItem(String),
    #[error("incomplete submission: {0}")]
    Incomplete(String),
    #[error("rater {rater_id:?} already rated item {item_id:?}")]
    DuplicateRating { rater_id: String, item_id: String },
    #[error("rating belongs to session {found:?}, expected {expected:?}")]
    WrongSession { expected: String, found: String },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

impl VignetteError {
    pub(crate) fn file(path: &std::path::Path, message: impl fmt::Display) -> Self {
        VignetteError::File {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }
}

/// The query sent to the model; the Context line is left blank for the
/// neutral condition.
pub fn essay_prompt(prompt: Option<&PersonalityPrompt>, context: &VignetteContext) -> String {
    let prefix = prompt.map(|p| p.final_prefix.trim()).unwrap_or("");
    let context_line = if prefix.is_empty() { "Context:".to_string() } else { format!("Context: {prefix}") };
    format!("{context_line}\nPremise: {}\nQ: {}\nA:", context.scenario, context.question)
}

pub fn generate_essay(
    model: &dyn Complete,
    prompt: Option<&PersonalityPrompt>,
    context: &VignetteContext,
) -> Result<Essay, VignetteError> {
    if let Some(p) = prompt {
        if p.target.dimension != context.dimension {
            return Err(VignetteError::DimensionMismatch {
                prompt: p.target.dimension,
                context: context.dimension,
            });
        }
    }
    let condition = Condition::of(prompt);
    let id = essay_id(context.dimension, condition);
    let reply = model.complete(&essay_prompt(prompt, context))?;
    let text = reply.text.trim();
    if text.is_empty() {
        return Err(VignetteError::EmptyEssay(id));
    }
    Ok(Essay {
        id,
        dimension: context.dimension,
        condition,
        text: text.to_string(),
        generator: Generator {
            model: model.model_name().to_string(),
            method: prompt.map(|p| p.method),
        },
    })
}

/// Essays for every given job, generated concurrently up to the model's
/// parallelism; results keep job order.
pub fn generate_essays(
    model: &dyn Complete,
    jobs: &[(Option<PersonalityPrompt>, VignetteContext)],
) -> Result<Vec<Essay>, VignetteError> {
    let slots: Vec<Mutex<Option<Result<Essay, VignetteError>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..model.parallelism().clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((prompt, context)) = jobs.get(i) else { break };
                let essay = generate_essay(model, prompt.as_ref(), context);
                *slots[i].lock().expect("slot poisoned") = Some(essay);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot poisoned").expect("every job ran"))
        .collect()
}

/// Replaces essays in the same (dimension, condition) cell and keeps the
/// set sorted by id.
pub fn merge_essays(existing: Vec<Essay>, new: Vec<Essay>) -> Vec<Essay> {
    let mut merged: std::collections::BTreeMap<String, Essay> =
        existing.into_iter().map(|e| (e.id.clone(), e)).collect();
    for essay in new {
        merged.insert(essay.id.clone(), essay);
    }
    merged.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Gateway, ModelProfile, ScriptedSpec};
    use crate::induction::{naive_induction, InductionTarget, TraitLexicon};

    fn echo(text: &str) -> Gateway {
        let mut spec = ScriptedSpec::with_levels([3; 5]);
        spec.echo_portrait = Some(text.into());
        Gateway::scripted(ModelProfile::scripted("echo", spec), None).unwrap()
    }

    #[test]
    fn contexts_are_verbatim_and_distinct() {
        let all = builtin_contexts();
        assert_eq!(all.len(), 5);
        let dims: std::collections::BTreeSet<_> = all.iter().map(|c| c.dimension).collect();
        assert_eq!(dims.len(), 5);
        assert!(builtin_context(TraitDimension::Conscientiousness)
            .scenario
            .starts_with("You're working alone late at the office"));
        assert!(builtin_context(TraitDimension::Extraversion)
            .scenario
            .contains("meet your friend at the party at 9:00 pm"));
    }

    #[test]
    fn neutral_prompt_layout() {
        let ctx = builtin_context(TraitDimension::Conscientiousness);
        let prompt = essay_prompt(None, &ctx);
        assert!(prompt.starts_with("Context:\nPremise: You're working alone late at the office"));
        assert!(prompt.ends_with(&format!("Q: {ESSAY_QUESTION}\nA:")));
    }

    #[test]
    fn induced_prefix_precedes_premise() {
        let pp = naive_induction(
            InductionTarget::new(TraitDimension::Extraversion, Polarity::Positive),
            &TraitLexicon::default(),
        )
        .unwrap();
        let prompt = essay_prompt(Some(&pp), &builtin_context(TraitDimension::Extraversion));
        let at = prompt.find(&pp.final_prefix).unwrap();
        assert!(at < prompt.find("Premise:").unwrap());
        assert!(prompt.starts_with("Context: You are an extraversive person.\n"));
    }

    #[test]
    fn essays_from_echo_model() {
        let gw = echo("I would hide in a corner.");
        let essay = generate_essay(&gw, None, &builtin_context(TraitDimension::Extraversion)).unwrap();
        assert_eq!(essay.text, "I would hide in a corner.");
        assert_eq!(essay.condition, Condition::Neutral);
        assert_eq!(essay.id, "E-neutral");

        let blank = echo("   ");
        assert!(matches!(
            generate_essay(&blank, None, &builtin_context(TraitDimension::Openness)),
            Err(VignetteError::EmptyEssay(_))
        ));
    }

    #[test]
    fn mismatched_prompt_is_rejected() {
        let pp = naive_induction(
            InductionTarget::new(TraitDimension::Openness, Polarity::Positive),
            &TraitLexicon::default(),
        )
        .unwrap();
        let err = generate_essay(&echo("x"), Some(&pp), &builtin_context(TraitDimension::Extraversion)).unwrap_err();
        assert!(matches!(err, VignetteError::DimensionMismatch { .. }));
    }

    #[test]
    fn batch_generation_keeps_order_and_merges() {
        let gw = echo("Something.");
        let jobs: Vec<_> = builtin_contexts().into_iter().map(|c| (None, c)).collect();
        let essays = generate_essays(&gw, &jobs).unwrap();
        assert_eq!(essays.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["O-neutral", "C-neutral", "E-neutral", "A-neutral", "N-neutral"]);
        let mut again = essays[..1].to_vec();
        again[0].text = "Changed.".into();
        let merged = merge_essays(essays, again);
        assert_eq!(merged.len(), 5);
        assert_eq!(merged.iter().find(|e| e.id == "O-neutral").unwrap().text, "Changed.");
    }
}
