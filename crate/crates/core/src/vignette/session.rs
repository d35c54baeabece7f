use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Condition, Essay, Judgment, RatingRecord, VignetteError};
use crate::induction::Polarity;
use crate::inventory::TraitDimension;

/// One induced essay paired with the neutral essay of the same dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub item_id: String,
    pub dimension: TraitDimension,
    pub polarity: Polarity,
    pub neutral_essay_id: String,
    pub induced_essay_id: String,
    /// When set, the induced essay is shown first.
    pub presentation_flip: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSession {
    pub id: String,
    pub seed: u64,
    pub status: SessionStatus,
    pub comparisons: Vec<Comparison>,
}

impl RatingSession {
    pub fn comparison(&self, item_id: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.item_id == item_id)
    }

    pub fn is_open(&self) -> bool {
        self.status == SessionStatus::Open
    }
}

/// Pairs a full 15-essay set into 10 comparisons. Order and left/right
/// placement come from `seed`, so the same inputs always give the same
/// session.
pub fn build_questionnaire(id: &str, essays: &[Essay], seed: u64) -> Result<RatingSession, VignetteError> {
    let mut cells: BTreeMap<(TraitDimension, Condition), &Essay> = BTreeMap::new();
    for essay in essays {
        if cells.insert((essay.dimension, essay.condition), essay).is_some() {
            return Err(VignetteError::DuplicateCell {
                dimension: essay.dimension,
                condition: essay.condition,
            });
        }
    }
    for d in TraitDimension::ALL {
        for c in Condition::ALL {
            if !cells.contains_key(&(d, c)) {
                return Err(VignetteError::MissingCell { dimension: d, condition: c });
            }
        }
    }

    let mut pairs: Vec<(TraitDimension, Polarity)> = TraitDimension::ALL
        .iter()
        .flat_map(|&d| [(d, Polarity::Positive), (d, Polarity::Negative)])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.shuffle(&mut rng);
    let comparisons = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (d, polarity))| {
            let induced = match polarity {
                Polarity::Positive => Condition::Positive,
                Polarity::Negative => Condition::Negative,
            };
            Comparison {
                item_id: format!("item-{:02}", i + 1),
                dimension: d,
                polarity,
                neutral_essay_id: cells[&(d, Condition::Neutral)].id.clone(),
                induced_essay_id: cells[&(d, induced)].id.clone(),
                presentation_flip: rng.random_bool(0.5),
            }
        })
        .collect();
    Ok(RatingSession {
        id: id.to_string(),
        seed,
        status: SessionStatus::Open,
        comparisons,
    })
}

/// The rater-facing payload: essays labelled only by position, with no
/// condition, essay id or model name.
pub fn session_view(session: &RatingSession, essays: &[Essay]) -> Result<Value, VignetteError> {
    let text = |id: &str| {
        essays
            .iter()
            .find(|e| e.id == id)
            .map(|e| e.text.clone())
            .ok_or_else(|| VignetteError::UnknownItem(id.to_string()))
    };
    let total = session.comparisons.len();
    let items = session
        .comparisons
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (first, second) = if c.presentation_flip {
                (&c.induced_essay_id, &c.neutral_essay_id)
            } else {
                (&c.neutral_essay_id, &c.induced_essay_id)
            };
            let trait_name = c.dimension.name();
            Ok(json!({
                "item_id": c.item_id,
                "index": i + 1,
                "total": total,
                "trait": trait_name,
                "scenario": super::builtin_context(c.dimension).scenario,
                "response_1": text(first)?,
                "response_2": text(second)?,
                "question": format!("Compared with Response 1, does Response 2 show more or less {trait_name}?"),
            }))
        })
        .collect::<Result<Vec<_>, VignetteError>>()?;
    Ok(json!({ "session_id": session.id, "total": total, "items": items }))
}

/// Converts a judgment about the displayed order ("Response 2 relative to
/// Response 1") into one about the induced essay relative to the neutral.
pub fn normalize_judgment(comparison: &Comparison, shown: Judgment) -> Judgment {
    if comparison.presentation_flip {
        shown.inverted()
    } else {
        shown
    }
}

/// Inverse of [`normalize_judgment`]: what a rater who perceives `actual`
/// answers on screen.
pub fn displayed_judgment(comparison: &Comparison, actual: Judgment) -> Judgment {
    normalize_judgment(comparison, actual)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmittedAnswer {
    pub item_id: String,
    pub judgment: Judgment,
}

/// One rater's answers for every item of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSubmission {
    pub rater_id: String,
    pub answers: Vec<SubmittedAnswer>,
}

/// Validates a submission and turns it into stored records. Every item
/// must be answered exactly once.
pub fn submission_records(
    session: &RatingSession,
    submission: &RatingSubmission,
    ts: u64,
) -> Result<Vec<RatingRecord>, VignetteError> {
    if !session.is_open() {
        return Err(VignetteError::Closed(session.id.clone()));
    }
    let rater_id = submission.rater_id.trim();
    if rater_id.is_empty() {
        return Err(VignetteError::Incomplete("rater_id is empty".into()));
    }
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(submission.answers.len());
    for answer in &submission.answers {
        let comparison = session
            .comparison(&answer.item_id)
            .ok_or_else(|| VignetteError::UnknownItem(answer.item_id.clone()))?;
        if !seen.insert(answer.item_id.as_str()) {
            return Err(VignetteError::Incomplete(format!("item {:?} answered twice", answer.item_id)));
        }
        records.push(RatingRecord {
            session_id: session.id.clone(),
            rater_id: rater_id.to_string(),
            item_id: answer.item_id.clone(),
            judgment: normalize_judgment(comparison, answer.judgment),
            ts,
        });
    }
    if records.len() != session.comparisons.len() {
        return Err(VignetteError::Incomplete(format!(
            "{} of {} items answered",
            records.len(),
            session.comparisons.len()
        )));
    }
    Ok(records)
}
