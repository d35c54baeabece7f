//! Likert scoring and OCEAN reports.
//!
//! A dimension's score is the mean keyed item score over its answered
//! items; σ is the population standard deviation of the same scores.
//! Unparseable answers are excluded from both and counted separately.

mod administer;
mod human;
mod likert;
mod parse;

pub use administer::{administer, AdministerError, AdministerOptions};
pub use human::{
    compare_to_human, Closeness, DimensionComparison, HumanComparison, HumanReference,
    ReportedRow, ScoringComparisonError, REPORTED_MODEL_ROWS,
};
pub use likert::{choice_for_score, item_score, Choice};
pub use parse::{parse_answer, parse_choice, Parsed, ParsedAnswer};

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::induction::PersonalityPrompt;
use crate::inventory::{Inventory, TraitDimension};
use crate::json::round4;

/// One model answer to one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemResponse {
    pub item_id: String,
    pub raw: String,
    pub parsed: Parsed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

impl ItemResponse {
    /// Parses `raw` with the fixed option labels.
    pub fn from_raw(item_id: impl Into<String>, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let labels: Vec<String> = crate::inventory::OPTION_LABELS.iter().map(|s| s.to_string()).collect();
        let answer = parse_answer(&raw, &labels);
        ItemResponse {
            item_id: item_id.into(),
            raw,
            parsed: answer.parsed,
            explanation: answer.explanation,
        }
    }

    pub fn with_choice(item_id: impl Into<String>, choice: Choice) -> Self {
        ItemResponse {
            item_id: item_id.into(),
            raw: choice.answer_text(),
            parsed: Parsed::Choice(choice),
            explanation: None,
        }
    }
}

/// Score summary for one dimension. `mean` and `sigma` are `None` when no
/// answer in the dimension could be parsed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraitReport {
    pub dimension: TraitDimension,
    pub mean: Option<f64>,
    pub sigma: Option<f64>,
    pub n_valid: usize,
    pub n_invalid: usize,
}

impl TraitReport {
    pub fn from_scores(dimension: TraitDimension, scores: &[u8], n_invalid: usize) -> Self {
        let (mean, sigma) = mean_and_population_sigma(scores)
            .map_or((None, None), |(m, s)| (Some(m), Some(s)));
        TraitReport {
            dimension,
            mean,
            sigma,
            n_valid: scores.len(),
            n_invalid,
        }
    }

    pub fn is_defined(&self) -> bool {
        self.mean.is_some()
    }
}

fn mean_and_population_sigma(scores: &[u8]) -> Option<(f64, f64)> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let mean = scores.iter().map(|&s| f64::from(s)).sum::<f64>() / n;
    let var = scores
        .iter()
        .map(|&s| (f64::from(s) - mean).powi(2))
        .sum::<f64>()
        / n;
    Some((mean, var.sqrt()))
}

/// Per-dimension results of one administration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OceanReport {
    pub model: String,
    pub inventory: String,
    pub induction: Option<PersonalityPrompt>,
    pub traits: [TraitReport; 5],
}

impl OceanReport {
    pub fn trait_report(&self, dimension: TraitDimension) -> &TraitReport {
        &self.traits[dimension.index()]
    }

    /// A report built from summary statistics rather than responses, e.g.
    /// to compare externally reported numbers against the human reference.
    pub fn from_summary(model: &str, inventory: &str, rows: [(f64, f64); 5]) -> Self {
        let traits = TraitDimension::ALL.map(|d| TraitReport {
            dimension: d,
            mean: Some(rows[d.index()].0),
            sigma: Some(rows[d.index()].1),
            n_valid: 0,
            n_invalid: 0,
        });
        OceanReport {
            model: model.to_string(),
            inventory: inventory.to_string(),
            induction: None,
            traits,
        }
    }

    pub fn with_induction(mut self, prompt: Option<PersonalityPrompt>) -> Self {
        self.induction = prompt;
        self
    }

    /// The report file layout; means and σ rounded to four decimals.
    pub fn to_json(&self) -> Value {
        let traits: BTreeMap<String, Value> = self
            .traits
            .iter()
            .map(|t| {
                (
                    t.dimension.letter().to_string(),
                    json!({
                        "mean": t.mean.map(round4),
                        "sigma": t.sigma.map(round4),
                        "n_valid": t.n_valid,
                        "n_invalid": t.n_invalid,
                    }),
                )
            })
            .collect();
        json!({
            "model": self.model,
            "inventory": self.inventory,
            "induction": self.induction.as_ref().map(|p| serde_json::to_value(p).expect("prompt serializes")),
            "traits": traits,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("response for unknown item {0:?}")]
    UnknownItem(String),
    #[error("more than one response for item {0:?}")]
    DuplicateResponse(String),
}

/// Aggregates responses into an OCEAN report.
pub fn score_responses(
    model: &str,
    responses: &[ItemResponse],
    inventory: &Inventory,
) -> Result<OceanReport, ScoringError> {
    let mut scores: [Vec<u8>; 5] = Default::default();
    let mut invalid = [0usize; 5];
    let mut seen = HashSet::new();
    for response in responses {
        let item = inventory
            .get(&response.item_id)
            .ok_or_else(|| ScoringError::UnknownItem(response.item_id.clone()))?;
        if !seen.insert(response.item_id.as_str()) {
            return Err(ScoringError::DuplicateResponse(response.item_id.clone()));
        }
        let slot = item.dimension.index();
        match response.parsed.choice() {
            Some(choice) => scores[slot].push(item_score(choice, item.key)),
            None => invalid[slot] += 1,
        }
    }
    let traits = TraitDimension::ALL.map(|d| TraitReport::from_scores(d, &scores[d.index()], invalid[d.index()]));
    Ok(OceanReport {
        model: model.to_string(),
        inventory: inventory.name().to_string(),
        induction: None,
        traits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{bundled_mpi120, InventoryItem, ItemKey};

    fn extraversion_four() -> Inventory {
        let keys = [ItemKey::Positive, ItemKey::Positive, ItemKey::Negative, ItemKey::Negative];
        let items = keys
            .iter()
            .enumerate()
            .map(|(i, k)| InventoryItem::new(format!("e{i}"), format!("statement {i}"), TraitDimension::Extraversion, *k))
            .collect();
        Inventory::new("four", items).unwrap()
    }

    #[test]
    fn hand_computed_case() {
        // Scores {5, 4, 4, 5}: mean 4.5, deviations ±0.5, population σ 0.5.
        let inv = extraversion_four();
        let answers = [Choice::A, Choice::B, Choice::D, Choice::E];
        let responses: Vec<_> = answers
            .iter()
            .enumerate()
            .map(|(i, c)| ItemResponse::with_choice(format!("e{i}"), *c))
            .collect();
        let report = score_responses("m", &responses, &inv).unwrap();
        let e = report.trait_report(TraitDimension::Extraversion);
        assert_eq!(e.mean, Some(4.5));
        assert_eq!(e.sigma, Some(0.5));
        assert_eq!(e.n_valid, 4);
        assert!(!report.trait_report(TraitDimension::Openness).is_defined());
    }

    #[test]
    fn all_midpoint() {
        let inv = bundled_mpi120();
        let responses: Vec<_> = inv.items().iter().map(|i| ItemResponse::with_choice(&i.id, Choice::C)).collect();
        let report = score_responses("m", &responses, &inv).unwrap();
        for t in &report.traits {
            assert_eq!(t.mean, Some(3.0));
            assert_eq!(t.sigma, Some(0.0));
        }
    }

    #[test]
    fn invalid_answers_are_excluded_and_counted() {
        let inv = extraversion_four();
        let responses = vec![
            ItemResponse::with_choice("e0", Choice::A),
            ItemResponse::from_raw("e1", "I cannot answer this."),
        ];
        let report = score_responses("m", &responses, &inv).unwrap();
        let e = report.trait_report(TraitDimension::Extraversion);
        assert_eq!((e.mean, e.n_valid, e.n_invalid), (Some(5.0), 1, 1));
    }

    #[test]
    fn unknown_and_duplicate_items_are_errors() {
        let inv = extraversion_four();
        let err = score_responses("m", &[ItemResponse::with_choice("zz", Choice::A)], &inv).unwrap_err();
        assert_eq!(err, ScoringError::UnknownItem("zz".into()));
        let twice = vec![ItemResponse::with_choice("e0", Choice::A), ItemResponse::with_choice("e0", Choice::B)];
        assert!(matches!(score_responses("m", &twice, &inv), Err(ScoringError::DuplicateResponse(_))));
    }

    #[test]
    fn report_json_layout() {
        let inv = extraversion_four();
        let responses: Vec<_> = ["e0", "e1", "e2"]
            .iter()
            .map(|id| ItemResponse::with_choice(*id, Choice::A))
            .collect();
        let json = score_responses("m", &responses, &inv).unwrap().to_json();
        assert_eq!(json["model"], "m");
        assert_eq!(json["inventory"], "four");
        assert!(json["induction"].is_null());
        // scores {5, 5, 1}: mean 11/3, σ = sqrt(32/9)
        assert_eq!(json["traits"]["E"]["mean"], 3.6667);
        assert_eq!(json["traits"]["E"]["sigma"], 1.8856);
        assert!(json["traits"]["O"]["mean"].is_null());
        assert_eq!(json["traits"]["O"]["n_valid"], 0);
    }
}
