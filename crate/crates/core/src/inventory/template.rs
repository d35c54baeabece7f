use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{lowercase_first, InventoryItem};

/// Likert options in scoring order, (A) through (E).
pub const OPTION_LABELS: [&str; 5] = [
    "Very Accurate",
    "Moderately Accurate",
    "Neither Accurate Nor Inaccurate",
    "Moderately Inaccurate",
    "Very Inaccurate",
];

const STATEMENT_SLOT: &str = "{statement}";
const OPTIONS_SLOT: &str = "{options}";
const EXPLAIN_ANCHOR: &str = "describes you.";
const EXPLAIN_REPLACEMENT: &str = "describes you and explain why.";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {0:?} must contain exactly one {{statement}} placeholder (found {1})")]
    Placeholder(String, usize),
    #[error("template {0:?} may contain at most one {{options}} placeholder")]
    OptionsPlaceholder(String),
    #[error("template {0:?} must list the five options {expected:?} in order", expected = OPTION_LABELS)]
    Options(String),
    #[error("template {0:?} has no \"describes you.\" instruction to extend with an explanation request")]
    NoExplainAnchor(String),
    #[error("unknown template {0:?}")]
    Unknown(String),
    #[error("cannot read template file {path}: {message}")]
    Load { path: String, message: String },
}

/// A multiple-choice prompt wrapped around one statement.
///
/// `body` holds a single `{statement}` slot, which receives the statement
/// with its first letter lowercased, and optionally an `{options}` slot,
/// which receives the option list as `(A). Very Accurate` lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub body: String,
    pub option_labels: Vec<String>,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Result<Self, TemplateError> {
        let tpl = PromptTemplate {
            id: id.into(),
            body: body.into(),
            option_labels: OPTION_LABELS.iter().map(|s| s.to_string()).collect(),
        };
        tpl.validate()?;
        Ok(tpl)
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let slots = self.body.matches(STATEMENT_SLOT).count();
        if slots != 1 {
            return Err(TemplateError::Placeholder(self.id.clone(), slots));
        }
        if self.body.matches(OPTIONS_SLOT).count() > 1 {
            return Err(TemplateError::OptionsPlaceholder(self.id.clone()));
        }
        let fixed = self.option_labels.len() == OPTION_LABELS.len()
            && self
                .option_labels
                .iter()
                .zip(OPTION_LABELS)
                .all(|(have, want)| have.trim().eq_ignore_ascii_case(want));
        if !fixed {
            return Err(TemplateError::Options(self.id.clone()));
        }
        Ok(())
    }

    /// Loads a template from a JSON file `{"id","body","option_labels"}`.
    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let load_err = |message: String| TemplateError::Load {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let tpl: PromptTemplate = serde_json::from_str(&text).map_err(|e| load_err(e.to_string()))?;
        tpl.validate()?;
        Ok(tpl)
    }

    /// Resolves a built-in id or, failing that, a path to a template file.
    pub fn resolve(id_or_path: &str) -> Result<Self, TemplateError> {
        if let Some(tpl) = Self::builtin(id_or_path) {
            return Ok(tpl);
        }
        let path = Path::new(id_or_path);
        if path.exists() {
            return Self::load(path);
        }
        Err(TemplateError::Unknown(id_or_path.to_string()))
    }

    /// The option block, one `(X). Label` line per option.
    pub fn options_block(&self) -> String {
        self.option_labels
            .iter()
            .zip(['A', 'B', 'C', 'D', 'E'])
            .map(|(label, letter)| format!("({letter}). {label}"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Renders one item.
    pub fn render(&self, item: &InventoryItem) -> Result<String, TemplateError> {
        self.render_statement(&item.statement)
    }

    pub fn render_statement(&self, statement: &str) -> Result<String, TemplateError> {
        self.validate()?;
        let body = self.body.replacen(STATEMENT_SLOT, &lowercase_first(statement), 1);
        Ok(body.replacen(OPTIONS_SLOT, &self.options_block(), 1))
    }

    /// The same template with its instruction extended to ask for a reason.
    pub fn with_explanation(&self) -> Result<Self, TemplateError> {
        if !self.body.contains(EXPLAIN_ANCHOR) {
            return Err(TemplateError::NoExplainAnchor(self.id.clone()));
        }
        Ok(PromptTemplate {
            id: format!("{}+explain", self.id),
            body: self.body.replacen(EXPLAIN_ANCHOR, EXPLAIN_REPLACEMENT, 1),
            option_labels: self.option_labels.clone(),
        })
    }

    pub fn builtin_ids() -> &'static [&'static str] {
        &["gpt-3.5", "alpaca", "gpt-neo", "gpt-neox", "bart"]
    }

    /// Built-in per-model templates.
    pub fn builtin(id: &str) -> Option<Self> {
        let body = match id {
            "gpt-3.5" | "default" => concat!(
                "Question:\n",
                "Given a statement of you: \"You {statement}.\"\n",
                "Please choose from the following options to identify how accurately this statement describes you.\n",
                "Options:\n",
                "{options}\n",
                "\n",
                "Answer:",
            ),
            "alpaca" => concat!(
                "Below is an instruction that describes a task, paired with an input that provides further context. ",
                "Write a response that appropriately completes the request.\n",
                "\n",
                "### Instruction:\n",
                "Given a statement of you. Please choose from the following options to identify how accurately this statement describes you.\n",
                "\n",
                "### Input:\n",
                "Statement: \"You {statement}.\"\n",
                "\n",
                "Options:\n",
                "{options}\n",
                "\n",
                "### Response:\n",
            ),
            "gpt-neo" | "bart" => concat!(
                "Given a description of you: \"You {statement}.\" What do you think?\n",
                "\n",
                "You can choose from the following options:\n",
                "\n",
                "{options}\n",
                "\n",
                "My answer: I think the best description of myself is option",
            ),
            "gpt-neox" => concat!(
                "Question: Given the description of you: \"You {statement}.\" What do you think?\n",
                "Options:\n",
                "{options}\n",
                "Answer: I choose option",
            ),
            _ => return None,
        };
        let id = if id == "default" { "gpt-3.5" } else { id };
        Some(PromptTemplate::new(id, body).expect("built-in templates are valid"))
    }

    /// The default template (GPT-3.5 style).
    pub fn default_template() -> Self {
        Self::builtin("gpt-3.5").expect("default template exists")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{bundled_mpi120, ItemKey, TraitDimension};

    #[test]
    fn minimal_substitution() {
        let tpl = PromptTemplate::new("t", "Q: You {statement}.").unwrap();
        let item = InventoryItem::new("x", "x", TraitDimension::Openness, ItemKey::Positive);
        assert_eq!(tpl.render(&item).unwrap(), "Q: You x.");
    }

    #[test]
    fn gpt_template_lowercases_statement() {
        let tpl = PromptTemplate::default_template();
        let item = InventoryItem::new("e1", "Feel comfortable around people", TraitDimension::Extraversion, ItemKey::Positive);
        let text = tpl.render(&item).unwrap();
        assert!(text.contains("\"You feel comfortable around people.\""));
        assert!(text.starts_with("Question:\nGiven a statement of you"));
        assert!(text.ends_with("Answer:"));
    }

    #[test]
    fn options_are_listed_a_to_e_for_every_fixture_item() {
        let inv = bundled_mpi120();
        for id in PromptTemplate::builtin_ids() {
            let tpl = PromptTemplate::builtin(id).unwrap();
            for item in inv.items() {
                let text = tpl.render(item).unwrap();
                let a = text.find("(A). Very Accurate").unwrap();
                let e = text.find("(E). Very Inaccurate").unwrap();
                assert!(a < e);
                for label in OPTION_LABELS {
                    assert!(text.contains(label));
                }
            }
        }
    }

    #[test]
    fn placeholder_count_is_checked() {
        assert_eq!(
            PromptTemplate::new("t", "no slot").unwrap_err(),
            TemplateError::Placeholder("t".into(), 0)
        );
        assert!(PromptTemplate::new("t", "{statement} {statement}").is_err());
        assert!(PromptTemplate::new("t", "{statement} {options} {options}").is_err());
    }

    #[test]
    fn reordered_or_missing_options_are_rejected() {
        let mut tpl = PromptTemplate::default_template();
        tpl.option_labels.swap(0, 4);
        assert!(matches!(tpl.validate(), Err(TemplateError::Options(_))));
        tpl.option_labels.pop();
        assert!(tpl.validate().is_err());
        let item = InventoryItem::new("x", "x", TraitDimension::Openness, ItemKey::Positive);
        assert!(tpl.render(&item).is_err());
    }

    #[test]
    fn explanation_variant() {
        let tpl = PromptTemplate::default_template().with_explanation().unwrap();
        assert!(tpl
            .body
            .contains("identify how accurately this statement describes you and explain why."));
        assert!(matches!(
            PromptTemplate::builtin("gpt-neox").unwrap().with_explanation(),
            Err(TemplateError::NoExplainAnchor(_))
        ));
    }

    #[test]
    fn template_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let tpl = PromptTemplate::builtin("alpaca").unwrap();
        std::fs::write(&path, serde_json::to_string(&tpl).unwrap()).unwrap();
        assert_eq!(PromptTemplate::resolve(path.to_str().unwrap()).unwrap(), tpl);
        assert!(matches!(PromptTemplate::resolve("nope"), Err(TemplateError::Unknown(_))));
    }
}
