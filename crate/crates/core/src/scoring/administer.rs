use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use super::{parse_answer, ItemResponse};
use crate::gateway::{Complete, GatewayError};
use crate::induction::assemble_parts;
use crate::inventory::{Inventory, PromptTemplate, TemplateError};

#[derive(Debug, Clone, PartialEq)]
pub struct AdministerOptions {
    /// Text placed before every rendered item, separated by a blank line.
    pub persona_prefix: Option<String>,
    /// Ask for a reason after the choice and keep it as the explanation.
    pub explain: bool,
    /// Abort when invalid answers exceed this fraction of items.
    pub max_invalid_fraction: f64,
}

impl Default for AdministerOptions {
    fn default() -> Self {
        AdministerOptions {
            persona_prefix: None,
            explain: false,
            max_invalid_fraction: 0.2,
        }
    }
}

#[derive(Debug, Error)]
pub enum AdministerError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("item {item_id}: {source}")]
    Gateway {
        item_id: String,
        #[source]
        source: GatewayError,
    },
    #[error("too many invalid responses ({invalid}/{total})")]
    TooManyInvalid { invalid: usize, total: usize },
}

/// Asks the model every item once and parses the answers.
///
/// Calls run concurrently up to the model's parallelism; results are
/// returned in inventory order regardless of completion order.
pub fn administer(
    model: &dyn Complete,
    inventory: &Inventory,
    template: &PromptTemplate,
    options: &AdministerOptions,
) -> Result<Vec<ItemResponse>, AdministerError> {
    let template = if options.explain {
        template.with_explanation()?
    } else {
        template.clone()
    };
    let prompts = inventory
        .items()
        .iter()
        .map(|item| {
            let question = template.render(item)?;
            Ok(match options.persona_prefix.as_deref() {
                Some(prefix) if !prefix.is_empty() => assemble_parts(prefix, "", &question),
                _ => question,
            })
        })
        .collect::<Result<Vec<String>, TemplateError>>()?;

    let total = prompts.len();
    let slots: Vec<Mutex<Option<Result<String, GatewayError>>>> = (0..total).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let workers = model.parallelism().clamp(1, total.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= total {
                    break;
                }
                let outcome = model.complete(&prompts[i]).map(|c| c.text);
                if outcome.is_err() {
                    failed.store(true, Ordering::SeqCst);
                }
                *slots[i].lock().expect("result slot poisoned") = Some(outcome);
            });
        }
    });

    let mut responses = Vec::with_capacity(total);
    for (item, slot) in inventory.items().iter().zip(slots) {
        match slot.into_inner().expect("result slot poisoned") {
            Some(Ok(text)) => {
                let answer = parse_answer(&text, &template.option_labels);
                responses.push(ItemResponse {
                    item_id: item.id.clone(),
                    raw: text,
                    parsed: answer.parsed,
                    explanation: if options.explain { answer.explanation } else { None },
                });
            }
            Some(Err(source)) => {
                return Err(AdministerError::Gateway {
                    item_id: item.id.clone(),
                    source,
                })
            }
            // Items are claimed in order, so unclaimed ones only follow a failure.
            None => unreachable!("unclaimed item without an earlier gateway failure"),
        }
    }

    let invalid = responses.iter().filter(|r| !r.parsed.is_valid()).count();
    if total > 0 && invalid as f64 / total as f64 > options.max_invalid_fraction {
        return Err(AdministerError::TooManyInvalid { invalid, total });
    }
    Ok(responses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Gateway, ModelProfile, RawCompletion, ScriptedSpec};
    use crate::inventory::{bundled_mpi120, InventoryItem, ItemKey, TraitDimension};
    use crate::scoring::{score_responses, Choice, Parsed};

    struct Canned(Vec<(String, String)>);

    impl Complete for Canned {
        fn model_name(&self) -> &str {
            "canned"
        }
        fn complete(&self, prompt: &str) -> Result<RawCompletion, GatewayError> {
            self.0
                .iter()
                .find(|(needle, _)| prompt.contains(needle.as_str()))
                .map(|(_, text)| RawCompletion {
                    prompt: prompt.into(),
                    text: text.clone(),
                    model: "canned".into(),
                    cached: false,
                })
                .ok_or_else(|| GatewayError::ReplayMiss { profile: "canned".into(), key_hash: "-".into() })
        }
        fn parallelism(&self) -> usize {
            3
        }
    }

    fn ten_items() -> Inventory {
        let items = (0..10)
            .map(|i| InventoryItem::new(format!("i{i}"), format!("do thing number {i}"), TraitDimension::Openness, ItemKey::Positive))
            .collect();
        Inventory::new("ten", items).unwrap()
    }

    #[test]
    fn scripted_fixture_has_no_invalid_answers() {
        let inv = bundled_mpi120();
        let gw = Gateway::scripted(ModelProfile::scripted("s", ScriptedSpec::with_levels([3, 3, 5, 3, 3])), Some(&inv)).unwrap();
        let responses = administer(&gw, &inv, &PromptTemplate::default_template(), &AdministerOptions::default()).unwrap();
        assert_eq!(responses.len(), 120);
        assert!(responses.iter().all(|r| r.parsed.is_valid()));
        let report = score_responses("s", &responses, &inv).unwrap();
        assert_eq!(report.trait_report(TraitDimension::Extraversion).mean, Some(5.0));
        assert_eq!(report.trait_report(TraitDimension::Openness).mean, Some(3.0));
        assert!(report.traits.iter().all(|t| t.sigma == Some(0.0)));
    }

    #[test]
    fn invalid_threshold_aborts() {
        let inv = ten_items();
        let mut canned: Vec<(String, String)> = (0..10)
            .map(|i| (format!("number {i}."), "(A). Very Accurate".to_string()))
            .collect();
        for slot in canned.iter_mut().take(3) {
            slot.1 = "zxq blorp".into();
        }
        let err = administer(&Canned(canned.clone()), &inv, &PromptTemplate::default_template(), &AdministerOptions::default())
            .unwrap_err();
        assert_eq!(err.to_string(), "too many invalid responses (3/10)");

        canned[2].1 = "(B)".into();
        let ok = administer(&Canned(canned), &inv, &PromptTemplate::default_template(), &AdministerOptions::default()).unwrap();
        assert_eq!(ok.iter().filter(|r| !r.parsed.is_valid()).count(), 2);
    }

    #[test]
    fn gateway_errors_carry_item_context() {
        let inv = ten_items();
        let canned: Vec<(String, String)> = (0..10)
            .filter(|i| *i != 4)
            .map(|i| (format!("number {i}."), "(A)".to_string()))
            .collect();
        let err = administer(&Canned(canned), &inv, &PromptTemplate::default_template(), &AdministerOptions::default())
            .unwrap_err();
        match err {
            AdministerError::Gateway { item_id, source } => {
                assert_eq!(item_id, "i4");
                assert!(matches!(source, GatewayError::ReplayMiss { .. }));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn persona_prefix_and_explanations() {
        let inv = ten_items();
        let canned: Vec<(String, String)> = (0..10)
            .map(|i| (format!("number {i}."), format!("(A). Very Accurate\nBecause of reason {i}.")))
            .collect();
        struct Check(Canned);
        impl Complete for Check {
            fn model_name(&self) -> &str {
                "check"
            }
            fn complete(&self, prompt: &str) -> Result<RawCompletion, GatewayError> {
                assert!(prompt.starts_with("You are an open person.\n\nQuestion:"));
                assert!(prompt.contains("describes you and explain why."));
                self.0.complete(prompt)
            }
        }
        let options = AdministerOptions {
            persona_prefix: Some("You are an open person.".into()),
            explain: true,
            ..Default::default()
        };
        let responses = administer(&Check(Canned(canned)), &inv, &PromptTemplate::default_template(), &options).unwrap();
        assert_eq!(responses[3].parsed, Parsed::Choice(Choice::A));
        assert_eq!(responses[3].explanation.as_deref(), Some("Because of reason 3."));
    }
}
