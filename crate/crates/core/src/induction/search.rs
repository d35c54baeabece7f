use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{json, Value};

use super::{article, naive_prompt, InductionError, InductionTarget, Method, PersonalityPrompt, Polarity, TraitLexicon};
use crate::gateway::Complete;
use crate::inventory::{Inventory, PromptTemplate, TraitDimension};
use crate::json::round4;
use crate::scoring::{administer, score_responses, AdministerOptions};

/// Induced score of one candidate word.
#[derive(Debug, Clone, PartialEq)]
pub struct WordScore {
    pub word: String,
    /// Target-dimension mean; `None` when no answer in it parsed.
    pub mean: Option<f64>,
    pub n_valid: usize,
    pub n_invalid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordSearchResult {
    pub target: InductionTarget,
    pub k: usize,
    pub selected: Vec<String>,
    /// One row per candidate, in input order.
    pub table: Vec<WordScore>,
}

impl WordSearchResult {
    pub fn to_json(&self) -> Value {
        let order = rank_order(&self.table, self.target.polarity);
        let mut rank = vec![0usize; self.table.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r + 1;
        }
        let table: Vec<Value> = self
            .table
            .iter()
            .zip(rank)
            .map(|(row, rank)| {
                json!({
                    "word": row.word,
                    "mean": row.mean.map(round4),
                    "n_valid": row.n_valid,
                    "n_invalid": row.n_invalid,
                    "rank": rank,
                })
            })
            .collect();
        json!({
            "dimension": self.target.dimension,
            "polarity": self.target.polarity,
            "k": self.k,
            "selected": self.selected,
            "table": table,
        })
    }
}

pub fn persona_prefix(word: &str) -> String {
    format!("You are {} {word} person.", article(word))
}

/// Candidate indices best first: highest mean for positive targets, lowest
/// for negative ones. Undefined scores go last and ties keep input order.
fn rank_order(table: &[WordScore], polarity: Polarity) -> Vec<usize> {
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| {
        let key = |i: usize| {
            table[i].mean.map(|m| match polarity {
                Polarity::Positive => -m,
                Polarity::Negative => m,
            })
        };
        match (key(a), key(b)) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
    });
    order
}

/// Top-k words of a finished score table.
pub fn rank_words(table: &[WordScore], k: usize, polarity: Polarity) -> Result<Vec<String>, InductionError> {
    check_k(k, table.len())?;
    if table.iter().all(|row| row.mean.is_none()) {
        return Err(InductionError::AllInvalid);
    }
    Ok(rank_order(table, polarity)
        .into_iter()
        .take(k)
        .map(|i| table[i].word.clone())
        .collect())
}

fn check_k(k: usize, candidates: usize) -> Result<(), InductionError> {
    if k == 0 {
        return Err(InductionError::ZeroK);
    }
    if k > candidates {
        return Err(InductionError::KTooLarge { k, candidates });
    }
    Ok(())
}

/// Scores each candidate on its own and keeps the k best for a positive
/// push on `dimension`.
pub fn word_search(
    model: &dyn Complete,
    inventory: &Inventory,
    dimension: TraitDimension,
    candidates: &[String],
    k: usize,
) -> Result<WordSearchResult, InductionError> {
    word_search_for(model, inventory, InductionTarget::new(dimension, Polarity::Positive), candidates, k)
}

pub fn word_search_for(
    model: &dyn Complete,
    inventory: &Inventory,
    target: InductionTarget,
    candidates: &[String],
    k: usize,
) -> Result<WordSearchResult, InductionError> {
    check_k(k, candidates.len())?;
    if inventory.item_pool(target.dimension).is_empty() {
        return Err(InductionError::Invalid(format!(
            "inventory {} has no items for {}",
            inventory.name(),
            target.dimension
        )));
    }
    let template = PromptTemplate::default_template();
    let score_one = |word: &String| -> Result<WordScore, InductionError> {
        let options = AdministerOptions {
            persona_prefix: Some(persona_prefix(word)),
            explain: false,
            // Unparseable answers only shrink the sample here.
            max_invalid_fraction: 1.0,
        };
        let responses = administer(model, inventory, &template, &options)
            .map_err(|source| InductionError::Administer { word: word.clone(), source })?;
        let report = score_responses(model.model_name(), &responses, inventory)
            .expect("administered responses match the inventory");
        let t = report.trait_report(target.dimension);
        Ok(WordScore {
            word: word.clone(),
            mean: t.mean,
            n_valid: t.n_valid,
            n_invalid: t.n_invalid,
        })
    };

    let slots: Vec<Mutex<Option<Result<WordScore, InductionError>>>> =
        candidates.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = model.parallelism().clamp(1, candidates.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= candidates.len() {
                    break;
                }
                let row = score_one(&candidates[i]);
                *slots[i].lock().expect("slot poisoned") = Some(row);
            });
        }
    });
    let table = slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("slot poisoned").expect("every candidate scored"))
        .collect::<Result<Vec<_>, _>>()?;
    let selected = rank_words(&table, k, target.polarity)?;
    Ok(WordSearchResult { target, k, selected, table })
}

fn join_words(words: &[String]) -> String {
    match words {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

/// The words baseline as a prompt record: "You are a/an w1, w2, and w3 person."
pub fn words_induction(
    model: &dyn Complete,
    inventory: &Inventory,
    target: InductionTarget,
    lexicon: &TraitLexicon,
    k: usize,
) -> Result<(PersonalityPrompt, WordSearchResult), InductionError> {
    // Negative pushes search the negative adjectives when there are any.
    let candidates = match target.polarity {
        Polarity::Negative if !lexicon.negative(target.dimension).is_empty() => lexicon.negative(target.dimension),
        _ => lexicon.candidates(target.dimension),
    };
    let result = word_search_for(model, inventory, target, candidates, k)?;
    let joined = join_words(&result.selected);
    let naive_text = naive_prompt(target, lexicon).unwrap_or_default();
    let prompt = PersonalityPrompt {
        target,
        method: Method::Words,
        naive_text,
        keywords: result.selected.clone(),
        portrait: String::new(),
        final_prefix: format!("You are {} {joined} person.", article(&joined)),
    };
    Ok((prompt, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{GatewayError, RawCompletion};
    use crate::inventory::{InventoryItem, ItemKey};
    use crate::scoring::choice_for_score;
    use proptest::prelude::*;
    use std::collections::HashMap;

    /// Respondent whose target-dimension mean is planted per persona word:
    /// a planted total `s` over ten items is spread as evenly as possible.
    struct Planted {
        inventory: Inventory,
        totals: HashMap<String, u32>,
    }

    const ITEMS: u32 = 10;

    impl Planted {
        fn new(table: &[(&str, u32)]) -> Self {
            let items = (0..ITEMS)
                .map(|i| {
                    let key = if i % 3 == 0 { ItemKey::Negative } else { ItemKey::Positive };
                    InventoryItem::new(format!("e{i}"), format!("enjoy activity number {i}"), TraitDimension::Extraversion, key)
                })
                .collect();
            Planted {
                inventory: Inventory::new("planted", items).unwrap(),
                totals: table.iter().map(|(w, s)| (w.to_string(), *s)).collect(),
            }
        }
    }

    impl Complete for Planted {
        fn model_name(&self) -> &str {
            "planted"
        }
        fn complete(&self, prompt: &str) -> Result<RawCompletion, GatewayError> {
            let total = self
                .totals
                .iter()
                .find(|(w, _)| prompt.starts_with(&persona_prefix(w)))
                .map(|(_, t)| t)
                .expect("prompt starts with a planted persona");
            let idx = self.inventory.items().iter().position(|i| prompt.contains(&i.rendered_statement())).unwrap() as u32;
            let base = total / ITEMS;
            let score = base + u32::from(idx < total % ITEMS);
            let item = &self.inventory.items()[idx as usize];
            let choice = choice_for_score(score as u8, item.key).unwrap();
            Ok(RawCompletion { prompt: prompt.into(), text: choice.answer_text(), model: "planted".into(), cached: false })
        }
        fn parallelism(&self) -> usize {
            4
        }
    }

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn planted_example_with_tie() {
        let planted = Planted::new(&[("w1", 42), ("w2", 30), ("w3", 48), ("w4", 39), ("w5", 48)]);
        let result = word_search(&planted, &planted.inventory, TraitDimension::Extraversion, &words(&["w1", "w2", "w3", "w4", "w5"]), 3).unwrap();
        assert_eq!(result.selected, ["w3", "w5", "w1"]);
        assert_eq!(result.table[0].mean, Some(4.2));
        assert_eq!(result.table[3].mean, Some(3.9));
        let json = result.to_json();
        assert_eq!(json["table"][2]["rank"], 1);
        assert_eq!(json["table"][1]["rank"], 5);
    }

    #[test]
    fn negative_targets_prefer_low_scores() {
        let planted = Planted::new(&[("w1", 42), ("w2", 30), ("w3", 12)]);
        let target = InductionTarget::new(TraitDimension::Extraversion, Polarity::Negative);
        let result = word_search_for(&planted, &planted.inventory, target, &words(&["w1", "w2", "w3"]), 2).unwrap();
        assert_eq!(result.selected, ["w3", "w2"]);
    }

    #[test]
    fn parameter_guards() {
        let planted = Planted::new(&[("w1", 42)]);
        let inv = &planted.inventory;
        let err = word_search(&planted, inv, TraitDimension::Extraversion, &words(&["w1"]), 0).unwrap_err();
        assert_eq!(err.to_string(), "k must be ≥1");
        assert!(matches!(
            word_search(&planted, inv, TraitDimension::Extraversion, &words(&["w1"]), 2),
            Err(InductionError::KTooLarge { k: 2, candidates: 1 })
        ));
        assert_eq!(word_search(&planted, inv, TraitDimension::Extraversion, &words(&["w1"]), 1).unwrap().selected, ["w1"]);
        assert!(word_search(&planted, inv, TraitDimension::Openness, &words(&["w1"]), 1).is_err());
    }

    #[test]
    fn all_undefined_is_an_error() {
        let table = vec![
            WordScore { word: "a".into(), mean: None, n_valid: 0, n_invalid: 3 },
            WordScore { word: "b".into(), mean: None, n_valid: 0, n_invalid: 3 },
        ];
        assert!(matches!(rank_words(&table, 1, Polarity::Positive), Err(InductionError::AllInvalid)));
        let mut partial = table.clone();
        partial[1].mean = Some(1.0);
        assert_eq!(rank_words(&partial, 2, Polarity::Positive).unwrap(), ["b", "a"]);
    }

    #[test]
    fn words_prompt_text() {
        assert_eq!(join_words(&words(&["a"])), "a");
        assert_eq!(join_words(&words(&["a", "b"])), "a and b");
        assert_eq!(join_words(&words(&["outgoing", "bold", "lively"])), "outgoing, bold, and lively");
        assert_eq!(persona_prefix("outgoing"), "You are an outgoing person.");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn matches_brute_force(totals in prop::collection::vec(10u32..=50, 10)) {
            let names: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
            let table: Vec<(&str, u32)> = names.iter().map(|n| n.as_str()).zip(totals.iter().copied()).collect();
            let planted = Planted::new(&table);
            let result = word_search(&planted, &planted.inventory, TraitDimension::Extraversion, &names, 3).unwrap();
            // Brute force: every 3-subset ordered by (total desc, index asc); keep the best.
            let mut best: Option<Vec<usize>> = None;
            for a in 0..10 { for b in 0..10 { for c in 0..10 {
                if a == b || b == c || a == c { continue; }
                let pick = vec![a, b, c];
                let sorted = pick.windows(2).all(|w| (totals[w[1]], std::cmp::Reverse(w[1])) < (totals[w[0]], std::cmp::Reverse(w[0])));
                let dominated = (0..10).any(|o| !pick.contains(&o) && (totals[o], std::cmp::Reverse(o)) > (totals[c], std::cmp::Reverse(c)));
                if sorted && !dominated { best = Some(pick); }
            }}}
            let expected: Vec<String> = best.unwrap().into_iter().map(|i| names[i].clone()).collect();
            prop_assert_eq!(result.selected, expected);
        }
    }
}
