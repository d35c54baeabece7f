use super::{GatewayError, LevelRule, ScriptedSpec};
use crate::inventory::{Inventory, ItemKey, TraitDimension};
use crate::scoring::choice_for_score;

const CANNED_REPLY: &str = "I am not sure how to respond to that.";

struct KnownItem {
    rendered: String,
    dimension: TraitDimension,
    key: ItemKey,
}

/// Deterministic respondent that answers inventory items at configured
/// trait levels.
///
/// A prompt is an item when it contains the rendered statement
/// (`You <statement>.`) of an item in the bound inventory; the longest
/// matching statement wins. Items are answered with the option whose
/// keyed score equals the level of the item's dimension. Anything else is
/// answered from the canned replies, then `echo_portrait`, then a fixed
/// sentence.
pub struct ScriptedPersona {
    spec: ScriptedSpec,
    items: Vec<KnownItem>,
}

impl ScriptedPersona {
    pub fn new(spec: ScriptedSpec, inventory: Option<&Inventory>) -> Result<Self, GatewayError> {
        spec.validate()?;
        let mut items: Vec<KnownItem> = inventory
            .map(|inv| {
                inv.items()
                    .iter()
                    .map(|item| KnownItem {
                        rendered: item.rendered_statement(),
                        dimension: item.dimension,
                        key: item.key,
                    })
                    .collect()
            })
            .unwrap_or_default();
        items.sort_by_key(|i| std::cmp::Reverse(i.rendered.len()));
        Ok(ScriptedPersona { spec, items })
    }

    pub fn spec(&self) -> &ScriptedSpec {
        &self.spec
    }

    pub fn level(&self, dimension: TraitDimension) -> u8 {
        self.spec.levels[&dimension]
    }

    pub fn answer(&self, prompt: &str) -> Result<String, GatewayError> {
        if let Some(item) = self.items.iter().find(|i| prompt.contains(&i.rendered)) {
            let context = prompt.replacen(&item.rendered, " ", 1);
            let level = self
                .spec
                .rules
                .iter()
                .find(|rule| rule.dimension == item.dimension && rule_matches(rule, &context))
                .map(|rule| rule.level)
                .or_else(|| self.spec.levels.get(&item.dimension).copied())
                .ok_or_else(|| {
                    GatewayError::InvalidProfile(format!("no level for dimension {}", item.dimension))
                })?;
            let choice = choice_for_score(level, item.key).ok_or_else(|| {
                GatewayError::InvalidProfile(format!("level {level} outside 1..=5"))
            })?;
            return Ok(choice.answer_text());
        }
        if let Some(reply) = self.spec.replies.iter().find(|r| prompt.contains(&r.contains)) {
            return Ok(reply.text.clone());
        }
        Ok(self
            .spec
            .echo_portrait
            .clone()
            .unwrap_or_else(|| CANNED_REPLY.to_string()))
    }
}

fn words_of(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c.to_ascii_lowercase() } else { ' ' })
        .collect();
    format!(" {} ", cleaned.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn rule_matches(rule: &LevelRule, context: &str) -> bool {
    let haystack = words_of(context);
    rule.keywords.iter().any(|kw| {
        let needle = words_of(kw);
        !needle.trim().is_empty() && haystack.contains(&needle)
    })
}
