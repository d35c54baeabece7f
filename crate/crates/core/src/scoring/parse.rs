//! Extraction of a Likert choice from free-form completion text.
//!
//! Precedence, highest first:
//! 1. A letter token in the opening window (first line, first 120 chars):
//!    `(X)` forms are considered before bare `X.`, `X)` and standalone `X`.
//! 2. A full option label anywhere in the text, case-insensitively.
//! 3. Otherwise invalid.
//!
//! Two different letters (or labels) at the same level make the answer
//! ambiguous rather than picking one.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::Choice;

const WINDOW_CHARS: usize = 120;

/// Outcome of parsing one completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parsed {
    Choice(Choice),
    Invalid(String),
}

impl Parsed {
    pub fn choice(&self) -> Option<Choice> {
        match self {
            Parsed::Choice(c) => Some(*c),
            Parsed::Invalid(_) => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Parsed::Choice(_))
    }
}

/// A parsed choice together with whatever text followed it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedAnswer {
    pub parsed: Parsed,
    pub explanation: Option<String>,
}

fn bracketed() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(([A-E])\)").expect("valid regex"))
}

fn standalone() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b([A-E])\b[.)]?").expect("valid regex"))
}

pub fn parse_choice(raw: &str, option_labels: &[String]) -> Parsed {
    parse_answer(raw, option_labels).parsed
}

/// Parses a completion and captures the text after the matched token
/// (minus the option label when it directly follows) as the explanation.
pub fn parse_answer(raw: &str, option_labels: &[String]) -> ParsedAnswer {
    let text = raw.trim();
    let window_end = text
        .char_indices()
        .take_while(|&(_, c)| c != '\n')
        .nth(WINDOW_CHARS)
        .map_or_else(|| text.find('\n').unwrap_or(text.len()), |(i, _)| i);
    let window = &text[..window_end];

    for re in [bracketed(), standalone()] {
        match unique_letter(re, window) {
            Tier::None => continue,
            Tier::Ambiguous => return invalid("ambiguous"),
            Tier::One(choice, end) => {
                let explanation = explanation_after(&text[end..], choice, option_labels);
                return ParsedAnswer {
                    parsed: Parsed::Choice(choice),
                    explanation,
                };
            }
        }
    }

    let lower = text.to_lowercase();
    let mut found: Option<(Choice, usize)> = None;
    for (choice, label) in Choice::ALL.iter().zip(option_labels) {
        let needle = label.trim().to_lowercase();
        if needle.is_empty() {
            continue;
        }
        if let Some(pos) = lower.find(&needle) {
            match found {
                Some((prev, _)) if prev != *choice => return invalid("ambiguous"),
                _ => found = Some((*choice, pos + needle.len())),
            }
        }
    }
    match found {
        // `lower` can differ from `text` in byte length for non-ASCII input,
        // so the explanation is only taken when the offsets line up.
        Some((choice, end)) => ParsedAnswer {
            parsed: Parsed::Choice(choice),
            explanation: (lower.len() == text.len())
                .then(|| clean_explanation(&text[end..]))
                .flatten(),
        },
        None => invalid("no match"),
    }
}

enum Tier {
    None,
    Ambiguous,
    One(Choice, usize),
}

fn unique_letter(re: &Regex, window: &str) -> Tier {
    let mut result: Option<(Choice, usize)> = None;
    for caps in re.captures_iter(window) {
        let letter = caps[1].chars().next().expect("one letter captured");
        let choice = Choice::from_letter(letter).expect("regex limits letters to A-E");
        let end = caps.get(0).expect("whole match").end();
        match result {
            Some((prev, _)) if prev != choice => return Tier::Ambiguous,
            Some(_) => {}
            None => result = Some((choice, end)),
        }
    }
    match result {
        Some((choice, end)) => Tier::One(choice, end),
        None => Tier::None,
    }
}

fn invalid(reason: &str) -> ParsedAnswer {
    ParsedAnswer {
        parsed: Parsed::Invalid(reason.to_string()),
        explanation: None,
    }
}

fn explanation_after(rest: &str, choice: Choice, option_labels: &[String]) -> Option<String> {
    let rest = rest.trim_start_matches(|c: char| c == '.' || c == ':' || c == ')' || c.is_whitespace());
    let label = option_labels.get(choice.index()).map(|l| l.trim()).unwrap_or_default();
    let rest = match rest.get(..label.len()) {
        Some(head) if !label.is_empty() && head.eq_ignore_ascii_case(label) => &rest[label.len()..],
        _ => rest,
    };
    clean_explanation(rest)
}

fn clean_explanation(rest: &str) -> Option<String> {
    let rest = rest
        .trim_start_matches(|c: char| matches!(c, '.' | ',' | ':' | ';' | '-' | ')') || c.is_whitespace())
        .trim_end();
    (!rest.is_empty()).then(|| rest.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::OPTION_LABELS;

    fn labels() -> Vec<String> {
        OPTION_LABELS.iter().map(|s| s.to_string()).collect()
    }

    fn parse(s: &str) -> Parsed {
        parse_choice(s, &labels())
    }

    #[test]
    fn documented_forms() {
        assert_eq!(parse("(B). Moderately Accurate"), Parsed::Choice(Choice::B));
        assert_eq!(parse("I think the best description of myself is option C"), Parsed::Choice(Choice::C));
        assert_eq!(parse("Neither accurate nor inaccurate, I suppose."), Parsed::Choice(Choice::C));
        assert_eq!(parse("I cannot answer this."), Parsed::Invalid("no match".into()));
    }

    #[test]
    fn ambiguity_is_invalid() {
        assert_eq!(parse("(A) or (B)"), Parsed::Invalid("ambiguous".into()));
        assert_eq!(parse("Somewhere between B and D"), Parsed::Invalid("ambiguous".into()));
        assert_eq!(parse("Very accurate, or maybe very inaccurate"), Parsed::Invalid("ambiguous".into()));
        // Bracketed form outranks a stray capital later in the window.
        assert_eq!(parse("(A). Very Accurate. A lot of the time."), Parsed::Choice(Choice::A));
    }

    #[test]
    fn explanation_follows_choice() {
        let answer = parse_answer(
            "(A). Very Accurate\nI have a very active imagination and often come up with creative ideas.",
            &labels(),
        );
        assert_eq!(answer.parsed, Parsed::Choice(Choice::A));
        assert_eq!(
            answer.explanation.as_deref(),
            Some("I have a very active imagination and often come up with creative ideas.")
        );
        let bare = parse_answer("(C)", &labels());
        assert_eq!(bare.explanation, None);
    }

    #[test]
    fn empty_and_unicode_inputs_do_not_panic() {
        assert_eq!(parse(""), Parsed::Invalid("no match".into()));
        assert_eq!(parse("   \n  "), Parsed::Invalid("no match".into()));
        assert!(matches!(parse("Ünïcödé · very accurate ✓"), Parsed::Choice(Choice::A)));
        let long = format!("{}(B)", "x".repeat(500));
        // The bracket sits outside the opening window and no label matches.
        assert_eq!(parse(&long), Parsed::Invalid("no match".into()));
    }

    #[test]
    fn lowercase_letters_are_not_choices() {
        assert_eq!(parse("a b c"), Parsed::Invalid("no match".into()));
    }
}
