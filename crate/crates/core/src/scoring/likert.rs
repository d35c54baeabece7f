use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::inventory::{ItemKey, OPTION_LABELS};

/// One of the five Likert options, (A) "Very Accurate" through (E) "Very Inaccurate".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    C,
    D,
    E,
}

impl Choice {
    pub const ALL: [Choice; 5] = [Choice::A, Choice::B, Choice::C, Choice::D, Choice::E];

    pub fn letter(self) -> char {
        (b'A' + self.index() as u8) as char
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_letter(letter: char) -> Option<Self> {
        match letter {
            'A' => Some(Choice::A),
            'B' => Some(Choice::B),
            'C' => Some(Choice::C),
            'D' => Some(Choice::D),
            'E' => Some(Choice::E),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        OPTION_LABELS[self.index()]
    }

    /// The mirror option: A↔E, B↔D, C fixed.
    pub fn inverted(self) -> Self {
        Choice::ALL[4 - self.index()]
    }

    /// The answer line a respondent would give, e.g. `(B). Moderately Accurate`.
    pub fn answer_text(self) -> String {
        format!("({}). {}", self.letter(), self.label())
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Choice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Choice::from_letter(c.to_ascii_uppercase()).ok_or_else(|| s.to_string()),
            _ => Err(s.to_string()),
        }
    }
}

/// Scores a choice under an item key: A..E map to 5..1 for positively keyed
/// items and to 1..5 for negatively keyed ones.
pub fn item_score(choice: Choice, key: ItemKey) -> u8 {
    let position = choice.index() as u8;
    match key {
        ItemKey::Positive => 5 - position,
        ItemKey::Negative => 1 + position,
    }
}

/// The option whose score under `key` equals `score`.
pub fn choice_for_score(score: u8, key: ItemKey) -> Option<Choice> {
    Choice::ALL.into_iter().find(|&c| item_score(c, key) == score)
}
