//! Psychometric item banks: trait dimensions, keyed statements and the
//! loaders for the JSON and CSV bank formats.

mod template;

pub use template::{PromptTemplate, TemplateError, OPTION_LABELS};

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One of the five Big Five factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraitDimension {
    Openness,
    Conscientiousness,
    Extraversion,
    Agreeableness,
    Neuroticism,
}

impl TraitDimension {
    /// All five dimensions in OCEAN order.
    pub const ALL: [TraitDimension; 5] = [
        TraitDimension::Openness,
        TraitDimension::Conscientiousness,
        TraitDimension::Extraversion,
        TraitDimension::Agreeableness,
        TraitDimension::Neuroticism,
    ];

    pub fn letter(self) -> char {
        match self {
            TraitDimension::Openness => 'O',
            TraitDimension::Conscientiousness => 'C',
            TraitDimension::Extraversion => 'E',
            TraitDimension::Agreeableness => 'A',
            TraitDimension::Neuroticism => 'N',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TraitDimension::Openness => "Openness",
            TraitDimension::Conscientiousness => "Conscientiousness",
            TraitDimension::Extraversion => "Extraversion",
            TraitDimension::Agreeableness => "Agreeableness",
            TraitDimension::Neuroticism => "Neuroticism",
        }
    }

    /// Position in OCEAN order, usable as an array index.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TraitDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for TraitDimension {
    type Err = InventoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "O" | "o" => Ok(TraitDimension::Openness),
            "C" | "c" => Ok(TraitDimension::Conscientiousness),
            "E" | "e" => Ok(TraitDimension::Extraversion),
            "A" | "a" => Ok(TraitDimension::Agreeableness),
            "N" | "n" => Ok(TraitDimension::Neuroticism),
            other => Err(InventoryError::UnknownDimension(other.to_string())),
        }
    }
}

impl Serialize for TraitDimension {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&self.letter())
    }
}

impl<'de> Deserialize<'de> for TraitDimension {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Direction in which agreement with a statement counts toward its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ItemKey {
    Positive,
    Negative,
}

impl ItemKey {
    pub fn sign(self) -> i8 {
        match self {
            ItemKey::Positive => 1,
            ItemKey::Negative => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self, InventoryError> {
        match sign {
            1 => Ok(ItemKey::Positive),
            -1 => Ok(ItemKey::Negative),
            other => Err(InventoryError::InvalidKey(other.to_string())),
        }
    }
}

impl FromStr for ItemKey {
    type Err = InventoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+1" | "1" | "+" => Ok(ItemKey::Positive),
            "-1" | "-" | "−1" => Ok(ItemKey::Negative),
            other => Err(InventoryError::InvalidKey(other.to_string())),
        }
    }
}

impl fmt::Display for ItemKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ItemKey::Positive => "+1",
            ItemKey::Negative => "-1",
        })
    }
}

impl Serialize for ItemKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.sign())
    }
}

impl<'de> Deserialize<'de> for ItemKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Int(n) => ItemKey::from_sign(n),
            Raw::Float(1.0) => Ok(ItemKey::Positive),
            Raw::Float(-1.0) => Ok(ItemKey::Negative),
            Raw::Float(x) => Err(InventoryError::InvalidKey(x.to_string())),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// A keyed self-description statement.
///
/// `statement` is stored without the leading "You " and without the
/// trailing period; templates add both when rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryItem {
    pub id: String,
    pub statement: String,
    #[serde(alias = "dim")]
    pub dimension: TraitDimension,
    pub key: ItemKey,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

impl InventoryItem {
    pub fn new(
        id: impl Into<String>,
        statement: impl Into<String>,
        dimension: TraitDimension,
        key: ItemKey,
    ) -> Self {
        InventoryItem {
            id: id.into(),
            statement: normalize_statement(&statement.into()),
            dimension,
            key,
            source: String::new(),
        }
    }

    /// The statement as it appears inside a rendered prompt: `You <statement>.`
    /// with the first letter of the statement lowercased.
    pub fn rendered_statement(&self) -> String {
        format!("You {}.", lowercase_first(&self.statement))
    }
}

/// Strips a leading "You " and trailing periods from a raw statement.
pub fn normalize_statement(raw: &str) -> String {
    let mut s = raw.trim();
    if s.get(..4).is_some_and(|p| p.eq_ignore_ascii_case("you ")) && s.len() > 4 {
        s = s[4..].trim_start();
    }
    s.trim_end_matches('.').trim_end().to_string()
}

pub(crate) fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Item counts per dimension and key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Balance {
    pub counts: BTreeMap<String, KeyCounts>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KeyCounts {
    pub positive: usize,
    pub negative: usize,
}

impl Balance {
    fn of(items: &[InventoryItem]) -> Self {
        let mut counts: BTreeMap<String, KeyCounts> = TraitDimension::ALL
            .iter()
            .map(|d| (d.letter().to_string(), KeyCounts::default()))
            .collect();
        for item in items {
            let entry = counts.entry(item.dimension.letter().to_string()).or_default();
            match item.key {
                ItemKey::Positive => entry.positive += 1,
                ItemKey::Negative => entry.negative += 1,
            }
        }
        Balance { counts }
    }

    pub fn get(&self, dimension: TraitDimension) -> KeyCounts {
        self.counts
            .get(&dimension.letter().to_string())
            .copied()
            .unwrap_or_default()
    }
}

impl fmt::Display for Balance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = TraitDimension::ALL
            .iter()
            .map(|d| {
                let c = self.get(*d);
                format!("{}:+{}/-{}", d.letter(), c.positive, c.negative)
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// An ordered, validated item bank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inventory {
    name: String,
    items: Vec<InventoryItem>,
    balance: Balance,
}

impl Inventory {
    /// Validates `items` and builds an inventory.
    pub fn new(name: impl Into<String>, items: Vec<InventoryItem>) -> Result<Self, InventoryError> {
        if items.is_empty() {
            return Err(InventoryError::Empty);
        }
        let mut seen = HashSet::new();
        let mut items = items;
        for item in &mut items {
            item.statement = normalize_statement(&item.statement);
            if item.id.trim().is_empty() {
                return Err(InventoryError::EmptyId);
            }
            if item.statement.is_empty() {
                return Err(InventoryError::EmptyStatement(item.id.clone()));
            }
            if !seen.insert(item.id.clone()) {
                return Err(InventoryError::DuplicateId(item.id.clone()));
            }
        }
        let balance = Balance::of(&items);
        Ok(Inventory {
            name: name.into(),
            items,
            balance,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn items(&self) -> &[InventoryItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn balance(&self) -> &Balance {
        &self.balance
    }

    pub fn get(&self, id: &str) -> Option<&InventoryItem> {
        self.items.iter().find(|item| item.id == id)
    }

    /// Items keyed to `dimension`, in file order.
    pub fn item_pool(&self, dimension: TraitDimension) -> Vec<&InventoryItem> {
        self.items
            .iter()
            .filter(|item| item.dimension == dimension)
            .collect()
    }

    /// Reorders items; used by permutation tests and shuffled administration.
    pub fn with_items_reordered(&self, order: &[usize]) -> Self {
        let items = order.iter().map(|&i| self.items[i].clone()).collect();
        Inventory {
            name: self.name.clone(),
            items,
            balance: self.balance.clone(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.items).expect("inventory items serialize")
    }
}

/// Item pool of `dimension` in `inventory`.
pub fn item_pool(inventory: &Inventory, dimension: TraitDimension) -> Vec<&InventoryItem> {
    inventory.item_pool(dimension)
}

/// Serialization format of an item bank file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InventoryFormat {
    Json,
    Csv,
}

impl InventoryFormat {
    /// Guesses the format from a file extension; anything but `.csv` is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InventoryFormat::Csv,
            _ => InventoryFormat::Json,
        }
    }
}

impl FromStr for InventoryFormat {
    type Err = InventoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(InventoryFormat::Json),
            "csv" => Ok(InventoryFormat::Csv),
            other => Err(InventoryError::Parse(format!("unknown inventory format {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("cannot read inventory {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("inventory parse error: {0}")]
    Parse(String),
    #[error("empty inventory")]
    Empty,
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("item with empty id")]
    EmptyId,
    #[error("item {0:?} has an empty statement")]
    EmptyStatement(String),
    #[error("unknown trait dimension {0:?} (expected one of O, C, E, A, N)")]
    UnknownDimension(String),
    #[error("item key must be +1 or -1, got {0:?}")]
    InvalidKey(String),
}

/// Loads and validates an item bank.
pub fn load_inventory(path: &Path, format: InventoryFormat) -> Result<Inventory, InventoryError> {
    let text = std::fs::read_to_string(path).map_err(|source| InventoryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("inventory")
        .to_string();
    let inventory = parse_inventory(&name, &text, format)?;
    log::debug!("loaded inventory {} ({} items; {})", name, inventory.len(), inventory.balance());
    Ok(inventory)
}

/// Parses an item bank held in memory.
pub fn parse_inventory(
    name: &str,
    text: &str,
    format: InventoryFormat,
) -> Result<Inventory, InventoryError> {
    if text.trim().is_empty() {
        return Err(InventoryError::Empty);
    }
    let items = match format {
        InventoryFormat::Json => parse_json_items(text)?,
        InventoryFormat::Csv => parse_csv_items(text)?,
    };
    Inventory::new(name, items)
}

#[derive(Debug, Deserialize)]
struct JsonRow {
    id: String,
    statement: String,
    #[serde(alias = "dim")]
    dimension: String,
    key: serde_json::Value,
    #[serde(default)]
    source: Option<String>,
}

fn parse_json_items(text: &str) -> Result<Vec<InventoryItem>, InventoryError> {
    let rows: Vec<JsonRow> =
        serde_json::from_str(text).map_err(|e| InventoryError::Parse(e.to_string()))?;
    rows.into_iter()
        .map(|row| {
            let key = match &row.key {
                serde_json::Value::Number(n) => match n.as_i64() {
                    Some(sign) => ItemKey::from_sign(sign)?,
                    None => return Err(InventoryError::InvalidKey(n.to_string())),
                },
                serde_json::Value::String(s) => s.parse()?,
                other => return Err(InventoryError::InvalidKey(other.to_string())),
            };
            Ok(InventoryItem {
                id: row.id,
                statement: row.statement,
                dimension: row.dimension.parse()?,
                key,
                source: row.source.unwrap_or_default(),
            })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    id: String,
    statement: String,
    dimension: String,
    key: String,
    #[serde(default)]
    source: Option<String>,
}

fn parse_csv_items(text: &str) -> Result<Vec<InventoryItem>, InventoryError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut items = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(|e| InventoryError::Parse(e.to_string()))?;
        items.push(InventoryItem {
            id: row.id,
            statement: row.statement,
            dimension: row.dimension.parse()?,
            key: row.key.parse()?,
            source: row.source.unwrap_or_default(),
        });
    }
    Ok(items)
}

/// Writes items in the CSV interchange format (`id,statement,dimension,key`).
pub fn to_csv(inventory: &Inventory) -> String {
    let mut out = String::from("id,statement,dimension,key\n");
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for item in inventory.items() {
        writer
            .write_record([
                item.id.as_str(),
                item.statement.as_str(),
                &item.dimension.letter().to_string(),
                &item.key.to_string(),
            ])
            .expect("in-memory csv write");
    }
    let body = writer.into_inner().expect("in-memory csv flush");
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    out
}

/// The bundled 120-statement bank (24 statements per dimension).
pub fn bundled_mpi120() -> Inventory {
    parse_inventory("mpi-120-fixture", include_str!("../../data/mpi120.json"), InventoryFormat::Json)
        .expect("bundled inventory is valid")
}

/// The bundled 15-statement short bank (3 statements per dimension).
pub fn bundled_short15() -> Inventory {
    parse_inventory("short-15-fixture", include_str!("../../data/short15.json"), InventoryFormat::Json)
        .expect("bundled inventory is valid")
}
