use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{RatingSession, VignetteError};
use crate::induction::Polarity;
use crate::inventory::TraitDimension;
use crate::json::round4;

/// Whether the induced essay shows more or less of the trait than the
/// neutral one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Judgment {
    Increased,
    Decreased,
}

impl Judgment {
    pub fn inverted(self) -> Self {
        match self {
            Judgment::Increased => Judgment::Decreased,
            Judgment::Decreased => Judgment::Increased,
        }
    }

    /// The judgment that counts as success for a push in `polarity`.
    pub fn success_for(polarity: Polarity) -> Self {
        match polarity {
            Polarity::Positive => Judgment::Increased,
            Polarity::Negative => Judgment::Decreased,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub session_id: String,
    pub rater_id: String,
    pub item_id: String,
    pub judgment: Judgment,
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
}

struct StoreState {
    records: Vec<RatingRecord>,
    seen: HashSet<(String, String)>,
}

/// Append-only ratings log (one JSON record per line) that refuses a
/// second rating of the same item by the same rater.
pub struct RatingStore {
    path: PathBuf,
    state: Mutex<StoreState>,
}

impl RatingStore {
    pub fn open(path: &Path) -> Result<Self, VignetteError> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| VignetteError::file(path, e))?;
            let complete = match text.rfind('\n') {
                Some(i) => &text[..=i],
                None => "",
            };
            for (n, line) in complete.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: RatingRecord = serde_json::from_str(line)
                    .map_err(|e| VignetteError::file(path, format!("line {}: {e}", n + 1)))?;
                seen.insert((record.rater_id.clone(), record.item_id.clone()));
                records.push(record);
            }
        }
        Ok(RatingStore {
            path: path.to_path_buf(),
            state: Mutex::new(StoreState { records, seen }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> Vec<RatingRecord> {
        self.state.lock().expect("store poisoned").records.clone()
    }

    pub fn has_rater(&self, rater_id: &str) -> bool {
        let state = self.state.lock().expect("store poisoned");
        state.seen.iter().any(|(r, _)| r == rater_id)
    }

    /// Appends all records in a single write, or none of them if any
    /// (rater, item) pair is already present.
    pub fn append_all(&self, batch: &[RatingRecord]) -> Result<(), VignetteError> {
        let mut state = self.state.lock().expect("store poisoned");
        let mut fresh = HashSet::new();
        for r in batch {
            let key = (r.rater_id.clone(), r.item_id.clone());
            if state.seen.contains(&key) || !fresh.insert(key) {
                return Err(VignetteError::DuplicateRating {
                    rater_id: r.rater_id.clone(),
                    item_id: r.item_id.clone(),
                });
            }
        }
        let mut bytes = Vec::new();
        for r in batch {
            serde_json::to_writer(&mut bytes, r).expect("record serializes");
            bytes.push(b'\n');
        }
        let mut file = open_for_append(&self.path).map_err(|e| VignetteError::file(&self.path, e))?;
        file.write_all(&bytes)
            .and_then(|_| file.sync_data())
            .map_err(|e| VignetteError::file(&self.path, e))?;
        for r in batch {
            state.seen.insert((r.rater_id.clone(), r.item_id.clone()));
            state.records.push(r.clone());
        }
        Ok(())
    }
}

/// Opens for appending after cutting off a torn final line left by a crash.
fn open_for_append(path: &Path) -> std::io::Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
    let mut content = Vec::new();
    file.read_to_end(&mut content)?;
    if !content.is_empty() && !content.ends_with(b"\n") {
        let keep = content.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        file.set_len(keep as u64)?;
        file.seek(SeekFrom::End(0))?;
    }
    Ok(file)
}

/// Success count for one (dimension, polarity) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRate {
    pub dimension: TraitDimension,
    pub polarity: Polarity,
    pub successes: usize,
    pub total: usize,
}

impl CellRate {
    /// `None` when nobody rated the cell.
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.successes as f64 / self.total as f64)
    }

    pub fn failures(&self) -> usize {
        self.total - self.successes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessReport {
    pub session_id: String,
    pub n_ratings: usize,
    pub cells: Vec<CellRate>,
}

impl SuccessReport {
    pub fn cell(&self, dimension: TraitDimension, polarity: Polarity) -> &CellRate {
        self.cells
            .iter()
            .find(|c| c.dimension == dimension && c.polarity == polarity)
            .expect("every cell is present")
    }

    pub fn to_json(&self) -> Value {
        let cells: BTreeMap<String, Value> = self
            .cells
            .iter()
            .map(|c| {
                (
                    format!("{}{}", c.dimension, c.polarity),
                    json!({
                        "successes": c.successes,
                        "total": c.total,
                        "rate": c.rate().map(round4),
                        "undefined": c.total == 0,
                    }),
                )
            })
            .collect();
        json!({ "session_id": self.session_id, "n_ratings": self.n_ratings, "cells": cells })
    }
}

/// Share of ratings per cell that moved the trait in the induced direction.
pub fn success_rates(session: &RatingSession, ratings: &[RatingRecord]) -> Result<SuccessReport, VignetteError> {
    let mut cells: Vec<CellRate> = TraitDimension::ALL
        .iter()
        .flat_map(|&d| {
            [Polarity::Positive, Polarity::Negative].map(|polarity| CellRate {
                dimension: d,
                polarity,
                successes: 0,
                total: 0,
            })
        })
        .collect();
    for r in ratings {
        if r.session_id != session.id {
            return Err(VignetteError::WrongSession {
                expected: session.id.clone(),
                found: r.session_id.clone(),
            });
        }
        let c = session
            .comparison(&r.item_id)
            .ok_or_else(|| VignetteError::UnknownItem(r.item_id.clone()))?;
        let cell = cells
            .iter_mut()
            .find(|x| x.dimension == c.dimension && x.polarity == c.polarity)
            .expect("every cell is present");
        cell.total += 1;
        if r.judgment == Judgment::success_for(c.polarity) {
            cell.successes += 1;
        }
    }
    Ok(SuccessReport {
        session_id: session.id.clone(),
        n_ratings: ratings.len(),
        cells,
    })
}
