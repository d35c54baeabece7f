use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Decoding, GatewayError};

/// One recorded completion; one JSON object per line in the store file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub key_hash: String,
    pub profile: String,
    pub prompt: String,
    pub text: String,
    pub decoding: Decoding,
}

/// Content hash over everything that can change a completion.
pub fn key_hash(profile: &str, decoding: &Decoding, prompt: &str) -> String {
    // serde_json::Value maps are sorted, so this is canonical.
    let canonical = serde_json::json!({
        "decoding": { "max_tokens": decoding.max_tokens, "temperature": decoding.temperature },
        "profile": profile,
        "prompt": prompt,
    });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    hex::encode(digest)
}

#[derive(Default)]
struct Index {
    by_key: HashMap<String, usize>,
    records: Vec<StoredRecord>,
}

/// Append-only completion log with an in-memory index.
///
/// Each record is committed with a single newline-terminated write followed
/// by `sync_data`; a trailing line without a newline is an interrupted
/// append and is dropped (and truncated away before the next append).
pub struct ReplayStore {
    path: Option<PathBuf>,
    index: RwLock<Index>,
    writer: Mutex<Option<File>>,
}

impl std::fmt::Debug for ReplayStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReplayStore")
            .field("path", &self.path)
            .field("records", &self.len())
            .finish()
    }
}

impl ReplayStore {
    pub fn in_memory() -> Self {
        ReplayStore {
            path: None,
            index: RwLock::new(Index::default()),
            writer: Mutex::new(None),
        }
    }

    /// Opens (or lazily creates on first append) the store at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref().to_path_buf();
        let mut index = Index::default();
        if path.exists() {
            let mut text = String::new();
            File::open(&path)
                .and_then(|mut f| f.read_to_string(&mut text))
                .map_err(|e| store_err(&path, e))?;
            let committed = match text.rfind('\n') {
                Some(end) => &text[..=end],
                None => "",
            };
            for (lineno, line) in committed.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: StoredRecord = serde_json::from_str(line).map_err(|e| {
                    GatewayError::Store(format!("{}:{}: {e}", path.display(), lineno + 1))
                })?;
                index.insert(record);
            }
        }
        Ok(ReplayStore {
            path: Some(path),
            index: RwLock::new(index),
            writer: Mutex::new(None),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("store index poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<StoredRecord> {
        let index = self.index.read().expect("store index poisoned");
        index.by_key.get(key).map(|&i| index.records[i].clone())
    }

    /// Finds recordings of `prompt`, optionally restricted to one profile and
    /// decoding. Returns an error when matching records disagree on the text.
    pub fn find_prompt(
        &self,
        prompt: &str,
        profile: Option<&str>,
        decoding: Option<&Decoding>,
    ) -> Result<Option<StoredRecord>, GatewayError> {
        let index = self.index.read().expect("store index poisoned");
        let mut found: Option<&StoredRecord> = None;
        for record in index.records.iter().filter(|r| {
            r.prompt == prompt
                && profile.is_none_or(|p| r.profile == p)
                && decoding.is_none_or(|d| r.decoding == *d)
        }) {
            match found {
                Some(prev) if prev.text != record.text => {
                    return Err(GatewayError::ReplayConflict {
                        key_hash: record.key_hash.clone(),
                    })
                }
                Some(_) => {}
                None => found = Some(record),
            }
        }
        Ok(found.cloned())
    }

    /// Records a completion. Re-recording an existing key is a no-op.
    pub fn append(&self, record: StoredRecord) -> Result<(), GatewayError> {
        let mut writer = self.writer.lock().expect("store writer poisoned");
        if self.get(&record.key_hash).is_some() {
            return Ok(());
        }
        if let Some(path) = &self.path {
            if writer.is_none() {
                *writer = Some(open_for_append(path)?);
            }
            let file = writer.as_mut().expect("writer opened above");
            let mut line = serde_json::to_string(&record)
                .map_err(|e| GatewayError::Store(e.to_string()))?;
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(|e| store_err(path, e))?;
            file.sync_data().map_err(|e| store_err(path, e))?;
        }
        self.index.write().expect("store index poisoned").insert(record);
        Ok(())
    }
}

impl Index {
    fn insert(&mut self, record: StoredRecord) {
        if self.by_key.contains_key(&record.key_hash) {
            return;
        }
        self.by_key.insert(record.key_hash.clone(), self.records.len());
        self.records.push(record);
    }
}

fn open_for_append(path: &Path) -> Result<File, GatewayError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| store_err(path, e))?;
    }
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .write(true)
        .truncate(false)
        .open(path)
        .map_err(|e| store_err(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| store_err(path, e))?;
    let committed = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if committed < bytes.len() {
        log::warn!("{}: dropping interrupted trailing record", path.display());
        file.set_len(committed as u64).map_err(|e| store_err(path, e))?;
    }
    file.seek(SeekFrom::Start(committed as u64))
        .map_err(|e| store_err(path, e))?;
    Ok(file)
}

fn store_err(path: &Path, e: std::io::Error) -> GatewayError {
    GatewayError::Store(format!("{}: {e}", path.display()))
}
