//! Canonical JSON output: sorted keys, four-decimal floats, trailing newline.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

/// Rounds to four decimals, the precision used in every written report.
pub fn round4(x: f64) -> f64 {
    let r = (x * 10_000.0).round() / 10_000.0;
    // Avoid emitting "-0.0".
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Recursively sorts object keys. `serde_json::Map` is a BTreeMap unless
/// `preserve_order` is enabled somewhere in the build, so this keeps the
/// output canonical either way.
pub fn canonicalize(value: &Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k.clone(), canonicalize(v))).collect())
        }
        Value::Array(items) => Value::Array(items.iter().map(canonicalize).collect()),
        other => other.clone(),
    }
}

pub fn to_canonical_string(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(&canonicalize(value)).expect("JSON values serialize");
    text.push('\n');
    text
}

/// Writes canonical JSON via a temporary sibling and a rename, so readers
/// never observe a half-written file.
pub fn write_json_file(path: &Path, value: &Value) -> std::io::Result<()> {
    write_atomic(path, to_canonical_string(value).as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
