use std::path::{Path, PathBuf};

use super::{success_rates, Essay, RatingSession, RatingStore, SuccessReport, VignetteError};
use crate::json::write_json_file;

/// A study directory holding `essays.json`, `session.json`,
/// `ratings.jsonl` and `report.json`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionDir {
    root: PathBuf,
}

impl SessionDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SessionDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Session id derived from the directory name.
    pub fn default_id(&self) -> String {
        self.root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .filter(|n| !n.is_empty())
            .unwrap_or_else(|| "session".to_string())
    }

    pub fn essays_path(&self) -> PathBuf {
        self.root.join("essays.json")
    }

    pub fn session_path(&self) -> PathBuf {
        self.root.join("session.json")
    }

    pub fn ratings_path(&self) -> PathBuf {
        self.root.join("ratings.jsonl")
    }

    pub fn report_path(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn load_essays(&self) -> Result<Vec<Essay>, VignetteError> {
        let path = self.essays_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        read_json(&path)
    }

    pub fn save_essays(&self, essays: &[Essay]) -> Result<(), VignetteError> {
        let path = self.essays_path();
        let value = serde_json::to_value(essays).expect("essays serialize");
        write_json_file(&path, &value).map_err(|e| VignetteError::file(&path, e))
    }

    pub fn has_session(&self) -> bool {
        self.session_path().exists()
    }

    pub fn load_session(&self) -> Result<RatingSession, VignetteError> {
        let path = self.session_path();
        if !path.exists() {
            return Err(VignetteError::UnknownSession(self.default_id()));
        }
        read_json(&path)
    }

    pub fn save_session(&self, session: &RatingSession) -> Result<(), VignetteError> {
        let path = self.session_path();
        let value = serde_json::to_value(session).expect("session serializes");
        write_json_file(&path, &value).map_err(|e| VignetteError::file(&path, e))
    }

    pub fn open_ratings(&self) -> Result<RatingStore, VignetteError> {
        RatingStore::open(&self.ratings_path())
    }

    /// Recomputes rates from the ratings log and writes `report.json`.
    pub fn write_report(&self) -> Result<SuccessReport, VignetteError> {
        let session = self.load_session()?;
        let ratings = self.open_ratings()?.records();
        let report = success_rates(&session, &ratings)?;
        let path = self.report_path();
        write_json_file(&path, &report.to_json()).map_err(|e| VignetteError::file(&path, e))?;
        Ok(report)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, VignetteError> {
    let text = std::fs::read_to_string(path).map_err(|e| VignetteError::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| VignetteError::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vignette::session::tests::full_essays;
    use crate::vignette::{build_questionnaire, Judgment, RatingRecord};

    #[test]
    fn round_trip_and_report_is_reproducible() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = SessionDir::new(tmp.path().join("study-1"));
        assert_eq!(dir.default_id(), "study-1");
        assert!(dir.load_essays().unwrap().is_empty());
        assert!(matches!(dir.load_session(), Err(VignetteError::UnknownSession(_))));

        let essays = full_essays();
        dir.save_essays(&essays).unwrap();
        assert_eq!(dir.load_essays().unwrap(), essays);
        let session = build_questionnaire(&dir.default_id(), &essays, 11).unwrap();
        dir.save_session(&session).unwrap();
        assert_eq!(dir.load_session().unwrap(), session);

        let store = dir.open_ratings().unwrap();
        let batch: Vec<_> = session
            .comparisons
            .iter()
            .map(|c| RatingRecord {
                session_id: session.id.clone(),
                rater_id: "r".into(),
                item_id: c.item_id.clone(),
                judgment: Judgment::Increased,
                ts: 1,
            })
            .collect();
        store.append_all(&batch).unwrap();
        dir.write_report().unwrap();
        let first = std::fs::read(dir.report_path()).unwrap();
        dir.write_report().unwrap();
        assert_eq!(std::fs::read(dir.report_path()).unwrap(), first);
    }
}
