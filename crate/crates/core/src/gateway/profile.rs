use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::inventory::TraitDimension;

fn default_max_tokens() -> u32 {
    256
}

fn default_parallelism() -> usize {
    4
}

fn default_true() -> bool {
    true
}

/// Decoding parameters sent with every request. Temperature defaults to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            max_tokens: default_max_tokens(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    HttpCompletion,
    HttpChat,
    Scripted,
    Replay,
}

impl ProfileKind {
    pub fn is_http(self) -> bool {
        matches!(self, ProfileKind::HttpCompletion | ProfileKind::HttpChat)
    }
}

/// Canned reply for scripted profiles: any prompt containing `contains`
/// (and not matching an inventory item) is answered with `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedReply {
    pub contains: String,
    pub text: String,
}

/// Prompt-conditioned level override: when the non-item part of a prompt
/// contains any of `keywords` as a whole word, `dimension` is answered at
/// `level`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRule {
    pub dimension: TraitDimension,
    pub keywords: Vec<String>,
    pub level: u8,
}

/// Configuration of a scripted respondent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedSpec {
    pub levels: BTreeMap<TraitDimension, u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo_portrait: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replies: Vec<ScriptedReply>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<LevelRule>,
}

impl ScriptedSpec {
    pub fn with_levels(levels: [u8; 5]) -> Self {
        ScriptedSpec {
            levels: TraitDimension::ALL.iter().copied().zip(levels).collect(),
            echo_portrait: None,
            replies: Vec::new(),
            rules: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        for d in TraitDimension::ALL {
            match self.levels.get(&d) {
                Some(1..=5) => {}
                Some(l) => {
                    return Err(GatewayError::InvalidProfile(format!(
                        "scripted level for {d} must be in 1..=5, got {l}"
                    )))
                }
                None => {
                    return Err(GatewayError::InvalidProfile(format!(
                        "scripted levels missing dimension {d}"
                    )))
                }
            }
        }
        for rule in &self.rules {
            if !(1..=5).contains(&rule.level) {
                return Err(GatewayError::InvalidProfile(format!(
                    "rule level must be in 1..=5, got {}",
                    rule.level
                )));
            }
        }
        Ok(())
    }
}

/// Description of one text-generation backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub kind: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Model identifier sent to the provider; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    #[serde(default)]
    pub decoding: Decoding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Replay store path. Defaults to `<cache dir>/<name>.jsonl` for http kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    /// Whether http completions are appended to the store.
    #[serde(default = "default_true")]
    pub record: bool,
    /// For replay kinds: name of the profile whose recordings are replayed.
    /// When absent, records are matched on prompt alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scripted: Option<ScriptedSpec>,
}

impl ModelProfile {
    fn bare(name: &str, kind: ProfileKind) -> Self {
        ModelProfile {
            name: name.to_string(),
            kind,
            endpoint: None,
            remote_model: None,
            template_id: None,
            decoding: Decoding::default(),
            auth_env: None,
            parallelism: default_parallelism(),
            store: None,
            record: true,
            replay_of: None,
            scripted: None,
        }
    }

    pub fn scripted(name: &str, spec: ScriptedSpec) -> Self {
        ModelProfile {
            scripted: Some(spec),
            ..Self::bare(name, ProfileKind::Scripted)
        }
    }

    pub fn replay(name: &str, store: impl Into<PathBuf>) -> Self {
        ModelProfile {
            store: Some(store.into()),
            ..Self::bare(name, ProfileKind::Replay)
        }
    }

    pub fn http(name: &str, kind: ProfileKind, endpoint: &str, auth_env: &str) -> Self {
        ModelProfile {
            endpoint: Some(endpoint.to_string()),
            auth_env: Some(auth_env.to_string()),
            ..Self::bare(name, kind)
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let invalid = |msg: &str| Err(GatewayError::InvalidProfile(format!("{}: {msg}", self.name)));
        if self.name.trim().is_empty() {
            return invalid("profile name is empty");
        }
        if !(self.decoding.temperature >= 0.0 && self.decoding.temperature.is_finite()) {
            return invalid("temperature must be a finite value >= 0");
        }
        if self.decoding.max_tokens == 0 {
            return invalid("max_tokens must be positive");
        }
        if self.parallelism == 0 {
            return invalid("parallelism must be positive");
        }
        match self.kind {
            ProfileKind::HttpCompletion | ProfileKind::HttpChat => {
                if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                    return invalid("http profiles require an endpoint");
                }
                if self.auth_env.as_deref().is_none_or(|e| e.trim().is_empty()) {
                    return invalid("http profiles require auth_env");
                }
            }
            ProfileKind::Scripted => match &self.scripted {
                Some(spec) => spec.validate()?,
                None => return invalid("scripted profiles require a `scripted` section"),
            },
            ProfileKind::Replay => {
                if self.store.is_none() {
                    return invalid("replay profiles require a store path");
                }
            }
        }
        Ok(())
    }

    /// Loads a JSON array of profiles.
    pub fn load_all(path: &Path) -> Result<Vec<ModelProfile>, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            GatewayError::InvalidProfile(format!("cannot read profiles {}: {e}", path.display()))
        })?;
        let profiles: Vec<ModelProfile> = serde_json::from_str(&text).map_err(|e| {
            GatewayError::InvalidProfile(format!("cannot parse profiles {}: {e}", path.display()))
        })?;
        for p in &profiles {
            p.validate()?;
        }
        Ok(profiles)
    }

    /// Resolves a model argument: `scripted:levels=O,C,E,A,N[;echo=TEXT]`,
    /// `replay:PATH`, or the name of a profile in `profiles`.
    pub fn resolve(spec: &str, profiles: &[ModelProfile]) -> Result<ModelProfile, GatewayError> {
        if let Some(rest) = spec.strip_prefix("scripted:") {
            return parse_inline_scripted(rest);
        }
        if let Some(path) = spec.strip_prefix("replay:") {
            if path.is_empty() {
                return Err(GatewayError::InvalidProfile("replay: requires a store path".into()));
            }
            return Ok(ModelProfile::replay("replay", path));
        }
        profiles
            .iter()
            .find(|p| p.name == spec)
            .cloned()
            .ok_or_else(|| GatewayError::InvalidProfile(format!("unknown model profile {spec:?}")))
    }
}

fn parse_inline_scripted(rest: &str) -> Result<ModelProfile, GatewayError> {
    let mut spec = ScriptedSpec::with_levels([3; 5]);
    let mut saw_levels = false;
    for part in rest.split(';').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| {
            GatewayError::InvalidProfile(format!("malformed scripted option {part:?}"))
        })?;
        match key.trim() {
            "levels" => {
                let levels: Vec<u8> = value
                    .split(',')
                    .map(|v| v.trim().parse::<u8>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| GatewayError::InvalidProfile(format!("bad levels {value:?}")))?;
                let levels: [u8; 5] = levels.try_into().map_err(|_| {
                    GatewayError::InvalidProfile("levels needs five values in O,C,E,A,N order".into())
                })?;
                spec.levels = ScriptedSpec::with_levels(levels).levels;
                saw_levels = true;
            }
            "echo" => spec.echo_portrait = Some(value.to_string()),
            other => {
                return Err(GatewayError::InvalidProfile(format!("unknown scripted option {other:?}")))
            }
        }
    }
    if !saw_levels {
        return Err(GatewayError::InvalidProfile("scripted: requires levels=O,C,E,A,N".into()));
    }
    spec.validate()?;
    Ok(ModelProfile::scripted("scripted", spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_json_defaults() {
        let json = r#"[{"name":"gpt","kind":"http_completion","endpoint":"http://x/v1/completions","auth_env":"KEY"}]"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        std::fs::write(&path, json).unwrap();
        let profiles = ModelProfile::load_all(&path).unwrap();
        assert_eq!(profiles[0].decoding.temperature, 0.0);
        assert_eq!(profiles[0].parallelism, 4);
        assert!(profiles[0].record);
    }

    #[test]
    fn http_profiles_need_endpoint_and_credential_name() {
        let mut p = ModelProfile::http("m", ProfileKind::HttpChat, "http://x", "KEY");
        assert!(p.validate().is_ok());
        p.auth_env = None;
        assert!(p.validate().is_err());
        let mut p = ModelProfile::http("m", ProfileKind::HttpChat, "", "KEY");
        assert!(p.validate().is_err());
        p.endpoint = Some("http://x".into());
        p.decoding.temperature = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn inline_scripted() {
        let p = ModelProfile::resolve("scripted:levels=3,3,5,3,3;echo=P", &[]).unwrap();
        let spec = p.scripted.unwrap();
        assert_eq!(spec.levels[&TraitDimension::Extraversion], 5);
        assert_eq!(spec.echo_portrait.as_deref(), Some("P"));
        assert!(ModelProfile::resolve("scripted:levels=3,3,6,3,3", &[]).is_err());
        assert!(ModelProfile::resolve("scripted:levels=3,3", &[]).is_err());
        assert!(ModelProfile::resolve("scripted:echo=x", &[]).is_err());
    }

    #[test]
    fn inline_replay_and_named_lookup() {
        let p = ModelProfile::resolve("replay:fixtures/a.jsonl", &[]).unwrap();
        assert_eq!(p.kind, ProfileKind::Replay);
        assert_eq!(p.store.as_deref(), Some(Path::new("fixtures/a.jsonl")));
        let named = ModelProfile::scripted("mine", ScriptedSpec::with_levels([1, 2, 3, 4, 5]));
        assert_eq!(ModelProfile::resolve("mine", std::slice::from_ref(&named)).unwrap(), named);
        assert!(ModelProfile::resolve("other", &[named]).is_err());
    }
}
