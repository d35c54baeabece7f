//! Uniform access to text-generation backends.
//!
//! A [`Gateway`] wraps one [`ModelProfile`]: remote completion or chat
//! endpoints (with retries and a record/replay cache), a scripted
//! respondent, or a pure replay of a recorded store. Everything that
//! consumes model output goes through the [`Complete`] trait so callers
//! and tests can substitute their own doubles.

mod http;
mod profile;
mod scripted;
mod store;

pub use http::{
    network_requests_sent, HttpResponse, NetworkTransport, RetryPolicy, Transport, TransportError,
};
pub use profile::{Decoding, LevelRule, ModelProfile, ProfileKind, ScriptedReply, ScriptedSpec};
pub use scripted::ScriptedPersona;
pub use store::{key_hash, ReplayStore, StoredRecord};

use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::Inventory;

/// One model answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub prompt: String,
    pub text: String,
    pub model: String,
    pub cached: bool,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid model profile: {0}")]
    InvalidProfile(String),
    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),
    #[error("endpoint unreachable after {attempts} attempts: {message}")]
    Unreachable { attempts: u32, message: String },
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("cannot decode provider response: {0}")]
    Decode(String),
    #[error("replay miss for profile {profile:?} (prompt hash {key_hash})")]
    ReplayMiss { profile: String, key_hash: String },
    #[error("replay store holds conflicting answers for one prompt ({key_hash})")]
    ReplayConflict { key_hash: String },
    #[error("replay store error: {0}")]
    Store(String),
}

/// Anything that turns a prompt into a completion.
pub trait Complete: Send + Sync {
    fn model_name(&self) -> &str;

    fn complete(&self, prompt: &str) -> Result<RawCompletion, GatewayError>;

    /// Upper bound on useful concurrent calls.
    fn parallelism(&self) -> usize {
        1
    }
}

impl<T: Complete + ?Sized> Complete for &T {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn complete(&self, prompt: &str) -> Result<RawCompletion, GatewayError> {
        (**self).complete(prompt)
    }
    fn parallelism(&self) -> usize {
        (**self).parallelism()
    }
}

impl<T: Complete + ?Sized> Complete for Box<T> {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn complete(&self, prompt: &str) -> Result<RawCompletion, GatewayError> {
        (**self).complete(prompt)
    }
    fn parallelism(&self) -> usize {
        (**self).parallelism()
    }
}

/// Construction options shared by all profiles.
#[derive(Clone)]
pub struct GatewayOptions {
    /// Inventory a scripted respondent recognises items from.
    pub inventory: Option<Inventory>,
    /// Default directory for recorded stores of http profiles.
    pub cache_dir: PathBuf,
    pub retry: RetryPolicy,
    pub request_timeout: Duration,
}

impl Default for GatewayOptions {
    fn default() -> Self {
        GatewayOptions {
            inventory: None,
            cache_dir: default_cache_dir(),
            retry: RetryPolicy::default(),
            request_timeout: Duration::from_secs(120),
        }
    }
}

/// `$MPI_CACHE_DIR`, or `.mpi-cache` in the working directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os("MPI_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".mpi-cache"))
}

enum Backend {
    Http(Box<dyn Transport>),
    Scripted(ScriptedPersona),
    Replay,
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

/// A live connection to one model profile.
pub struct Gateway {
    profile: ModelProfile,
    backend: Backend,
    store: Option<Arc<ReplayStore>>,
    slots: Slots,
    retry: RetryPolicy,
    sleep: Sleeper,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("profile", &self.profile.name)
            .field("kind", &self.profile.kind)
            .finish()
    }
}

impl Gateway {
    pub fn open(profile: ModelProfile, options: &GatewayOptions) -> Result<Self, GatewayError> {
        profile.validate()?;
        let (backend, store) = match profile.kind {
            ProfileKind::HttpCompletion | ProfileKind::HttpChat => {
                let transport = NetworkTransport::new(options.request_timeout)?;
                let store = if profile.record || profile.store.is_some() {
                    let path = profile
                        .store
                        .clone()
                        .unwrap_or_else(|| options.cache_dir.join(format!("{}.jsonl", profile.name)));
                    Some(Arc::new(ReplayStore::open(path)?))
                } else {
                    None
                };
                (Backend::Http(Box::new(transport)), store)
            }
            ProfileKind::Scripted => {
                let spec = profile.scripted.clone().expect("validated scripted profile");
                let persona = ScriptedPersona::new(spec, options.inventory.as_ref())?;
                (Backend::Scripted(persona), None)
            }
            ProfileKind::Replay => {
                let path = profile.store.clone().expect("validated replay profile");
                (Backend::Replay, Some(Arc::new(ReplayStore::open(path)?)))
            }
        };
        Ok(Self::assemble(profile, backend, store, options.retry))
    }

    /// An http-kind gateway over a caller-supplied transport.
    pub fn with_transport(
        profile: ModelProfile,
        transport: impl Transport + 'static,
        store: Option<Arc<ReplayStore>>,
        retry: RetryPolicy,
    ) -> Result<Self, GatewayError> {
        profile.validate()?;
        if !profile.kind.is_http() {
            return Err(GatewayError::InvalidProfile(format!(
                "{}: custom transports need an http profile",
                profile.name
            )));
        }
        Ok(Self::assemble(profile, Backend::Http(Box::new(transport)), store, retry))
    }

    /// A replay-kind gateway over an existing store.
    pub fn replaying(profile: ModelProfile, store: Arc<ReplayStore>) -> Result<Self, GatewayError> {
        if profile.kind != ProfileKind::Replay {
            return Err(GatewayError::InvalidProfile(format!("{}: not a replay profile", profile.name)));
        }
        Ok(Self::assemble(profile, Backend::Replay, Some(store), RetryPolicy::default()))
    }

    pub fn scripted(profile: ModelProfile, inventory: Option<&Inventory>) -> Result<Self, GatewayError> {
        profile.validate()?;
        let spec = profile
            .scripted
            .clone()
            .ok_or_else(|| GatewayError::InvalidProfile(format!("{}: not a scripted profile", profile.name)))?;
        let persona = ScriptedPersona::new(spec, inventory)?;
        Ok(Self::assemble(profile, Backend::Scripted(persona), None, RetryPolicy::default()))
    }

    fn assemble(
        profile: ModelProfile,
        backend: Backend,
        store: Option<Arc<ReplayStore>>,
        retry: RetryPolicy,
    ) -> Self {
        Gateway {
            slots: Slots::new(profile.parallelism),
            profile,
            backend,
            store,
            retry,
            sleep: Box::new(std::thread::sleep),
        }
    }

    /// Replaces the backoff sleep (tests use a recorder or a no-op).
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    pub fn profile(&self) -> &ModelProfile {
        &self.profile
    }

    pub fn store(&self) -> Option<&Arc<ReplayStore>> {
        self.store.as_ref()
    }

    fn completion(&self, prompt: &str, text: String, cached: bool) -> RawCompletion {
        RawCompletion {
            prompt: prompt.to_string(),
            text,
            model: self.profile.name.clone(),
            cached,
        }
    }

    fn complete_http(&self, transport: &dyn Transport, prompt: &str) -> Result<RawCompletion, GatewayError> {
        let key = key_hash(&self.profile.name, &self.profile.decoding, prompt);
        if let Some(hit) = self.store.as_ref().and_then(|s| s.get(&key)) {
            return Ok(self.completion(prompt, hit.text, true));
        }
        let env = self.profile.auth_env.as_deref().unwrap_or_default();
        let api_key = std::env::var(env).map_err(|_| GatewayError::MissingCredential(env.to_string()))?;
        let endpoint = self.profile.endpoint.as_deref().unwrap_or_default();
        let body = http::request_body(&self.profile, prompt);
        let response = {
            let _slot = self.slots.acquire();
            http::call_with_retry(transport, &self.retry, endpoint, &api_key, &body, &*self.sleep)?
        };
        let text = http::response_text(self.profile.kind, &response.body)?;
        if let (Some(store), true) = (&self.store, self.profile.record) {
            store.append(StoredRecord {
                key_hash: key,
                profile: self.profile.name.clone(),
                prompt: prompt.to_string(),
                text: text.clone(),
                decoding: self.profile.decoding,
            })?;
        }
        Ok(self.completion(prompt, text, false))
    }

    fn complete_replay(&self, prompt: &str) -> Result<RawCompletion, GatewayError> {
        let store = self.store.as_ref().expect("replay gateways hold a store");
        let found = match &self.profile.replay_of {
            Some(source) => store.get(&key_hash(source, &self.profile.decoding, prompt)),
            None => store.find_prompt(prompt, None, None)?,
        };
        match found {
            Some(record) => Ok(self.completion(prompt, record.text, true)),
            None => Err(GatewayError::ReplayMiss {
                profile: self.profile.name.clone(),
                key_hash: key_hash(
                    self.profile.replay_of.as_deref().unwrap_or(&self.profile.name),
                    &self.profile.decoding,
                    prompt,
                ),
            }),
        }
    }
}

impl Complete for Gateway {
    fn model_name(&self) -> &str {
        &self.profile.name
    }

    fn complete(&self, prompt: &str) -> Result<RawCompletion, GatewayError> {
        match &self.backend {
            Backend::Http(transport) => self.complete_http(transport.as_ref(), prompt),
            Backend::Scripted(persona) => Ok(self.completion(prompt, persona.answer(prompt)?, false)),
            Backend::Replay => self.complete_replay(prompt),
        }
    }

    fn parallelism(&self) -> usize {
        self.profile.parallelism
    }
}

/// Counting semaphore bounding in-flight requests.
struct Slots {
    free: Mutex<usize>,
    released: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Slots {
            free: Mutex::new(n.max(1)),
            released: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock poisoned");
        while *free == 0 {
            free = self.released.wait(free).expect("slot lock poisoned");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock poisoned") += 1;
        self.0.released.notify_one();
    }
}

/// Shorthand used by the CLI: resolve a model argument and open it.
pub fn open_model(
    spec: &str,
    profiles: &[ModelProfile],
    options: &GatewayOptions,
) -> Result<Gateway, GatewayError> {
    Gateway::open(ModelProfile::resolve(spec, profiles)?, options)
}
