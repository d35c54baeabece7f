use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use super::{GatewayError, ModelProfile, ProfileKind};

static REQUESTS_SENT: AtomicUsize = AtomicUsize::new(0);

/// Number of network requests issued by [`NetworkTransport`] in this process.
pub fn network_requests_sent() -> usize {
    REQUESTS_SENT.load(Ordering::SeqCst)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Failure below the HTTP layer (DNS, connect, timeout, reset).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError(pub String);

/// Sends one JSON POST. Implemented over the network by [`NetworkTransport`]
/// and by in-process doubles in tests.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> Result<HttpResponse, TransportError> {
        (**self).post_json(url, bearer, body)
    }
}

pub struct NetworkTransport {
    agent: ureq::Agent,
}

impl NetworkTransport {
    pub fn new(timeout: Duration) -> Result<Self, GatewayError> {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            // Status handling (retry on 5xx, fail on 4xx) happens in the caller.
            .http_status_as_error(false)
            .build()
            .into();
        Ok(NetworkTransport { agent })
    }
}

impl Transport for NetworkTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> Result<HttpResponse, TransportError> {
        REQUESTS_SENT.fetch_add(1, Ordering::SeqCst);
        if std::env::var_os("MPI_NO_NETWORK").is_some_and(|v| !v.is_empty()) {
            return Err(TransportError("network access disabled by MPI_NO_NETWORK".into()));
        }
        let mut request = self.agent.post(url);
        if !bearer.is_empty() {
            request = request.header("Authorization", &format!("Bearer {bearer}"));
        }
        let mut response = request.send_json(body).map_err(|e| TransportError(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Exponential backoff for transient failures (transport errors and 5xx).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Retries without sleeping; for tests.
    pub fn immediate() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::ZERO,
        }
    }

    /// Delay before retry number `retry` (0-based): base, 2×base, 4×base, …
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry)
    }
}

pub(crate) fn request_body(profile: &ModelProfile, prompt: &str) -> Value {
    let model = profile.remote_model.as_deref().unwrap_or(&profile.name);
    match profile.kind {
        ProfileKind::HttpChat => json!({
            "model": model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": profile.decoding.temperature,
            "max_tokens": profile.decoding.max_tokens,
        }),
        _ => json!({
            "model": model,
            "prompt": prompt,
            "temperature": profile.decoding.temperature,
            "max_tokens": profile.decoding.max_tokens,
        }),
    }
}

pub(crate) fn response_text(kind: ProfileKind, body: &str) -> Result<String, GatewayError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| GatewayError::Decode(format!("response is not JSON: {e}")))?;
    let choice = &value["choices"][0];
    let text = match kind {
        ProfileKind::HttpChat => choice["message"]["content"].as_str(),
        _ => choice["text"].as_str(),
    };
    text.map(str::to_string)
        .ok_or_else(|| GatewayError::Decode("response has no completion text".into()))
}

/// Performs one logical call with retries.
pub(crate) fn call_with_retry(
    transport: &dyn Transport,
    policy: &RetryPolicy,
    url: &str,
    bearer: &str,
    body: &Value,
    sleep: &dyn Fn(Duration),
) -> Result<HttpResponse, GatewayError> {
    let mut retry = 0;
    loop {
        let outcome = transport.post_json(url, bearer, body);
        let transient = match &outcome {
            Ok(resp) if (200..300).contains(&resp.status) => return Ok(outcome.expect("checked ok")),
            Ok(resp) if resp.status >= 500 => true,
            Ok(resp) => {
                return Err(GatewayError::Http {
                    status: resp.status,
                    body: truncate(&resp.body),
                })
            }
            Err(_) => true,
        };
        debug_assert!(transient);
        if retry >= policy.max_retries {
            return Err(match outcome {
                Ok(resp) => GatewayError::Http {
                    status: resp.status,
                    body: truncate(&resp.body),
                },
                Err(TransportError(message)) => GatewayError::Unreachable {
                    attempts: retry + 1,
                    message,
                },
            });
        }
        let delay = policy.delay(retry);
        log::warn!("transient failure calling {url}; retry {} in {:?}", retry + 1, delay);
        sleep(delay);
        retry += 1;
    }
}

fn truncate(body: &str) -> String {
    body.chars().take(300).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Scripted {
        replies: Mutex<Vec<Result<HttpResponse, TransportError>>>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<HttpResponse, TransportError>>) -> Self {
            replies.reverse();
            Scripted {
                replies: Mutex::new(replies),
                calls: AtomicUsize::new(0),
            }
        }
    }

    impl Transport for Scripted {
        fn post_json(&self, _: &str, _: &str, _: &Value) -> Result<HttpResponse, TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.replies.lock().unwrap().pop().expect("unexpected extra call")
        }
    }

    fn ok(body: &str) -> Result<HttpResponse, TransportError> {
        Ok(HttpResponse { status: 200, body: body.into() })
    }

    fn status(code: u16) -> Result<HttpResponse, TransportError> {
        Ok(HttpResponse { status: code, body: "err".into() })
    }

    fn run(t: &Scripted, delays: &Mutex<Vec<Duration>>) -> Result<HttpResponse, GatewayError> {
        call_with_retry(t, &RetryPolicy::default(), "u", "k", &json!({}), &|d| {
            delays.lock().unwrap().push(d)
        })
    }

    #[test]
    fn backoff_is_one_two_four_seconds() {
        let p = RetryPolicy::default();
        let delays: Vec<u64> = (0..3).map(|i| p.delay(i).as_secs()).collect();
        assert_eq!(delays, vec![1, 2, 4]);
    }

    #[test]
    fn retries_transient_failures_then_succeeds() {
        let t = Scripted::new(vec![Err(TransportError("reset".into())), status(503), ok("{}")]);
        let delays = Mutex::new(Vec::new());
        assert_eq!(run(&t, &delays).unwrap().status, 200);
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
        assert_eq!(*delays.lock().unwrap(), vec![Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn gives_up_after_three_retries() {
        let t = Scripted::new((0..4).map(|_| Err(TransportError("down".into()))).collect());
        let delays = Mutex::new(Vec::new());
        assert!(matches!(run(&t, &delays), Err(GatewayError::Unreachable { attempts: 4, .. })));
        assert_eq!(delays.lock().unwrap().len(), 3);

        let t = Scripted::new((0..4).map(|_| status(500)).collect());
        assert!(matches!(run(&t, &delays), Err(GatewayError::Http { status: 500, .. })));
    }

    #[test]
    fn client_errors_are_not_retried() {
        for code in [400, 401, 429] {
            let t = Scripted::new(vec![status(code)]);
            let delays = Mutex::new(Vec::new());
            assert!(matches!(run(&t, &delays), Err(GatewayError::Http { status, .. }) if status == code));
            assert_eq!(t.calls.load(Ordering::SeqCst), 1);
        }
    }

    #[test]
    fn request_and_response_shapes() {
        let mut p = ModelProfile::http("m", ProfileKind::HttpChat, "http://x", "K");
        let body = request_body(&p, "hi");
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"].as_array().unwrap().len(), 1);
        assert_eq!(body["temperature"], 0.0);
        p.kind = ProfileKind::HttpCompletion;
        p.remote_model = Some("text-davinci-003".into());
        let body = request_body(&p, "hi");
        assert_eq!(body["prompt"], "hi");
        assert_eq!(body["model"], "text-davinci-003");

        let chat = r#"{"choices":[{"message":{"role":"assistant","content":"(A)"}}]}"#;
        assert_eq!(response_text(ProfileKind::HttpChat, chat).unwrap(), "(A)");
        let completion = r#"{"choices":[{"text":" (B)"}]}"#;
        assert_eq!(response_text(ProfileKind::HttpCompletion, completion).unwrap(), " (B)");
        assert!(response_text(ProfileKind::HttpCompletion, "{}").is_err());
    }
}
