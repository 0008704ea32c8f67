use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use s2sg_core::grounding::{prompt_hash, BackendError, ChatBackend, ChatRequest};

use crate::{ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseFormat {
    #[default]
    Json,
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlmRequest {
    pub model_name: String,
    pub temperature: f64,
    pub system_text: String,
    pub user_text: String,
    pub response_format: ResponseFormat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LlmReply {
    pub text: String,
    pub usage: Option<Usage>,
    pub latency_ms: u64,
    /// Requests sent, including the successful one.
    pub attempts: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("credential error: {0}")]
    Credential(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transport error after {attempts} attempt(s){}: {message}", status.map(|s| format!(", last status {s}")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String, attempts: u32 },
}

/// Wire dialect of the endpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provider {
    /// `messages[]` chat completions with bearer auth.
    #[default]
    Openai,
    /// `contents[]` generateContent with an API-key header.
    Gemini,
}

impl std::str::FromStr for Provider {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "openai" => Ok(Provider::Openai),
            "gemini" => Ok(Provider::Gemini),
            _ => Err(format!("unknown provider {s:?} (expected openai or gemini)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    /// Full request URL; `{model}` is replaced by the model name.
    pub endpoint: Option<String>,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub provider: Provider,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub backoff_base_s: f64,
    pub max_in_flight: usize,
    pub audit: Option<PathBuf>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            api_key: None,
            model: None,
            provider: Provider::Openai,
            timeout_s: 60.0,
            max_retries: 3,
            backoff_base_s: 1.0,
            max_in_flight: 4,
            audit: None,
        }
    }
}

impl ClientConfig {
    /// Fills unset endpoint, key and model from the environment.
    pub fn with_env(mut self) -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        self.endpoint = self.endpoint.or_else(|| var(ENV_ENDPOINT));
        self.api_key = self.api_key.or_else(|| var(ENV_API_KEY));
        self.model = self.model.or_else(|| var(ENV_MODEL));
        self
    }
}

/// Request body for `req`; a pure function of its inputs.
pub fn request_body(provider: Provider, req: &LlmRequest) -> Value {
    match provider {
        Provider::Openai => {
            let mut body = json!({
                "model": req.model_name,
                "temperature": req.temperature,
                "messages": [
                    {"role": "system", "content": req.system_text},
                    {"role": "user", "content": req.user_text},
                ],
            });
            if req.response_format == ResponseFormat::Json {
                body["response_format"] = json!({"type": "json_object"});
            }
            body
        }
        Provider::Gemini => {
            let mut config = json!({"temperature": req.temperature});
            if req.response_format == ResponseFormat::Json {
                config["responseMimeType"] = json!("application/json");
            }
            json!({
                "systemInstruction": {"parts": [{"text": req.system_text}]},
                "contents": [{"role": "user", "parts": [{"text": req.user_text}]}],
                "generationConfig": config,
            })
        }
    }
}

fn reply_text(provider: Provider, v: &Value) -> Option<(String, Option<Usage>)> {
    match provider {
        Provider::Openai => {
            let text = v.pointer("/choices/0/message/content")?.as_str()?.to_string();
            let usage = v.get("usage").map(|u| Usage {
                prompt_tokens: u["prompt_tokens"].as_u64().unwrap_or(0),
                completion_tokens: u["completion_tokens"].as_u64().unwrap_or(0),
            });
            Some((text, usage))
        }
        Provider::Gemini => {
            let parts = v.pointer("/candidates/0/content/parts")?.as_array()?;
            let text = parts.iter().filter_map(|p| p["text"].as_str()).collect::<String>();
            let usage = v.get("usageMetadata").map(|u| Usage {
                prompt_tokens: u["promptTokenCount"].as_u64().unwrap_or(0),
                completion_tokens: u["candidatesTokenCount"].as_u64().unwrap_or(0),
            });
            Some((text, usage))
        }
    }
}

struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Gate {
    fn enter(&self) -> GatePass<'_> {
        let mut n = self.in_flight.lock().expect("gate lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("gate lock");
        }
        *n += 1;
        GatePass(self)
    }
}

struct GatePass<'a>(&'a Gate);

impl Drop for GatePass<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("gate lock") -= 1;
        self.0.freed.notify_one();
    }
}

enum Attempt {
    Done(String, Option<Usage>),
    Retry(Option<u16>, String),
    Fatal(LlmError),
}

/// Chat-completion client over HTTP.
pub struct HttpChatClient {
    config: ClientConfig,
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
    gate: Gate,
    audit: Option<Mutex<File>>,
}

impl HttpChatClient {
    pub fn new(config: ClientConfig) -> Result<Self, LlmError> {
        let endpoint = config.endpoint.clone().ok_or_else(|| {
            LlmError::Credential(format!(
                "no endpoint configured; set {ENV_ENDPOINT} or llm.endpoint in the config file"
            ))
        })?;
        let api_key = config
            .api_key
            .clone()
            .ok_or_else(|| LlmError::Credential(format!("no API key configured; set {ENV_API_KEY}")))?;
        if !(config.timeout_s > 0.0 && config.backoff_base_s >= 0.0) || config.max_in_flight == 0 {
            return Err(LlmError::Config(
                "timeout must be positive, backoff non-negative and max_in_flight at least 1".into(),
            ));
        }
        let audit = match &config.audit {
            Some(p) => Some(Mutex::new(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| LlmError::Config(format!("cannot open audit file {}: {e}", p.display())))?,
            )),
            None => None,
        };
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs_f64(config.timeout_s)).build();
        let gate = Gate { in_flight: Mutex::new(0), freed: Condvar::new(), limit: config.max_in_flight };
        Ok(Self { config, endpoint, api_key, agent, gate, audit })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    fn attempt(&self, url: &str, body: &Value) -> Attempt {
        let mut request = self.agent.post(url).set("Content-Type", "application/json");
        request = match self.config.provider {
            Provider::Openai => request.set("Authorization", &format!("Bearer {}", self.api_key)),
            Provider::Gemini => request.set("x-goog-api-key", &self.api_key),
        };
        match request.send_json(body) {
            Ok(resp) => match resp.into_json::<Value>() {
                Ok(v) => match reply_text(self.config.provider, &v) {
                    Some((text, usage)) => Attempt::Done(text, usage),
                    None => Attempt::Fatal(LlmError::Transport {
                        status: Some(200),
                        message: format!("response has no completion text: {v}"),
                        attempts: 0,
                    }),
                },
                Err(e) => Attempt::Retry(Some(200), format!("unreadable response body: {e}")),
            },
            Err(ureq::Error::Status(code, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                match code {
                    401 | 403 => Attempt::Fatal(LlmError::Credential(format!(
                        "endpoint rejected the credential ({code}): {text}"
                    ))),
                    429 | 500..=599 => Attempt::Retry(Some(code), text),
                    _ => Attempt::Fatal(LlmError::Transport { status: Some(code), message: text, attempts: 0 }),
                }
            }
            Err(ureq::Error::Transport(t)) => Attempt::Retry(None, t.to_string()),
        }
    }

    /// Sends `req`, retrying timeouts, 429 and 5xx with exponential backoff.
    pub fn complete(&self, req: &LlmRequest) -> Result<LlmReply, LlmError> {
        if req.temperature.is_nan() || req.temperature < 0.0 {
            return Err(LlmError::Config(format!("temperature must be >= 0, got {}", req.temperature)));
        }
        let _pass = self.gate.enter();
        let url = self.endpoint.replace("{model}", &req.model_name);
        let body = request_body(self.config.provider, req);
        let started = Instant::now();
        let mut attempts = 0;
        let outcome = loop {
            attempts += 1;
            match self.attempt(&url, &body) {
                Attempt::Done(text, usage) => break Ok((text, usage)),
                Attempt::Fatal(LlmError::Transport { status, message, .. }) => {
                    break Err(LlmError::Transport { status, message, attempts })
                }
                Attempt::Fatal(e) => break Err(e),
                Attempt::Retry(status, message) => {
                    if attempts > self.config.max_retries {
                        break Err(LlmError::Transport { status, message, attempts });
                    }
                    let wait = self.config.backoff_base_s * 2f64.powi(attempts as i32 - 1);
                    std::thread::sleep(Duration::from_secs_f64(wait));
                }
            }
        };
        let latency_ms = started.elapsed().as_millis() as u64;
        self.log(req, latency_ms, attempts, &outcome);
        outcome.map(|(text, usage)| LlmReply { text, usage, latency_ms, attempts })
    }

    fn log(
        &self,
        req: &LlmRequest,
        latency_ms: u64,
        attempts: u32,
        outcome: &Result<(String, Option<Usage>), LlmError>,
    ) {
        let Some(file) = &self.audit else { return };
        let record = json!({
            "prompt_hash": prompt_hash(&req.system_text, &req.user_text),
            "model": req.model_name,
            "latency_ms": latency_ms,
            "attempts": attempts,
            "usage": outcome.as_ref().ok().and_then(|(_, u)| *u),
            "error": outcome.as_ref().err().map(|e| e.to_string()),
        });
        let mut f = file.lock().expect("audit lock");
        // an unwritable audit log must not fail the call
        let _ = writeln!(f, "{record}");
    }
}

impl ChatBackend for HttpChatClient {
    fn name(&self) -> &str {
        "llm"
    }

    fn chat(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        let model =
            if request.model.is_empty() { self.config.model.as_deref().unwrap_or_default() } else { request.model };
        let req = LlmRequest {
            model_name: model.to_string(),
            temperature: request.temperature,
            system_text: request.system.to_string(),
            user_text: request.user.to_string(),
            response_format: if request.json { ResponseFormat::Json } else { ResponseFormat::Free },
        };
        match self.complete(&req) {
            Ok(r) => Ok(r.text),
            Err(LlmError::Credential(m)) => Err(BackendError::Credential(m)),
            Err(LlmError::Config(m)) => Err(BackendError::Other(m)),
            Err(LlmError::Transport { status, message, .. }) => Err(BackendError::Transport { status, message }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req() -> LlmRequest {
        LlmRequest {
            model_name: "m".into(),
            temperature: 0.0,
            system_text: "sys".into(),
            user_text: "user \u{1F600} text".into(),
            response_format: ResponseFormat::Json,
        }
    }

    #[test]
    fn bodies_are_deterministic_and_transparent() {
        for p in [Provider::Openai, Provider::Gemini] {
            let a = request_body(p, &req()).to_string();
            assert_eq!(a, request_body(p, &req()).to_string());
            assert!(a.contains("user \u{1F600} text"));
        }
        let free = LlmRequest { response_format: ResponseFormat::Free, ..req() };
        assert!(request_body(Provider::Openai, &free).get("response_format").is_none());
    }

    #[test]
    fn adapters_read_replies() {
        let o = json!({"choices":[{"message":{"content":"hi"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}});
        assert_eq!(
            reply_text(Provider::Openai, &o),
            Some(("hi".into(), Some(Usage { prompt_tokens: 3, completion_tokens: 1 })))
        );
        let g = json!({"candidates":[{"content":{"parts":[{"text":"a"},{"text":"b"}]}}]});
        assert_eq!(reply_text(Provider::Gemini, &g), Some(("ab".into(), None)));
    }

    #[test]
    fn missing_credentials() {
        let no_key = ClientConfig { endpoint: Some("http://x".into()), ..ClientConfig::default() };
        assert!(matches!(HttpChatClient::new(no_key), Err(LlmError::Credential(_))));
        assert!(matches!(HttpChatClient::new(ClientConfig::default()), Err(LlmError::Credential(_))));
    }
}
