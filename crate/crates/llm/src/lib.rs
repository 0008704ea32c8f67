//! Chat-completion access for the grounding engine: an HTTP client with
//! bounded retries, and a scripted responder for offline runs.

mod client;
mod scripted;

pub use client::{
    request_body, ClientConfig, HttpChatClient, LlmError, LlmReply, LlmRequest, Provider, ResponseFormat, Usage,
};
pub use scripted::{ScriptedFixture, ScriptedResponder};

/// Environment variable naming the completion endpoint.
pub const ENV_ENDPOINT: &str = "S2SG_LLM_ENDPOINT";
/// Environment variable holding the API key.
pub const ENV_API_KEY: &str = "S2SG_LLM_API_KEY";
/// Environment variable naming the model.
pub const ENV_MODEL: &str = "S2SG_LLM_MODEL";
