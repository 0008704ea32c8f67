use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use s2sg_core::grounding::{
    candidate_unit, parse_grounding_reply, prompt_for, prompt_hash, repair_text, BackendError, ChatBackend,
    ChatRequest, GroundingConfig, PromptMode,
};
use s2sg_core::interchange::{read_json, InterchangeError, FORMAT_VERSION};
use s2sg_core::model::SlideUnit;

/// Canned replies keyed by prompt hash.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedFixture {
    pub format_version: u32,
    pub replies: BTreeMap<String, String>,
}

impl ScriptedFixture {
    pub fn new() -> Self {
        Self { format_version: FORMAT_VERSION, replies: BTreeMap::new() }
    }

    pub fn insert(&mut self, system: &str, user: &str, reply: impl Into<String>) {
        self.replies.insert(prompt_hash(system, user), reply.into());
    }

    /// Records one slide's conversation: the first reply answers the initial
    /// prompt, each later reply answers the re-ask its predecessor triggers.
    pub fn record_slide(&mut self, unit: &SlideUnit, config: &GroundingConfig, mode: PromptMode, replies: &[String]) {
        let bundle = prompt_for(unit, config, mode);
        let first = bundle.user_text();
        let valid = candidate_unit(unit, config).object_order();
        let mut user = first.clone();
        for (k, reply) in replies.iter().enumerate() {
            self.insert(bundle.system_text(), &user, reply.clone());
            if k + 1 < replies.len() {
                match parse_grounding_reply(reply, &valid, unit.sentences.len()) {
                    Err(e) => user = repair_text(&first, &e),
                    Ok(_) => panic!("slide {}: reply {k} parses, so no re-ask follows it", unit.slide_number),
                }
            }
        }
    }
}

/// Answers from a fixture; unknown prompts are an error naming their hash.
#[derive(Clone, Debug)]
pub struct ScriptedResponder {
    fixture: ScriptedFixture,
}

impl ScriptedResponder {
    pub fn new(fixture: ScriptedFixture) -> Self {
        Self { fixture }
    }

    pub fn from_path(path: &Path) -> Result<Self, InterchangeError> {
        Ok(Self::new(read_json(path)?))
    }

    pub fn reply(&self, system: &str, user: &str) -> Result<&str, BackendError> {
        let hash = prompt_hash(system, user);
        self.fixture.replies.get(&hash).map(String::as_str).ok_or(BackendError::FixtureMiss(hash))
    }
}

impl ChatBackend for ScriptedResponder {
    fn name(&self) -> &str {
        "scripted"
    }

    fn chat(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        self.reply(request.system, request.user).map(str::to_string)
    }
}
