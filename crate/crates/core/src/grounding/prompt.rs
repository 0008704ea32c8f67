//! Prompt construction for LLM-backed grounding.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::interchange::SlideDocument;
use crate::model::ScriptSentence;

use super::GroundingConfig;

/// Instruction for grounding-only runs.
pub const EVAL_INSTRUCTION: &str = "You are a presentation support assistant. For each sentence in the following presentation script, please ground it to the object it describes from the list of slide objects. Note that not all objects will necessarily be described. Your output must be in JSON format. For each sentence, return a list of shape_IDs for the corresponding objects.";

/// Instruction for grounding plus effect-command assignment.
pub const CONDUCT_INSTRUCTION: &str = "You are a presentation video generation assistant. For each sentence in the following presentation script, please ground it to the object it describes from the list of slide objects. Note that not all objects are necessarily described. The overall goal is to create a short video clip for each script sentence and then concatenate them to produce the final video. Based on the grounding results, assign appropriate visual effect commands for each script sentence. You may assign multiple commands to a single sentence.";

pub const DEFAULT_RULES: &str = "\
- Ground each sentence to sentence elements only (shape_IDs starting with \"s\"); objects starting with \"g\" are containers.
- A child element is a detail of its parent. Choose the parent when the sentence speaks about the topic as a whole and the child when it speaks about that specific detail.
- A sentence may correspond to several objects; list all of them.
- Use the context of neighbouring sentences to resolve words such as \"this\" or \"here\".
- Title elements may be selected when the sentence introduces or names the slide's topic.
- Sentences that relate to no object (digressions, greetings) get an empty list.";

pub const EVAL_TEMPLATE: &str = include_str!("../../templates/eval.txt");
pub const CONDUCT_TEMPLATE: &str = include_str!("../../templates/conduct.txt");

const POINT_LINE: &str =
    "- POINT: a pointer moving from one object to another. param = {\"start_pos\": shape_ID, \"end_pos\": shape_ID}";
const RECTANGLE_LINE: &str = "- RECTANGLE: a frame drawn around one object. param = {\"position\": shape_ID}";
const AVATAR_LINE: &str = "- AVATAR: a presenter avatar gesture. param = {\"pose\": text}";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    /// Grounding only.
    #[default]
    Eval,
    /// Grounding plus effect commands.
    Conduct,
}

/// A fully assembled prompt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptBundle {
    pub mode: PromptMode,
    pub instruction: String,
    pub rules: String,
    pub slide_payload: String,
    pub sentence_list: String,
    /// Effect-command candidates (conduct mode only).
    pub commands: String,
    template: String,
}

impl PromptBundle {
    /// The system message: the instruction text.
    pub fn system_text(&self) -> &str {
        &self.instruction
    }

    /// The user message: the template with placeholders filled.
    pub fn user_text(&self) -> String {
        fill_template(
            &self.template,
            &[
                ("rules", &self.rules),
                ("slide_payload", &self.slide_payload),
                ("sentences", &self.sentence_list),
                ("commands", &self.commands),
            ],
        )
    }

    /// Stable key for this prompt, used by scripted responders and audit logs.
    pub fn hash(&self) -> String {
        prompt_hash(self.system_text(), &self.user_text())
    }
}

/// Hex SHA-256 of the system text, a NUL separator, and the user text.
pub fn prompt_hash(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0u8]);
    h.update(user.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Replaces `{name}` placeholders in a single pass; substituted text is never
/// rescanned and unknown braces are kept verbatim.
pub fn fill_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in values {
            let key_len = name.len() + 2;
            if tail.len() >= key_len && tail.as_bytes()[key_len - 1] == b'}' && &tail[1..key_len - 1] == *name {
                out.push_str(value);
                rest = &tail[key_len..];
                continue 'scan;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

pub fn numbered_sentences(sentences: &[ScriptSentence]) -> String {
    sentences.iter().map(|s| format!("{}: {}", s.index, s.text)).collect::<Vec<_>>().join("\n")
}

/// Builds the prompt for one slide.
pub fn build_prompt(
    doc: &SlideDocument,
    sentences: &[ScriptSentence],
    mode: PromptMode,
    config: &GroundingConfig,
) -> PromptBundle {
    let (instruction, template) = match mode {
        PromptMode::Eval => (EVAL_INSTRUCTION, config.eval_template.as_str()),
        PromptMode::Conduct => (CONDUCT_INSTRUCTION, config.conduct_template.as_str()),
    };
    let commands = match mode {
        PromptMode::Eval => String::new(),
        PromptMode::Conduct => {
            let mut lines = vec![POINT_LINE, RECTANGLE_LINE];
            if config.avatar_visible {
                lines.push(AVATAR_LINE);
            }
            lines.join("\n")
        }
    };
    PromptBundle {
        mode,
        instruction: instruction.to_string(),
        rules: config.rules.clone(),
        slide_payload: doc.canonical(),
        sentence_list: numbered_sentences(sentences),
        commands,
        template: template.to_string(),
    }
}
