//! The grounding function: prompts, reply parsing, grounders and per-slide
//! orchestration.

mod lexical;
mod prompt;
mod reply;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interchange::{serialize_slide, FormatVariant, SlideFailure};
use crate::model::{GroundingResult, Role, SlideUnit};

pub use lexical::{lexical_ground, overlap_score, tokens};
pub use prompt::{
    build_prompt, fill_template, numbered_sentences, prompt_hash, PromptBundle, PromptMode, CONDUCT_INSTRUCTION,
    CONDUCT_TEMPLATE, DEFAULT_RULES, EVAL_INSTRUCTION, EVAL_TEMPLATE,
};
pub use reply::{extract_json, parse_grounding_reply, ParsedReply, ReplyError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundingConfig {
    pub temperature: f64,
    pub model_name: String,
    pub variant: FormatVariant,
    pub exclude_titles: bool,
    pub max_repair_attempts: u32,
    pub rules: String,
    pub avatar_visible: bool,
    /// Upper bound on slides grounded at once.
    pub concurrency: usize,
    pub eval_template: String,
    pub conduct_template: String,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            model_name: String::new(),
            variant: FormatVariant::FULL,
            exclude_titles: false,
            max_repair_attempts: 1,
            rules: DEFAULT_RULES.to_string(),
            avatar_visible: true,
            concurrency: 4,
            eval_template: EVAL_TEMPLATE.to_string(),
            conduct_template: CONDUCT_TEMPLATE.to_string(),
        }
    }
}

impl GroundingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!("temperature must be a finite value >= 0, got {}", self.temperature));
        }
        if self.concurrency == 0 {
            return Err("concurrency must be at least 1".into());
        }
        for (name, t) in [("eval_template", &self.eval_template), ("conduct_template", &self.conduct_template)] {
            for key in ["{slide_payload}", "{sentences}"] {
                if !t.contains(key) {
                    return Err(format!("{name} lacks the {key} placeholder"));
                }
            }
        }
        Ok(())
    }
}

/// Failure reported by a chat backend.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("credential error: {0}")]
    Credential(String),
    #[error("transport error{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("no scripted reply for prompt hash {0}")]
    FixtureMiss(String),
    #[error("{0}")]
    Other(String),
}

/// One chat exchange as seen by a backend.
#[derive(Clone, Debug, PartialEq)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub temperature: f64,
    pub system: &'a str,
    pub user: &'a str,
    pub json: bool,
}

/// Anything that answers a system/user prompt pair with text.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;
    fn chat(&self, request: &ChatRequest<'_>) -> Result<String, BackendError>;
    /// Backends that cannot take concurrent calls return true.
    fn single_flight(&self) -> bool {
        false
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("reply still unusable after {attempts} attempt(s): {last}")]
    RepairExhausted { attempts: u32, last: ReplyError },
    #[error("{0}")]
    Invalid(String),
    #[error("every slide failed: {}", .0.iter().map(|f| format!("slide {}: {}", f.slide_number, f.error)).collect::<Vec<_>>().join("; "))]
    AllFailed(Vec<SlideFailure>),
}

/// Output of one slide.
#[derive(Clone, Debug, PartialEq)]
pub struct Grounded {
    pub result: GroundingResult,
    pub warnings: Vec<String>,
    /// Raw conduct-mode reply, kept for command parsing.
    pub conduct_reply: Option<String>,
}

pub trait Grounder: Sync {
    fn name(&self) -> &str;
    fn ground(&self, unit: &SlideUnit, config: &GroundingConfig) -> Result<Grounded, GroundError>;
    fn single_flight(&self) -> bool {
        false
    }
}

/// The unit as offered to a grounder: title objects removed when configured.
pub fn candidate_unit(unit: &SlideUnit, config: &GroundingConfig) -> SlideUnit {
    let mut u = unit.clone();
    if config.exclude_titles {
        u.objects.retain(|g| g.role() != Some(Role::Title));
    }
    u
}

fn widen(unit: &SlideUnit, narrow: &GroundingResult) -> GroundingResult {
    GroundingResult::new(unit.object_order(), narrow.groundings().to_vec()).expect("candidate ids are a subset")
}

/// Token-overlap grounder.
#[derive(Clone, Copy, Debug)]
pub struct LexicalGrounder {
    pub theta: f64,
}

impl Grounder for LexicalGrounder {
    fn name(&self) -> &str {
        "lexical"
    }

    fn ground(&self, unit: &SlideUnit, config: &GroundingConfig) -> Result<Grounded, GroundError> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(GroundError::Invalid(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        let cand = candidate_unit(unit, config);
        let result = widen(unit, &lexical_ground(&cand, &unit.sentences, self.theta));
        Ok(Grounded { result, warnings: Vec::new(), conduct_reply: None })
    }
}

/// Grounds by prompting a chat backend.
pub struct LlmGrounder<B> {
    pub backend: B,
    pub mode: PromptMode,
}

impl<B: ChatBackend> LlmGrounder<B> {
    pub fn new(backend: B, mode: PromptMode) -> Self {
        Self { backend, mode }
    }

    /// The first prompt sent for `unit`.
    pub fn prompt(&self, unit: &SlideUnit, config: &GroundingConfig) -> PromptBundle {
        prompt_for(unit, config, self.mode)
    }
}

/// The prompt for one slide under `config`.
pub fn prompt_for(unit: &SlideUnit, config: &GroundingConfig, mode: PromptMode) -> PromptBundle {
    let cand = candidate_unit(unit, config);
    build_prompt(&serialize_slide(&cand, config.variant), &unit.sentences, mode, config)
}

/// The user text of a re-ask after an unusable reply.
pub fn repair_text(user: &str, error: &ReplyError) -> String {
    format!("{user}\n\nYour previous reply could not be used ({error}). Reply again with only the JSON object described above.")
}

impl<B: ChatBackend> Grounder for LlmGrounder<B> {
    fn name(&self) -> &str {
        self.backend.name()
    }

    fn single_flight(&self) -> bool {
        self.backend.single_flight()
    }

    fn ground(&self, unit: &SlideUnit, config: &GroundingConfig) -> Result<Grounded, GroundError> {
        let bundle = self.prompt(unit, config);
        let valid = candidate_unit(unit, config).object_order();
        let first = bundle.user_text();
        let mut user = first.clone();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let request = ChatRequest {
                model: &config.model_name,
                temperature: config.temperature,
                system: bundle.system_text(),
                user: &user,
                json: true,
            };
            let reply = self.backend.chat(&request)?;
            match parse_grounding_reply(&reply, &valid, unit.sentences.len()) {
                Ok(parsed) => {
                    return Ok(Grounded {
                        result: widen(unit, &parsed.result),
                        warnings: parsed.warnings,
                        conduct_reply: (self.mode == PromptMode::Conduct).then_some(reply),
                    })
                }
                Err(e) if attempts <= config.max_repair_attempts => user = repair_text(&first, &e),
                Err(last) => return Err(GroundError::RepairExhausted { attempts, last }),
            }
        }
    }
}

/// Per-slide outcomes of a deck run, keyed by slide number.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeckGrounding {
    pub results: BTreeMap<u32, Grounded>,
    pub failures: Vec<SlideFailure>,
}

/// Grounds every slide independently, up to `config.concurrency` at a time.
///
/// A slide whose reply stays unusable gets an all-empty grounding and a
/// failure record; any other slide error yields a failure record only.
pub fn ground_deck<G: Grounder + ?Sized>(
    units: &[SlideUnit],
    grounder: &G,
    config: &GroundingConfig,
) -> Result<DeckGrounding, GroundError> {
    let workers = if grounder.single_flight() { 1 } else { config.concurrency.max(1) }.min(units.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Grounded, GroundError>>>> = Mutex::new(vec![None; units.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(unit) = units.get(k) else { break };
                let outcome = grounder.ground(unit, config);
                slots.lock().expect("no panics while holding the lock")[k] = Some(outcome);
            });
        }
    });

    let mut out = DeckGrounding::default();
    for (unit, slot) in units.iter().zip(slots.into_inner().expect("workers joined")) {
        match slot.expect("every slide visited") {
            Ok(g) => {
                out.results.insert(unit.slide_number, g);
            }
            Err(e) => {
                if let GroundError::RepairExhausted { .. } = e {
                    let empty =
                        GroundingResult::empty(unit.object_order(), unit.sentences.len()).expect("unit ids are unique");
                    out.results.insert(
                        unit.slide_number,
                        Grounded { result: empty, warnings: Vec::new(), conduct_reply: None },
                    );
                }
                out.failures.push(SlideFailure { slide_number: unit.slide_number, error: e.to_string() });
            }
        }
    }
    if !units.is_empty() && out.failures.len() == units.len() {
        return Err(GroundError::AllFailed(out.failures));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SlideDimensions;
    use crate::model::{ScriptSentence, SentenceElement, ShapeId, StyleInfo, TextObjectGroup};

    fn unit(n: u32) -> SlideUnit {
        SlideUnit {
            slide_number: n,
            objects: vec![
                TextObjectGroup {
                    group_shape_id: ShapeId::group(1),
                    content_list: vec![SentenceElement::leaf(ShapeId::element(1), "Cache layers", 0)],
                    style: Some(StyleInfo { font_size_pt: Some(40.0), position: None, role: Some(Role::Title) }),
                },
                TextObjectGroup {
                    group_shape_id: ShapeId::group(2),
                    content_list: vec![
                        SentenceElement::leaf(ShapeId::element(2), "Browser cache", 0),
                        SentenceElement::leaf(ShapeId::element(3), "CDN edge", 0),
                    ],
                    style: None,
                },
            ],
            sentences: vec![
                ScriptSentence { index: 0, text: "There are several cache layers.".into() },
                ScriptSentence { index: 1, text: "The browser cache sits closest.".into() },
            ],
            dimensions: SlideDimensions::DEFAULT,
        }
    }

    /// Replies from a queue, recording prompts.
    struct Queue {
        replies: Mutex<Vec<Result<String, BackendError>>>,
        seen: Mutex<Vec<String>>,
    }

    impl Queue {
        fn new(replies: Vec<Result<&str, BackendError>>) -> Self {
            Self {
                replies: Mutex::new(replies.into_iter().rev().map(|r| r.map(str::to_string)).collect()),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl ChatBackend for Queue {
        fn name(&self) -> &str {
            "queue"
        }
        fn chat(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
            self.seen.lock().unwrap().push(request.user.to_string());
            self.replies.lock().unwrap().pop().unwrap_or_else(|| Err(BackendError::Other("empty".into())))
        }
        fn single_flight(&self) -> bool {
            true
        }
    }

    #[test]
    fn llm_grounder_parses_reply() {
        let g = LlmGrounder::new(Queue::new(vec![Ok(r#"{"0":["s1"],"1":["s2","s7"]}"#)]), PromptMode::Eval);
        let out = g.ground(&unit(1), &GroundingConfig::default()).unwrap();
        assert_eq!(out.result.get(0), &[ShapeId::element(1)]);
        assert_eq!(out.result.get(1), &[ShapeId::element(2)]);
        assert_eq!(out.result.object_order().len(), 3);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.conduct_reply.is_none());
    }

    #[test]
    fn repair_then_success() {
        let g = LlmGrounder::new(Queue::new(vec![Ok("sorry"), Ok(r#"{"1":["s3"]}"#)]), PromptMode::Eval);
        let out = g.ground(&unit(1), &GroundingConfig::default()).unwrap();
        assert_eq!(out.result.get(1), &[ShapeId::element(3)]);
        let seen = g.backend.seen.lock().unwrap();
        assert_eq!(seen.len(), 2);
        assert!(seen[1].starts_with(&seen[0]) && seen[1].contains("could not be used"));
    }

    #[test]
    fn repair_exhaustion() {
        let config = GroundingConfig { max_repair_attempts: 0, ..GroundingConfig::default() };
        let g = LlmGrounder::new(Queue::new(vec![Ok("sorry"), Ok(r#"{"0":[]}"#)]), PromptMode::Eval);
        assert!(matches!(g.ground(&unit(1), &config), Err(GroundError::RepairExhausted { attempts: 1, .. })));
    }

    #[test]
    fn exclude_titles_drops_title_candidates() {
        let config = GroundingConfig { exclude_titles: true, ..GroundingConfig::default() };
        let g = LlmGrounder::new(Queue::new(vec![Ok(r#"{"0":["s1","s2"]}"#)]), PromptMode::Eval);
        let p = g.prompt(&unit(1), &config);
        assert!(!p.slide_payload.contains("Cache layers"));
        let out = g.ground(&unit(1), &config).unwrap();
        assert_eq!(out.result.get(0), &[ShapeId::element(2)]);

        let lex = LexicalGrounder { theta: 0.9 }.ground(&unit(1), &config).unwrap();
        assert!(lex.result.get(0).is_empty());
        let lex = LexicalGrounder { theta: 0.9 }.ground(&unit(1), &GroundingConfig::default()).unwrap();
        assert_eq!(lex.result.get(0), &[ShapeId::element(1)]);
    }

    #[test]
    fn conduct_keeps_reply() {
        let reply = r#"{"0":{"shape_ids":["s1"],"commands":[]}}"#;
        let g = LlmGrounder::new(Queue::new(vec![Ok(reply)]), PromptMode::Conduct);
        let out = g.ground(&unit(1), &GroundingConfig::default()).unwrap();
        assert_eq!(out.conduct_reply.as_deref(), Some(reply));
    }

    struct FailOn(u32);

    impl Grounder for FailOn {
        fn name(&self) -> &str {
            "fail-on"
        }
        fn ground(&self, unit: &SlideUnit, _: &GroundingConfig) -> Result<Grounded, GroundError> {
            if unit.slide_number == self.0 || self.0 == 0 {
                return Err(GroundError::Backend(BackendError::Transport {
                    status: Some(503),
                    message: "down".into(),
                }));
            }
            // slow early slides so completion order differs from slide order
            std::thread::sleep(std::time::Duration::from_millis(20 / unit.slide_number as u64));
            Ok(Grounded {
                result: GroundingResult::empty(unit.object_order(), 1).unwrap(),
                warnings: vec![],
                conduct_reply: None,
            })
        }
    }

    #[test]
    fn deck_results_in_slide_order_with_isolation() {
        let units: Vec<_> = (1..=3).map(unit).collect();
        let out = ground_deck(&units, &FailOn(2), &GroundingConfig::default()).unwrap();
        assert_eq!(out.results.keys().copied().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].slide_number, 2);
        assert!(out.failures[0].error.contains("503"));
        assert!(
            matches!(ground_deck(&units, &FailOn(0), &GroundingConfig::default()), Err(GroundError::AllFailed(f)) if f.len() == 3)
        );
    }

    #[test]
    fn exhausted_slide_gets_empty_grounding() {
        let config = GroundingConfig { max_repair_attempts: 0, ..GroundingConfig::default() };
        let g = LlmGrounder::new(Queue::new(vec![Ok(r#"{"0":["s1"]}"#), Ok("nope")]), PromptMode::Eval);
        let out = ground_deck(&[unit(1), unit(2)], &g, &config).unwrap();
        assert_eq!(out.results.len(), 2);
        assert!(out.results[&2].result.groundings().iter().all(Vec::is_empty));
        assert_eq!(out.failures.len(), 1);
    }

    #[test]
    fn lexical_deck_is_deterministic() {
        let units: Vec<_> = (1..=5).map(unit).collect();
        let g = LexicalGrounder { theta: 0.5 };
        let a = ground_deck(&units, &g, &GroundingConfig::default()).unwrap();
        let b = ground_deck(&units, &g, &GroundingConfig { concurrency: 1, ..GroundingConfig::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(GroundingConfig::default().validate().is_ok());
        assert!(GroundingConfig { temperature: -0.1, ..GroundingConfig::default() }.validate().is_err());
        assert!(GroundingConfig { eval_template: "{rules}".into(), ..GroundingConfig::default() }.validate().is_err());
    }
}
