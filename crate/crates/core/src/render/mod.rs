//! Render plans: timed effect commands per sentence clip, and their
//! rasterization into frame sequences.

mod raster;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::grounding::{extract_json, ReplyError};
use crate::interchange::{
    read_json, write_canonical, InterchangeError, PredictionsFile, SearchableFile, FORMAT_VERSION,
};
use crate::model::{GroundingResult, ScriptSentence, ShapeId, SlideUnit};

pub use raster::{
    draw_frame, frame_count, mux_command, render_clip, render_plan, write_manifest, Corner, FrameStyle, ManifestEntry,
    RenderManifest, RenderSettings, SlideImages,
};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("slide {slide}: no searchable entry for {id}")]
    MissingShape { slide: u32, id: ShapeId },
    #[error("slide {0} has no searchable data")]
    MissingSlide(u32),
    #[error("image error: {0}")]
    Image(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Interchange(#[from] InterchangeError),
}

/// An effect and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "param", rename_all = "UPPERCASE")]
pub enum Effect {
    /// A marker moving from one object's center to another's.
    Point {
        start_pos: ShapeId,
        end_pos: ShapeId,
    },
    /// An outlined box around one object.
    Rectangle {
        position: ShapeId,
    },
    Avatar {
        pose: String,
    },
}

impl Effect {
    pub fn ids(&self) -> Vec<&ShapeId> {
        match self {
            Effect::Point { start_pos, end_pos } => vec![start_pos, end_pos],
            Effect::Rectangle { position } => vec![position],
            Effect::Avatar { .. } => Vec::new(),
        }
    }
}

/// One timed command; times are seconds within the clip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectCommand {
    #[serde(flatten)]
    pub effect: Effect,
    pub start_time: f64,
    pub duration: f64,
}

impl EffectCommand {
    /// Active on `[start_time, start_time + duration)`.
    pub fn active_at(&self, t: f64) -> bool {
        self.start_time <= t && t < self.start_time + self.duration
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipPlan {
    pub slide_number: u32,
    pub sentence_index: usize,
    pub clip_length: f64,
    pub commands: Vec<EffectCommand>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    pub wpm: f64,
    /// Shortest clip, in seconds.
    pub min_clip: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self { wpm: 150.0, min_clip: 1.5 }
    }
}

/// Narration time of a sentence at `wpm`, never below `min_clip`.
pub fn sentence_duration(sentence: &ScriptSentence, timing: &Timing) -> f64 {
    let words = sentence.text.split_whitespace().count() as f64;
    (words * 60.0 / timing.wpm).max(timing.min_clip)
}

/// Empty clips for the sentences of one slide.
pub fn empty_clips(slide_number: u32, sentences: &[ScriptSentence], timing: &Timing) -> Vec<ClipPlan> {
    sentences
        .iter()
        .map(|s| ClipPlan {
            slide_number,
            sentence_index: s.index,
            clip_length: sentence_duration(s, timing),
            commands: Vec::new(),
        })
        .collect()
}

/// Frames every grounded object for the whole clip.
pub fn assign_default_effects(
    slide_number: u32,
    sentences: &[ScriptSentence],
    grounding: &GroundingResult,
    timing: &Timing,
) -> Vec<ClipPlan> {
    let mut clips = empty_clips(slide_number, sentences, timing);
    for clip in &mut clips {
        let ids =
            if clip.sentence_index < grounding.sentence_count() { grounding.get(clip.sentence_index) } else { &[] };
        clip.commands = ids
            .iter()
            .map(|id| EffectCommand {
                effect: Effect::Rectangle { position: id.clone() },
                start_time: 0.0,
                duration: clip.clip_length,
            })
            .collect();
    }
    clips
}

fn command_list(entry: &Value) -> Option<&Vec<Value>> {
    match entry {
        Value::Array(a) => Some(a),
        Value::Object(o) => match o.get("commands") {
            Some(Value::Array(a)) => Some(a),
            None => Some(const { &Vec::new() }),
            Some(_) => None,
        },
        _ => None,
    }
}

fn check_command(
    raw: &Value,
    valid: &HashSet<&str>,
    clip_length: f64,
) -> Result<(EffectCommand, Option<String>), String> {
    let obj = raw.as_object().ok_or("command is not an object")?;
    let kind = obj.get("type").and_then(Value::as_str).ok_or("command has no type")?;
    let param = obj.get("param").cloned().unwrap_or(Value::Null);
    let effect: Effect = serde_json::from_value(serde_json::json!({"type": kind.to_ascii_uppercase(), "param": param}))
        .map_err(|e| format!("bad {kind} command: {e}"))?;
    for id in effect.ids() {
        if !valid.contains(id.as_str()) {
            return Err(format!("{kind} references unknown id {id}"));
        }
    }
    let num = |k: &str| obj.get(k).and_then(Value::as_f64).filter(|v| v.is_finite());
    let start_time = num("start_time").ok_or("start_time missing or not a number")?;
    let duration = num("duration").ok_or("duration missing or not a number")?;
    if start_time < 0.0 || duration <= 0.0 {
        return Err(format!("invalid timing start {start_time} duration {duration}"));
    }
    if start_time >= clip_length {
        return Err(format!("start {start_time} lies beyond the {clip_length} s clip"));
    }
    let mut note = None;
    let mut duration = duration;
    if start_time + duration > clip_length {
        note = Some(format!("{kind} clamped to clip end ({start_time}+{duration} > {clip_length})"));
        duration = clip_length - start_time;
    }
    Ok((EffectCommand { effect, start_time, duration }, note))
}

/// Fills `clips` with the commands of a conduct-mode reply. Invalid commands
/// are dropped and overlong ones clamped, each with a warning.
pub fn parse_command_reply(
    reply: &str,
    valid_ids: &[ShapeId],
    clips: &[ClipPlan],
) -> Result<(Vec<ClipPlan>, Vec<String>), ReplyError> {
    let value = extract_json(reply)?;
    let Value::Object(map) = value else {
        return Err(ReplyError("expected a JSON object keyed by sentence index".into()));
    };
    let valid: HashSet<&str> = valid_ids.iter().map(ShapeId::as_str).collect();
    let mut out: Vec<ClipPlan> = clips.iter().map(|c| ClipPlan { commands: Vec::new(), ..c.clone() }).collect();
    let mut warnings = Vec::new();
    for (key, entry) in &map {
        let index: usize =
            key.trim().parse().map_err(|_| ReplyError(format!("key {key:?} is not a sentence index")))?;
        let list = command_list(entry).ok_or_else(|| ReplyError(format!("entry {key:?} has no command list")))?;
        let Some(clip) = out.iter_mut().find(|c| c.sentence_index == index) else {
            warnings.push(format!("sentence {index} does not exist; commands ignored"));
            continue;
        };
        for raw in list {
            match check_command(raw, &valid, clip.clip_length) {
                Ok((cmd, note)) => {
                    if let Some(n) = note {
                        warnings.push(format!("slide {} sentence {index}: {n}", clip.slide_number));
                    }
                    clip.commands.push(cmd);
                }
                Err(why) => warnings.push(format!("slide {} sentence {index}: dropped: {why}", clip.slide_number)),
            }
        }
    }
    Ok((out, warnings))
}

/// Removes AVATAR commands.
pub fn hide_avatar(clips: &mut [ClipPlan]) {
    for c in clips {
        c.commands.retain(|cmd| !matches!(cmd.effect, Effect::Avatar { .. }));
    }
}

/// Contents of `<deck>.plan.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderPlan {
    pub format_version: u32,
    pub timing: Timing,
    pub clips: Vec<ClipPlan>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Builds the plan for a deck from its predictions. Conduct replies are used
/// when present and `use_commands` is set; otherwise, or when a reply cannot
/// be parsed, every grounded object is framed.
pub fn plan_deck(
    units: &[SlideUnit],
    predictions: &PredictionsFile,
    searchable: &SearchableFile,
    timing: &Timing,
    use_commands: bool,
    avatar_visible: bool,
) -> Result<RenderPlan, InterchangeError> {
    let mut clips = Vec::new();
    let mut warnings = Vec::new();
    for unit in units {
        let grounding = match predictions.result_for(unit) {
            Some(r) => r?,
            None => {
                warnings.push(format!("slide {}: no predictions; clips left empty", unit.slide_number));
                GroundingResult::empty(unit.object_order(), unit.sentences.len())
                    .map_err(|e| InterchangeError::Format(e.to_string()))?
            }
        };
        let located: Vec<ShapeId> = searchable
            .slide(unit.slide_number)
            .map(|s| s.objects.iter().map(|o| o.shape_id.clone()).collect())
            .unwrap_or_default();
        let reply =
            predictions.slide(unit.slide_number).and_then(|p| p.conduct_reply.as_deref()).filter(|_| use_commands);
        let mut slide_clips = match reply
            .map(|r| parse_command_reply(r, &located, &empty_clips(unit.slide_number, &unit.sentences, timing)))
        {
            Some(Ok((c, w))) => {
                warnings.extend(w);
                c
            }
            other => {
                if let Some(Err(e)) = other {
                    warnings.push(format!("slide {}: {e}; using default effects", unit.slide_number));
                }
                let mut c = assign_default_effects(unit.slide_number, &unit.sentences, &grounding, timing);
                for clip in &mut c {
                    clip.commands.retain(|cmd| {
                        let ok = cmd.effect.ids().iter().all(|id| located.contains(id));
                        if !ok {
                            warnings.push(format!(
                                "slide {} sentence {}: {:?} has no position; not framed",
                                unit.slide_number, clip.sentence_index, cmd.effect
                            ));
                        }
                        ok
                    });
                }
                c
            }
        };
        if !avatar_visible {
            hide_avatar(&mut slide_clips);
        }
        clips.extend(slide_clips);
    }
    clips.sort_by_key(|c| (c.slide_number, c.sentence_index));
    Ok(RenderPlan { format_version: FORMAT_VERSION, timing: *timing, clips, warnings })
}

pub fn write_plan(path: &Path, plan: &RenderPlan) -> Result<(), InterchangeError> {
    write_canonical(path, plan)
}

pub fn read_plan(path: &Path) -> Result<RenderPlan, InterchangeError> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> ShapeId {
        ShapeId::new(s).unwrap()
    }

    fn sentence(words: usize) -> ScriptSentence {
        ScriptSentence { index: 0, text: vec!["word"; words].join(" ") }
    }

    #[test]
    fn durations() {
        let t = Timing::default();
        assert_eq!(sentence_duration(&sentence(25), &t), 25.0 * 60.0 / 150.0);
        assert_eq!(sentence_duration(&sentence(1), &t), 1.5);
        let fast = Timing { wpm: 300.0, ..t };
        assert_eq!(sentence_duration(&sentence(40), &fast) * 2.0, sentence_duration(&sentence(40), &t));
    }

    #[test]
    fn default_effects() {
        let sentences = vec![
            ScriptSentence { index: 0, text: "Look at these two points here.".into() },
            ScriptSentence { index: 1, text: "Moving on.".into() },
        ];
        let order: Vec<_> = (1..=4).map(ShapeId::element).collect();
        let g = GroundingResult::new(order, vec![vec![id("s2"), id("s4")], vec![]]).unwrap();
        let clips = assign_default_effects(3, &sentences, &g, &Timing::default());
        assert_eq!(clips.len(), 2);
        assert_eq!((clips[0].sentence_index, clips[1].sentence_index), (0, 1));
        assert_eq!(clips[0].commands.len(), 2);
        for c in &clips[0].commands {
            assert!(matches!(c.effect, Effect::Rectangle { .. }));
            assert_eq!((c.start_time, c.duration), (0.0, clips[0].clip_length));
        }
        assert!(clips[1].commands.is_empty());
    }

    #[test]
    fn command_json_shape() {
        let c = EffectCommand {
            effect: Effect::Point { start_pos: id("s1"), end_pos: id("s2") },
            start_time: 0.5,
            duration: 1.0,
        };
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"type":"POINT","param":{"start_pos":"s1","end_pos":"s2"},"start_time":0.5,"duration":1.0})
        );
        assert_eq!(serde_json::from_value::<EffectCommand>(v).unwrap(), c);
    }

    fn clip(length: f64) -> Vec<ClipPlan> {
        vec![ClipPlan { slide_number: 1, sentence_index: 0, clip_length: length, commands: vec![] }]
    }

    #[test]
    fn reply_commands_validated() {
        let valid: Vec<_> = (1..=4).map(ShapeId::element).collect();
        let reply = r#"{"0": {"shape_ids": ["s3"], "commands": [
            {"type": "RECTANGLE", "start_time": 0, "duration": 2, "param": {"position": "s3"}},
            {"type": "RECTANGLE", "start_time": 1, "duration": 5, "param": {"position": "s1"}},
            {"type": "POINT", "start_time": 0, "duration": 1, "param": {"start_pos": "s1", "end_pos": "s9"}},
            {"type": "WIGGLE", "start_time": 0, "duration": 1, "param": {}},
            {"type": "AVATAR", "start_time": 0, "duration": 1, "param": {"pose": "wave"}}
        ]}}"#;
        let (clips, warnings) = parse_command_reply(reply, &valid, &clip(3.0)).unwrap();
        let cmds = &clips[0].commands;
        assert_eq!(cmds.len(), 3);
        assert_eq!(
            cmds[0],
            EffectCommand { effect: Effect::Rectangle { position: id("s3") }, start_time: 0.0, duration: 2.0 }
        );
        assert_eq!((cmds[1].start_time, cmds[1].duration), (1.0, 2.0));
        assert_eq!(warnings.len(), 3);
        assert!(warnings.iter().any(|w| w.contains("clamped")));
        assert!(warnings.iter().any(|w| w.contains("s9")));

        let mut hidden = clips.clone();
        hide_avatar(&mut hidden);
        assert_eq!(hidden[0].commands.len(), 2);
    }

    #[test]
    fn reply_without_commands_is_empty_clip() {
        let (clips, _) = parse_command_reply(r#"{"0": {"shape_ids": []}}"#, &[], &clip(2.0)).unwrap();
        assert!(clips[0].commands.is_empty());
        assert!(parse_command_reply("no json here", &[], &clip(2.0)).is_err());
    }

    #[test]
    fn plan_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.plan.json");
        let mut clips = clip(2.25);
        clips[0].commands.push(EffectCommand {
            effect: Effect::Avatar { pose: "nod".into() },
            start_time: 0.0,
            duration: 1.0,
        });
        let plan = RenderPlan { format_version: FORMAT_VERSION, timing: Timing::default(), clips, warnings: vec![] };
        write_plan(&path, &plan).unwrap();
        let first = std::fs::read(&path).unwrap();
        assert_eq!(read_plan(&path).unwrap(), plan);
        write_plan(&path, &read_plan(&path).unwrap()).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}
