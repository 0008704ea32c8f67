//! Ground-truth and prediction files.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{GroundingResult, ShapeId, SlideUnit};

use super::canonical::{parse_json, read_json, write_canonical};
use super::{FormatVariant, InterchangeError, FORMAT_VERSION};

/// Sentence index to the ids it grounds to.
pub type SentenceMap = BTreeMap<usize, Vec<ShapeId>>;

/// A reference that does not resolve against the deck.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Offender {
    pub slide: u32,
    pub sentence: Option<usize>,
    pub id: Option<ShapeId>,
}

impl fmt::Display for Offender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "slide {}", self.slide)?;
        if let Some(s) = self.sentence {
            write!(f, " sentence {s}")?;
        }
        if let Some(id) = &self.id {
            write!(f, " id {id}")?;
        }
        Ok(())
    }
}

/// Reference groundings, keyed by slide number then sentence index.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    #[serde(default = "version")]
    pub format_version: u32,
    /// Who produced the reference; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    #[serde(default)]
    pub slides: BTreeMap<u32, SentenceMap>,
}

fn version() -> u32 {
    FORMAT_VERSION
}

impl GroundTruth {
    /// Ids listed for one sentence; absent entries mean the empty set.
    pub fn ids(&self, slide: u32, sentence: usize) -> &[ShapeId] {
        self.slides.get(&slide).and_then(|m| m.get(&sentence)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Checks every slide, sentence and id against the deck.
    pub fn validate(&self, units: &[SlideUnit]) -> Result<(), InterchangeError> {
        let mut offenders = Vec::new();
        for (&slide, sentences) in &self.slides {
            let Some(unit) = units.iter().find(|u| u.slide_number == slide) else {
                offenders.push(Offender { slide, sentence: None, id: None });
                continue;
            };
            let known: HashSet<ShapeId> = unit.object_order().into_iter().collect();
            for (&sentence, ids) in sentences {
                if sentence >= unit.sentences.len() {
                    offenders.push(Offender { slide, sentence: Some(sentence), id: None });
                }
                for id in ids.iter().filter(|id| !known.contains(*id)) {
                    offenders.push(Offender { slide, sentence: Some(sentence), id: Some(id.clone()) });
                }
            }
        }
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(InterchangeError::Validation { offenders })
        }
    }
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth, InterchangeError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| InterchangeError::Io { path: path.display().to_string(), source })?;
    if text.trim().is_empty() {
        return Ok(GroundTruth::default());
    }
    parse_json(&text, &path.display().to_string())
}

pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> Result<(), InterchangeError> {
    write_canonical(path, truth)
}

/// Groundings for one slide, optionally with the raw effect-command reply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlidePrediction {
    pub slide_number: u32,
    pub groundings: SentenceMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conduct_reply: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlideFailure {
    pub slide_number: u32,
    pub error: String,
}

/// Contents of `<deck>.pred.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionsFile {
    pub format_version: u32,
    pub grounder: String,
    pub variant: FormatVariant,
    pub slides: Vec<SlidePrediction>,
    #[serde(default)]
    pub failures: Vec<SlideFailure>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl PredictionsFile {
    pub fn new(grounder: impl Into<String>, variant: FormatVariant) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            grounder: grounder.into(),
            variant,
            slides: Vec::new(),
            failures: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push_result(&mut self, slide_number: u32, result: &GroundingResult, conduct_reply: Option<String>) {
        let groundings = result.groundings().iter().cloned().enumerate().collect();
        self.slides.push(SlidePrediction { slide_number, groundings, conduct_reply });
    }

    pub fn slide(&self, slide_number: u32) -> Option<&SlidePrediction> {
        self.slides.iter().find(|s| s.slide_number == slide_number)
    }

    /// Rebuilds the grounding result of `unit` from this file, if present.
    pub fn result_for(&self, unit: &SlideUnit) -> Option<Result<GroundingResult, InterchangeError>> {
        let slide = self.slide(unit.slide_number)?;
        let mut rows = vec![Vec::new(); unit.sentences.len()];
        for (&i, ids) in &slide.groundings {
            match rows.get_mut(i) {
                Some(row) => *row = ids.clone(),
                None => {
                    return Some(Err(InterchangeError::Validation {
                        offenders: vec![Offender { slide: unit.slide_number, sentence: Some(i), id: None }],
                    }))
                }
            }
        }
        Some(GroundingResult::new(unit.object_order(), rows).map_err(|e| InterchangeError::Format(e.to_string())))
    }
}

pub fn write_predictions(path: &Path, predictions: &PredictionsFile) -> Result<(), InterchangeError> {
    write_canonical(path, predictions)
}

pub fn read_predictions(path: &Path) -> Result<PredictionsFile, InterchangeError> {
    read_json(path)
}
