//! Token-overlap baseline grounder.

use std::collections::HashSet;

use crate::model::{GroundingResult, ScriptSentence, SlideUnit};

/// Whitespace split, lowercased, with leading and trailing punctuation removed.
pub fn tokens(text: &str) -> HashSet<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Fraction of the object's tokens that occur in the sentence.
pub fn overlap_score(sentence: &HashSet<String>, object: &HashSet<String>) -> f64 {
    if object.is_empty() {
        return 0.0;
    }
    object.intersection(sentence).count() as f64 / object.len() as f64
}

/// Selects every element whose overlap score reaches `theta`.
pub fn lexical_ground(unit: &SlideUnit, sentences: &[ScriptSentence], theta: f64) -> GroundingResult {
    let objects: Vec<_> = unit.elements().into_iter().map(|e| (e.shape_id.clone(), tokens(&e.content))).collect();
    let rows = sentences
        .iter()
        .map(|s| {
            let st = tokens(&s.text);
            objects
                .iter()
                .filter(|(_, ot)| !ot.is_empty() && overlap_score(&st, ot) >= theta)
                .map(|(id, _)| id.clone())
                .collect()
        })
        .collect();
    GroundingResult::new(unit.object_order(), rows).expect("ids come from the unit")
}
