use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use s2sg_core::grounding::{ground_deck, GroundingConfig, LlmGrounder, PromptMode};
use s2sg_core::ingest::open_deck;
use s2sg_core::interchange::{read_json, FormatVariant};
use s2sg_llm::{ScriptedFixture, ScriptedResponder};

fn talk(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/talk").join(name)
}

#[derive(Deserialize)]
struct Replies {
    variants: BTreeMap<FormatVariant, BTreeMap<u32, Vec<String>>>,
}

#[test]
fn checked_in_fixture_is_fresh() {
    let (_, units) = open_deck(talk("talk.pptx")).unwrap();
    let replies: Replies = read_json(&talk("replies.json")).unwrap();
    let mut rebuilt = ScriptedFixture::new();
    for (variant, slides) in &replies.variants {
        let config = GroundingConfig { variant: *variant, ..GroundingConfig::default() };
        for unit in &units {
            rebuilt.record_slide(unit, &config, PromptMode::Eval, &slides[&unit.slide_number]);
        }
    }
    let stored: ScriptedFixture = read_json(&talk("scripted.json")).unwrap();
    assert_eq!(stored, rebuilt, "regenerate with: cargo run -p s2sg-llm --example make_scripted_fixture");
}

#[test]
fn every_variant_grounds_without_misses() {
    let (_, units) = open_deck(talk("talk.pptx")).unwrap();
    let grounder = LlmGrounder::new(ScriptedResponder::from_path(&talk("scripted.json")).unwrap(), PromptMode::Eval);
    for variant in FormatVariant::ALL {
        let config = GroundingConfig { variant, ..GroundingConfig::default() };
        let out = ground_deck(&units, &grounder, &config).unwrap();
        assert!(out.failures.is_empty(), "{variant}: {:?}", out.failures);
        assert_eq!(out.results.len(), 5);
    }
}

#[test]
fn unknown_prompt_is_a_fixture_miss() {
    let (_, units) = open_deck(talk("talk.pptx")).unwrap();
    let grounder = LlmGrounder::new(ScriptedResponder::from_path(&talk("scripted.json")).unwrap(), PromptMode::Conduct);
    let err = ground_deck(&units[..1], &grounder, &GroundingConfig::default()).unwrap_err();
    assert!(err.to_string().contains("no scripted reply for prompt hash"), "{err}");
}
