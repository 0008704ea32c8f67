//! Builds a scripted-responder fixture from hand-written replies.
//!
//! usage: make_scripted_fixture <deck> <replies.json> <out.json>
//!
//! The replies file maps variant label to slide number to the replies of
//! that slide's conversation, in order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use s2sg_core::grounding::{GroundingConfig, PromptMode};
use s2sg_core::ingest::open_deck;
use s2sg_core::interchange::{read_json, write_canonical, FormatVariant};
use s2sg_llm::ScriptedFixture;

#[derive(Deserialize)]
struct Replies {
    #[allow(dead_code)]
    format_version: u32,
    variants: BTreeMap<FormatVariant, BTreeMap<u32, Vec<String>>>,
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [deck, replies, out] = args.as_slice() else {
        eprintln!("usage: make_scripted_fixture <deck> <replies.json> <out.json>");
        std::process::exit(2);
    };
    let (_, units) = open_deck(deck).expect("deck");
    let replies: Replies = read_json(Path::new(replies)).expect("replies");
    let mut fixture = ScriptedFixture::new();
    for (variant, slides) in &replies.variants {
        let config = GroundingConfig { variant: *variant, ..GroundingConfig::default() };
        for unit in &units {
            if let Some(r) = slides.get(&unit.slide_number) {
                fixture.record_slide(unit, &config, PromptMode::Eval, r);
            }
        }
    }
    write_canonical(Path::new(out), &fixture).expect("write fixture");
    println!("{} replies", fixture.replies.len());
}
