use s2sg_core::ingest::{open_deck, DeckMeta, IngestError};
use s2sg_core::{Rect, Role, ShapeId, SlideUnit};

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn close(a: &Rect, b: (f64, f64, f64, f64)) -> bool {
    [(a.x0, b.0), (a.y0, b.1), (a.x1, b.2), (a.y1, b.3)].iter().all(|(x, y)| (x - y).abs() < 1e-6)
}

fn texts(unit: &SlideUnit) -> Vec<(String, u32)> {
    unit.elements().iter().map(|e| (e.content.clone(), e.indent)).collect()
}

#[test]
fn three_slide_deck() {
    let (meta, units) = open_deck(fixture("ingest/three_slides.pptx")).unwrap();
    assert_eq!(meta, DeckMeta { slide_count: 3, slide_width_emu: 9_144_000, slide_height_emu: 6_858_000 });
    assert_eq!(units.iter().map(|u| u.slide_number).collect::<Vec<_>>(), [1, 2, 3]);
    for u in &units {
        u.validate().unwrap();
    }

    let s1 = &units[0];
    assert_eq!(texts(s1), [("Script-to-Slide Grounding".to_string(), 0)]);
    let style = s1.objects[0].style.clone().unwrap();
    assert_eq!(style.role, Some(Role::Title));
    assert_eq!(style.font_size_pt, Some(40.0));
    assert!(close(&style.position.unwrap(), (0.1, 1.0 / 7.5, 0.3, 2.0 / 7.5)));
    let notes: Vec<_> = s1.sentences.iter().map(|s| s.text.as_str()).collect();
    assert_eq!(notes, ["This talk introduces grounding.", "It maps narration to slide text."]);

    let s2 = &units[1];
    assert_eq!(s2.objects.len(), 2);
    assert_eq!(
        texts(s2),
        [
            ("Pipeline".to_string(), 0),
            ("Ingest the deck".to_string(), 0),
            ("Read slide XML".to_string(), 1),
            ("Build the hierarchy".to_string(), 1),
            ("Ground each sentence".to_string(), 0),
        ]
    );
    let body = &s2.objects[1];
    assert_eq!(body.content_list.len(), 2);
    assert_eq!(body.content_list[0].children.len(), 2);
    assert_eq!(body.role(), Some(Role::Body));
    let frame = body.style.as_ref().unwrap().position.unwrap();
    assert!(close(&frame, (0.1, 1828800.0 / 6858000.0, 0.9, 0.8)));
    let band = (0.8 - 1828800.0 / 6858000.0) / 4.0;
    let y0 = 1828800.0 / 6858000.0;
    for (k, e) in body.elements().iter().enumerate() {
        let expect = (0.1, y0 + band * k as f64, 0.9, y0 + band * (k + 1) as f64);
        assert!(close(&e.position.unwrap(), expect), "line {k}: {:?}", e.position);
    }
    let order: Vec<_> = s2.object_order().iter().map(ShapeId::to_string).collect();
    assert_eq!(order, ["s1", "s2", "s3", "s4", "s5"]);
    let notes: Vec<_> = s2.sentences.iter().map(|s| s.text.as_str()).collect();
    assert_eq!(notes, ["The pipeline has two stages.", "Accuracy was 92.4 percent.", "Grounding comes last"]);

    let s3 = &units[2];
    assert_eq!(texts(s3), [("Full bleed".to_string(), 0)]);
    assert!(close(&s3.objects[0].style.as_ref().unwrap().position.unwrap(), (0.0, 0.0, 1.0, 1.0)));
    assert!(s3.sentences.is_empty());
}

#[test]
fn talk_deck_has_five_slides_of_five_sentences() {
    let (_, units) = open_deck(fixture("talk/talk.pptx")).unwrap();
    assert_eq!(units.len(), 5);
    assert!(units.iter().all(|u| u.sentences.len() == 5));
    assert_eq!(units[3].sentences[1].text, "The hit rate rose to 92.4 percent.");
    assert_eq!(units[3].objects.len(), 3);
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(open_deck("/nonexistent/deck.pptx"), Err(IngestError::Io { .. })));
}
