//! Deck ingest: reads a presentation archive into slide units.
//!
//! The archive is read once, serially, into memory; slides are then parsed
//! in parallel. Slide order follows the presentation part's slide list.

mod lines;
mod script;
mod slide;
mod xml;

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Seek};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::SlideDimensions;
use crate::model::SlideUnit;

pub use lines::{build_hierarchy, build_hierarchy_from, split_lines, RawLine};
pub use script::segment_script;
pub use slide::extract_positions;

const PRESENTATION: &str = "ppt/presentation.xml";
const REL_SLIDE: &str = "/relationships/slide";
const REL_NOTES: &str = "/relationships/notesSlide";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("not a zip archive: {0}")]
    NotAnArchive(String),
    #[error("archive is not a presentation deck: {0} is missing")]
    NotADeck(String),
    #[error("deck is missing part {0}")]
    MissingPart(String),
    #[error("XML error in {part}: {message}")]
    Xml { part: String, message: String },
    #[error("malformed part {part}: {message}")]
    Malformed { part: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckMeta {
    pub slide_count: usize,
    pub slide_width_emu: u64,
    pub slide_height_emu: u64,
}

impl DeckMeta {
    pub fn dimensions(&self) -> SlideDimensions {
        SlideDimensions { width_emu: self.slide_width_emu, height_emu: self.slide_height_emu }
    }
}

/// Opens a deck file and returns one unit per slide, in slide order.
pub fn open_deck(path: impl AsRef<Path>) -> Result<(DeckMeta, Vec<SlideUnit>), IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    read_deck(file)
}

struct SlideParts {
    number: u32,
    part: String,
    xml: String,
    notes: Option<(String, String)>,
}

/// As [`open_deck`], over any seekable reader.
pub fn read_deck<R: Read + Seek>(reader: R) -> Result<(DeckMeta, Vec<SlideUnit>), IngestError> {
    let mut archive = zip::ZipArchive::new(reader).map_err(|e| IngestError::NotAnArchive(e.to_string()))?;
    let presentation = match read_part(&mut archive, PRESENTATION) {
        Err(IngestError::MissingPart(p)) => return Err(IngestError::NotADeck(p)),
        other => other?,
    };
    let pres = xml::parse(&presentation).map_err(|message| IngestError::Xml { part: PRESENTATION.into(), message })?;

    let size = pres.child("sldSz");
    let dim = |key: &str| size.and_then(|n| n.attr(key)).and_then(|v| v.parse::<u64>().ok()).filter(|&v| v > 0);
    let dimensions = match (dim("cx"), dim("cy")) {
        (Some(w), Some(h)) => SlideDimensions { width_emu: w, height_emu: h },
        _ => {
            return Err(IngestError::Malformed {
                part: PRESENTATION.into(),
                message: "slide size (sldSz) missing or not positive".into(),
            })
        }
    };

    let rels = relationships(&mut archive, PRESENTATION)?;
    let slide_targets: Vec<String> = match pres.child("sldIdLst") {
        Some(list) => list
            .children_named("sldId")
            .map(|s| {
                // The numeric id and r:id share a local name; pick the one that names a relationship.
                s.attrs
                    .iter()
                    .find_map(|(_, v)| rels.get(v.as_str()))
                    .filter(|(ty, _)| ty.ends_with(REL_SLIDE))
                    .map(|(_, target)| target.clone())
                    .ok_or_else(|| IngestError::Malformed {
                        part: PRESENTATION.into(),
                        message: "slide id without a slide relationship".into(),
                    })
            })
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };

    let mut parts = Vec::with_capacity(slide_targets.len());
    for (k, target) in slide_targets.iter().enumerate() {
        let xml = read_part(&mut archive, target)?;
        let slide_rels = relationships(&mut archive, target)?;
        let notes_target = slide_rels.values().find(|(ty, _)| ty.ends_with(REL_NOTES)).map(|(_, t)| t.clone());
        let notes = match notes_target {
            Some(t) => match read_part(&mut archive, &t) {
                Ok(x) => Some((t, x)),
                // dangling notes relationship: treat as no notes
                Err(IngestError::MissingPart(_)) => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        parts.push(SlideParts { number: k as u32 + 1, part: target.clone(), xml, notes });
    }

    let units = parts
        .par_iter()
        .map(|p| {
            let shapes = slide::text_shapes(&p.xml, &p.part)?;
            let notes = p.notes.as_ref().map(|(part, x)| slide::notes_text(x, part)).transpose()?;
            Ok(slide::assemble_unit(p.number, &shapes, notes.as_deref(), dimensions))
        })
        .collect::<Result<Vec<_>, IngestError>>()?;

    let meta = DeckMeta {
        slide_count: units.len(),
        slide_width_emu: dimensions.width_emu,
        slide_height_emu: dimensions.height_emu,
    };
    Ok((meta, units))
}

fn read_part<R: Read + Seek>(archive: &mut zip::ZipArchive<R>, name: &str) -> Result<String, IngestError> {
    let mut entry = archive.by_name(name).map_err(|_| IngestError::MissingPart(name.to_string()))?;
    let mut out = String::new();
    entry
        .read_to_string(&mut out)
        .map_err(|e| IngestError::Malformed { part: name.to_string(), message: e.to_string() })?;
    Ok(out)
}

/// Relationship id to (type, resolved target part name) for `part`.
fn relationships<R: Read + Seek>(
    archive: &mut zip::ZipArchive<R>,
    part: &str,
) -> Result<HashMap<String, (String, String)>, IngestError> {
    let (dir, file) = part.rsplit_once('/').unwrap_or(("", part));
    let rels_name = if dir.is_empty() { format!("_rels/{file}.rels") } else { format!("{dir}/_rels/{file}.rels") };
    let xml_text = match read_part(archive, &rels_name) {
        Ok(x) => x,
        Err(IngestError::MissingPart(_)) => return Ok(HashMap::new()),
        Err(e) => return Err(e),
    };
    let root = xml::parse(&xml_text).map_err(|message| IngestError::Xml { part: rels_name.clone(), message })?;
    Ok(root
        .children_named("Relationship")
        .filter(|r| r.attr("TargetMode") != Some("External"))
        .filter_map(|r| {
            let id = r.attr("Id")?;
            let ty = r.attr("Type")?;
            let target = r.attr("Target")?;
            Some((id.to_string(), (ty.to_string(), resolve(dir, target))))
        })
        .collect())
}

/// Resolves a relationship target against the source part's directory.
fn resolve(base_dir: &str, target: &str) -> String {
    let mut segments: Vec<&str> = if let Some(abs) = target.strip_prefix('/') {
        return normalize(abs.split('/').collect());
    } else {
        base_dir.split('/').filter(|s| !s.is_empty()).collect()
    };
    segments.extend(target.split('/'));
    normalize(segments)
}

fn normalize(segments: Vec<&str>) -> String {
    let mut out: Vec<&str> = Vec::new();
    for s in segments {
        match s {
            "" | "." => {}
            ".." => {
                out.pop();
            }
            s => out.push(s),
        }
    }
    out.join("/")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Cursor, Write};

    #[test]
    fn resolves_relative_targets() {
        assert_eq!(resolve("ppt", "slides/slide1.xml"), "ppt/slides/slide1.xml");
        assert_eq!(resolve("ppt/slides", "../notesSlides/notesSlide1.xml"), "ppt/notesSlides/notesSlide1.xml");
        assert_eq!(resolve("ppt/slides", "/ppt/media/a.png"), "ppt/media/a.png");
    }

    fn zip_of(parts: &[(&str, &str)]) -> Cursor<Vec<u8>> {
        let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
        for (name, body) in parts {
            w.start_file(*name, zip::write::SimpleFileOptions::default()).unwrap();
            w.write_all(body.as_bytes()).unwrap();
        }
        let mut c = w.finish().unwrap();
        c.set_position(0);
        c
    }

    #[test]
    fn non_deck_zip_is_a_format_error() {
        let err = read_deck(zip_of(&[("hello.txt", "hi")])).unwrap_err();
        assert!(matches!(err, IngestError::NotADeck(ref p) if p == PRESENTATION), "{err}");
    }

    #[test]
    fn garbage_is_not_an_archive() {
        let err = read_deck(Cursor::new(b"definitely not a zip".to_vec())).unwrap_err();
        assert!(matches!(err, IngestError::NotAnArchive(_)));
    }

    #[test]
    fn missing_slide_part_is_named() {
        let pres = r#"<p:presentation xmlns:p="p" xmlns:r="r"><p:sldIdLst><p:sldId id="256" r:id="rId2"/></p:sldIdLst><p:sldSz cx="100" cy="100"/></p:presentation>"#;
        let rels = r#"<Relationships><Relationship Id="rId2" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/slide" Target="slides/slide1.xml"/></Relationships>"#;
        let err = read_deck(zip_of(&[(PRESENTATION, pres), ("ppt/_rels/presentation.xml.rels", rels)])).unwrap_err();
        assert!(matches!(err, IngestError::MissingPart(ref p) if p == "ppt/slides/slide1.xml"), "{err}");
    }

    #[test]
    fn empty_slide_yields_empty_unit() {
        let pres = r#"<p:presentation xmlns:p="p" xmlns:r="r"><p:sldIdLst><p:sldId id="256" r:id="rId2"/></p:sldIdLst><p:sldSz cx="100" cy="50"/></p:presentation>"#;
        let rels = r#"<Relationships><Relationship Id="rId2" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/slide" Target="slides/slide1.xml"/></Relationships>"#;
        let slide = r#"<p:sld xmlns:p="p"><p:cSld><p:spTree/></p:cSld></p:sld>"#;
        let (meta, units) = read_deck(zip_of(&[
            (PRESENTATION, pres),
            ("ppt/_rels/presentation.xml.rels", rels),
            ("ppt/slides/slide1.xml", slide),
        ]))
        .unwrap();
        assert_eq!(meta, DeckMeta { slide_count: 1, slide_width_emu: 100, slide_height_emu: 50 });
        assert!(units[0].objects.is_empty());
        assert!(units[0].sentences.is_empty());
    }
}
