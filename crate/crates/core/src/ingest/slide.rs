//! Text-object extraction from slide and notes parts.

use std::collections::BTreeMap;

use crate::geometry::{EmuRect, NormalizedRect, SlideDimensions};
use crate::model::{Role, ScriptSentence, ShapeId, SlideUnit, StyleInfo, TextObjectGroup};

use super::lines::{build_hierarchy_from, split_lines};
use super::script::segment_script;
use super::xml::{self, Node};
use super::{DeckMeta, IngestError};

/// A text-bearing shape as found in the slide part.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct TextShape {
    pub frame: Option<EmuRect>,
    pub role: Role,
    pub font_size_pt: Option<f64>,
    /// Object text, one line per `levels` entry.
    pub content: String,
    pub levels: Vec<u32>,
}

/// Affine map from a group's child coordinate space to slide EMU.
#[derive(Clone, Copy, Debug)]
struct Transform {
    sx: f64,
    sy: f64,
    dx: f64,
    dy: f64,
}

impl Transform {
    const IDENTITY: Transform = Transform { sx: 1.0, sy: 1.0, dx: 0.0, dy: 0.0 };

    fn apply(&self, r: EmuRect) -> EmuRect {
        let x = (r.x as f64 * self.sx + self.dx).round() as i64;
        let y = (r.y as f64 * self.sy + self.dy).round() as i64;
        let cx = (r.cx as f64 * self.sx).round() as i64;
        let cy = (r.cy as f64 * self.sy).round() as i64;
        EmuRect { x, y, cx, cy }
    }

    fn then(&self, inner: Transform) -> Transform {
        Transform {
            sx: self.sx * inner.sx,
            sy: self.sy * inner.sy,
            dx: self.sx * inner.dx + self.dx,
            dy: self.sy * inner.dy + self.dy,
        }
    }
}

fn int_attr(node: &Node, key: &str) -> Option<i64> {
    node.attr(key).and_then(|v| v.parse().ok())
}

fn point(node: Option<&Node>, kx: &str, ky: &str) -> Option<(i64, i64)> {
    let n = node?;
    Some((int_attr(n, kx)?, int_attr(n, ky)?))
}

fn frame_of(xfrm: &Node) -> Option<EmuRect> {
    let (x, y) = point(xfrm.child("off"), "x", "y")?;
    let (cx, cy) = point(xfrm.child("ext"), "cx", "cy")?;
    Some(EmuRect { x, y, cx, cy })
}

fn group_transform(grp: &Node) -> Transform {
    let Some(xfrm) = grp.path(&["grpSpPr", "xfrm"]) else {
        return Transform::IDENTITY;
    };
    let (Some(outer), Some((chx, chy)), Some((chcx, chcy))) =
        (frame_of(xfrm), point(xfrm.child("chOff"), "x", "y"), point(xfrm.child("chExt"), "cx", "cy"))
    else {
        return Transform::IDENTITY;
    };
    let sx = if chcx > 0 { outer.cx as f64 / chcx as f64 } else { 1.0 };
    let sy = if chcy > 0 { outer.cy as f64 / chcy as f64 } else { 1.0 };
    Transform { sx, sy, dx: outer.x as f64 - chx as f64 * sx, dy: outer.y as f64 - chy as f64 * sy }
}

fn role_of(sp: &Node) -> Role {
    if let Some(ph) = sp.path(&["nvSpPr", "nvPr", "ph"]) {
        return match ph.attr("type") {
            Some("title" | "ctrTitle") => Role::Title,
            None | Some("body" | "subTitle" | "obj") => Role::Body,
            Some(_) => Role::Other,
        };
    }
    let text_box = sp.path(&["nvSpPr", "cNvSpPr"]).and_then(|n| n.attr("txBox")) == Some("1");
    if text_box {
        Role::Body
    } else {
        Role::Other
    }
}

/// Paragraph text with `a:br` rendered as newlines, plus its level.
fn paragraph(p: &Node) -> (String, u32) {
    let level = p.child("pPr").and_then(|n| n.attr("lvl")).and_then(|v| v.parse().ok()).unwrap_or(0);
    let mut text = String::new();
    for c in &p.children {
        match c.name.as_str() {
            "r" | "fld" => {
                if let Some(t) = c.child("t") {
                    text.push_str(&t.text);
                }
            }
            "br" => text.push('\n'),
            _ => {}
        }
    }
    (text, level)
}

/// First explicit run size in the body, in points.
fn font_size(body: &Node) -> Option<f64> {
    let run_size = body.children_named("p").find_map(|p| {
        p.children
            .iter()
            .filter(|c| c.name == "r" || c.name == "fld")
            .find_map(|r| r.child("rPr").and_then(|n| int_attr(n, "sz")))
    });
    let list_default = || body.path(&["lstStyle", "lvl1pPr", "defRPr"]).and_then(|n| int_attr(n, "sz"));
    run_size.or_else(list_default).filter(|&sz| sz > 0).map(|sz| sz as f64 / 100.0)
}

/// Object text and per-line levels for a `txBody`.
fn body_text(body: &Node) -> (String, Vec<u32>) {
    let mut lines = Vec::new();
    let mut levels = Vec::new();
    for p in body.children_named("p") {
        let (text, level) = paragraph(p);
        for line in text.split('\n') {
            lines.push(line.to_string());
            levels.push(level);
        }
    }
    (lines.join("\n"), levels)
}

fn collect_shapes(tree: &Node, transform: Transform, out: &mut Vec<TextShape>) {
    for child in &tree.children {
        match child.name.as_str() {
            "sp" => {
                let Some(body) = child.child("txBody") else { continue };
                let (content, levels) = body_text(body);
                if content.trim().is_empty() {
                    continue;
                }
                let frame = child.path(&["spPr", "xfrm"]).and_then(frame_of).map(|f| transform.apply(f));
                out.push(TextShape { frame, role: role_of(child), font_size_pt: font_size(body), content, levels });
            }
            "grpSp" => collect_shapes(child, transform.then(group_transform(child)), out),
            // pictures, tables, charts, connectors, alternate content
            _ => {}
        }
    }
}

/// Text-bearing shapes of a slide part in document order.
pub(crate) fn text_shapes(slide_xml: &str, part: &str) -> Result<Vec<TextShape>, IngestError> {
    let root = xml::parse(slide_xml).map_err(|message| IngestError::Xml { part: part.to_string(), message })?;
    let tree = root
        .path(&["cSld", "spTree"])
        .ok_or_else(|| IngestError::Malformed { part: part.to_string(), message: "no shape tree".into() })?;
    let mut out = Vec::new();
    collect_shapes(tree, Transform::IDENTITY, &mut out);
    Ok(out)
}

/// Script text from a notes part: the body placeholder's paragraphs.
pub(crate) fn notes_text(notes_xml: &str, part: &str) -> Result<String, IngestError> {
    let root = xml::parse(notes_xml).map_err(|message| IngestError::Xml { part: part.to_string(), message })?;
    let Some(tree) = root.path(&["cSld", "spTree"]) else {
        return Ok(String::new());
    };
    let mut paragraphs = Vec::new();
    for sp in tree.children_named("sp") {
        let is_body = sp.path(&["nvSpPr", "nvPr", "ph"]).and_then(|ph| ph.attr("type")) == Some("body");
        if let (true, Some(body)) = (is_body, sp.child("txBody")) {
            paragraphs.extend(body.children_named("p").map(|p| paragraph(p).0));
        }
    }
    Ok(paragraphs.join("\n"))
}

/// Assembles a slide unit from already-extracted shapes and script text.
pub(crate) fn assemble_unit(
    slide_number: u32,
    shapes: &[TextShape],
    notes: Option<&str>,
    dimensions: SlideDimensions,
) -> SlideUnit {
    let mut next_element = 1;
    let mut objects = Vec::new();
    for shape in shapes {
        let group_id = ShapeId::group(objects.len() + 1);
        let lines = split_lines(&shape.content, &shape.levels, &group_id);
        if lines.is_empty() {
            continue;
        }
        let mut content_list = build_hierarchy_from(&lines, next_element);
        next_element += lines.len();

        let position = shape.frame.map(|f| NormalizedRect::<f64>::from_emu(f, dimensions));
        if let Some(rect) = position {
            let count = lines.len();
            let mut k = 0;
            for root in &mut content_list {
                assign_slices(root, &rect, &mut k, count);
            }
        }
        let style = StyleInfo { font_size_pt: shape.font_size_pt, position, role: Some(shape.role) };
        objects.push(TextObjectGroup { group_shape_id: group_id, content_list, style: Some(style) });
    }
    let sentences: Vec<ScriptSentence> = notes.map(segment_script).unwrap_or_default();
    SlideUnit { slide_number, objects, sentences, dimensions }
}

fn assign_slices(e: &mut crate::model::SentenceElement, rect: &NormalizedRect<f64>, k: &mut usize, count: usize) {
    e.position = Some(rect.line_slice(*k, count));
    *k += 1;
    for c in &mut e.children {
        assign_slices(c, rect, k, count);
    }
}

/// Positions of every text object and sentence element of one slide part.
///
/// Objects map to their normalized frame; elements to an equal-height band
/// of that frame chosen by line index. Shapes without an explicit frame are
/// absent from the map.
pub fn extract_positions(
    slide_xml: &str,
    meta: &DeckMeta,
) -> Result<BTreeMap<ShapeId, NormalizedRect<f64>>, IngestError> {
    let shapes = text_shapes(slide_xml, "slide")?;
    let unit = assemble_unit(1, &shapes, None, meta.dimensions());
    let mut out = BTreeMap::new();
    for g in &unit.objects {
        if let Some(rect) = g.style.as_ref().and_then(|s| s.position) {
            out.insert(g.group_shape_id.clone(), rect);
        }
        for e in g.elements() {
            if let Some(rect) = e.position {
                out.insert(e.shape_id.clone(), rect);
            }
        }
    }
    Ok(out)
}
