//! Slide documents: the per-slide serialization handed to grounders.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::geometry::{NormalizedRect, SlideDimensions};
use crate::ingest::DeckMeta;
use crate::model::{Role, ScriptSentence, SentenceElement, ShapeId, SlideUnit, StyleInfo, TextObjectGroup};

use super::canonical::canonical_text;
use super::InterchangeError;

/// Which optional information a slide document carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormatVariant {
    /// Nest elements by indent (and emit indent levels) instead of a flat list.
    pub hierarchical: bool,
    /// Emit font size, position and role.
    pub stylistic: bool,
}

impl FormatVariant {
    pub const FULL: FormatVariant = FormatVariant { hierarchical: true, stylistic: true };

    /// The four variants, hierarchical-and-stylistic first.
    pub const ALL: [FormatVariant; 4] = [
        FormatVariant { hierarchical: true, stylistic: true },
        FormatVariant { hierarchical: false, stylistic: true },
        FormatVariant { hierarchical: true, stylistic: false },
        FormatVariant { hierarchical: false, stylistic: false },
    ];

    pub fn label(&self) -> &'static str {
        match (self.hierarchical, self.stylistic) {
            (true, true) => "hier+style",
            (true, false) => "hier",
            (false, true) => "style",
            (false, false) => "plain",
        }
    }
}

impl Default for FormatVariant {
    fn default() -> Self {
        Self::FULL
    }
}

impl fmt::Display for FormatVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FormatVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| format!("unknown variant {s:?}; expected hier+style, hier, style or plain"))
    }
}

impl Serialize for FormatVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for FormatVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One slide rendered under a [`FormatVariant`].
#[derive(Clone, Debug, PartialEq)]
pub struct SlideDocument {
    pub slide_number: u32,
    pub variant: FormatVariant,
    value: Value,
}

impl SlideDocument {
    pub fn value(&self) -> &Value {
        &self.value
    }

    /// Byte-deterministic canonical JSON text.
    pub fn canonical(&self) -> String {
        canonical_text(&self.value)
    }

    pub fn into_value(self) -> Value {
        self.value
    }
}

fn rect_value(r: &NormalizedRect<f64>) -> Value {
    json!({"x0": r.x0, "y0": r.y0, "x1": r.x1, "y1": r.y1})
}

fn element_value(e: &SentenceElement, v: FormatVariant, out: &mut Vec<Value>) {
    let mut m = Map::new();
    m.insert("shape_id".into(), json!(e.shape_id));
    m.insert("content".into(), json!(e.content));
    if v.stylistic {
        if let Some(p) = &e.position {
            m.insert("position".into(), rect_value(p));
        }
    }
    if v.hierarchical {
        m.insert("indent".into(), json!(e.indent));
        let mut children = Vec::new();
        for c in &e.children {
            element_value(c, v, &mut children);
        }
        m.insert("children".into(), Value::Array(children));
        out.push(Value::Object(m));
    } else {
        out.push(Value::Object(m));
        for c in &e.children {
            element_value(c, v, out);
        }
    }
}

fn object_value(g: &TextObjectGroup, v: FormatVariant) -> Value {
    let mut m = Map::new();
    m.insert("shape_id".into(), json!(g.group_shape_id));
    let mut children = Vec::new();
    for e in &g.content_list {
        element_value(e, v, &mut children);
    }
    m.insert("children".into(), Value::Array(children));
    if let (true, Some(style)) = (v.stylistic, &g.style) {
        if let Some(pt) = style.font_size_pt {
            m.insert("font_size_pt".into(), json!(pt));
        }
        if let Some(p) = &style.position {
            m.insert("position".into(), rect_value(p));
        }
        if let Some(role) = style.role {
            m.insert("role".into(), json!(role));
        }
    }
    Value::Object(m)
}

/// Serializes a slide unit under `variant`.
///
/// Shape ids and contents are identical across variants; only nesting,
/// indent levels and style fields differ.
pub fn serialize_slide(unit: &SlideUnit, variant: FormatVariant) -> SlideDocument {
    let value = json!({
        "slide_number": unit.slide_number,
        "objects": unit.objects.iter().map(|g| object_value(g, variant)).collect::<Vec<_>>(),
        "sentences": unit.sentences,
    });
    SlideDocument { slide_number: unit.slide_number, variant, value }
}

/// Contents of `<deck>.slides.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlidesFile {
    pub format_version: u32,
    pub deck: DeckMeta,
    pub variant: FormatVariant,
    pub slides: Vec<Value>,
}

impl SlidesFile {
    pub fn new(meta: DeckMeta, units: &[SlideUnit], variant: FormatVariant) -> Self {
        Self {
            format_version: super::FORMAT_VERSION,
            deck: meta,
            variant,
            slides: units.iter().map(|u| serialize_slide(u, variant).into_value()).collect(),
        }
    }

    /// Rebuilds slide units. Non-hierarchical files yield flat forests with
    /// indent 0; non-stylistic files yield units without style.
    pub fn units(&self) -> Result<Vec<SlideUnit>, InterchangeError> {
        self.slides.iter().map(|doc| unit_from_document(doc, self.deck.dimensions())).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    slide_number: u32,
    objects: Vec<RawNode>,
    sentences: Vec<ScriptSentence>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    shape_id: ShapeId,
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    indent: Option<u32>,
    #[serde(default)]
    children: Vec<RawNode>,
    #[serde(default)]
    font_size_pt: Option<f64>,
    #[serde(default)]
    position: Option<NormalizedRect<f64>>,
    #[serde(default)]
    role: Option<Role>,
}

fn element_from(node: RawNode) -> Result<SentenceElement, InterchangeError> {
    let content =
        node.content.ok_or_else(|| InterchangeError::Format(format!("element {} has no content", node.shape_id)))?;
    Ok(SentenceElement {
        shape_id: node.shape_id,
        content,
        indent: node.indent.unwrap_or(0),
        position: node.position,
        children: node.children.into_iter().map(element_from).collect::<Result<_, _>>()?,
    })
}

/// Parses a serialized slide document back into a unit.
pub fn unit_from_document(doc: &Value, dimensions: SlideDimensions) -> Result<SlideUnit, InterchangeError> {
    let raw: RawDoc = serde_json::from_value(doc.clone()).map_err(|e| InterchangeError::Format(e.to_string()))?;
    let objects = raw
        .objects
        .into_iter()
        .map(|o| {
            let style = StyleInfo { font_size_pt: o.font_size_pt, position: o.position, role: o.role };
            Ok(TextObjectGroup {
                group_shape_id: o.shape_id,
                content_list: o.children.into_iter().map(element_from).collect::<Result<_, _>>()?,
                style: (!style.is_empty()).then_some(style),
            })
        })
        .collect::<Result<_, InterchangeError>>()?;
    let unit = SlideUnit { slide_number: raw.slide_number, objects, sentences: raw.sentences, dimensions };
    unit.validate().map_err(|e| InterchangeError::Format(e.to_string()))?;
    Ok(unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_hierarchy_from, RawLine};
    use std::collections::BTreeSet;

    fn sample_unit() -> SlideUnit {
        let g = ShapeId::group(2);
        let lines: Vec<RawLine> = [("Root", 0), ("Child", 1), ("Grandchild", 2), ("Second", 0)]
            .iter()
            .map(|(t, i)| RawLine { text: t.to_string(), indent: *i, source_object: g.clone() })
            .collect();
        let body = build_hierarchy_from(&lines, 2);
        let rect = NormalizedRect::new(0.1, 0.2, 0.9, 0.8).unwrap();
        SlideUnit {
            slide_number: 4,
            objects: vec![
                TextObjectGroup {
                    group_shape_id: ShapeId::group(1),
                    content_list: vec![SentenceElement {
                        position: Some(NormalizedRect::new(0.0, 0.0, 1.0, 0.1).unwrap()),
                        ..SentenceElement::leaf(ShapeId::element(1), "Title", 0)
                    }],
                    style: Some(StyleInfo {
                        font_size_pt: Some(40.0),
                        position: Some(NormalizedRect::new(0.0, 0.0, 1.0, 0.1).unwrap()),
                        role: Some(Role::Title),
                    }),
                },
                TextObjectGroup {
                    group_shape_id: g,
                    content_list: body,
                    style: Some(StyleInfo {
                        font_size_pt: Some(1.0 / 3.0),
                        position: Some(rect),
                        role: Some(Role::Body),
                    }),
                },
            ],
            sentences: vec![
                ScriptSentence { index: 0, text: "About the root.".into() },
                ScriptSentence { index: 1, text: "And \"quoted\" text.".into() },
            ],
            dimensions: SlideDimensions::DEFAULT,
        }
    }

    #[test]
    fn full_variant_has_nesting_and_style() {
        let doc = serialize_slide(&sample_unit(), FormatVariant::FULL);
        let text = doc.canonical();
        assert!(text.contains(r#""children":[{"children":[{"children":[{"children":[]"#), "{text}");
        assert!(text.contains(r#""font_size_pt":0.333333"#));
        assert!(text.contains(r#""role":"title""#));
        assert!(text.contains(r#""indent":2"#));
        assert!(text.starts_with(r#"{"objects":"#));
    }

    #[test]
    fn plain_variant_is_flat_without_style() {
        let plain = FormatVariant { hierarchical: false, stylistic: false };
        let text = serialize_slide(&sample_unit(), plain).canonical();
        for field in ["indent", "font_size_pt", "position", "role"] {
            assert!(!text.contains(field), "{field} in {text}");
        }
        let body = &serialize_slide(&sample_unit(), plain).into_value()["objects"][1]["children"];
        assert_eq!(body.as_array().unwrap().len(), 4);
    }

    #[test]
    fn zero_sentences() {
        let mut unit = sample_unit();
        unit.sentences.clear();
        let doc = serialize_slide(&unit, FormatVariant::FULL);
        assert_eq!(doc.value()["sentences"], json!([]));
    }

    #[test]
    fn ids_and_contents_agree_across_variants() {
        let unit = sample_unit();
        let pairs = |v: FormatVariant| -> BTreeSet<(String, String)> {
            fn walk(n: &Value, out: &mut BTreeSet<(String, String)>) {
                if let (Some(id), Some(c)) = (n["shape_id"].as_str(), n["content"].as_str()) {
                    out.insert((id.into(), c.into()));
                }
                for c in n["children"].as_array().into_iter().flatten() {
                    walk(c, out);
                }
            }
            let mut out = BTreeSet::new();
            for o in serialize_slide(&unit, v).value()["objects"].as_array().unwrap() {
                walk(o, &mut out);
            }
            out
        };
        let reference = pairs(FormatVariant::FULL);
        assert_eq!(reference.len(), 5);
        for v in FormatVariant::ALL {
            assert_eq!(pairs(v), reference, "{v}");
        }
    }

    #[test]
    fn full_document_round_trips_to_unit() {
        let unit = sample_unit();
        let doc = serialize_slide(&unit, FormatVariant::FULL);
        let text = doc.canonical();
        let reparsed: Value = serde_json::from_str(&text).unwrap();
        let back = unit_from_document(&reparsed, unit.dimensions).unwrap();
        // font size was rounded to six decimals on the way out
        assert_eq!(back.objects[1].style.as_ref().unwrap().font_size_pt, Some(0.333333));
        assert_eq!(back.object_order(), unit.object_order());
        assert_eq!(serialize_slide(&back, FormatVariant::FULL).canonical(), text);
    }

    #[test]
    fn variant_labels_parse() {
        for v in FormatVariant::ALL {
            assert_eq!(v.label().parse::<FormatVariant>().unwrap(), v);
        }
        assert!("fancy".parse::<FormatVariant>().is_err());
    }
}
