//! Flat per-slide lookup table from element id to content and position.

use serde::{Deserialize, Serialize};

use crate::geometry::NormalizedRect;
use crate::model::{ShapeId, SlideUnit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchableObject {
    pub shape_id: ShapeId,
    pub content: String,
    pub position: NormalizedRect<f64>,
}

/// An element left out of the searchable data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchWarning {
    pub slide_number: u32,
    pub shape_id: ShapeId,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchableSlide {
    pub slide_number: u32,
    pub objects: Vec<SearchableObject>,
}

impl SearchableSlide {
    pub fn find(&self, id: &ShapeId) -> Option<&SearchableObject> {
        self.objects.iter().find(|o| &o.shape_id == id)
    }
}

/// Contents of `<deck>.searchable.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchableFile {
    pub format_version: u32,
    pub slides: Vec<SearchableSlide>,
    #[serde(default)]
    pub warnings: Vec<SearchWarning>,
}

impl SearchableFile {
    pub fn from_units(units: &[SlideUnit]) -> Self {
        let mut warnings = Vec::new();
        let slides = units
            .iter()
            .map(|u| {
                let (objects, w) = build_searchable_data(u);
                warnings.extend(w);
                SearchableSlide { slide_number: u.slide_number, objects }
            })
            .collect();
        Self { format_version: super::FORMAT_VERSION, slides, warnings }
    }

    pub fn slide(&self, slide_number: u32) -> Option<&SearchableSlide> {
        self.slides.iter().find(|s| s.slide_number == slide_number)
    }
}

/// One entry per positioned sentence element, in canonical order. Elements
/// without a position are reported as warnings instead.
pub fn build_searchable_data(unit: &SlideUnit) -> (Vec<SearchableObject>, Vec<SearchWarning>) {
    let mut objects = Vec::new();
    let mut warnings = Vec::new();
    for e in unit.elements() {
        match e.position {
            Some(position) => {
                objects.push(SearchableObject { shape_id: e.shape_id.clone(), content: e.content.clone(), position })
            }
            None => warnings.push(SearchWarning {
                slide_number: unit.slide_number,
                shape_id: e.shape_id.clone(),
                reason: "no position".into(),
            }),
        }
    }
    (objects, warnings)
}
