//! Slide units, sentence elements, groundings and correspondence matrices.
//!
//! A slide's text objects are decomposed into sentence elements (one per
//! line) arranged as a forest by indent level. Each narration sentence of
//! the slide is grounded to a possibly empty set of those elements. The same
//! grounding can be viewed as an `n x m` binary matrix whose columns follow
//! the canonical element order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{NormalizedRect, SlideDimensions};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("shape id must not be empty")]
    EmptyShapeId,
    #[error("duplicate shape id {0} in object order")]
    DuplicateShapeId(ShapeId),
    #[error("sentence {sentence} references unknown shape id {id}")]
    UnknownShapeId { sentence: usize, id: ShapeId },
    #[error("sentence {sentence} lists shape id {id} more than once")]
    RepeatedInSentence { sentence: usize, id: ShapeId },
    #[error("matrix entry ({row}, {col}) is not 0 or 1")]
    NonBinaryEntry { row: usize, col: usize },
    #[error("matrix has {found} columns but object order has {expected} ids")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("matrix storage holds {found} entries, expected {expected}")]
    StorageMismatch { expected: usize, found: usize },
    #[error("font size must be positive, got {0}")]
    BadFontSize(f64),
    #[error("slide {slide}: sentence indices must be 0..n in order, found {found} at position {position}")]
    SentenceIndex { slide: u32, position: usize, found: usize },
    #[error("slide {slide}: element {id} has empty content")]
    EmptyContent { slide: u32, id: ShapeId },
    #[error("slide {slide}: child {child} indent {child_indent} not greater than parent indent {parent_indent}")]
    IndentOrder { slide: u32, child: ShapeId, child_indent: u32, parent_indent: u32 },
    #[error("slide {slide}: shape id {id} used more than once")]
    DuplicateInSlide { slide: u32, id: ShapeId },
}

/// Identifier of a slide object, unique within one slide.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ShapeId(String);

impl ShapeId {
    pub fn new(value: impl Into<String>) -> Result<Self, ModelError> {
        let value = value.into();
        if value.trim().is_empty() {
            return Err(ModelError::EmptyShapeId);
        }
        Ok(Self(value))
    }

    /// Id of the `k`-th sentence element (1-based) in canonical order.
    pub fn element(k: usize) -> Self {
        Self(format!("s{k}"))
    }

    /// Id of the `k`-th text object (1-based) in document order.
    pub fn group(k: usize) -> Self {
        Self(format!("g{k}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ShapeId {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        ShapeId::new(value)
    }
}

impl From<ShapeId> for String {
    fn from(id: ShapeId) -> Self {
        id.0
    }
}

impl fmt::Display for ShapeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for ShapeId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ShapeId::new(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Title,
    Body,
    Other,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StyleInfo {
    pub font_size_pt: Option<f64>,
    pub position: Option<NormalizedRect<f64>>,
    pub role: Option<Role>,
}

impl StyleInfo {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self.font_size_pt {
            Some(pt) if pt.is_nan() || pt <= 0.0 => Err(ModelError::BadFontSize(pt)),
            _ => Ok(()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.font_size_pt.is_none() && self.position.is_none() && self.role.is_none()
    }
}

/// One line of a text object.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceElement {
    pub shape_id: ShapeId,
    pub content: String,
    pub indent: u32,
    /// Horizontal band of the owning object's frame assigned to this line.
    pub position: Option<NormalizedRect<f64>>,
    pub children: Vec<SentenceElement>,
}

impl SentenceElement {
    pub fn leaf(shape_id: ShapeId, content: impl Into<String>, indent: u32) -> Self {
        Self { shape_id, content: content.into(), indent, position: None, children: Vec::new() }
    }

    /// Preorder traversal of this subtree.
    pub fn preorder(&self) -> Vec<&SentenceElement> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a SentenceElement>) {
        out.push(self);
        for child in &self.children {
            child.collect(out);
        }
    }
}

/// A source text object and its forest of sentence elements.
#[derive(Clone, Debug, PartialEq)]
pub struct TextObjectGroup {
    pub group_shape_id: ShapeId,
    pub content_list: Vec<SentenceElement>,
    pub style: Option<StyleInfo>,
}

impl TextObjectGroup {
    pub fn elements(&self) -> Vec<&SentenceElement> {
        self.content_list.iter().flat_map(|e| e.preorder()).collect()
    }

    pub fn role(&self) -> Option<Role> {
        self.style.as_ref().and_then(|s| s.role)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptSentence {
    pub index: usize,
    pub text: String,
}

/// Everything grounding needs for one slide.
#[derive(Clone, Debug, PartialEq)]
pub struct SlideUnit {
    pub slide_number: u32,
    pub objects: Vec<TextObjectGroup>,
    pub sentences: Vec<ScriptSentence>,
    pub dimensions: SlideDimensions,
}

/// Tree relations between the elements of one slide.
#[derive(Clone, Debug, Default)]
pub struct ElementRelations {
    parent: HashMap<ShapeId, ShapeId>,
    titles: HashSet<ShapeId>,
}

impl ElementRelations {
    pub fn is_title(&self, id: &ShapeId) -> bool {
        self.titles.contains(id)
    }

    pub fn is_ancestor(&self, ancestor: &ShapeId, of: &ShapeId) -> bool {
        let mut cur = of;
        while let Some(p) = self.parent.get(cur) {
            if p == ancestor {
                return true;
            }
            cur = p;
        }
        false
    }

    /// True when one id is an ancestor of the other.
    pub fn related(&self, a: &ShapeId, b: &ShapeId) -> bool {
        self.is_ancestor(a, b) || self.is_ancestor(b, a)
    }
}

impl SlideUnit {
    /// All sentence elements, groups in document order, each group in preorder.
    pub fn elements(&self) -> Vec<&SentenceElement> {
        self.objects.iter().flat_map(|g| g.elements()).collect()
    }

    /// Canonical column order for this slide's correspondence matrix.
    pub fn object_order(&self) -> Vec<ShapeId> {
        self.elements().into_iter().map(|e| e.shape_id.clone()).collect()
    }

    pub fn element(&self, id: &ShapeId) -> Option<&SentenceElement> {
        self.elements().into_iter().find(|e| &e.shape_id == id)
    }

    pub fn relations(&self) -> ElementRelations {
        fn walk(e: &SentenceElement, rel: &mut ElementRelations, title: bool) {
            if title {
                rel.titles.insert(e.shape_id.clone());
            }
            for c in &e.children {
                rel.parent.insert(c.shape_id.clone(), e.shape_id.clone());
                walk(c, rel, title);
            }
        }
        let mut rel = ElementRelations::default();
        for g in &self.objects {
            let title = g.role() == Some(Role::Title);
            for e in &g.content_list {
                walk(e, &mut rel, title);
            }
        }
        rel
    }

    /// Element ids belonging to objects whose role is `title`.
    pub fn title_ids(&self) -> Vec<ShapeId> {
        self.objects
            .iter()
            .filter(|g| g.role() == Some(Role::Title))
            .flat_map(|g| g.elements())
            .map(|e| e.shape_id.clone())
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let slide = self.slide_number;
        let mut seen = HashSet::new();
        fn check(e: &SentenceElement, slide: u32, seen: &mut HashSet<ShapeId>) -> Result<(), ModelError> {
            if !seen.insert(e.shape_id.clone()) {
                return Err(ModelError::DuplicateInSlide { slide, id: e.shape_id.clone() });
            }
            if e.content.trim().is_empty() {
                return Err(ModelError::EmptyContent { slide, id: e.shape_id.clone() });
            }
            for c in &e.children {
                if c.indent <= e.indent {
                    return Err(ModelError::IndentOrder {
                        slide,
                        child: c.shape_id.clone(),
                        child_indent: c.indent,
                        parent_indent: e.indent,
                    });
                }
                check(c, slide, seen)?;
            }
            Ok(())
        }
        for g in &self.objects {
            if !seen.insert(g.group_shape_id.clone()) {
                return Err(ModelError::DuplicateInSlide { slide, id: g.group_shape_id.clone() });
            }
            if let Some(style) = &g.style {
                style.validate()?;
            }
            for e in &g.content_list {
                check(e, slide, &mut seen)?;
            }
        }
        for (position, s) in self.sentences.iter().enumerate() {
            if s.index != position {
                return Err(ModelError::SentenceIndex { slide, position, found: s.index });
            }
        }
        Ok(())
    }
}

/// The grounding function restricted to one slide: sentence index to a set of
/// element ids, together with the canonical column order.
///
/// Equality is set equality per sentence; the order ids were listed in is
/// preserved for display but does not matter for comparison.
#[derive(Clone, Debug)]
pub struct GroundingResult {
    object_order: Vec<ShapeId>,
    groundings: Vec<Vec<ShapeId>>,
}

impl GroundingResult {
    pub fn new(object_order: Vec<ShapeId>, groundings: Vec<Vec<ShapeId>>) -> Result<Self, ModelError> {
        let mut known = HashSet::with_capacity(object_order.len());
        for id in &object_order {
            if !known.insert(id) {
                return Err(ModelError::DuplicateShapeId(id.clone()));
            }
        }
        for (sentence, ids) in groundings.iter().enumerate() {
            let mut local = HashSet::with_capacity(ids.len());
            for id in ids {
                if !known.contains(id) {
                    return Err(ModelError::UnknownShapeId { sentence, id: id.clone() });
                }
                if !local.insert(id) {
                    return Err(ModelError::RepeatedInSentence { sentence, id: id.clone() });
                }
            }
        }
        Ok(Self { object_order, groundings })
    }

    /// Every sentence grounded to nothing.
    pub fn empty(object_order: Vec<ShapeId>, sentences: usize) -> Result<Self, ModelError> {
        Self::new(object_order, vec![Vec::new(); sentences])
    }

    pub fn object_order(&self) -> &[ShapeId] {
        &self.object_order
    }

    pub fn sentence_count(&self) -> usize {
        self.groundings.len()
    }

    /// `g(s_i)`; panics when `i` is out of range.
    pub fn get(&self, i: usize) -> &[ShapeId] {
        &self.groundings[i]
    }

    pub fn groundings(&self) -> &[Vec<ShapeId>] {
        &self.groundings
    }

    /// Same sets with each sentence's ids sorted into canonical column order.
    pub fn canonical(&self) -> Self {
        let rank: HashMap<&ShapeId, usize> = self.object_order.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let groundings = self
            .groundings
            .iter()
            .map(|ids| {
                let mut ids = ids.clone();
                ids.sort_by_key(|id| rank[id]);
                ids
            })
            .collect();
        Self { object_order: self.object_order.clone(), groundings }
    }

    /// The binary correspondence matrix: entry `(i, j)` is 1 iff
    /// `object_order[j]` is in `g(s_i)`.
    pub fn to_matrix<T: Scalar>(&self) -> CorrespondenceMatrix<T> {
        let m = self.object_order.len();
        let column: HashMap<&ShapeId, usize> = self.object_order.iter().enumerate().map(|(j, id)| (id, j)).collect();
        let mut entries = vec![T::zero(); self.groundings.len() * m];
        for (i, ids) in self.groundings.iter().enumerate() {
            for id in ids {
                entries[i * m + column[id]] = T::one();
            }
        }
        CorrespondenceMatrix { rows: self.groundings.len(), cols: m, entries }
    }
}

impl PartialEq for GroundingResult {
    fn eq(&self, other: &Self) -> bool {
        self.object_order == other.object_order
            && self.groundings.len() == other.groundings.len()
            && self.groundings.iter().zip(&other.groundings).all(|(a, b)| {
                a.len() == b.len() && a.iter().collect::<HashSet<_>>() == b.iter().collect::<HashSet<_>>()
            })
    }
}

/// Free-function form of [`GroundingResult::to_matrix`].
pub fn grounding_to_matrix<T: Scalar>(g: &GroundingResult) -> CorrespondenceMatrix<T> {
    g.to_matrix()
}

/// Inverse of [`grounding_to_matrix`]: reads each row's 1-entries as ids.
pub fn matrix_to_grounding<T: Scalar>(
    matrix: &CorrespondenceMatrix<T>,
    object_order: &[ShapeId],
) -> Result<GroundingResult, ModelError> {
    if object_order.len() != matrix.cols {
        return Err(ModelError::ColumnMismatch { expected: object_order.len(), found: matrix.cols });
    }
    matrix.check_binary()?;
    let groundings = (0..matrix.rows)
        .map(|i| (0..matrix.cols).filter(|&j| matrix.get(i, j) == T::one()).map(|j| object_order[j].clone()).collect())
        .collect();
    GroundingResult::new(object_order.to_vec(), groundings)
}

/// Row-major `rows x cols` correspondence matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Scalar> CorrespondenceMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * cols);
        for row in rows {
            if row.len() != cols {
                return Err(ModelError::ColumnMismatch { expected: cols, found: row.len() });
            }
            entries.extend(row);
        }
        Self::from_entries(n, cols, entries)
    }

    /// Builds a binary matrix; rejects entries other than 0 and 1.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self, ModelError> {
        if entries.len() != rows * cols {
            return Err(ModelError::StorageMismatch { expected: rows * cols, found: entries.len() });
        }
        let m = Self { rows, cols, entries };
        m.check_binary()?;
        Ok(m)
    }

    fn check_binary(&self) -> Result<(), ModelError> {
        for (k, v) in self.entries.iter().enumerate() {
            if !(v.is_zero() || v.is_one()) {
                return Err(ModelError::NonBinaryEntry { row: k / self.cols.max(1), col: k % self.cols.max(1) });
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.row(i).iter().fold(T::zero(), |acc, &v| acc + v)
    }
}
