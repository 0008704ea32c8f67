//! Script-to-slide grounding.
//!
//! Reads a presentation deck into per-slide units of narration sentences and
//! text elements, grounds each sentence to the elements it talks about,
//! scores groundings against a reference with micro-averaged F1, and turns
//! groundings into timed overlay effects rendered as frame sequences.

pub mod evaluation;
pub mod geometry;
pub mod grounding;
pub mod ingest;
pub mod interchange;
pub mod model;
pub mod render;
pub mod scalar;

pub use geometry::{EmuRect, NormalizedRect, PixelRect, SlideDimensions};
pub use model::{
    grounding_to_matrix, matrix_to_grounding, CorrespondenceMatrix, GroundingResult, Role, ScriptSentence,
    SentenceElement, ShapeId, SlideUnit, StyleInfo, TextObjectGroup,
};
pub use scalar::{Real, Scalar};

/// Slide-fraction rectangle in double precision.
pub type Rect = NormalizedRect<f64>;
/// Binary correspondence matrix with `f64` entries.
pub type Matrix = CorrespondenceMatrix<f64>;
