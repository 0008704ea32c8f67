//! On-disk formats.
//!
//! Every file is UTF-8 canonical JSON (see [`canonical`]) carrying a
//! `format_version` field.

pub mod canonical;
mod searchable;
mod slides;
mod truth;

use thiserror::Error;

pub use canonical::{read_json, to_canonical_string, write_canonical};
pub use searchable::{build_searchable_data, SearchWarning, SearchableFile, SearchableObject, SearchableSlide};
pub use slides::{serialize_slide, unit_from_document, FormatVariant, SlideDocument, SlidesFile};
pub use truth::{
    read_ground_truth, read_predictions, write_ground_truth, write_predictions, GroundTruth, Offender, PredictionsFile,
    SlideFailure, SlidePrediction,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InterchangeError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("unknown references: {}", offenders.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    Validation { offenders: Vec<Offender> },
    #[error("unsupported content: {0}")]
    Format(String),
}
