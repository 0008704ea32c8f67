//! Micro-averaged precision, recall and F1 over grounding items, and the
//! four-variant experiment.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::grounding::{ground_deck, GroundError, Grounder, GroundingConfig};
use crate::interchange::{FormatVariant, GroundTruth, SlideFailure, FORMAT_VERSION};
use crate::model::{GroundingResult, ShapeId, SlideUnit};
use crate::scalar::{from_count, Scalar};

/// Items present in both lists, duplicates ignored.
pub fn correct_items<I: Eq + Hash>(truth: &[I], pred: &[I]) -> usize {
    let t: HashSet<&I> = truth.iter().collect();
    pred.iter().collect::<HashSet<&I>>().intersection(&t).count()
}

fn distinct<I: Eq + Hash>(items: &[I]) -> usize {
    items.iter().collect::<HashSet<_>>().len()
}

/// Totals summed over a dataset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub truth: usize,
}

impl Counts {
    pub fn of<I: Eq + Hash>(truth: &[I], pred: &[I]) -> Self {
        Self { correct: correct_items(truth, pred), predicted: distinct(pred), truth: distinct(truth) }
    }

    pub fn add(&mut self, other: Counts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.truth += other.truth;
    }

    /// Precision and recall default to 1 over an empty denominator; F1 is 0
    /// when both are 0.
    pub fn scores<T: Scalar>(&self) -> Scores<T> {
        let ratio =
            |num: usize, den: usize| if den == 0 { T::one() } else { from_count::<T>(num) / from_count::<T>(den) };
        let precision = ratio(self.correct, self.predicted);
        let recall = ratio(self.correct, self.truth);
        let sum = precision + recall;
        let f1 = if sum == T::zero() { T::zero() } else { (T::one() + T::one()) * precision * recall / sum };
        Scores { precision, recall, f1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

/// Micro-averaged scores over (truth, prediction) pairs.
pub fn micro_f1<T: Scalar, I: Eq + Hash>(pairs: &[(Vec<I>, Vec<I>)]) -> Scores<T> {
    let mut total = Counts::default();
    for (t, p) in pairs {
        total.add(Counts::of(t, p));
    }
    total.scores()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// The id belongs to a title object.
    TitleConfusion,
    /// The id is an ancestor or descendant of a truth id.
    ParentChildConfusion,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classified {
    pub id: ShapeId,
    pub kind: ErrorKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub slide_number: u32,
    pub sentence: usize,
    pub missing: Vec<Classified>,
    pub spurious: Vec<Classified>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub slide_number: u32,
    pub sentence: usize,
    pub truth: Vec<ShapeId>,
    pub predicted: Vec<ShapeId>,
    pub correct: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: FormatVariant,
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub sentences: Vec<SentenceScore>,
    pub mismatches: Vec<Mismatch>,
    /// Slides left out of the totals because grounding failed.
    pub excluded_slides: Vec<SlideFailure>,
    pub warnings: Vec<String>,
}

/// Contents of `<deck>.report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub grounder: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    pub variants: Vec<VariantReport>,
}

fn classify(unit: &SlideUnit, id: &ShapeId, others: &[ShapeId]) -> ErrorKind {
    let rel = unit.relations();
    if rel.is_title(id) {
        ErrorKind::TitleConfusion
    } else if others.iter().any(|o| rel.related(id, o)) {
        ErrorKind::ParentChildConfusion
    } else {
        ErrorKind::Other
    }
}

/// Scores given groundings against the truth. Slides listed in `failures`
/// are excluded from the totals and reported.
pub fn score_deck(
    units: &[SlideUnit],
    truth: &GroundTruth,
    variant: FormatVariant,
    results: &BTreeMap<u32, GroundingResult>,
    failures: &[SlideFailure],
) -> VariantReport {
    let mut counts = Counts::default();
    let mut sentences = Vec::new();
    let mut mismatches = Vec::new();
    let mut excluded: Vec<SlideFailure> = failures.to_vec();
    for unit in units {
        if failures.iter().any(|f| f.slide_number == unit.slide_number) {
            continue;
        }
        let Some(result) = results.get(&unit.slide_number) else {
            excluded.push(SlideFailure { slide_number: unit.slide_number, error: "no grounding for slide".into() });
            continue;
        };
        for s in &unit.sentences {
            let t = truth.ids(unit.slide_number, s.index);
            let p: &[ShapeId] = if s.index < result.sentence_count() { result.get(s.index) } else { &[] };
            let c = Counts::of(t, p);
            counts.add(c);
            sentences.push(SentenceScore {
                slide_number: unit.slide_number,
                sentence: s.index,
                truth: t.to_vec(),
                predicted: p.to_vec(),
                correct: c.correct,
            });
            let missing: Vec<_> = t.iter().filter(|id| !p.contains(id)).collect();
            let spurious: Vec<_> = p.iter().filter(|id| !t.contains(id)).collect();
            if !missing.is_empty() || !spurious.is_empty() {
                let tag = |ids: Vec<&ShapeId>, against: &[ShapeId]| -> Vec<Classified> {
                    let mut seen = HashSet::new();
                    ids.into_iter()
                        .filter(|id| seen.insert(*id))
                        .map(|id| Classified { id: id.clone(), kind: classify(unit, id, against) })
                        .collect()
                };
                mismatches.push(Mismatch {
                    slide_number: unit.slide_number,
                    sentence: s.index,
                    missing: tag(missing, p),
                    spurious: tag(spurious, t),
                });
            }
        }
    }
    excluded.sort_by_key(|f| f.slide_number);
    let scores = counts.scores::<f64>();
    VariantReport {
        variant,
        counts,
        precision: scores.precision,
        recall: scores.recall,
        f1: scores.f1,
        sentences,
        mismatches,
        excluded_slides: excluded,
        warnings: Vec::new(),
    }
}

/// Grounds and scores the deck once per variant.
pub fn run_experiment<G: Grounder + ?Sized>(
    units: &[SlideUnit],
    truth: &GroundTruth,
    grounder: &G,
    variants: &[FormatVariant],
    config: &GroundingConfig,
) -> Result<EvalReport, GroundError> {
    let mut reports = Vec::with_capacity(variants.len());
    for &variant in variants {
        let cfg = GroundingConfig { variant, ..config.clone() };
        let deck = ground_deck(units, grounder, &cfg)?;
        let results: BTreeMap<u32, GroundingResult> =
            deck.results.iter().map(|(&n, g)| (n, g.result.clone())).collect();
        let mut report = score_deck(units, truth, variant, &results, &deck.failures);
        report.warnings =
            deck.results.iter().flat_map(|(n, g)| g.warnings.iter().map(move |w| format!("slide {n}: {w}"))).collect();
        reports.push(report);
    }
    Ok(EvalReport {
        format_version: FORMAT_VERSION,
        grounder: grounder.name().to_string(),
        annotator: truth.annotator.clone(),
        variants: reports,
    })
}

/// The 2×2 grid of F1 values: rows stylistic present/absent, columns
/// hierarchical present/absent, each with averages of the available cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Table {
    pub cells: [[Option<f64>; 2]; 2],
}

fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl F1Table {
    pub fn from_report(report: &EvalReport) -> Self {
        let mut cells = [[None; 2]; 2];
        for v in &report.variants {
            cells[usize::from(!v.variant.stylistic)][usize::from(!v.variant.hierarchical)] = Some(v.f1);
        }
        Self { cells }
    }

    pub fn row_average(&self, row: usize) -> Option<f64> {
        mean(self.cells[row])
    }

    pub fn column_average(&self, col: usize) -> Option<f64> {
        mean([self.cells[0][col], self.cells[1][col]])
    }

    pub fn global_average(&self) -> Option<f64> {
        mean(self.cells.iter().flatten().copied())
    }

    pub fn render(&self, digits: usize) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"));
        let w = (digits + 2).max(8);
        let mut out = String::new();
        let _ = writeln!(out, "{:<16}{:^width$}", "", "Hierarchical info", width = 2 * w + 2);
        let _ = writeln!(out, "{:<16}{:>w$}  {:>w$}  {:>w$}", "Stylistic info", "Present", "Absent", "Average");
        for (row, label) in ["Present", "Absent"].iter().enumerate() {
            let [a, b] = self.cells[row];
            let _ = writeln!(out, "{:<16}{:>w$}  {:>w$}  {:>w$}", label, cell(a), cell(b), cell(self.row_average(row)));
        }
        let _ = writeln!(
            out,
            "{:<16}{:>w$}  {:>w$}  {:>w$}",
            "Average",
            cell(self.column_average(0)),
            cell(self.column_average(1)),
            cell(self.global_average())
        );
        out
    }
}
