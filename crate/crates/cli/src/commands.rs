use std::io::Write;
use std::path::{Path, PathBuf};

use s2sg_core::evaluation::{run_experiment, score_deck, EvalReport, F1Table};
use s2sg_core::grounding::{ground_deck, GroundError, Grounder, LexicalGrounder, LlmGrounder};
use s2sg_core::ingest::{open_deck, DeckMeta, IngestError};
use s2sg_core::interchange::{
    read_ground_truth, read_json, read_predictions, write_canonical, write_predictions, FormatVariant,
    InterchangeError, PredictionsFile, SearchableFile, SlidesFile, FORMAT_VERSION,
};
use s2sg_core::model::SlideUnit;
use s2sg_core::render::{mux_command, plan_deck, read_plan, render_plan, write_plan, SlideImages};
use s2sg_llm::{HttpChatClient, LlmError, ScriptedResponder};

/// Writes to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {
        let _ = writeln!(std::io::stdout(), $($arg)*);
    };
}

use crate::config::{render_settings, FileConfig, GroundFlags, GroundSetup, GrounderKind, RenderFlags};
use crate::CliError;

fn interchange_err(e: InterchangeError) -> CliError {
    match e {
        InterchangeError::Validation { .. } | InterchangeError::Parse { .. } | InterchangeError::Format(_) => {
            CliError::Validation(e.to_string())
        }
        InterchangeError::Io { .. } => CliError::Runtime(e.to_string()),
    }
}

fn ingest_err(e: IngestError) -> CliError {
    CliError::Runtime(e.to_string())
}

/// The deck path without its extension, used to name outputs.
fn stem(deck: &Path) -> PathBuf {
    let name = deck.file_name().and_then(|n| n.to_str()).unwrap_or("deck");
    let base = name
        .strip_suffix(".slides.json")
        .or_else(|| name.rsplit_once('.').map(|(b, _)| b))
        .filter(|b| !b.is_empty())
        .unwrap_or(name);
    deck.with_file_name(base)
}

fn output(deck: &Path, dir: Option<&Path>, suffix: &str) -> PathBuf {
    let s = stem(deck);
    let name = format!("{}{suffix}", s.file_name().and_then(|n| n.to_str()).unwrap_or("deck"));
    match dir {
        Some(d) => d.join(name),
        None => s.with_file_name(name),
    }
}

/// Units from a deck or from a slides file written by `ingest`.
fn load_units(deck: &Path) -> Result<(DeckMeta, Vec<SlideUnit>), CliError> {
    if deck.to_string_lossy().ends_with(".slides.json") {
        let file: SlidesFile = read_json(deck).map_err(interchange_err)?;
        let units = file.units().map_err(interchange_err)?;
        return Ok((file.deck, units));
    }
    open_deck(deck).map_err(ingest_err)
}

pub fn ingest(deck: &Path, variant: Option<FormatVariant>, out_dir: Option<&Path>) -> Result<(), CliError> {
    let (meta, units) = open_deck(deck).map_err(ingest_err)?;
    let slides = SlidesFile::new(meta, &units, variant.unwrap_or_default());
    let searchable = SearchableFile::from_units(&units);
    let slides_path = output(deck, out_dir, ".slides.json");
    let search_path = output(deck, out_dir, ".searchable.json");
    write_canonical(&slides_path, &slides).map_err(interchange_err)?;
    write_canonical(&search_path, &searchable).map_err(interchange_err)?;
    for w in &searchable.warnings {
        eprintln!("warning: slide {} {}: {}", w.slide_number, w.shape_id, w.reason);
    }
    say!("{}", slides_path.display());
    say!("{}", search_path.display());
    Ok(())
}

fn build_grounder(setup: &GroundSetup) -> Result<Box<dyn Grounder>, CliError> {
    Ok(match setup.kind {
        GrounderKind::Lexical => Box::new(LexicalGrounder { theta: setup.theta }),
        GrounderKind::Scripted => {
            let path = setup.fixture.as_deref().expect("checked at merge");
            let responder = ScriptedResponder::from_path(path).map_err(|e| CliError::Config(e.to_string()))?;
            Box::new(LlmGrounder::new(responder, setup.mode))
        }
        GrounderKind::Llm => {
            if setup.client.model.is_none() {
                return Err(CliError::Config(format!(
                    "no model configured; set {} or pass --model",
                    s2sg_llm::ENV_MODEL
                )));
            }
            let client = HttpChatClient::new(setup.client.clone()).map_err(|e| match e {
                LlmError::Credential(m) | LlmError::Config(m) => CliError::Config(m),
                other => CliError::Runtime(other.to_string()),
            })?;
            Box::new(LlmGrounder::new(client, setup.mode))
        }
    })
}

fn ground_err(e: GroundError) -> CliError {
    match e {
        GroundError::Backend(s2sg_core::grounding::BackendError::Credential(m)) => CliError::Config(m),
        GroundError::AllFailed(ref f) if f.iter().all(|x| x.error.starts_with("credential error")) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn ground(file: &FileConfig, deck: &Path, flags: &GroundFlags, out: Option<&Path>) -> Result<(), CliError> {
    let setup = GroundSetup::merge(file, flags)?;
    let grounder = build_grounder(&setup)?;
    let (_, units) = load_units(deck)?;
    let result = ground_deck(&units, grounder.as_ref(), &setup.grounding).map_err(ground_err)?;
    let mut preds = PredictionsFile::new(grounder.name(), setup.grounding.variant);
    for (n, g) in &result.results {
        preds.push_result(*n, &g.result, g.conduct_reply.clone());
        preds.warnings.extend(g.warnings.iter().map(|w| format!("slide {n}: {w}")));
    }
    preds.failures = result.failures;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| output(deck, None, ".pred.json"));
    write_predictions(&path, &preds).map_err(interchange_err)?;
    for f in &preds.failures {
        eprintln!("warning: slide {} failed: {}", f.slide_number, f.error);
    }
    say!("{}", path.display());
    Ok(())
}

pub struct EvalArgs<'a> {
    pub deck: &'a Path,
    pub truth: &'a Path,
    pub all_variants: bool,
    pub predictions: Option<&'a Path>,
    pub flags: &'a GroundFlags,
    pub digits: usize,
    pub report: Option<&'a Path>,
}

pub fn eval(file: &FileConfig, args: EvalArgs<'_>) -> Result<(), CliError> {
    let setup = GroundSetup::merge(file, args.flags)?;
    let (_, units) = load_units(args.deck)?;
    let truth = read_ground_truth(args.truth).map_err(interchange_err)?;
    truth.validate(&units).map_err(interchange_err)?;

    let report = match args.predictions {
        Some(p) => {
            let preds = read_predictions(p).map_err(interchange_err)?;
            let mut results = std::collections::BTreeMap::new();
            for unit in &units {
                if let Some(r) = preds.result_for(unit) {
                    results.insert(unit.slide_number, r.map_err(interchange_err)?);
                }
            }
            let v = score_deck(&units, &truth, preds.variant, &results, &preds.failures);
            EvalReport {
                format_version: FORMAT_VERSION,
                grounder: preds.grounder,
                annotator: truth.annotator.clone(),
                variants: vec![v],
            }
        }
        None => {
            let grounder = build_grounder(&setup)?;
            let variants: Vec<FormatVariant> =
                if args.all_variants { FormatVariant::ALL.to_vec() } else { vec![setup.grounding.variant] };
            run_experiment(&units, &truth, grounder.as_ref(), &variants, &setup.grounding).map_err(ground_err)?
        }
    };

    let path = args.report.map(Path::to_path_buf).unwrap_or_else(|| output(args.deck, None, ".report.json"));
    write_canonical(&path, &report).map_err(interchange_err)?;
    for v in &report.variants {
        for f in &v.excluded_slides {
            eprintln!("warning: {}: slide {} excluded: {}", v.variant, f.slide_number, f.error);
        }
    }
    let _ = write!(std::io::stdout(), "{}", F1Table::from_report(&report).render(args.digits));
    for v in &report.variants {
        say!(
            "{:<11} correct {:>4}  predicted {:>4}  truth {:>4}  P {:.d$}  R {:.d$}  F1 {:.d$}",
            v.variant.label(),
            v.counts.correct,
            v.counts.predicted,
            v.counts.truth,
            v.precision,
            v.recall,
            v.f1,
            d = args.digits
        );
    }
    Ok(())
}

pub fn plan(
    file: &FileConfig,
    deck: &Path,
    predictions: Option<&Path>,
    default_effects: bool,
    flags: &RenderFlags,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (settings, timing) = render_settings(file, flags)?;
    let pred_path = predictions.map(Path::to_path_buf).unwrap_or_else(|| output(deck, None, ".pred.json"));
    let preds = read_predictions(&pred_path).map_err(interchange_err)?;
    let (_, units) = load_units(deck)?;
    let searchable = SearchableFile::from_units(&units);
    let plan = plan_deck(&units, &preds, &searchable, &timing, !default_effects, settings.avatar_visible)
        .map_err(interchange_err)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| output(deck, None, ".plan.json"));
    write_plan(&path, &plan).map_err(interchange_err)?;
    for w in &plan.warnings {
        eprintln!("warning: {w}");
    }
    say!("{}", path.display());
    Ok(())
}

pub struct RenderArgs<'a> {
    pub deck: &'a Path,
    pub plan: Option<&'a Path>,
    pub searchable: Option<&'a Path>,
    pub flags: &'a RenderFlags,
    pub slide_images: Option<&'a Path>,
    pub rasterizer: Option<Vec<String>>,
    pub out_dir: Option<&'a Path>,
    pub mux_command: bool,
}

pub fn render(file: &FileConfig, args: RenderArgs<'_>) -> Result<(), CliError> {
    let (settings, _) = render_settings(file, args.flags)?;
    let plan_path = args.plan.map(Path::to_path_buf).unwrap_or_else(|| output(args.deck, None, ".plan.json"));
    let plan = read_plan(&plan_path).map_err(interchange_err)?;
    let default_search = output(args.deck, None, ".searchable.json");
    let searchable: SearchableFile = match args.searchable {
        Some(p) => read_json(p).map_err(interchange_err)?,
        None if default_search.exists() => read_json(&default_search).map_err(interchange_err)?,
        None => SearchableFile::from_units(&load_units(args.deck)?.1),
    };
    let images = match (
        args.slide_images.map(Path::to_path_buf).or_else(|| file.render.slide_images.clone()),
        args.rasterizer.or_else(|| file.render.rasterizer.clone()),
    ) {
        (Some(dir), _) => SlideImages::Directory(dir),
        (None, Some(cmd)) => SlideImages::Command(cmd),
        (None, None) => SlideImages::Blank,
    };
    let out_dir = args.out_dir.map(Path::to_path_buf).unwrap_or_else(|| output(args.deck, None, ".frames"));
    let manifest = render_plan(&plan, &searchable, &images, &settings, &out_dir).map_err(|e| match e {
        s2sg_core::render::RenderError::MissingShape { .. } | s2sg_core::render::RenderError::MissingSlide(_) => {
            CliError::Validation(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    })?;
    say!("{}", out_dir.join("manifest.json").display());
    if args.mux_command {
        let name =
            stem(args.deck).file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "deck".into());
        say!("{}", mux_command(&manifest, &format!("{name}.mp4")));
    }
    Ok(())
}
