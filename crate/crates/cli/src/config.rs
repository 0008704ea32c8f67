//! Settings merged from the config file, the environment and flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use s2sg_core::grounding::{GroundingConfig, PromptMode};
use s2sg_core::interchange::FormatVariant;
use s2sg_core::render::{Corner, FrameStyle, RenderSettings, Timing};
use s2sg_llm::{ClientConfig, Provider, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GrounderKind {
    Llm,
    #[default]
    Lexical,
    Scripted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub grounding: GroundingSection,
    pub llm: LlmSection,
    pub render: RenderSection,
    pub eval: EvalSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundingSection {
    pub grounder: Option<GrounderKind>,
    pub theta: Option<f64>,
    pub fixture: Option<PathBuf>,
    pub mode: Option<PromptMode>,
    pub variant: Option<FormatVariant>,
    pub temperature: Option<f64>,
    pub exclude_titles: Option<bool>,
    pub max_repair_attempts: Option<u32>,
    pub concurrency: Option<usize>,
    pub rules_file: Option<PathBuf>,
    pub eval_template_file: Option<PathBuf>,
    pub conduct_template_file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub provider: Option<Provider>,
    pub timeout_s: Option<f64>,
    pub max_retries: Option<u32>,
    pub backoff_base_s: Option<f64>,
    pub max_in_flight: Option<usize>,
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSection {
    pub fps: Option<u32>,
    pub resolution: Option<String>,
    pub avatar: Option<OnOff>,
    pub avatar_corner: Option<Corner>,
    pub wpm: Option<f64>,
    pub min_clip: Option<f64>,
    pub slide_images: Option<PathBuf>,
    pub rasterizer: Option<Vec<String>>,
    pub style: Option<FrameStyle>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub digits: Option<usize>,
}

impl FileConfig {
    /// Reads a TOML file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if toml::from_str::<toml::Table>(&text).ok().and_then(|t| t.get("llm")?.get("api_key").cloned()).is_some() {
            return Err(CliError::Config(format!("llm.api_key is not accepted in config files; set {ENV_API_KEY}")));
        }
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        fix(&mut cfg.grounding.fixture);
        fix(&mut cfg.grounding.rules_file);
        fix(&mut cfg.grounding.eval_template_file);
        fix(&mut cfg.grounding.conduct_template_file);
        fix(&mut cfg.llm.audit);
        fix(&mut cfg.render.slide_images);
        Ok(cfg)
    }
}

/// Grounding flags shared by `ground` and `eval`.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct GroundFlags {
    /// Serialization variant: hier+style, hier, style or plain.
    #[arg(long)]
    pub variant: Option<FormatVariant>,
    #[arg(long, value_enum)]
    pub grounder: Option<GrounderKind>,
    /// Overlap threshold of the lexical grounder.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Reply fixture of the scripted grounder.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Leave title objects out of the candidates.
    #[arg(long)]
    pub exclude_titles: bool,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Append one JSON line per LLM call to this file.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub avatar: Option<OnOff>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Eval,
    Conduct,
}

/// Everything a grounding run needs.
#[derive(Debug, Clone)]
pub struct GroundSetup {
    pub kind: GrounderKind,
    pub theta: f64,
    pub fixture: Option<PathBuf>,
    pub mode: PromptMode,
    pub grounding: GroundingConfig,
    pub client: ClientConfig,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn env(key: &str) -> Option<String> {
    std::env::var(key).ok().filter(|v| !v.trim().is_empty())
}

impl GroundSetup {
    pub fn merge(file: &FileConfig, flags: &GroundFlags) -> Result<Self, CliError> {
        let g = &file.grounding;
        let mut grounding = GroundingConfig::default();
        grounding.variant = flags.variant.or(g.variant).unwrap_or(grounding.variant);
        grounding.exclude_titles = flags.exclude_titles || g.exclude_titles.unwrap_or(false);
        grounding.temperature = flags.temperature.or(g.temperature).unwrap_or(0.0);
        grounding.max_repair_attempts = g.max_repair_attempts.unwrap_or(grounding.max_repair_attempts);
        grounding.concurrency = g.concurrency.unwrap_or(grounding.concurrency);
        grounding.avatar_visible = flags.avatar.or(file.render.avatar).unwrap_or(OnOff::On) == OnOff::On;
        if let Some(p) = &g.rules_file {
            grounding.rules = read_text(p)?.trim_end().to_string();
        }
        if let Some(p) = &g.eval_template_file {
            grounding.eval_template = read_text(p)?;
        }
        if let Some(p) = &g.conduct_template_file {
            grounding.conduct_template = read_text(p)?;
        }

        let l = &file.llm;
        let defaults = ClientConfig::default();
        let client = ClientConfig {
            endpoint: flags.endpoint.clone().or_else(|| env(ENV_ENDPOINT)).or_else(|| l.endpoint.clone()),
            api_key: env(ENV_API_KEY),
            model: flags.model.clone().or_else(|| env(ENV_MODEL)).or_else(|| l.model.clone()),
            provider: l.provider.unwrap_or(defaults.provider),
            timeout_s: l.timeout_s.unwrap_or(defaults.timeout_s),
            max_retries: l.max_retries.unwrap_or(defaults.max_retries),
            backoff_base_s: l.backoff_base_s.unwrap_or(defaults.backoff_base_s),
            max_in_flight: l.max_in_flight.unwrap_or(defaults.max_in_flight),
            audit: flags.audit.clone().or_else(|| l.audit.clone()),
        };
        grounding.model_name = client.model.clone().unwrap_or_default();

        let mode = match flags.mode {
            Some(ModeArg::Eval) => PromptMode::Eval,
            Some(ModeArg::Conduct) => PromptMode::Conduct,
            None => g.mode.unwrap_or_default(),
        };
        let setup = Self {
            kind: flags.grounder.or(g.grounder).unwrap_or_default(),
            theta: flags.theta.or(g.theta).unwrap_or(0.5),
            fixture: flags.fixture.clone().or_else(|| g.fixture.clone()),
            mode,
            grounding,
            client,
        };
        setup.grounding.validate().map_err(CliError::Config)?;
        if !(0.0..=1.0).contains(&setup.theta) {
            return Err(CliError::Config(format!("theta must lie in [0, 1], got {}", setup.theta)));
        }
        if setup.kind == GrounderKind::Scripted && setup.fixture.is_none() {
            return Err(CliError::Config("the scripted grounder needs --fixture".into()));
        }
        Ok(setup)
    }
}

/// Render flags shared by `plan` and `render`.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct RenderFlags {
    #[arg(long)]
    pub fps: Option<u32>,
    /// Output size as WIDTHxHEIGHT.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long, value_enum)]
    pub avatar: Option<OnOff>,
    /// top-left, top-right, bottom-left or bottom-right.
    #[arg(long)]
    pub avatar_corner: Option<Corner>,
    /// Narration speed in words per minute.
    #[arg(long)]
    pub wpm: Option<f64>,
    /// Shortest clip in seconds.
    #[arg(long)]
    pub min_clip: Option<f64>,
}

pub fn parse_resolution(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Config(format!("resolution must look like 1280x720, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h): (u32, u32) = (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?);
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

pub fn render_settings(file: &FileConfig, flags: &RenderFlags) -> Result<(RenderSettings, Timing), CliError> {
    let r = &file.render;
    let d = RenderSettings::default();
    let (width, height) = match flags.resolution.as_deref().or(r.resolution.as_deref()) {
        Some(s) => parse_resolution(s)?,
        None => (d.width, d.height),
    };
    let settings = RenderSettings {
        fps: flags.fps.or(r.fps).unwrap_or(d.fps),
        width,
        height,
        avatar_visible: flags.avatar.or(r.avatar).unwrap_or(OnOff::On) == OnOff::On,
        avatar_corner: flags.avatar_corner.or(r.avatar_corner).unwrap_or(d.avatar_corner),
        style: r.style.unwrap_or_default(),
    };
    let t = Timing::default();
    let timing = Timing {
        wpm: flags.wpm.or(r.wpm).unwrap_or(t.wpm),
        min_clip: flags.min_clip.or(r.min_clip).unwrap_or(t.min_clip),
    };
    if settings.fps == 0 {
        return Err(CliError::Config("fps must be positive".into()));
    }
    if !(timing.wpm > 0.0 && timing.wpm.is_finite()) || !(timing.min_clip > 0.0 && timing.min_clip.is_finite()) {
        return Err(CliError::Config("wpm and min_clip must be positive".into()));
    }
    Ok((settings, timing))
}
