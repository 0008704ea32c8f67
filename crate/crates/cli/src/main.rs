//! `s2sg`: ingest, ground, evaluate, plan and render narrated slide decks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{GroundFlags, RenderFlags};

#[derive(Debug)]
pub enum CliError {
    /// Exit 1.
    Runtime(String),
    /// Exit 2.
    Config(String),
    /// Exit 3.
    Validation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Runtime(m) | CliError::Config(m) | CliError::Validation(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "s2sg", version, about = "Ground narration scripts to slide text and render the result")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a deck into <deck>.slides.json and <deck>.searchable.json.
    Ingest {
        deck: PathBuf,
        #[arg(long)]
        variant: Option<s2sg_core::interchange::FormatVariant>,
        /// Directory for outputs (default: next to the deck).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Ground every slide and write <deck>.pred.json.
    Ground {
        /// A deck, or a <deck>.slides.json written by `ingest`.
        deck: PathBuf,
        #[command(flatten)]
        flags: GroundFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score groundings against a reference and print the F1 table.
    Eval {
        deck: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Ground and score under all four variants.
        #[arg(long)]
        all_variants: bool,
        /// Score an existing predictions file instead of grounding.
        #[arg(long, conflicts_with = "all_variants")]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        flags: GroundFlags,
        /// Decimal places in the printed table.
        #[arg(long)]
        digits: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Turn predictions into timed effect commands in <deck>.plan.json.
    Plan {
        deck: PathBuf,
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Frame every grounded object even when conduct replies carry commands.
        #[arg(long)]
        default_effects: bool,
        #[command(flatten)]
        flags: RenderFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rasterize a plan into per-clip frames and manifest.json.
    Render {
        deck: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Searchable data (default: <deck>.searchable.json, else built from the deck).
        #[arg(long)]
        searchable: Option<PathBuf>,
        #[command(flatten)]
        flags: RenderFlags,
        /// Directory holding slide_<n>.png backgrounds.
        #[arg(long, conflicts_with = "rasterizer")]
        slide_images: Option<PathBuf>,
        /// Command producing a slide PNG; may use {slide}, {out}, {width}, {height}.
        #[arg(long, num_args = 1.., allow_hyphen_values = true)]
        rasterizer: Option<Vec<String>>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Print an ffmpeg command line that concatenates the clips.
        #[arg(long)]
        mux_command: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => config::FileConfig::load(p)?,
        None => config::FileConfig::default(),
    };
    match cli.command {
        Command::Ingest { deck, variant, out_dir } => commands::ingest(&deck, variant, out_dir.as_deref()),
        Command::Ground { deck, flags, out } => commands::ground(&file, &deck, &flags, out.as_deref()),
        Command::Eval { deck, truth, all_variants, predictions, flags, digits, report } => commands::eval(
            &file,
            commands::EvalArgs {
                deck: &deck,
                truth: &truth,
                all_variants,
                predictions: predictions.as_deref(),
                flags: &flags,
                digits: digits.or(file.eval.digits).unwrap_or(3),
                report: report.as_deref(),
            },
        ),
        Command::Plan { deck, predictions, default_effects, flags, out } => {
            commands::plan(&file, &deck, predictions.as_deref(), default_effects, &flags, out.as_deref())
        }
        Command::Render { deck, plan, searchable, flags, slide_images, rasterizer, out_dir, mux_command } => {
            commands::render(
                &file,
                commands::RenderArgs {
                    deck: &deck,
                    plan: plan.as_deref(),
                    searchable: searchable.as_deref(),
                    flags: &flags,
                    slide_images: slide_images.as_deref(),
                    rasterizer,
                    out_dir: out_dir.as_deref(),
                    mux_command,
                },
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("s2sg: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
