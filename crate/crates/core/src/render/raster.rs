//! Frame rasterization and the clip manifest.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use image::{imageops, ImageFormat, Rgba, RgbaImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::interchange::{write_canonical, SearchableFile, SearchableSlide, FORMAT_VERSION};
use crate::model::ShapeId;

use super::{ClipPlan, Effect, EffectCommand, RenderError, RenderPlan};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    #[serde(alias = "top_left")]
    TopLeft,
    #[serde(alias = "top_right")]
    TopRight,
    #[serde(alias = "bottom_left")]
    BottomLeft,
    #[default]
    #[serde(alias = "bottom_right")]
    BottomRight,
}

impl std::str::FromStr for Corner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "top_left" => Ok(Corner::TopLeft),
            "top_right" => Ok(Corner::TopRight),
            "bottom_left" => Ok(Corner::BottomLeft),
            "bottom_right" => Ok(Corner::BottomRight),
            _ => Err(format!("unknown corner {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameStyle {
    pub outline: [u8; 4],
    pub outline_px: u32,
    pub marker: [u8; 4],
    pub marker_radius_px: u32,
    pub badge: [u8; 4],
    pub badge_figure: [u8; 4],
}

impl Default for FrameStyle {
    fn default() -> Self {
        Self {
            outline: [230, 30, 30, 255],
            outline_px: 4,
            marker: [20, 90, 230, 255],
            marker_radius_px: 10,
            badge: [60, 60, 70, 255],
            badge_figure: [235, 235, 240, 255],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    pub fps: u32,
    pub width: u32,
    pub height: u32,
    pub avatar_visible: bool,
    pub avatar_corner: Corner,
    pub style: FrameStyle,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            fps: 10,
            width: 1280,
            height: 720,
            avatar_visible: true,
            avatar_corner: Corner::BottomRight,
            style: FrameStyle::default(),
        }
    }
}

/// Where slide backgrounds come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SlideImages {
    /// A white canvas.
    Blank,
    /// `slide_<n>.png` files in a directory.
    Directory(PathBuf),
    /// An external rasterizer. Arguments may use `{slide}`, `{out}`,
    /// `{width}` and `{height}`; the command must write a PNG to `{out}`.
    Command(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub slide_number: u32,
    pub sentence_index: usize,
    /// Relative to the manifest's directory.
    pub frames_dir: String,
    pub frame_count: usize,
    pub fps: u32,
    pub clip_length: f64,
}

/// Contents of `manifest.json`: clips in playback order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderManifest {
    pub format_version: u32,
    pub width: u32,
    pub height: u32,
    pub fps: u32,
    pub clips: Vec<ManifestEntry>,
}

pub fn frame_count(clip_length: f64, fps: u32) -> usize {
    (clip_length * fps as f64).round() as usize
}

fn put(img: &mut RgbaImage, x: i64, y: i64, c: Rgba<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn fill(img: &mut RgbaImage, x0: i64, y0: i64, x1: i64, y1: i64, c: Rgba<u8>) {
    for y in y0..y1 {
        for x in x0..x1 {
            put(img, x, y, c);
        }
    }
}

fn disc(img: &mut RgbaImage, cx: i64, cy: i64, r: i64, c: Rgba<u8>) {
    for y in cy - r..=cy + r {
        for x in cx - r..=cx + r {
            if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                put(img, x, y, c);
            }
        }
    }
}

fn outline(img: &mut RgbaImage, x0: i64, y0: i64, x1: i64, y1: i64, px: i64, c: Rgba<u8>) {
    let (x1, y1) = (x1.max(x0 + 1), y1.max(y0 + 1));
    let px = px.max(1);
    fill(img, x0, y0, x1, (y0 + px).min(y1), c);
    fill(img, x0, (y1 - px).max(y0), x1, y1, c);
    fill(img, x0, y0, (x0 + px).min(x1), y1, c);
    fill(img, (x1 - px).max(x0), y0, x1, y1, c);
}

fn center_px(slide: &SearchableSlide, id: &ShapeId, w: u32, h: u32) -> Result<(f64, f64), RenderError> {
    let o = slide.find(id).ok_or_else(|| RenderError::MissingShape { slide: slide.slide_number, id: id.clone() })?;
    let (cx, cy) = o.position.center();
    Ok((cx * w as f64, cy * h as f64))
}

fn badge(img: &mut RgbaImage, settings: &RenderSettings) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let size = (h / 6).max(8);
    let margin = (h / 40).max(2);
    let x0 = match settings.avatar_corner {
        Corner::TopLeft | Corner::BottomLeft => margin,
        Corner::TopRight | Corner::BottomRight => w - margin - size,
    };
    let y0 = match settings.avatar_corner {
        Corner::TopLeft | Corner::TopRight => margin,
        Corner::BottomLeft | Corner::BottomRight => h - margin - size,
    };
    let st = &settings.style;
    fill(img, x0, y0, x0 + size, y0 + size, Rgba(st.badge));
    // head and shoulders
    disc(img, x0 + size / 2, y0 + size * 3 / 8, size / 6, Rgba(st.badge_figure));
    fill(img, x0 + size / 4, y0 + size * 5 / 8, x0 + size * 3 / 4, y0 + size * 7 / 8, Rgba(st.badge_figure));
}

/// Draws the commands active at `t` over a copy of `base`.
pub fn draw_frame(
    base: &RgbaImage,
    commands: &[EffectCommand],
    slide: &SearchableSlide,
    settings: &RenderSettings,
    t: f64,
) -> Result<RgbaImage, RenderError> {
    let mut img = base.clone();
    let (w, h) = (img.width(), img.height());
    let st = &settings.style;
    for cmd in commands.iter().filter(|c| c.active_at(t)) {
        match &cmd.effect {
            Effect::Rectangle { position } => {
                let o = slide
                    .find(position)
                    .ok_or_else(|| RenderError::MissingShape { slide: slide.slide_number, id: position.clone() })?;
                let r = o.position.to_pixels(w, h);
                outline(&mut img, r.x0, r.y0, r.x1, r.y1, st.outline_px as i64, Rgba(st.outline));
            }
            Effect::Point { start_pos, end_pos } => {
                let a = center_px(slide, start_pos, w, h)?;
                let b = center_px(slide, end_pos, w, h)?;
                let f = ((t - cmd.start_time) / cmd.duration).clamp(0.0, 1.0);
                let (x, y) = (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f);
                disc(&mut img, x.round() as i64, y.round() as i64, st.marker_radius_px as i64, Rgba(st.marker));
            }
            Effect::Avatar { .. } => {
                if settings.avatar_visible {
                    badge(&mut img, settings);
                }
            }
        }
    }
    Ok(img)
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RenderError + '_ {
    move |source| RenderError::Io { path: path.display().to_string(), source }
}

/// Writes the frames of one clip under `out_dir` and returns its manifest entry.
pub fn render_clip(
    slide_image: &RgbaImage,
    plan: &ClipPlan,
    slide: &SearchableSlide,
    settings: &RenderSettings,
    out_dir: &Path,
) -> Result<ManifestEntry, RenderError> {
    for cmd in &plan.commands {
        for id in cmd.effect.ids() {
            if slide.find(id).is_none() {
                return Err(RenderError::MissingShape { slide: slide.slide_number, id: id.clone() });
            }
        }
    }
    let name = format!("clip_{}_{}", plan.slide_number, plan.sentence_index);
    let dir = out_dir.join(&name);
    std::fs::create_dir_all(&dir).map_err(io(&dir))?;
    for entry in std::fs::read_dir(&dir).map_err(io(&dir))? {
        let p = entry.map_err(io(&dir))?.path();
        if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("frame_") && n.ends_with(".png")) {
            std::fs::remove_file(&p).map_err(io(&p))?;
        }
    }
    let n = frame_count(plan.clip_length, settings.fps);
    for k in 0..n {
        let t = k as f64 / settings.fps as f64;
        let frame = draw_frame(slide_image, &plan.commands, slide, settings, t)?;
        let path = dir.join(format!("frame_{k:05}.png"));
        frame
            .save_with_format(&path, ImageFormat::Png)
            .map_err(|e| RenderError::Image(format!("{}: {e}", path.display())))?;
    }
    Ok(ManifestEntry {
        slide_number: plan.slide_number,
        sentence_index: plan.sentence_index,
        frames_dir: name,
        frame_count: n,
        fps: settings.fps,
        clip_length: plan.clip_length,
    })
}

fn load_slide_image(
    source: &SlideImages,
    slide: u32,
    settings: &RenderSettings,
    out_dir: &Path,
) -> Result<RgbaImage, RenderError> {
    let (w, h) = (settings.width, settings.height);
    let path = match source {
        SlideImages::Blank => return Ok(RgbaImage::from_pixel(w, h, Rgba([255, 255, 255, 255]))),
        SlideImages::Directory(dir) => dir.join(format!("slide_{slide}.png")),
        SlideImages::Command(argv) => {
            let dir = out_dir.join("slides");
            std::fs::create_dir_all(&dir).map_err(io(&dir))?;
            let out = dir.join(format!("slide_{slide}.png"));
            let fill = |a: &String| {
                a.replace("{slide}", &slide.to_string())
                    .replace("{out}", &out.display().to_string())
                    .replace("{width}", &w.to_string())
                    .replace("{height}", &h.to_string())
            };
            let (prog, args) =
                argv.split_first().ok_or_else(|| RenderError::Image("empty rasterizer command".into()))?;
            let status = Command::new(fill(prog)).args(args.iter().map(fill)).status().map_err(io(Path::new(prog)))?;
            if !status.success() {
                return Err(RenderError::Image(format!("rasterizer exited with {status} for slide {slide}")));
            }
            out
        }
    };
    let img = image::open(&path).map_err(|e| RenderError::Image(format!("{}: {e}", path.display())))?.to_rgba8();
    if img.dimensions() == (w, h) {
        Ok(img)
    } else {
        Ok(imageops::resize(&img, w, h, imageops::FilterType::Triangle))
    }
}

/// Renders every clip of a plan and writes `manifest.json` under `out_dir`.
pub fn render_plan(
    plan: &RenderPlan,
    searchable: &SearchableFile,
    images: &SlideImages,
    settings: &RenderSettings,
    out_dir: &Path,
) -> Result<RenderManifest, RenderError> {
    let mut backgrounds = BTreeMap::new();
    for clip in &plan.clips {
        if let Entry::Vacant(slot) = backgrounds.entry(clip.slide_number) {
            slot.insert(load_slide_image(images, clip.slide_number, settings, out_dir)?);
        }
    }
    let clips = plan
        .clips
        .par_iter()
        .map(|clip| {
            let slide = searchable.slide(clip.slide_number).ok_or(RenderError::MissingSlide(clip.slide_number))?;
            let mut clip = clip.clone();
            if !settings.avatar_visible {
                clip.commands.retain(|c| !matches!(c.effect, Effect::Avatar { .. }));
            }
            render_clip(&backgrounds[&clip.slide_number], &clip, slide, settings, out_dir)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = RenderManifest {
        format_version: FORMAT_VERSION,
        width: settings.width,
        height: settings.height,
        fps: settings.fps,
        clips,
    };
    write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(path: &Path, manifest: &RenderManifest) -> Result<(), RenderError> {
    Ok(write_canonical(path, manifest)?)
}

/// A concatenating ffmpeg command line for the manifest; never run here.
pub fn mux_command(manifest: &RenderManifest, output: &str) -> String {
    let mut parts = vec!["ffmpeg".to_string(), "-y".to_string()];
    for c in &manifest.clips {
        parts.push(format!("-framerate {} -i {}/frame_%05d.png", c.fps, c.frames_dir));
    }
    let inputs: String = (0..manifest.clips.len()).map(|k| format!("[{k}:v]")).collect();
    parts.push(format!("-filter_complex \"{inputs}concat=n={}:v=1:a=0\"", manifest.clips.len()));
    parts.push(output.to_string());
    parts.join(" ")
}
