//! Slide geometry: EMU rectangles, normalized rectangles and pixel mapping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// EMUs per inch.
pub const EMU_PER_INCH: i64 = 914_400;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("rectangle ({x0}, {y0}, {x1}, {y1}) violates 0 <= x0 <= x1 <= 1, 0 <= y0 <= y1 <= 1")]
    OutOfBounds { x0: f64, y0: f64, x1: f64, y1: f64 },
}

/// Slide size in EMU.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlideDimensions {
    pub width_emu: u64,
    pub height_emu: u64,
}

impl SlideDimensions {
    /// 10in x 7.5in, the 4:3 default.
    pub const DEFAULT: SlideDimensions = SlideDimensions { width_emu: 9_144_000, height_emu: 6_858_000 };
}

/// A shape frame as stored in the deck: offset and extent in EMU.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmuRect {
    pub x: i64,
    pub y: i64,
    pub cx: i64,
    pub cy: i64,
}

/// A rectangle in slide-fraction coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRect<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct NormalizedRect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

#[derive(Deserialize)]
struct RawRect<T> {
    x0: T,
    y0: T,
    x1: T,
    y1: T,
}

impl<T: Real> TryFrom<RawRect<T>> for NormalizedRect<T> {
    type Error = GeometryError;

    fn try_from(r: RawRect<T>) -> Result<Self, Self::Error> {
        NormalizedRect::new(r.x0, r.y0, r.x1, r.y1)
    }
}

/// Integer pixel rectangle, end-exclusive in spirit but stored as the rounded corners.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl<T: Real> NormalizedRect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Result<Self, GeometryError> {
        let zero = T::zero();
        let one = T::one();
        let ok = zero <= x0 && x0 <= x1 && x1 <= one && zero <= y0 && y0 <= y1 && y1 <= one;
        if ok {
            Ok(Self { x0, y0, x1, y1 })
        } else {
            Err(GeometryError::OutOfBounds {
                x0: x0.to_f64().unwrap_or(f64::NAN),
                y0: y0.to_f64().unwrap_or(f64::NAN),
                x1: x1.to_f64().unwrap_or(f64::NAN),
                y1: y1.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    pub fn full() -> Self {
        Self { x0: T::zero(), y0: T::zero(), x1: T::one(), y1: T::one() }
    }

    /// Builds a rectangle from arbitrary corners, clamping into the unit square.
    pub fn clamped(x0: T, y0: T, x1: T, y1: T) -> Self {
        let c = |v: T| v.max(T::zero()).min(T::one());
        let (x0, x1) = (c(x0.min(x1)), c(x0.max(x1)));
        let (y0, y1) = (c(y0.min(y1)), c(y0.max(y1)));
        Self { x0, y0, x1, y1 }
    }

    /// Normalizes a shape frame by the slide dimensions. Shapes hanging off
    /// the slide are clipped to it.
    pub fn from_emu(frame: EmuRect, slide: SlideDimensions) -> Self {
        let w = T::from_u64(slide.width_emu).expect("slide width");
        let h = T::from_u64(slide.height_emu).expect("slide height");
        let f = |v: i64| T::from_i64(v).expect("emu value");
        Self::clamped(f(frame.x) / w, f(frame.y) / h, f(frame.x + frame.cx) / w, f(frame.y + frame.cy) / h)
    }

    /// The `index`-th of `count` equal-height horizontal bands.
    pub fn line_slice(&self, index: usize, count: usize) -> Self {
        assert!(count > 0 && index < count, "slice {index} of {count}");
        let n = T::from_usize(count).expect("line count");
        let height = self.y1 - self.y0;
        let at = |k: usize| self.y0 + height * T::from_usize(k).expect("line index") / n;
        let y1 = if index + 1 == count { self.y1 } else { at(index + 1) };
        Self { x0: self.x0, y0: at(index), x1: self.x1, y1 }
    }

    pub fn center(&self) -> (T, T) {
        let two = T::one() + T::one();
        ((self.x0 + self.x1) / two, (self.y0 + self.y1) / two)
    }

    /// Scales to a `width` x `height` raster, rounding each corner.
    pub fn to_pixels(&self, width: u32, height: u32) -> PixelRect {
        let w = T::from_u32(width).expect("width");
        let h = T::from_u32(height).expect("height");
        let r = |v: T| v.round().to_i64().expect("pixel coordinate");
        PixelRect { x0: r(self.x0 * w), y0: r(self.y0 * h), x1: r(self.x1 * w), y1: r(self.y1 * h) }
    }

    pub fn cast<U: Real>(&self) -> NormalizedRect<U> {
        let c = |v: T| U::from(v).expect("representable coordinate");
        NormalizedRect { x0: c(self.x0), y0: c(self.y0), x1: c(self.x1), y1: c(self.y1) }
    }
}
