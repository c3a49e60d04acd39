//! Per-pixel color transforms used by the detectors.

use crate::raster::Rgb;

/// Full-range YCbCr, every channel in `[0, 255]`, chroma centered at 128.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YCbCr {
    pub y: f64,
    pub cb: f64,
    pub cr: f64,
}

/// Full-range BT.601 conversion, computed in floating point.
pub fn rgb_to_ycbcr([r, g, b]: Rgb) -> YCbCr {
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    YCbCr {
        y: y.clamp(0.0, 255.0),
        cb: cb.clamp(0.0, 255.0),
        cr: cr.clamp(0.0, 255.0),
    }
}

/// Pairwise channel differences. `s_b == s_r + s_g` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChenPixel {
    pub s_r: i16,
    pub s_g: i16,
    pub s_b: i16,
}

pub fn chen_transform([r, g, b]: Rgb) -> ChenPixel {
    let (r, g, b) = (i16::from(r), i16::from(g), i16::from(b));
    ChenPixel {
        s_r: r - g,
        s_g: g - b,
        s_b: r - b,
    }
}

/// Luma weights of the grayscale map used by the Cheddad error signal.
pub const CHEDDAD_LUMA: [f64; 3] = [0.2989, 0.5870, 0.1140];

/// Difference between the grayscale map and its non-red version,
/// `luma(r, g, b) - max(g, b)` on unit-range channels. Lies in `[-1, 1]`.
pub fn cheddad_e([r, g, b]: Rgb) -> f64 {
    let (r, g, b) = (
        f64::from(r) / 255.0,
        f64::from(g) / 255.0,
        f64::from(b) / 255.0,
    );
    let luma = CHEDDAD_LUMA[0] * r + CHEDDAD_LUMA[1] * g + CHEDDAD_LUMA[2] * b;
    luma - g.max(b)
}
