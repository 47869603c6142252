//! Grayscale pose figures: annotations and network predictions share this type.

use crate::error::{Error, Result};

pub const FIGURE_ROWS: usize = 120;
pub const FIGURE_COLS: usize = 160;
pub const FIGURE_PIXELS: usize = FIGURE_ROWS * FIGURE_COLS;

/// A 120×160 grayscale image with pixels in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFigure {
    pixels: Vec<f64>,
}

impl PoseFigure {
    pub fn zeros() -> Self {
        Self {
            pixels: vec![0.0; FIGURE_PIXELS],
        }
    }

    pub fn filled(value: f64) -> Result<Self> {
        Self::from_pixels(vec![value; FIGURE_PIXELS])
    }

    pub fn from_pixels(pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != FIGURE_PIXELS {
            return Err(Error::InvalidFigure(format!(
                "{} pixels, expected {FIGURE_PIXELS}",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidFigure(format!(
                "pixel {i} = {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self { pixels })
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * FIGURE_COLS + col]
    }

    /// Raises a pixel to `value` if it is currently darker; values are clamped to `[0, 1]`.
    pub(crate) fn brighten(&mut self, row: usize, col: usize, value: f64) {
        let p = &mut self.pixels[row * FIGURE_COLS + col];
        *p = p.max(value.clamp(0.0, 1.0));
    }

    /// Pixel mask after thresholding at 0.5.
    pub fn binarize(&self) -> Vec<bool> {
        self.pixels.iter().map(|&p| p >= 0.5).collect()
    }
}
