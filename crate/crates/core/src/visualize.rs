//! Mapping of real-valued components to 8-bit intensities.

use serde::{Deserialize, Serialize};

use crate::grid::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    /// Clamp `[0, 1]` to `[0, 255]`.
    Cartoon,
    /// Linear map of `[lo, hi]` (the field's own range when `None`) onto
    /// `[0, 255]`, saturating outside it. Constant fields map to 128.
    Rescale { range: Option<(f64, f64)> },
}

/// Round half up to the nearest byte.
#[inline]
fn to_byte(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn render(field: &ScalarField, mode: RenderMode) -> Vec<u8> {
    match mode {
        RenderMode::Cartoon => field
            .values()
            .iter()
            .map(|&v| to_byte(v.clamp(0.0, 1.0) * 255.0))
            .collect(),
        RenderMode::Rescale { range } => {
            let (lo, hi) = range.unwrap_or_else(|| (field.min(), field.max()));
            if !(hi > lo) {
                return vec![128; field.len()];
            }
            let scale = 255.0 / (hi - lo);
            field
                .values()
                .iter()
                .map(|&v| to_byte((v.clamp(lo, hi) - lo) * scale))
                .collect()
        }
    }
}
