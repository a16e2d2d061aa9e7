//! Heatmap rendering of fields to 8-bit PNG.

use std::path::Path;

use image::{DynamicImage, RgbImage};

use crate::grid::{FieldKind, ScalarField};
use crate::io::{encode_png, write_atomic, IoError};

const COLD: [f64; 3] = [59.0, 76.0, 192.0];
const MID: [f64; 3] = [221.0, 221.0, 221.0];
const HOT: [f64; 3] = [180.0, 4.0, 38.0];

/// Maps a signed value in `[-1, 1]` to an intensity: -1 -> 0, 0 -> 128, +1 -> 255.
#[inline]
pub fn signed_intensity(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

/// Per-pixel intensities. Signed kinds use [`signed_intensity`]; unsigned
/// kinds (distances, thickness, images) are divided by their maximum and
/// spread over `0..=255`.
pub fn heatmap_intensities(field: &ScalarField) -> Vec<u8> {
    let data = field.as_slice();
    let signed = match field.kind() {
        k if k.is_signed_unit() => true,
        FieldKind::Generic => data.iter().any(|&v| v < 0.0),
        _ => false,
    };
    if signed {
        let peak = data.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
        data.iter().map(|&v| signed_intensity(v / peak)).collect()
    } else {
        let max = field.max_value();
        let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
        data.iter()
            .map(|&v| ((v * scale).clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

/// Fixed blue-white-red diverging ramp indexed by intensity.
pub fn ramp(intensity: u8) -> [u8; 3] {
    let (from, to, t) = if intensity <= 128 {
        (COLD, MID, intensity as f64 / 128.0)
    } else {
        (MID, HOT, (intensity as f64 - 128.0) / 127.0)
    };
    let mut rgb = [0u8; 3];
    for c in 0..3 {
        rgb[c] = (from[c] + (to[c] - from[c]) * t).round() as u8;
    }
    rgb
}

pub fn render_heatmap(field: &ScalarField, path: &Path) -> Result<(), IoError> {
    let pixels: Vec<u8> = heatmap_intensities(field).into_iter().flat_map(ramp).collect();
    let img = RgbImage::from_raw(field.width() as u32, field.height() as u32, pixels)
        .expect("buffer length matches field dimensions");
    write_atomic(path, &encode_png(DynamicImage::ImageRgb8(img), path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_endpoints() {
        assert_eq!(signed_intensity(-1.0), 0);
        assert_eq!(signed_intensity(0.0), 128);
        assert_eq!(signed_intensity(1.0), 255);
        assert_eq!(signed_intensity(0.5), 191);
    }

    #[test]
    fn constant_fields() {
        let lo = ScalarField::filled(2, 2, -1.0, FieldKind::Sauna).unwrap();
        assert!(heatmap_intensities(&lo).iter().all(|&v| v == 0));
        let hi = ScalarField::filled(2, 2, 1.0, FieldKind::Sauna).unwrap();
        assert!(heatmap_intensities(&hi).iter().all(|&v| v == 255));
    }

    #[test]
    fn distance_normalized_by_max() {
        let d = ScalarField::from_vec(vec![0.0, 1.0, 2.0], FieldKind::Distance).unwrap();
        assert_eq!(heatmap_intensities(&d), vec![0, 128, 255]);
    }

    #[test]
    fn ramp_is_injective() {
        let mut seen = std::collections::HashSet::new();
        for k in 0..=255u8 {
            assert!(seen.insert(ramp(k)), "duplicate color at {k}");
        }
        assert_eq!(ramp(0), [59, 76, 192]);
        assert_eq!(ramp(255), [180, 4, 38]);
    }
}
