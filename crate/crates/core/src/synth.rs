//! Reproducible synthetic vessel masks and matching grayscale images.
//!
//! Each sample draws from its own ChaCha8 stream seeded with
//! `splitmix64(splitmix64(seed) ^ index)` (constants below); mixing the seed
//! first keeps nearby corpus seeds from sharing samples. Samples can be generated
//! independently and in any order. Masks are rasterized from random
//! momentum-driven walks entering from the border or forking off earlier
//! branches; every branch tapers linearly in half-width. Samples whose
//! foreground fraction falls outside `[0.02, 0.40]` are redrawn from the same
//! stream.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filters::box_blur;
use crate::grid::{BinaryMask, FieldKind, ScalarField};
use crate::io::{save_field, save_mask_pgm, write_atomic, IoError};

pub const MIN_FG_FRACTION: f64 = 0.02;
pub const MAX_FG_FRACTION: f64 = 0.40;
pub const MAX_ATTEMPTS: usize = 100;

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SPLITMIX_MUL1: u64 = 0xBF58_476D_1CE4_E5B9;
const SPLITMIX_MUL2: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(SPLITMIX_MUL1);
    z = (z ^ (z >> 27)).wrapping_mul(SPLITMIX_MUL2);
    z ^ (z >> 31)
}

pub fn sample_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index)
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(&'static str),
    #[error("sample {index}: no acceptable mask after {attempts} attempts")]
    RejectionFailed { index: usize, attempts: usize },
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Side length in pixels.
    pub size: usize,
    /// Inclusive range for the number of branches.
    pub n_branches: (usize, usize),
    /// Inclusive range for branch half-widths in pixels.
    pub thickness_range: (f64, f64),
    pub noise_sigma: f64,
    pub blur_radius: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            size: 128,
            n_branches: (3, 8),
            thickness_range: (1.0, 6.0),
            noise_sigma: 0.1,
            blur_radius: 1,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.size < 32 {
            return Err(SynthError::InvalidConfig("size must be at least 32"));
        }
        let (lo, hi) = self.thickness_range;
        if !(lo >= 1.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(SynthError::InvalidConfig(
                "thickness range must satisfy 1 <= min <= max",
            ));
        }
        if self.n_branches.0 == 0 || self.n_branches.1 < self.n_branches.0 {
            return Err(SynthError::InvalidConfig(
                "branch count range must satisfy 1 <= min <= max",
            ));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(SynthError::InvalidConfig("noise sigma must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: ScalarField,
    pub mask: BinaryMask,
}

struct Branch {
    points: Vec<(f64, f64)>,
    half_widths: Vec<f64>,
    headings: Vec<f64>,
}

fn stamp_disk(mask: &mut [bool], size: usize, (y, x): (f64, f64), radius: f64) {
    let r2 = radius * radius;
    let lo_y = (y - radius).floor().max(0.0) as usize;
    let hi_y = ((y + radius).ceil() as isize).min(size as isize - 1);
    let lo_x = (x - radius).floor().max(0.0) as usize;
    let hi_x = ((x + radius).ceil() as isize).min(size as isize - 1);
    if hi_y < 0 || hi_x < 0 {
        return;
    }
    for py in lo_y..=hi_y as usize {
        for px in lo_x..=hi_x as usize {
            let dy = py as f64 - y;
            let dx = px as f64 - x;
            if dy * dy + dx * dx <= r2 {
                mask[py * size + px] = true;
            }
        }
    }
}

fn border_start(rng: &mut ChaCha8Rng, size: usize) -> ((f64, f64), f64) {
    let s = (size - 1) as f64;
    let along = rng.random_range(0.1 * s..0.9 * s);
    let jitter = rng.random_range(-PI / 4.0..PI / 4.0);
    // heading measured as atan2(dy, dx)
    match rng.random_range(0..4u8) {
        0 => ((0.0, along), PI / 2.0 + jitter),
        1 => ((s, along), -PI / 2.0 + jitter),
        2 => ((along, 0.0), jitter),
        _ => ((along, s), PI + jitter),
    }
}

fn walk(rng: &mut ChaCha8Rng, size: usize, start: (f64, f64), heading: f64, half_width: (f64, f64)) -> Branch {
    let turn = Normal::new(0.0, 0.08).expect("valid normal");
    let max_len = rng.random_range(0.4..1.1) * size as f64;
    let steps = max_len.ceil() as usize;
    let (hw0, hw1) = half_width;
    let mut branch = Branch {
        points: Vec::with_capacity(steps),
        half_widths: Vec::with_capacity(steps),
        headings: Vec::with_capacity(steps),
    };
    let (mut y, mut x) = start;
    let mut theta = heading;
    let mut omega = 0.0;
    let limit = (size - 1) as f64;
    for step in 0..steps {
        if !(0.0..=limit).contains(&y) || !(0.0..=limit).contains(&x) {
            break;
        }
        let frac = step as f64 / steps.max(1) as f64;
        branch.points.push((y, x));
        branch.half_widths.push(hw0 + (hw1 - hw0) * frac);
        branch.headings.push(theta);
        omega = 0.85 * omega + turn.sample(rng);
        theta += omega;
        y += theta.sin();
        x += theta.cos();
    }
    branch
}

fn draw_mask(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Vec<bool> {
    let size = cfg.size;
    let (tlo, thi) = cfg.thickness_range;
    let n = rng.random_range(cfg.n_branches.0..=cfg.n_branches.1);
    let mut branches: Vec<Branch> = Vec::with_capacity(n);
    for _ in 0..n {
        let fork = !branches.is_empty() && rng.random_bool(0.5);
        let (start, heading, hw0) = if fork {
            let parent = &branches[rng.random_range(0..branches.len())];
            if parent.points.len() < 4 {
                let (p, h) = border_start(rng, size);
                (p, h, rng.random_range(tlo..=thi))
            } else {
                let k = rng.random_range(0..parent.points.len() * 3 / 4);
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let angle = parent.headings[k] + side * rng.random_range(PI / 6.0..PI / 3.0);
                let hw = rng.random_range(tlo..=thi).min(parent.half_widths[k]).max(tlo);
                (parent.points[k], angle, hw)
            }
        } else {
            let (p, h) = border_start(rng, size);
            (p, h, rng.random_range(tlo..=thi))
        };
        let hw1 = rng.random_range(tlo..=hw0);
        branches.push(walk(rng, size, start, heading, (hw0, hw1)));
    }
    let mut mask = vec![false; size * size];
    for b in &branches {
        for (&p, &hw) in b.points.iter().zip(&b.half_widths) {
            stamp_disk(&mut mask, size, p, hw);
        }
    }
    mask
}

fn render_image(rng: &mut ChaCha8Rng, cfg: &SynthConfig, mask: &BinaryMask) -> ScalarField {
    let size = cfg.size;
    let base: Vec<f64> = mask.as_slice().iter().map(|&v| v as f64).collect();
    let mut data = box_blur(size, size, &base, cfg.blur_radius);
    if cfg.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
        for v in data.iter_mut() {
            *v += noise.sample(rng);
        }
    }
    for v in data.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    ScalarField::new(size, size, data, FieldKind::Image).expect("clamped to [0, 1]")
}

pub fn generate_one(cfg: &SynthConfig, index: usize) -> Result<Sample, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, index as u64));
    for _ in 0..MAX_ATTEMPTS {
        let bits = draw_mask(&mut rng, cfg);
        let mask = BinaryMask::from_bools(cfg.size, cfg.size, &bits).expect("square grid");
        let frac = mask.fg_fraction();
        if (MIN_FG_FRACTION..=MAX_FG_FRACTION).contains(&frac) {
            let image = render_image(&mut rng, cfg, &mask);
            return Ok(Sample { image, mask });
        }
    }
    Err(SynthError::RejectionFailed {
        index,
        attempts: MAX_ATTEMPTS,
    })
}

/// Samples `offset..offset + count` of the stream defined by `cfg`.
pub fn generate_range(cfg: &SynthConfig, offset: usize, count: usize) -> Result<Vec<Sample>, SynthError> {
    cfg.validate()?;
    (offset..offset + count)
        .into_par_iter()
        .map(|i| generate_one(cfg, i))
        .collect()
}

pub fn generate(cfg: &SynthConfig, count: usize) -> Result<Vec<Sample>, SynthError> {
    generate_range(cfg, 0, count)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    seed: u64,
    config: &'a SynthConfig,
    count: usize,
}

pub fn image_file_name(index: usize) -> String {
    format!("img_{index:04}.sauna")
}

pub fn mask_file_name(index: usize) -> String {
    format!("mask_{index:04}.pgm")
}

/// Writes `img_NNNN.sauna`, `mask_NNNN.pgm` and `manifest.json` into `dir`.
pub fn write_corpus(dir: &Path, cfg: &SynthConfig, count: usize) -> Result<(), SynthError> {
    let samples = generate(cfg, count)?;
    std::fs::create_dir_all(dir).map_err(|source| IoError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (i, s) in samples.iter().enumerate() {
        save_field(&s.image, &dir.join(image_file_name(i)))?;
        save_mask_pgm(&s.mask, &dir.join(mask_file_name(i)))?;
    }
    let manifest = Manifest {
        seed: cfg.seed,
        config: cfg,
        count,
    };
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write_atomic(&dir.join("manifest.json"), &json)?;
    Ok(())
}
