//! Soft-label construction from binary masks.
//!
//! For a mask `y` the pipeline is:
//!
//! 1. `d`: exact Euclidean distance of every pixel to the nearest pixel of
//!    the opposite class.
//! 2. `m`: the largest `d` over foreground pixels (half-width of the
//!    thickest structure).
//! 3. `t`: the largest foreground `d` within the Chebyshev window of radius
//!    `floor(m)`; `m` when the window holds no foreground.
//! 4. `y^B = s(y) * min(1, d / m)` and `y^T = s(y) * (1 - min(1, t / m))`
//!    with `s(y) = +1` on foreground, `-1` on background.
//! 5. The soft label `clamp(y^B + y^T, -1, 1)`.
//!
//! An all-background mask maps to the constant `-1` field.

mod edt;
mod maxfilter;
pub mod oracle;

use thiserror::Error;

use crate::grid::{BinaryMask, FieldKind, GridError, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("degenerate mask: {0}")]
    DegenerateMask(&'static str),
    #[error("invalid transform parameters: {0}")]
    InvalidParams(&'static str),
    #[error("normalizer m = {0} is below 1")]
    NormalizerBelowOne(f64),
    #[error("mask of {0}x{1} exceeds the brute-force limit of {2} pixels")]
    Oversize(usize, usize, usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Thickness assigned to pixels whose window contains no foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyWindow {
    /// `t = m`, so the thickness term vanishes there.
    #[default]
    SetToM,
}

/// How the window radius is derived from `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowRounding {
    #[default]
    Floor,
}

impl WindowRounding {
    pub fn radius(self, m: f64) -> usize {
        match self {
            WindowRounding::Floor => m.floor() as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaunaParams {
    pub clamp_output: bool,
    pub empty_window_thickness: EmptyWindow,
    pub window_radius_rounding: WindowRounding,
    pub include_boundary_map: bool,
    pub include_thickness_map: bool,
}

impl Default for SaunaParams {
    fn default() -> Self {
        Self {
            clamp_output: true,
            empty_window_thickness: EmptyWindow::SetToM,
            window_radius_rounding: WindowRounding::Floor,
            include_boundary_map: true,
            include_thickness_map: true,
        }
    }
}

impl SaunaParams {
    pub fn without_thickness() -> Self {
        Self {
            include_thickness_map: false,
            ..Self::default()
        }
    }

    pub fn without_boundary() -> Self {
        Self {
            include_boundary_map: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        if !self.include_boundary_map && !self.include_thickness_map {
            return Err(TransformError::InvalidParams(
                "at least one of the boundary and thickness maps must be enabled",
            ));
        }
        Ok(())
    }
}

#[inline]
fn sign(fg: bool) -> f64 {
    if fg {
        1.0
    } else {
        -1.0
    }
}

fn check_consistent(mask: &BinaryMask, field: &ScalarField) -> Result<(), TransformError> {
    mask.same_shape(field)?;
    Ok(())
}

/// Exact distance from each pixel to the nearest pixel of the other class.
pub fn distance_transform(mask: &BinaryMask) -> Result<ScalarField, TransformError> {
    let (h, w) = (mask.height(), mask.width());
    let fg = mask.fg_count();
    if fg == 0 || fg == mask.len() {
        return Err(TransformError::DegenerateMask("single class"));
    }
    let to_bg = edt::squared_edt(h, w, |i| !mask.is_fg(i)).expect("mask has background");
    let to_fg = edt::squared_edt(h, w, |i| mask.is_fg(i)).expect("mask has foreground");
    let data = (0..mask.len())
        .map(|i| {
            let sq = if mask.is_fg(i) { to_bg[i] } else { to_fg[i] };
            (sq as f64).sqrt()
        })
        .collect();
    Ok(ScalarField::new(h, w, data, FieldKind::Distance)?)
}

/// `m`: the largest distance over foreground pixels.
pub fn max_fg_distance(mask: &BinaryMask, d: &ScalarField) -> Result<f64, TransformError> {
    check_consistent(mask, d)?;
    d.as_slice()
        .iter()
        .zip(mask.as_slice())
        .filter(|(_, &y)| y == 1)
        .map(|(&v, _)| v)
        .reduce(f64::max)
        .ok_or(TransformError::DegenerateMask("no foreground"))
}

/// Windowed maximum of foreground distances with Chebyshev radius derived from `m`.
pub fn thickness_transform(
    mask: &BinaryMask,
    d: &ScalarField,
    m: f64,
    params: &SaunaParams,
) -> Result<ScalarField, TransformError> {
    check_consistent(mask, d)?;
    if !(m >= 1.0) {
        return Err(TransformError::NormalizerBelowOne(m));
    }
    let radius = params.window_radius_rounding.radius(m);
    let fg_distances: Vec<f64> = d
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .map(|(&v, &y)| if y == 1 { v } else { f64::NEG_INFINITY })
        .collect();
    let pooled = maxfilter::chebyshev_max_filter(mask.height(), mask.width(), &fg_distances, radius);
    let empty = match params.empty_window_thickness {
        EmptyWindow::SetToM => m,
    };
    let data = pooled
        .into_iter()
        .map(|v| if v == f64::NEG_INFINITY { empty } else { v })
        .collect();
    Ok(ScalarField::new(
        mask.height(),
        mask.width(),
        data,
        FieldKind::Thickness,
    )?)
}

pub fn boundary_map(mask: &BinaryMask, d: &ScalarField, m: f64) -> Result<ScalarField, TransformError> {
    check_consistent(mask, d)?;
    let data = d
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .map(|(&di, &y)| sign(y == 1) * (di / m).min(1.0))
        .collect();
    Ok(ScalarField::new(
        mask.height(),
        mask.width(),
        data,
        FieldKind::BoundaryMap,
    )?)
}

pub fn thickness_map(mask: &BinaryMask, t: &ScalarField, m: f64) -> Result<ScalarField, TransformError> {
    check_consistent(mask, t)?;
    let data = t
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .map(|(&ti, &y)| sign(y == 1) * (1.0 - (ti / m).min(1.0)))
        .collect();
    Ok(ScalarField::new(
        mask.height(),
        mask.width(),
        data,
        FieldKind::ThicknessMap,
    )?)
}

/// Every intermediate of the transform for a two-class mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SaunaMaps {
    pub distance: ScalarField,
    pub m: f64,
    pub thickness: ScalarField,
    pub boundary: ScalarField,
    pub thickness_map: ScalarField,
    pub sauna: ScalarField,
}

/// Combines the enabled maps. Clamped output is tagged [`FieldKind::Sauna`];
/// unclamped output may leave `[-1, 1]` and is tagged [`FieldKind::Generic`].
pub fn compose(
    boundary: &ScalarField,
    thickness_map: &ScalarField,
    params: &SaunaParams,
) -> Result<ScalarField, TransformError> {
    params.validate()?;
    boundary.same_shape(thickness_map)?;
    let data = boundary
        .as_slice()
        .iter()
        .zip(thickness_map.as_slice())
        .map(|(&b, &t)| {
            let mut v = 0.0;
            if params.include_boundary_map {
                v += b;
            }
            if params.include_thickness_map {
                v += t;
            }
            if params.clamp_output {
                v.clamp(-1.0, 1.0)
            } else {
                v
            }
        })
        .collect();
    let kind = if params.clamp_output {
        FieldKind::Sauna
    } else {
        FieldKind::Generic
    };
    Ok(ScalarField::new(boundary.height(), boundary.width(), data, kind)?)
}

/// Runs the full pipeline on a mask with both classes present.
pub fn sauna_maps(mask: &BinaryMask, params: &SaunaParams) -> Result<SaunaMaps, TransformError> {
    params.validate()?;
    let distance = distance_transform(mask)?;
    let m = max_fg_distance(mask, &distance)?;
    let thickness = thickness_transform(mask, &distance, m, params)?;
    let boundary = boundary_map(mask, &distance, m)?;
    let thickness_map = thickness_map(mask, &thickness, m)?;
    let sauna = compose(&boundary, &thickness_map, params)?;
    Ok(SaunaMaps {
        distance,
        m,
        thickness,
        boundary,
        thickness_map,
        sauna,
    })
}

/// Soft label for any mask with background; all-background masks give the constant `-1` field.
pub fn sauna_transform(mask: &BinaryMask, params: &SaunaParams) -> Result<ScalarField, TransformError> {
    params.validate()?;
    let fg = mask.fg_count();
    if fg == mask.len() {
        return Err(TransformError::DegenerateMask("no background"));
    }
    if fg == 0 {
        return Ok(ScalarField::filled(
            mask.height(),
            mask.width(),
            -1.0,
            FieldKind::Sauna,
        )?);
    }
    Ok(sauna_maps(mask, params)?.sauna)
}
