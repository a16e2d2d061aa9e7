//! Brute-force reference for the soft-label pipeline.
//!
//! Each quantity is evaluated by literal quantifier enumeration over all pixel
//! pairs, with no shared code from the fast path. Quadratic in the pixel
//! count, so limited to [`MAX_ORACLE_PIXELS`].

use crate::grid::{BinaryMask, FieldKind, ScalarField};

use super::{SaunaMaps, SaunaParams, TransformError};

pub const MAX_ORACLE_PIXELS: usize = 64 * 64;

fn coords(index: usize, width: usize) -> (f64, f64) {
    ((index / width) as f64, (index % width) as f64)
}

fn check_size(mask: &BinaryMask) -> Result<(), TransformError> {
    if mask.len() > MAX_ORACLE_PIXELS {
        return Err(TransformError::Oversize(mask.height(), mask.width(), MAX_ORACLE_PIXELS));
    }
    Ok(())
}

/// All intermediates for a two-class mask.
pub fn brute_force_maps(mask: &BinaryMask, params: &SaunaParams) -> Result<SaunaMaps, TransformError> {
    check_size(mask)?;
    params.validate()?;
    let (h, w, n) = (mask.height(), mask.width(), mask.len());
    let y = mask.as_slice();
    if !y.contains(&0) || !y.contains(&1) {
        return Err(TransformError::DegenerateMask("single class"));
    }

    let mut d = vec![f64::INFINITY; n];
    for i in 0..n {
        let (ri, ci) = coords(i, w);
        for j in 0..n {
            if y[j] != y[i] {
                let (rj, cj) = coords(j, w);
                d[i] = d[i].min(((ri - rj).powi(2) + (ci - cj).powi(2)).sqrt());
            }
        }
    }

    let m = (0..n)
        .filter(|&k| y[k] == 1)
        .map(|k| d[k])
        .fold(f64::NEG_INFINITY, f64::max);

    // t_i = max { d_j : d_j <= m, y_j = 1, ||i - j||_inf <= m }
    let mut t = vec![m; n];
    for i in 0..n {
        let (ri, ci) = coords(i, w);
        let mut best: Option<f64> = None;
        for j in 0..n {
            let (rj, cj) = coords(j, w);
            let cheb = (ri - rj).abs().max((ci - cj).abs());
            if y[j] == 1 && d[j] <= m && cheb <= m {
                best = Some(best.map_or(d[j], |b: f64| b.max(d[j])));
            }
        }
        if let Some(b) = best {
            t[i] = b;
        }
    }

    let s = |k: usize| if y[k] == 1 { 1.0 } else { -1.0 };
    let yb: Vec<f64> = (0..n).map(|k| s(k) * (d[k] / m).min(1.0)).collect();
    let yt: Vec<f64> = (0..n).map(|k| s(k) * (1.0 - (t[k] / m).min(1.0))).collect();
    let sauna: Vec<f64> = (0..n)
        .map(|k| {
            let mut v = 0.0;
            if params.include_boundary_map {
                v += yb[k];
            }
            if params.include_thickness_map {
                v += yt[k];
            }
            if params.clamp_output {
                v.clamp(-1.0, 1.0)
            } else {
                v
            }
        })
        .collect();
    let sauna_kind = if params.clamp_output {
        FieldKind::Sauna
    } else {
        FieldKind::Generic
    };

    Ok(SaunaMaps {
        distance: ScalarField::new(h, w, d, FieldKind::Distance)?,
        m,
        thickness: ScalarField::new(h, w, t, FieldKind::Thickness)?,
        boundary: ScalarField::new(h, w, yb, FieldKind::BoundaryMap)?,
        thickness_map: ScalarField::new(h, w, yt, FieldKind::ThicknessMap)?,
        sauna: ScalarField::new(h, w, sauna, sauna_kind)?,
    })
}

/// Soft label by enumeration, including the all-background shortcut.
pub fn brute_force_sauna(mask: &BinaryMask, params: &SaunaParams) -> Result<ScalarField, TransformError> {
    check_size(mask)?;
    params.validate()?;
    let y = mask.as_slice();
    if !y.contains(&0) {
        return Err(TransformError::DegenerateMask("no background"));
    }
    if !y.contains(&1) {
        return Ok(ScalarField::filled(
            mask.height(),
            mask.width(),
            -1.0,
            FieldKind::Sauna,
        )?);
    }
    Ok(brute_force_maps(mask, params)?.sauna)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_pixel_row() {
        let mask = BinaryMask::new(1, 7, vec![0, 0, 1, 1, 1, 0, 0]).unwrap();
        let maps = brute_force_maps(&mask, &SaunaParams::default()).unwrap();
        assert_eq!(maps.distance.as_slice(), &[2.0, 1.0, 1.0, 2.0, 1.0, 1.0, 2.0]);
        assert_eq!(maps.thickness.as_slice(), &[1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 1.0]);
        assert_eq!(maps.sauna.as_slice(), &[-1.0, -0.5, 0.5, 1.0, 0.5, -0.5, -1.0]);
    }

    #[test]
    fn all_background() {
        let mask = BinaryMask::filled(4, 4, false).unwrap();
        let s = brute_force_sauna(&mask, &SaunaParams::default()).unwrap();
        assert!(s.as_slice().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn oversize_rejected() {
        let mask = BinaryMask::filled(65, 64, false).unwrap();
        assert!(matches!(
            brute_force_sauna(&mask, &SaunaParams::default()),
            Err(TransformError::Oversize(65, 64, _))
        ));
    }
}
