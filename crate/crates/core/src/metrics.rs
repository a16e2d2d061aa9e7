//! Binarization and image-wise segmentation metrics.
//!
//! Any `0/0` ratio evaluates to 1: predicting an absent class as absent
//! counts as a success. Such cases are flagged on [`ImageMetrics`].

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{BinaryMask, GridError, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Shape(#[from] GridError),
    #[error("cannot aggregate an empty list of images")]
    Empty,
}

/// Foreground iff value is strictly above `threshold`.
pub fn binarize(pred: &ScalarField, threshold: f64) -> BinaryMask {
    let data = pred.as_slice().iter().map(|&v| (v > threshold) as u8).collect();
    BinaryMask::new(pred.height(), pred.width(), data).expect("shape taken from a valid field")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask) -> Result<ConfusionCounts, MetricsError> {
    pred.same_shape(gt)?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        match (p, g) {
            (1, 1) => c.tp += 1,
            (1, _) => c.fp += 1,
            (_, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    pub iou: f64,
    pub dice: f64,
    pub sens: f64,
    pub spec: f64,
    pub ba: f64,
}

impl Scores {
    pub const NAMES: [&'static str; 5] = ["iou", "dice", "sens", "spec", "ba"];

    pub fn values(&self) -> [f64; 5] {
        [self.iou, self.dice, self.sens, self.spec, self.ba]
    }
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (1.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Scores plus whether any of them fell back to the `0/0 = 1` convention.
pub fn metrics_from_confusion(c: &ConfusionCounts) -> (Scores, bool) {
    let (iou, a) = ratio(c.tp, c.tp + c.fp + c.fn_);
    let (dice, b) = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    let (sens, s) = ratio(c.tp, c.tp + c.fn_);
    let (spec, t) = ratio(c.tn, c.tn + c.fp);
    let scores = Scores {
        iou,
        dice,
        sens,
        spec,
        ba: (sens + spec) / 2.0,
    };
    (scores, a || b || s || t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageMetrics {
    pub id: String,
    pub confusion: ConfusionCounts,
    pub scores: Scores,
    /// Set when a score used the empty-class convention.
    pub empty_class: bool,
}

impl ImageMetrics {
    pub fn new(id: impl Into<String>, confusion: ConfusionCounts) -> Self {
        let (scores, empty_class) = metrics_from_confusion(&confusion);
        Self {
            id: id.into(),
            confusion,
            scores,
            empty_class,
        }
    }
}

/// Binarizes `pred` and scores it against `gt`.
pub fn evaluate_image(
    id: impl Into<String>,
    pred: &ScalarField,
    gt: &BinaryMask,
    threshold: f64,
) -> Result<ImageMetrics, MetricsError> {
    let c = confusion(&binarize(pred, threshold), gt)?;
    Ok(ImageMetrics::new(id, c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Mean and standard error `s / sqrt(n)`, `s` the (n-1) sample deviation; 0 for n = 1.
pub fn mean_se(values: &[f64]) -> Option<MeanSe> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n == 1 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Some(MeanSe { mean, se })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub iou: MeanSe,
    pub dice: MeanSe,
    pub sens: MeanSe,
    pub spec: MeanSe,
    pub ba: MeanSe,
}

impl Aggregate {
    pub fn entries(&self) -> [MeanSe; 5] {
        [self.iou, self.dice, self.sens, self.spec, self.ba]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_image: Vec<ImageMetrics>,
    pub aggregate: Aggregate,
}

pub fn aggregate(per_image: Vec<ImageMetrics>) -> Result<MetricsReport, MetricsError> {
    if per_image.is_empty() {
        return Err(MetricsError::Empty);
    }
    let column = |pick: fn(&Scores) -> f64| {
        let v: Vec<f64> = per_image.iter().map(|m| pick(&m.scores)).collect();
        mean_se(&v).expect("non-empty")
    };
    let aggregate = Aggregate {
        iou: column(|s| s.iou),
        dice: column(|s| s.dice),
        sens: column(|s| s.sens),
        spec: column(|s| s.spec),
        ba: column(|s| s.ba),
    };
    Ok(MetricsReport { per_image, aggregate })
}

impl MetricsReport {
    /// One row per image, then an `aggregate` row carrying means in the
    /// metric columns and standard errors in the `*_se` columns. Values use
    /// 6 decimals; `empty_class` is 1 where the `0/0 = 1` convention applied.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,iou,dice,sens,spec,ba,iou_se,dice_se,sens_se,spec_se,ba_se,empty_class\n");
        for m in &self.per_image {
            out.push_str(&m.id);
            for v in m.scores.values() {
                let _ = write!(out, ",{v:.6}");
            }
            let _ = writeln!(out, ",,,,,,{}", m.empty_class as u8);
        }
        out.push_str("aggregate");
        let entries = self.aggregate.entries();
        for e in &entries {
            let _ = write!(out, ",{:.6}", e.mean);
        }
        for e in &entries {
            let _ = write!(out, ",{:.6}", e.se);
        }
        let flagged = self.per_image.iter().filter(|m| m.empty_class).count();
        let _ = writeln!(out, ",{flagged}");
        out
    }
}
