//! Pixel-level regression with a tanh head over fixed per-pixel features.
//!
//! The model is `f_i = tanh(w . phi_i)`; training is full-batch gradient
//! descent with a constant step. The parameter gradient is chained by hand:
//! `dL/dw = sum_i dL/df_i * (1 - f_i^2) * phi_i`. Each image's loss and
//! gradient may be computed in parallel, but the reduction over pixels and
//! over images runs in a fixed order, so weights are bit-reproducible.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::filters::{box_blur, horizontal_gradient, local_std, vertical_gradient};
use crate::grid::{BinaryMask, FieldKind, GridError, ScalarField};
use crate::losses::{self, LossConfig, LossError};
use crate::metrics::{self, mean_se, MeanSe};
use crate::synth::{self, SynthConfig, SynthError};
use crate::transforms::{self, SaunaParams, TransformError};

pub const NUM_FEATURES: usize = 8;
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "intensity",
    "blur_r1",
    "blur_r2",
    "blur_r4",
    "grad_x",
    "grad_y",
    "std_r2",
    "bias",
];

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss {loss} at epoch {epoch}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("image must lie in [0, 1]: {0}")]
    BadImage(GridError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Per-pixel feature vectors, pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBank {
    height: usize,
    width: usize,
    features: Vec<[f64; NUM_FEATURES]>,
}

impl FeatureBank {
    pub fn from_raw(height: usize, width: usize, features: Vec<[f64; NUM_FEATURES]>) -> Result<Self, GridError> {
        if height == 0 || width == 0 || height * width != features.len() {
            return Err(GridError::InvalidShape {
                height,
                width,
                len: features.len(),
            });
        }
        if let Some(index) = features.iter().position(|f| f.iter().any(|v| !v.is_finite())) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self {
            height,
            width,
            features,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[[f64; NUM_FEATURES]] {
        &self.features
    }

    pub fn channel(&self, k: usize) -> Vec<f64> {
        self.features.iter().map(|f| f[k]).collect()
    }
}

pub fn featurize(image: &ScalarField) -> Result<FeatureBank, TrainError> {
    let image = image
        .clone()
        .with_kind(FieldKind::Image)
        .map_err(TrainError::BadImage)?;
    let (h, w) = (image.height(), image.width());
    let raw = image.as_slice();
    let channels = [
        raw.to_vec(),
        box_blur(h, w, raw, 1),
        box_blur(h, w, raw, 2),
        box_blur(h, w, raw, 4),
        horizontal_gradient(h, w, raw),
        vertical_gradient(h, w, raw),
        local_std(h, w, raw, 2),
        vec![1.0; raw.len()],
    ];
    let features = (0..raw.len())
        .map(|i| std::array::from_fn(|k| channels[k][i]))
        .collect();
    Ok(FeatureBank::from_raw(h, w, features)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Objective {
    /// `weight_gjml * GJML + weight_sfl1 * stable focal-L1`.
    Combined(LossConfig),
    /// Mean absolute error.
    PlainL1,
}

impl Objective {
    fn validate(&self) -> Result<(), TrainError> {
        if let Objective::Combined(cfg) = self {
            cfg.validate()?;
        }
        Ok(())
    }

    fn value_and_grad(&self, pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Objective::Combined(cfg) => (
                losses::combined_raw(pred, target, cfg),
                losses::combined_grad_raw(pred, target, cfg),
            ),
            Objective::PlainL1 => (losses::l1_raw(pred, target), losses::l1_grad_raw(pred, target)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub initial_weights: [f64; NUM_FEATURES],
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            epochs: 200,
            initial_weights: [0.0; NUM_FEATURES],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PixelModel {
    pub weights: [f64; NUM_FEATURES],
}

#[inline]
fn dot(w: &[f64; NUM_FEATURES], phi: &[f64; NUM_FEATURES]) -> f64 {
    w.iter().zip(phi).fold(0.0, |acc, (a, b)| acc + a * b)
}

impl PixelModel {
    pub fn new(weights: [f64; NUM_FEATURES]) -> Self {
        Self { weights }
    }

    fn forward(&self, bank: &FeatureBank) -> Vec<f64> {
        bank.features.iter().map(|phi| dot(&self.weights, phi).tanh()).collect()
    }

    /// Predictions in `(-1, 1)`.
    pub fn predict(&self, bank: &FeatureBank) -> ScalarField {
        ScalarField::new(bank.height, bank.width, self.forward(bank), FieldKind::Prediction)
            .expect("tanh output is finite and within [-1, 1]")
    }
}

/// Objective value and parameter gradient for one image.
pub fn image_loss_and_grad(
    model: &PixelModel,
    bank: &FeatureBank,
    target: &ScalarField,
    objective: &Objective,
) -> (f64, [f64; NUM_FEATURES]) {
    let pred = model.forward(bank);
    let (loss, dl_df) = objective.value_and_grad(&pred, target.as_slice());
    let mut grad = [0.0; NUM_FEATURES];
    for ((phi, &f), &g) in bank.features.iter().zip(&pred).zip(&dl_df) {
        let dz = g * (1.0 - f * f);
        for k in 0..NUM_FEATURES {
            grad[k] += dz * phi[k];
        }
    }
    (loss, grad)
}

/// Mean objective and gradient over the corpus, reduced in corpus order.
pub fn corpus_loss_and_grad(
    model: &PixelModel,
    corpus: &[(FeatureBank, ScalarField)],
    objective: &Objective,
) -> (f64, [f64; NUM_FEATURES]) {
    let per_image: Vec<(f64, [f64; NUM_FEATURES])> = corpus
        .par_iter()
        .map(|(bank, target)| image_loss_and_grad(model, bank, target, objective))
        .collect();
    let n = corpus.len() as f64;
    let mut loss = 0.0;
    let mut grad = [0.0; NUM_FEATURES];
    for (l, g) in &per_image {
        loss += l;
        for k in 0..NUM_FEATURES {
            grad[k] += g[k];
        }
    }
    for g in grad.iter_mut() {
        *g /= n;
    }
    (loss / n, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub model: PixelModel,
    /// Objective at the start of each epoch, followed by the final value.
    pub loss_curve: Vec<f64>,
}

pub fn train(
    corpus: &[(FeatureBank, ScalarField)],
    objective: &Objective,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if !(cfg.learning_rate > 0.0) || !cfg.learning_rate.is_finite() {
        return Err(TrainError::InvalidConfig("learning rate must be positive"));
    }
    objective.validate()?;
    for (bank, target) in corpus {
        if (bank.height, bank.width) != (target.height(), target.width()) {
            return Err(GridError::ShapeMismatch(bank.height, bank.width, target.height(), target.width()).into());
        }
        if let Some((index, &value)) = target
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !(-1.0..=1.0).contains(*v))
        {
            return Err(GridError::OutOfRange {
                kind: FieldKind::Sauna,
                index,
                value,
            }
            .into());
        }
    }

    let mut model = PixelModel::new(cfg.initial_weights);
    let mut curve = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        let (loss, grad) = corpus_loss_and_grad(&model, corpus, objective);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(TrainError::Diverged { epoch, loss });
        }
        curve.push(loss);
        for (w, g) in model.weights.iter_mut().zip(grad) {
            *w -= cfg.learning_rate * g;
        }
    }
    let (final_loss, _) = corpus_loss_and_grad(&model, corpus, objective);
    if !final_loss.is_finite() {
        return Err(TrainError::Diverged {
            epoch: cfg.epochs,
            loss: final_loss,
        });
    }
    curve.push(final_loss);
    Ok(TrainOutcome {
        model,
        loss_curve: curve,
    })
}

/// Label-and-loss combinations compared by [`run_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    /// Targets `2y - 1` with plain L1.
    HardL1,
    /// Full soft labels with GJML + stable focal-L1.
    Full,
    /// Soft labels without the thickness map.
    NoThickness,
    /// Soft labels without the boundary map.
    NoBoundary,
    OnlyGjml,
    OnlySfl1,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::HardL1,
        Variant::Full,
        Variant::NoThickness,
        Variant::NoBoundary,
        Variant::OnlyGjml,
        Variant::OnlySfl1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::HardL1 => "hard-l1",
            Variant::Full => "full",
            Variant::NoThickness => "no-thickness",
            Variant::NoBoundary => "no-boundary",
            Variant::OnlyGjml => "only-gjml",
            Variant::OnlySfl1 => "only-sfl1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    fn labels(self) -> Option<SaunaParams> {
        match self {
            Variant::HardL1 => None,
            Variant::NoThickness => Some(SaunaParams::without_thickness()),
            Variant::NoBoundary => Some(SaunaParams::without_boundary()),
            Variant::Full | Variant::OnlyGjml | Variant::OnlySfl1 => Some(SaunaParams::default()),
        }
    }

    fn objective(self, base: &LossConfig) -> Objective {
        match self {
            Variant::HardL1 => Objective::PlainL1,
            Variant::OnlyGjml => Objective::Combined(LossConfig {
                weight_sfl1: 0.0,
                ..*base
            }),
            Variant::OnlySfl1 => Objective::Combined(LossConfig {
                weight_gjml: 0.0,
                ..*base
            }),
            _ => Objective::Combined(*base),
        }
    }

    /// Training target for a ground-truth mask.
    pub fn target(self, mask: &BinaryMask) -> Result<ScalarField, TrainError> {
        match self.labels() {
            None => {
                let data = mask.as_slice().iter().map(|&v| 2.0 * v as f64 - 1.0).collect();
                Ok(ScalarField::new(mask.height(), mask.width(), data, FieldKind::Sauna)?)
            }
            Some(params) => Ok(transforms::sauna_transform(mask, &params)?),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub loss: LossConfig,
    pub train: TrainConfig,
}

/// Step size used by the ablation experiment.
pub const EXPERIMENT_LEARNING_RATE: f64 = 0.3;

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            synth: SynthConfig::with_seed(seed),
            n_train: 20,
            n_test: 10,
            loss: LossConfig::default(),
            train: TrainConfig {
                learning_rate: EXPERIMENT_LEARNING_RATE,
                ..TrainConfig::default()
            },
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::with_seed(7)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub iou: MeanSe,
    pub dice: MeanSe,
    pub ba: MeanSe,
    pub weights: [f64; NUM_FEATURES],
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub results: Vec<VariantResult>,
}

impl ExperimentReport {
    pub fn get(&self, v: Variant) -> Option<&VariantResult> {
        self.results.iter().find(|r| r.variant == v)
    }

    pub fn table_csv(&self) -> String {
        let mut out = String::from("variant,iou_mean,iou_se,dice_mean,dice_se,ba_mean,ba_se,final_loss\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.variant,
                r.iou.mean,
                r.iou.se,
                r.dice.mean,
                r.dice.se,
                r.ba.mean,
                r.ba.se,
                r.loss_curve.last().copied().unwrap_or(f64::NAN),
            ));
        }
        out
    }

    /// One row per epoch (the last row is the post-training value), one column per variant.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("epoch");
        for r in &self.results {
            out.push(',');
            out.push_str(r.variant.name());
        }
        out.push('\n');
        let len = self.results.iter().map(|r| r.loss_curve.len()).max().unwrap_or(0);
        for e in 0..len {
            out.push_str(&e.to_string());
            for r in &self.results {
                match r.loss_curve.get(e) {
                    Some(v) => out.push_str(&format!(",{v:.6}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Trains every variant on the same synthetic split and scores test IoU.
pub fn run_experiment(cfg: &ExperimentConfig, variants: &[Variant]) -> Result<ExperimentReport, TrainError> {
    if cfg.n_train == 0 || cfg.n_test == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    let train_set = synth::generate_range(&cfg.synth, 0, cfg.n_train)?;
    let test_set = synth::generate_range(&cfg.synth, cfg.n_train, cfg.n_test)?;
    let train_banks = train_set
        .iter()
        .map(|s| featurize(&s.image))
        .collect::<Result<Vec<_>, _>>()?;
    let test_banks = test_set
        .iter()
        .map(|s| featurize(&s.image))
        .collect::<Result<Vec<_>, _>>()?;

    let mut results = Vec::with_capacity(variants.len());
    for &variant in variants {
        let corpus = train_set
            .iter()
            .zip(&train_banks)
            .map(|(s, bank)| Ok((bank.clone(), variant.target(&s.mask)?)))
            .collect::<Result<Vec<_>, TrainError>>()?;
        let outcome = train(&corpus, &variant.objective(&cfg.loss), &cfg.train)?;

        let mut iou = Vec::with_capacity(test_set.len());
        let mut dice = Vec::with_capacity(test_set.len());
        let mut ba = Vec::with_capacity(test_set.len());
        for (i, (s, bank)) in test_set.iter().zip(&test_banks).enumerate() {
            let pred = outcome.model.predict(bank);
            let m =
                metrics::evaluate_image(i.to_string(), &pred, &s.mask, 0.0).expect("prediction and mask share a shape");
            iou.push(m.scores.iou);
            dice.push(m.scores.dice);
            ba.push(m.scores.ba);
        }
        results.push(VariantResult {
            variant,
            iou: mean_se(&iou).expect("non-empty test set"),
            dice: mean_se(&dice).expect("non-empty test set"),
            ba: mean_se(&ba).expect("non-empty test set"),
            weights: outcome.model.weights,
            loss_curve: outcome.loss_curve,
        });
    }
    Ok(ExperimentReport { results })
}
