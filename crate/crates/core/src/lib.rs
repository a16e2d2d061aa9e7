//! Uncertainty-aware soft labels for binary segmentation masks, the
//! generalized Jaccard metric loss and stable focal-L1 regression losses with
//! analytic gradients, segmentation metrics, a synthetic vessel corpus and a
//! small pixel-level regression trainer.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod filters;
pub mod grid;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod render;
pub mod synth;
pub mod trainer;
pub mod transforms;
pub mod verify;

pub use grid::{BinaryMask, FieldKind, GridError, ScalarField};
pub use losses::{LossConfig, LossError, LossParts};
pub use metrics::{ConfusionCounts, MetricsReport};
pub use synth::SynthConfig;
pub use trainer::{ExperimentConfig, Variant};
pub use transforms::{sauna_maps, sauna_transform, SaunaMaps, SaunaParams, TransformError};
