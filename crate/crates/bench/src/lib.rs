//! Benchmark fixtures.

use sauna_core::synth::{self, SynthConfig};
use sauna_core::{BinaryMask, FieldKind, ScalarField};

/// Synthetic vessel mask of the given side length.
pub fn vessel_mask(size: usize) -> BinaryMask {
    let cfg = SynthConfig {
        size,
        ..SynthConfig::with_seed(42)
    };
    synth::generate_one(&cfg, 0)
        .expect("default synth config is valid")
        .mask
}

/// Deterministic prediction/target pair in `[-1, 1]` with `len` pixels.
pub fn loss_pair(len: usize) -> (ScalarField, ScalarField) {
    let wave = |i: usize, k: f64| ((i as f64 * k).sin() * 0.9).clamp(-1.0, 1.0);
    let pred = (0..len).map(|i| wave(i, 0.37)).collect();
    let target = (0..len).map(|i| wave(i, 0.11)).collect();
    (
        ScalarField::from_vec(pred, FieldKind::Generic).expect("finite"),
        ScalarField::from_vec(target, FieldKind::Generic).expect("finite"),
    )
}
