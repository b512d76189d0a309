//! Fixtures shared by the criterion benchmarks.

pub use embadapt;

use embadapt::{generate_synthetic, MultimodalDataset, SynthSpec, TrainConfig};

/// An xor-rotate dataset with `m` modalities of width `dim`.
pub fn xor_dataset(n: usize, m: usize, dim: usize) -> MultimodalDataset {
    generate_synthetic(&SynthSpec::xor_suite(n, vec![dim; m], 1)).expect("valid synthetic spec")
}

/// Reference hyperparameters with a shorter schedule.
pub fn short_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        ..TrainConfig::default()
    }
}
