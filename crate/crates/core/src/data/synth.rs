//! Synthetic multimodal generator.
//!
//! Each modality is a signal block followed by a distractor block. With
//! `Nonlinearity::None` every signal coordinate equals `offset * (y - 1/2)`
//! plus jitter. With `Nonlinearity::XorRotate` the label is the XOR of two
//! latent bits: the first two signal coordinates hold `±offset/2` for those
//! bits, the rest hold jitter only, and the whole signal block is then mixed
//! by a seeded random rotation. Class means coincide in every direction, so
//! no linear rule beats chance. When `noise_sigma` exceeds the signal spread
//! the distractor block dominates the variance and a label-blind projection
//! such as PCA keeps noise instead of signal.

use nalgebra::DMatrix;
use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{EmbeddingMatrix, MultimodalDataset};
use crate::error::{Error, Result};
use crate::rng::{rng_from, STREAM_LABELS, STREAM_ROTATION, STREAM_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    None,
    XorRotate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub dims: Vec<usize>,
    pub signal_dims: Vec<usize>,
    /// Standard deviation of the distractor block.
    pub noise_sigma: f64,
    /// Distance between the two levels of a signal coordinate.
    pub signal_offset: f64,
    /// Standard deviation of the jitter added to signal coordinates.
    pub signal_jitter: f64,
    pub class_balance: f64,
    pub nonlinearity: Nonlinearity,
    pub seed: u64,
}

impl SynthSpec {
    /// The xor-rotate suite used by the benchmarks and acceptance tests: half
    /// of each modality carries the rotated XOR signal, the other half is
    /// unit-variance noise.
    pub fn xor_suite(n_samples: usize, dims: Vec<usize>, seed: u64) -> Self {
        let signal_dims = dims.iter().map(|&d| (d / 2).max(2).min(d)).collect();
        SynthSpec {
            n_samples,
            dims,
            signal_dims,
            noise_sigma: 1.0,
            signal_offset: 1.0,
            signal_jitter: 0.15,
            class_balance: 0.5,
            nonlinearity: Nonlinearity::XorRotate,
            seed,
        }
    }

    pub fn n_modalities(&self) -> usize {
        self.dims.len()
    }

    fn positives(&self) -> usize {
        (self.class_balance * self.n_samples as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        if self.dims.is_empty() {
            return bad("at least one modality is required".into());
        }
        if self.signal_dims.len() != self.dims.len() {
            return bad("signal_dims must list one entry per modality".into());
        }
        for (j, (&d, &sd)) in self.dims.iter().zip(&self.signal_dims).enumerate() {
            if d == 0 || sd > d {
                return bad(format!("modality {j}: need 1 <= dims and signal_dims <= dims"));
            }
            if self.nonlinearity == Nonlinearity::XorRotate && sd < 2 {
                return bad(format!("modality {j}: xor-rotate needs at least 2 signal dims"));
            }
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be positive".into());
        }
        if !(self.signal_offset.is_finite() && self.signal_jitter >= 0.0 && self.signal_jitter.is_finite()) {
            return bad("signal_offset and signal_jitter must be finite, jitter >= 0".into());
        }
        if !(self.class_balance > 0.0 && self.class_balance < 1.0) {
            return bad("class_balance must lie in (0, 1)".into());
        }
        let pos = self.positives();
        if pos < 1 || pos >= self.n_samples {
            return bad("class_balance leaves a class without samples".into());
        }
        Ok(())
    }
}

/// Rotation applied to modality `j`'s signal block, `signal_dims × signal_dims`.
/// A generated signal row is `latent · basisᵀ`; decoding is `row · basis`.
pub fn signal_basis(spec: &SynthSpec, j: usize) -> Array2<f64> {
    let sd = spec.signal_dims[j];
    if spec.nonlinearity == Nonlinearity::None {
        return Array2::eye(sd);
    }
    let mut rng = rng_from(spec.seed, &[STREAM_ROTATION, j as u64]);
    let gauss = DMatrix::<f64>::from_fn(sd, sd, |_, _| rng.sample(StandardNormal));
    let qr = gauss.qr();
    let (q, r) = (qr.q(), qr.r());
    Array2::from_shape_fn((sd, sd), |(a, b)| {
        let sign = if r[(b, b)] < 0.0 { -1.0 } else { 1.0 };
        q[(a, b)] * sign
    })
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<MultimodalDataset> {
    spec.validate()?;
    let n = spec.n_samples;

    let mut labels = vec![0u8; n];
    labels[..spec.positives()].fill(1);
    labels.shuffle(&mut rng_from(spec.seed, &[STREAM_LABELS]));

    let width = (n - 1).to_string().len();
    let ids: Vec<String> = (0..n).map(|i| format!("s{i:0width$}")).collect();

    let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
    let half = spec.signal_offset / 2.0;
    let mut modalities = Vec::with_capacity(spec.n_modalities());
    for (j, (&d, &sd)) in spec.dims.iter().zip(&spec.signal_dims).enumerate() {
        let basis = signal_basis(spec, j);
        let mut rng = rng_from(spec.seed, &[STREAM_SAMPLES, j as u64]);
        let mut latent = Array2::<f64>::zeros((n, sd));
        let mut values = Array2::<f64>::zeros((n, d));
        for (i, &y) in labels.iter().enumerate() {
            let mut row = latent.row_mut(i);
            match spec.nonlinearity {
                Nonlinearity::None => row.fill(if y == 1 { half } else { -half }),
                Nonlinearity::XorRotate => {
                    let a: u8 = rng.random_range(0..2);
                    let b = a ^ y;
                    row[0] = if a == 1 { half } else { -half };
                    row[1] = if b == 1 { half } else { -half };
                }
            }
            if spec.signal_jitter > 0.0 {
                for v in row.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += spec.signal_jitter * z;
                }
            }
            for v in values.slice_mut(s![i, sd..]).iter_mut() {
                *v = noise.sample(&mut rng);
            }
        }
        let signal = match spec.nonlinearity {
            Nonlinearity::None => latent,
            Nonlinearity::XorRotate => latent.dot(&basis.t()),
        };
        values.slice_mut(s![.., ..sd]).assign(&signal);
        modalities.push(EmbeddingMatrix::from_trusted(values));
    }
    let names = (0..spec.n_modalities()).map(|j| format!("modality_{j}")).collect();
    MultimodalDataset::new(names, modalities, labels, ids)
}
