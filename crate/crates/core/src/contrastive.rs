//! Supervised contrastive training of projection heads.
//!
//! Every minibatch yields the pair set `{(u, v, 1[y_u = y_v]) : v ≤ u}` (or
//! `v < u` without self-pairs). Each pair's logit is the inner product of the
//! two projected rows divided by the temperature, and the batch loss is the
//! summed binary cross-entropy of those logits against the same-label
//! indicator.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::data::{concat_modalities, has_both_classes, EmbeddingMatrix, MultimodalDataset};
use crate::error::{Error, Result};
use crate::net::{init_head, optimizer_step, OptimizerState, ProjectionHead};
use crate::pipeline::{AdaptedPipeline, Mode, Projection};
use crate::rng::{rng_from, STREAM_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub u: usize,
    pub v: usize,
    pub same: bool,
}

/// Contrastive pairs of one minibatch, ordered lexicographically by `(u, v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBatch {
    batch_size: usize,
    pairs: Vec<Pair>,
}

impl PairBatch {
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn build_pairs(batch_labels: &[u8], include_self_pairs: bool) -> Result<PairBatch> {
    let b = batch_labels.len();
    if b < 2 {
        return Err(Error::InvalidConfig(format!("pair construction needs B >= 2, got {b}")));
    }
    let count = if include_self_pairs { b * (b + 1) / 2 } else { b * (b - 1) / 2 };
    let mut pairs = Vec::with_capacity(count);
    for u in 0..b {
        let end = if include_self_pairs { u + 1 } else { u };
        pairs.extend((0..end).map(|v| Pair {
            u,
            v,
            same: batch_labels[u] == batch_labels[v],
        }));
    }
    Ok(PairBatch { batch_size: b, pairs })
}

pub fn pair_logit(pu: ArrayView1<f64>, pv: ArrayView1<f64>, temperature: f64) -> f64 {
    pu.dot(&pv) / temperature
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of one pair: `-log σ(s)` if same-label, else `-log(1 - σ(s))`.
pub fn pair_loss(logit: f64, same: bool) -> f64 {
    if same {
        softplus(-logit)
    } else {
        softplus(logit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    /// Summed (optionally weighted) pair loss; the optimized quantity.
    pub total: f64,
    /// Unweighted mean pair loss, for logging.
    pub mean: f64,
    /// `d total / d projections`, same shape as the projections.
    pub gradient: Array2<f64>,
}

/// Summed pair loss and its exact gradient with respect to every projected row.
///
/// With `balance` set, each pair is weighted by `|pairs| / |pairs sharing its
/// indicator|`.
pub fn contrastive_loss(
    projections: ArrayView2<f64>,
    pairs: &PairBatch,
    temperature: f64,
    balance: bool,
) -> Result<LossValue> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    let b = projections.nrows();
    if let Some(p) = pairs.pairs.iter().find(|p| p.u >= b || p.v >= b) {
        return Err(Error::DimensionMismatch {
            expected: p.u.max(p.v) + 1,
            actual: b,
        });
    }
    let n_pairs = pairs.len() as f64;
    let (w_same, w_diff) = if balance {
        let same = pairs.pairs.iter().filter(|p| p.same).count() as f64;
        let diff = n_pairs - same;
        let w = |c: f64| if c > 0.0 { n_pairs / c } else { 0.0 };
        (w(same), w(diff))
    } else {
        (1.0, 1.0)
    };

    let logits = projections.dot(&projections.t()) / temperature;
    let mut coef = Array2::<f64>::zeros((b, b));
    let mut total = 0.0;
    let mut unweighted = 0.0;
    for p in &pairs.pairs {
        let s = logits[[p.u, p.v]];
        let w = if p.same { w_same } else { w_diff };
        let l = pair_loss(s, p.same);
        unweighted += l;
        total += w * l;
        let target = if p.same { 1.0 } else { 0.0 };
        coef[[p.u, p.v]] += w * (sigmoid(s) - target) / temperature;
    }
    // d s_uv / d p_u = p_v / τ and d s_uv / d p_v = p_u / τ.
    let sym = &coef + &coef.t();
    let gradient = sym.dot(&projections);
    Ok(LossValue {
        total,
        mean: unweighted / n_pairs,
        gradient,
    })
}

/// Per-epoch mean pair loss of one training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub mean_pair_loss: Vec<f64>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_pair_loss\n");
        for (e, l) in self.mean_pair_loss.iter().enumerate() {
            out.push_str(&format!("{},{l:?}\n", e + 1));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedHead {
    pub head: ProjectionHead,
    pub log: TrainLog,
}

pub fn train_head(embeddings: &EmbeddingMatrix, labels: &[u8], config: &TrainConfig) -> Result<TrainedHead> {
    config.validate()?;
    if labels.len() != embeddings.rows() {
        return Err(Error::DimensionMismatch {
            expected: embeddings.rows(),
            actual: labels.len(),
        });
    }
    if !has_both_classes(labels) {
        return Err(Error::SingleClass);
    }
    let mut head = init_head(embeddings.cols(), config, config.seed)?;
    let mut state = OptimizerState::new(head.network());
    let mut log = TrainLog::default();
    let n = labels.len();
    let data = embeddings.view();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng_from(config.seed, &[STREAM_EPOCH, epoch as u64]));
        let mut loss_sum = 0.0;
        let mut pair_count = 0usize;
        for batch in order.chunks(config.batch_size) {
            if batch.len() < 2 {
                continue;
            }
            let x = data.select(ndarray::Axis(0), batch);
            let y: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            let pairs = build_pairs(&y, config.include_self_pairs)?;
            let trace = head.network().trace(x.view())?;
            let loss = contrastive_loss(trace.output().view(), &pairs, config.temperature, config.balance_pairs)?;
            if !loss.total.is_finite() {
                return Err(Error::Diverged(format!("non-finite loss in epoch {}", epoch + 1)));
            }
            loss_sum += loss.mean * pairs.len() as f64;
            pair_count += pairs.len();
            let grads = head.network().backward_trace(&trace, loss.gradient.view())?;
            optimizer_step(head.network_mut(), &grads, &mut state, config.learning_rate)?;
        }
        log.mean_pair_loss.push(if pair_count > 0 { loss_sum / pair_count as f64 } else { 0.0 });
    }
    Ok(TrainedHead { head, log })
}

/// How per-modality heads are scheduled. Results do not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Schedule {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adapted {
    pub pipeline: AdaptedPipeline,
    /// One log per head, in head order.
    pub logs: Vec<TrainLog>,
}

pub fn adapt(ds: &MultimodalDataset, mode: Mode, config: &TrainConfig) -> Result<Adapted> {
    adapt_with(ds, mode, config, Schedule::default())
}

/// Trains one head on the concatenated modalities (`Single`) or one head per
/// modality (`PerModality`, head `j` seeded with `seed ^ j`).
pub fn adapt_with(
    ds: &MultimodalDataset,
    mode: Mode,
    config: &TrainConfig,
    schedule: Schedule,
) -> Result<Adapted> {
    if !ds.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let trained: Vec<TrainedHead> = match mode {
        Mode::Single => vec![train_head(&concat_modalities(ds), ds.labels(), config)?],
        Mode::PerModality => {
            let job = |j: usize| train_head(ds.modality(j), ds.labels(), &config.with_seed(config.seed ^ j as u64));
            match schedule {
                Schedule::Sequential => (0..ds.n_modalities()).map(job).collect::<Result<_>>()?,
                Schedule::Parallel => (0..ds.n_modalities()).into_par_iter().map(job).collect::<Result<_>>()?,
            }
        }
    };
    let (projections, logs) = trained
        .into_iter()
        .map(|t| (Projection::Head(t.head), t.log))
        .unzip();
    Ok(Adapted {
        pipeline: AdaptedPipeline::new(mode, projections, ds.dims())?,
        logs,
    })
}
