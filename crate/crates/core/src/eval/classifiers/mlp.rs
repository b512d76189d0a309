use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use super::{sigmoid, Standardizer};
use crate::error::{Error, Result};
use crate::net::{optimizer_step, Network, OptimizerState};
use crate::rng::{rng_from, STREAM_CLASSIFIER, STREAM_EPOCH, STREAM_INIT};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 100,
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 200,
            l2: 1e-4,
        }
    }
}

/// One-hidden-layer ReLU network with a sigmoid output, trained on mean
/// binary cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    scaler: Standardizer,
    network: Network,
}

impl MlpClassifier {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &MlpParams, seed: u64) -> Result<Self> {
        let scaler = Standardizer::fit(x);
        let xs = scaler.transform(x);
        let mut network = Network::init(
            &[xs.ncols(), params.hidden, 1],
            false,
            &mut rng_from(seed, &[STREAM_CLASSIFIER, STREAM_INIT]),
        )?;
        let mut state = OptimizerState::new(&network);
        let mut order: Vec<usize> = (0..xs.nrows()).collect();
        for epoch in 0..params.epochs {
            order.shuffle(&mut rng_from(seed, &[STREAM_CLASSIFIER, STREAM_EPOCH, epoch as u64]));
            for batch in order.chunks(params.batch_size.max(1)) {
                let xb = xs.select(Axis(0), batch);
                let trace = network.trace(xb.view())?;
                let m = batch.len() as f64;
                let grad_out = Array2::from_shape_fn((batch.len(), 1), |(r, _)| {
                    (sigmoid(trace.output()[[r, 0]]) - y[batch[r]] as f64) / m
                });
                let mut grads = network.backward_trace(&trace, grad_out.view())?;
                for (g, layer) in grads.weights.iter_mut().zip(network.layers()) {
                    g.scaled_add(params.l2, &layer.weights);
                }
                optimizer_step(&mut network, &grads, &mut state, params.learning_rate)?;
            }
        }
        if network.layers().iter().any(|l| l.weights.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged("MLP parameters became non-finite".into()));
        }
        Ok(MlpClassifier { scaler, network })
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let out = self
            .network
            .forward(self.scaler.transform(x).view())
            .expect("dimension checked by caller");
        out.column(0).iter().map(|&z| sigmoid(z)).collect()
    }
}
