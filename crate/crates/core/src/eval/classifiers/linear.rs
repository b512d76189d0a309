use ndarray::{Array1, ArrayView2};
use rand::seq::SliceRandom;

use super::{sigmoid, Standardizer};
use crate::error::Result;
use crate::rng::{rng_from, STREAM_CLASSIFIER};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

/// L2-regularized logistic regression trained by full-batch gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    scaler: Standardizer,
    weights: Array1<f64>,
    bias: f64,
}

impl LogisticRegression {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &LogisticParams) -> Result<Self> {
        let scaler = Standardizer::fit(x);
        let xs = scaler.transform(x);
        let n = xs.nrows() as f64;
        let targets: Array1<f64> = y.iter().map(|&v| v as f64).collect();
        let mut weights = Array1::<f64>::zeros(xs.ncols());
        let mut bias = 0.0;
        for _ in 0..params.epochs {
            let z = xs.dot(&weights) + bias;
            let residual = z.mapv(sigmoid) - &targets;
            let grad_w = xs.t().dot(&residual) / n + params.l2 * &weights;
            let grad_b = residual.sum() / n;
            weights.scaled_add(-params.learning_rate, &grad_w);
            bias -= params.learning_rate * grad_b;
        }
        Ok(LogisticRegression { scaler, weights, bias })
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let z = self.scaler.transform(x).dot(&self.weights) + self.bias;
        z.iter().map(|&v| sigmoid(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-3,
            epochs: 30,
        }
    }
}

/// Linear SVM trained with Pegasos: stochastic subgradient steps of size
/// `1/(λt)` on the hinge loss, followed by projection onto the ball of
/// radius `1/√λ`. The bias is an extra always-one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    scaler: Standardizer,
    weights: Array1<f64>,
    bias: f64,
}

impl LinearSvm {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &SvmParams, seed: u64) -> Result<Self> {
        let scaler = Standardizer::fit(x);
        let xs = scaler.transform(x);
        let d = xs.ncols();
        let lambda = params.lambda;
        let radius = 1.0 / lambda.sqrt();
        // Last entry is the bias weight.
        let mut w = Array1::<f64>::zeros(d + 1);
        let mut order: Vec<usize> = (0..xs.nrows()).collect();
        let mut rng = rng_from(seed, &[STREAM_CLASSIFIER]);
        let mut t = 0u64;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let row = xs.row(i);
                let sign = if y[i] == 1 { 1.0 } else { -1.0 };
                let margin = sign * (row.dot(&w.slice(ndarray::s![..d])) + w[d]);
                w *= 1.0 - eta * lambda;
                if margin < 1.0 {
                    w.slice_mut(ndarray::s![..d]).scaled_add(eta * sign, &row);
                    w[d] += eta * sign;
                }
                let norm = w.dot(&w).sqrt();
                if norm > radius {
                    w *= radius / norm;
                }
            }
        }
        let bias = w[d];
        let weights = w.slice(ndarray::s![..d]).to_owned();
        Ok(LinearSvm { scaler, weights, bias })
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn decision_function(&self, x: ArrayView2<f64>) -> Vec<f64> {
        (self.scaler.transform(x).dot(&self.weights) + self.bias).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::f1;
    use ndarray::array;

    #[test]
    fn logistic_on_two_points_per_side() {
        let x = array![[-1.0], [-1.0], [1.0], [1.0]];
        let y = [0, 0, 1, 1];
        let m = LogisticRegression::fit(x.view(), &y, &LogisticParams::default()).unwrap();
        let pred: Vec<u8> = m.predict_proba(x.view()).iter().map(|&p| (p > 0.5) as u8).collect();
        assert_eq!(f1(&y, &pred).unwrap(), 1.0);
    }

    #[test]
    fn svm_separates_a_margin() {
        let x = array![[-2.0, 0.1], [-1.5, -0.3], [-1.0, 0.2], [1.0, 0.0], [1.4, 0.5], [2.2, -0.1]];
        let y = [0, 0, 0, 1, 1, 1];
        let m = LinearSvm::fit(x.view(), &y, &SvmParams::default(), 1).unwrap();
        let s = m.decision_function(x.view());
        assert!(s[..3].iter().all(|&v| v < 0.0) && s[3..].iter().all(|&v| v > 0.0), "{s:?}");
    }
}
