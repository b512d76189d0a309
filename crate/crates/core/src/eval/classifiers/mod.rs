//! Downstream classifiers with frozen default hyperparameters.
//!
//! | kind | defaults |
//! |------|----------|
//! | `logistic_regression` | full-batch gradient descent, 500 epochs, step 0.1, L2 1e-4, standardized inputs |
//! | `cart` | Gini, max depth 10, min leaf 2, all features |
//! | `random_forest` | 100 trees, bootstrap, √d features per split, unlimited depth, min leaf 1 |
//! | `linear_svm` | Pegasos hinge-loss SGD, λ 1e-3, 30 epochs, standardized inputs |
//! | `mlp` | one ReLU hidden layer of 100, Adam 1e-3, batch 200, 200 epochs, L2 1e-4, standardized inputs |
//!
//! Hard labels: score > 0.5 for probability scores (logistic, CART, forest,
//! MLP) and score > 0 for the SVM margin.

mod linear;
mod mlp;
mod tree;

pub use linear::{LinearSvm, LogisticRegression, LogisticParams, SvmParams};
pub use mlp::{MlpClassifier, MlpParams};
pub use tree::{CartParams, DecisionTree, FeatureSubset, ForestParams, RandomForest};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::has_both_classes;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticRegression,
    Cart,
    RandomForest,
    LinearSvm,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::Cart,
        ClassifierKind::RandomForest,
        ClassifierKind::LinearSvm,
        ClassifierKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::Cart => "cart",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::Mlp => "mlp",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown classifier `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Logistic(LogisticRegression),
    Cart(DecisionTree),
    Forest(RandomForest),
    Svm(LinearSvm),
    Mlp(MlpClassifier),
}

/// Fits `kind` with its default hyperparameters.
pub fn fit(kind: ClassifierKind, x: ArrayView2<f64>, y: &[u8], seed: u64) -> Result<Classifier> {
    check_training_data(x, y)?;
    Ok(match kind {
        ClassifierKind::LogisticRegression => Classifier::Logistic(LogisticRegression::fit(x, y, &LogisticParams::default())?),
        ClassifierKind::Cart => Classifier::Cart(DecisionTree::fit(x, y, &CartParams::default(), seed)?),
        ClassifierKind::RandomForest => Classifier::Forest(RandomForest::fit(x, y, &ForestParams::default(), seed)?),
        ClassifierKind::LinearSvm => Classifier::Svm(LinearSvm::fit(x, y, &SvmParams::default(), seed)?),
        ClassifierKind::Mlp => Classifier::Mlp(MlpClassifier::fit(x, y, &MlpParams::default(), seed)?),
    })
}

impl Classifier {
    pub fn input_dim(&self) -> usize {
        match self {
            Classifier::Logistic(m) => m.input_dim(),
            Classifier::Cart(m) => m.input_dim(),
            Classifier::Forest(m) => m.input_dim(),
            Classifier::Svm(m) => m.input_dim(),
            Classifier::Mlp(m) => m.input_dim(),
        }
    }

    /// Real-valued scores, increasing in class-1 confidence.
    pub fn predict_score(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        Ok(match self {
            Classifier::Logistic(m) => m.predict_proba(x),
            Classifier::Cart(m) => m.predict_proba(x),
            Classifier::Forest(m) => m.predict_proba(x),
            Classifier::Svm(m) => m.decision_function(x),
            Classifier::Mlp(m) => m.predict_proba(x),
        })
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Classifier::Svm(_) => 0.0,
            _ => 0.5,
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<u8>> {
        let t = self.threshold();
        Ok(self.predict_score(x)?.into_iter().map(|s| (s > t) as u8).collect())
    }
}

pub(crate) fn check_training_data(x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidConfig("no features".into()));
    }
    if !has_both_classes(y) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Per-feature z-scoring fitted on training rows; constant features keep scale 1.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Standardizer {
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl Standardizer {
    pub(crate) fn fit(x: ArrayView2<f64>) -> Standardizer {
        let mean = x.mean_axis(Axis(0)).expect("non-empty training data");
        let scale = x
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 1e-12 { s } else { 1.0 });
        Standardizer { mean, scale }
    }

    pub(crate) fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (&x - &self.mean) / &self.scale
    }

    pub(crate) fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn names_round_trip() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.name().parse::<ClassifierKind>().unwrap(), k);
        }
        assert!("xgboost".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn single_class_and_mismatch_rejected() {
        let x = array![[0.0], [1.0]];
        for k in ClassifierKind::ALL {
            assert!(matches!(fit(k, x.view(), &[1, 1], 0), Err(Error::SingleClass)));
        }
        let m = fit(ClassifierKind::Cart, x.view(), &[0, 1], 0).unwrap();
        assert!(matches!(
            m.predict_score(array![[1.0, 2.0]].view()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn every_kind_learns_a_separable_problem() {
        let n = 60;
        let x = Array2::from_shape_fn((n, 3), |(i, j)| {
            let side = if i % 2 == 0 { -1.0 } else { 1.0 };
            side * (1.0 + j as f64) + ((i * 7 + j * 3) % 11) as f64 * 0.05
        });
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        for k in ClassifierKind::ALL {
            let m = fit(k, x.view(), &y, 3).unwrap();
            let pred = m.predict(x.view()).unwrap();
            let acc = crate::eval::accuracy(&y, &pred).unwrap();
            assert!(acc >= 0.95, "{k}: {acc}");
        }
    }
}
