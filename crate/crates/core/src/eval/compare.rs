//! Cross-validated comparison of projection arms across classifiers.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifiers::{fit, ClassifierKind};
use super::folds::{stratified_kfold, FoldPlan};
use super::metrics::{auc, Confusion};
use crate::config::TrainConfig;
use crate::contrastive::adapt;
use crate::data::{concat_modalities, EmbeddingMatrix, MultimodalDataset};
use crate::error::{Error, Result};
use crate::pipeline::{apply, fit_pca_pipeline, AdaptedPipeline, Mode};
use crate::rng::{derive_seed, STREAM_ARM, STREAM_CLASSIFIER, STREAM_FOLDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Unprojected,
    ContrastiveSingle,
    ContrastivePermod,
    PcaSingle,
    PcaPermod,
}

impl Arm {
    pub const ALL: [Arm; 5] = [
        Arm::Unprojected,
        Arm::ContrastiveSingle,
        Arm::ContrastivePermod,
        Arm::PcaSingle,
        Arm::PcaPermod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Unprojected => "unprojected",
            Arm::ContrastiveSingle => "contrastive_single",
            Arm::ContrastivePermod => "contrastive_permod",
            Arm::PcaSingle => "pca_single",
            Arm::PcaPermod => "pca_permod",
        }
    }

    fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown arm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub arms: Vec<Arm>,
    pub classifiers: Vec<ClassifierKind>,
    /// Contrastive hyperparameters; `projection_size` is also the PCA size.
    /// Its `seed` is ignored: per-fold seeds derive from `seed` below.
    pub train: TrainConfig,
    pub k: usize,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            arms: Arm::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            train: TrainConfig::default(),
            k: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    F1,
    Auc,
    Accuracy,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::F1, Metric::Auc, Metric::Accuracy];

    pub fn name(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::Auc => "auc",
            Metric::Accuracy => "accuracy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub f1: f64,
    pub auc: f64,
    pub accuracy: f64,
    /// Every hard prediction fell in one class, so F1 degenerates (to 0 when
    /// nothing is predicted positive).
    pub constant_predictions: bool,
}

impl FoldMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::F1 => self.f1,
            Metric::Auc => self.auc,
            Metric::Accuracy => self.accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FoldOutcome {
    Ok(FoldMetrics),
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1).
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub arm: Arm,
    pub classifier: ClassifierKind,
    pub folds: Vec<FoldOutcome>,
}

impl Cell {
    pub fn failed(&self) -> bool {
        self.folds.iter().any(|f| matches!(f, FoldOutcome::Failed(_)))
    }

    /// `None` when any fold failed.
    pub fn summary(&self, metric: Metric) -> Option<Summary> {
        let vals: Vec<f64> = self
            .folds
            .iter()
            .map(|f| match f {
                FoldOutcome::Ok(m) => Some(m.get(metric)),
                FoldOutcome::Failed(_) => None,
            })
            .collect::<Option<_>>()?;
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let std = if vals.len() > 1 {
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Summary { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub config: CompareConfig,
    pub dataset_fingerprint: String,
}

/// Fingerprint of the projection an arm fitted in one fold, kept for audits.
/// `None` for the unprojected arm or when fitting failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldProjection {
    pub arm: Arm,
    pub fold: usize,
    pub fingerprint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: ReportMeta,
    /// Ordered by arm, then classifier.
    pub cells: Vec<Cell>,
    /// Ordered by arm, then fold.
    pub projections: Vec<FoldProjection>,
}

impl EvalReport {
    pub fn projection(&self, arm: Arm, fold: usize) -> Option<&FoldProjection> {
        self.projections.iter().find(|p| p.arm == arm && p.fold == fold)
    }

    pub fn cell(&self, arm: Arm, classifier: ClassifierKind) -> Option<&Cell> {
        self.cells.iter().find(|c| c.arm == arm && c.classifier == classifier)
    }

    /// `(arm, classifier, fold, reason)` for every failed fold.
    pub fn failures(&self) -> Vec<(Arm, ClassifierKind, usize, String)> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.folds.iter().enumerate().filter_map(move |(f, o)| match o {
                    FoldOutcome::Failed(r) => Some((c.arm, c.classifier, f, r.clone())),
                    FoldOutcome::Ok(_) => None,
                })
            })
            .collect()
    }

    /// `(arm, classifier, fold)` for every fold whose predictions were constant.
    pub fn flagged(&self) -> Vec<(Arm, ClassifierKind, usize)> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.folds.iter().enumerate().filter_map(move |(f, o)| match o {
                    FoldOutcome::Ok(m) if m.constant_predictions => Some((c.arm, c.classifier, f)),
                    _ => None,
                })
            })
            .collect()
    }

    /// Fold rows, then a `# summary` section, then `# flags` if any fold
    /// predicted a single class and `# failures` if any fold failed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arm,classifier,fold,f1,auc,accuracy\n");
        for c in &self.cells {
            for (f, o) in c.folds.iter().enumerate() {
                match o {
                    FoldOutcome::Ok(m) => {
                        writeln!(out, "{},{},{f},{:?},{:?},{:?}", c.arm, c.classifier, m.f1, m.auc, m.accuracy)
                    }
                    FoldOutcome::Failed(_) => writeln!(out, "{},{},{f},NA,NA,NA", c.arm, c.classifier),
                }
                .unwrap();
            }
        }
        out.push_str("\n# summary\narm,classifier,metric,mean,std\n");
        for c in &self.cells {
            for metric in Metric::ALL {
                match c.summary(metric) {
                    Some(s) => writeln!(out, "{},{},{},{:?},{:?}", c.arm, c.classifier, metric.name(), s.mean, s.std),
                    None => writeln!(out, "{},{},{},NA,NA", c.arm, c.classifier, metric.name()),
                }
                .unwrap();
            }
        }
        let flagged = self.flagged();
        if !flagged.is_empty() {
            out.push_str("\n# flags\narm,classifier,fold,flag\n");
            for (arm, clf, f) in flagged {
                writeln!(out, "{arm},{clf},{f},constant_predictions").unwrap();
            }
        }
        let failures = self.failures();
        if !failures.is_empty() {
            out.push_str("\n# failures\narm,classifier,fold,reason\n");
            for (arm, clf, f, reason) in failures {
                writeln!(out, "{arm},{clf},{f},\"{}\"", reason.replace('"', "'")).unwrap();
            }
        }
        out
    }
}

/// Fits the projection of `arm` on `train` (training rows only).
/// Returns `None` for the unprojected arm.
pub fn fit_arm_projection(
    train: &MultimodalDataset,
    arm: Arm,
    config: &TrainConfig,
    seed: u64,
    fold: usize,
) -> Result<Option<AdaptedPipeline>> {
    let arm_seed = derive_seed(seed, &[STREAM_ARM, arm.tag(), fold as u64]);
    let cfg = TrainConfig {
        seed: arm_seed,
        ..config.clone()
    };
    Ok(match arm {
        Arm::Unprojected => None,
        Arm::ContrastiveSingle => Some(adapt(train, Mode::Single, &cfg)?.pipeline),
        Arm::ContrastivePermod => Some(adapt(train, Mode::PerModality, &cfg)?.pipeline),
        Arm::PcaSingle => Some(fit_pca_pipeline(train, Mode::Single, config.projection_size)?),
        Arm::PcaPermod => Some(fit_pca_pipeline(train, Mode::PerModality, config.projection_size)?),
    })
}

fn features(pipeline: Option<&AdaptedPipeline>, ds: &MultimodalDataset) -> Result<EmbeddingMatrix> {
    match pipeline {
        Some(p) => apply(p, ds),
        None => Ok(concat_modalities(ds)),
    }
}

fn score_classifier(
    kind: ClassifierKind,
    train_x: &EmbeddingMatrix,
    train_y: &[u8],
    test_x: &EmbeddingMatrix,
    test_y: &[u8],
    seed: u64,
) -> Result<FoldMetrics> {
    let model = fit(kind, train_x.view(), train_y, seed)?;
    let scores = model.predict_score(test_x.view())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Diverged(format!("{kind} produced non-finite scores")));
    }
    let threshold = model.threshold();
    let pred: Vec<u8> = scores.iter().map(|&s| (s > threshold) as u8).collect();
    let confusion = Confusion::new(test_y, &pred)?;
    Ok(FoldMetrics {
        f1: confusion.f1(),
        auc: auc(test_y, &scores)?,
        accuracy: confusion.accuracy(),
        constant_predictions: confusion.tp + confusion.fp == 0 || confusion.tn + confusion.fn_ == 0,
    })
}

fn run_task(
    ds: &MultimodalDataset,
    train_idx: &[usize],
    test_idx: &[usize],
    arm: Arm,
    fold: usize,
    config: &CompareConfig,
    classifiers: &[ClassifierKind],
) -> (Option<String>, Vec<FoldOutcome>) {
    let train = ds.select(train_idx);
    let test = ds.select(test_idx);
    let prepared = fit_arm_projection(&train, arm, &config.train, config.seed, fold).and_then(|p| {
        let fingerprint = p.as_ref().map(AdaptedPipeline::fingerprint);
        Ok((fingerprint, features(p.as_ref(), &train)?, features(p.as_ref(), &test)?))
    });
    let (fingerprint, train_x, test_x) = match prepared {
        Ok(x) => x,
        Err(e) => {
            let reason = format!("projection: {e}");
            return (None, classifiers.iter().map(|_| FoldOutcome::Failed(reason.clone())).collect());
        }
    };
    let outcomes = classifiers
        .iter()
        .map(|&kind| {
            let seed = derive_seed(config.seed, &[STREAM_CLASSIFIER, arm.tag(), fold as u64, kind.tag()]);
            match score_classifier(kind, &train_x, train.labels(), &test_x, test.labels(), seed) {
                Ok(m) => FoldOutcome::Ok(m),
                Err(e) => FoldOutcome::Failed(format!("{kind}: {e}")),
            }
        })
        .collect();
    (fingerprint, outcomes)
}

/// The fold plan `run_comparison` uses for these labels and config.
pub fn comparison_folds(labels: &[u8], config: &CompareConfig) -> Result<FoldPlan> {
    stratified_kfold(labels, config.k, derive_seed(config.seed, &[STREAM_FOLDS]))
}

/// Stratified k-fold comparison. Every projection is fitted on the fold's
/// training rows only; each `(arm, fold)` task runs in parallel with seeds
/// derived from `(seed, arm, fold, classifier)`.
pub fn run_comparison(ds: &MultimodalDataset, config: &CompareConfig) -> Result<EvalReport> {
    config.train.validate()?;
    let mut arms = config.arms.clone();
    arms.sort_unstable();
    arms.dedup();
    let mut classifiers = config.classifiers.clone();
    classifiers.sort_unstable();
    classifiers.dedup();
    if arms.is_empty() || classifiers.is_empty() {
        return Err(Error::InvalidConfig("no arms or classifiers requested".into()));
    }
    let plan = comparison_folds(ds.labels(), config)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> =
        (0..config.k).map(|f| (plan.train(f), plan.test(f).to_vec())).collect();

    let tasks: Vec<(Arm, usize)> = arms.iter().flat_map(|&a| (0..config.k).map(move |f| (a, f))).collect();
    let results: Vec<(Option<String>, Vec<FoldOutcome>)> = tasks
        .par_iter()
        .map(|&(arm, fold)| run_task(ds, &splits[fold].0, &splits[fold].1, arm, fold, config, &classifiers))
        .collect();

    let mut cells = Vec::with_capacity(arms.len() * classifiers.len());
    for (a, &arm) in arms.iter().enumerate() {
        for (c, &classifier) in classifiers.iter().enumerate() {
            let folds = (0..config.k).map(|f| results[a * config.k + f].1[c].clone()).collect();
            cells.push(Cell { arm, classifier, folds });
        }
    }
    let projections = tasks
        .iter()
        .zip(results)
        .map(|(&(arm, fold), (fingerprint, _))| FoldProjection { arm, fold, fingerprint })
        .collect();
    Ok(EvalReport {
        projections,
        meta: ReportMeta {
            config: CompareConfig {
                arms,
                classifiers,
                ..config.clone()
            },
            dataset_fingerprint: ds.fingerprint(),
        },
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arm_names_round_trip() {
        for a in Arm::ALL {
            assert_eq!(a.name().parse::<Arm>().unwrap(), a);
        }
    }

    #[test]
    fn summary_uses_sample_std() {
        let ok = |f1| {
            FoldOutcome::Ok(FoldMetrics {
                f1,
                auc: 0.5,
                accuracy: 0.5,
                constant_predictions: false,
            })
        };
        let cell = Cell {
            arm: Arm::Unprojected,
            classifier: ClassifierKind::Cart,
            folds: vec![ok(1.0), ok(2.0), ok(3.0)],
        };
        let s = cell.summary(Metric::F1).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        let failed = Cell {
            folds: vec![ok(1.0), FoldOutcome::Failed("boom".into())],
            ..cell
        };
        assert!(failed.summary(Metric::F1).is_none());
        assert!(failed.failed());
    }
}
