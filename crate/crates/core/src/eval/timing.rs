//! Wall-clock timing of adaptation and of the unprojected classifier fit.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::classifiers::{fit, ClassifierKind};
use crate::config::TrainConfig;
use crate::contrastive::adapt;
use crate::data::{concat_modalities, MultimodalDataset};
use crate::error::{Error, Result};
use crate::pipeline::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub arm: String,
    pub threads: usize,
    pub wall_seconds: f64,
}

/// Times single and per-modality adaptation plus a logistic-regression fit
/// on the raw concatenated embeddings, inside a pool of `threads` workers.
pub fn benchmark_timing(ds: &MultimodalDataset, config: &TrainConfig, threads: usize) -> Result<Vec<TimingRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut records = Vec::new();
        let mut time = |arm: &str, f: &mut dyn FnMut() -> Result<()>| -> Result<()> {
            let start = Instant::now();
            f()?;
            records.push(TimingRecord {
                arm: arm.to_owned(),
                threads,
                wall_seconds: start.elapsed().as_secs_f64(),
            });
            Ok(())
        };
        time("contrastive_permod", &mut || adapt(ds, Mode::PerModality, config).map(drop))?;
        time("contrastive_single", &mut || adapt(ds, Mode::Single, config).map(drop))?;
        let x = concat_modalities(ds);
        time("unprojected", &mut || {
            fit(ClassifierKind::LogisticRegression, x.view(), ds.labels(), config.seed).map(drop)
        })?;
        Ok(records)
    })
}

pub fn timing_csv(records: &[TimingRecord]) -> String {
    let mut out = String::from("arm,threads,wall_seconds\n");
    for r in records {
        out.push_str(&format!("{},{},{}\n", r.arm, r.threads, r.wall_seconds));
    }
    out
}
