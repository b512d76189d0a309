//! Fitted projection pipelines over a multimodal dataset.
//!
//! A pipeline directory holds `pipeline.toml` plus one file per projection:
//!
//! ```toml
//! format_version = 1
//! mode = "per-modality"
//! modality_dims = [256, 128]
//!
//! [[projection]]
//! kind = "head"
//! file = "projection_0.txt"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{concat_matrices, concat_modalities, EmbeddingMatrix, MultimodalDataset};
use crate::error::{Error, Result};
use crate::net::ProjectionHead;
use crate::pca::{pca_fit, pca_transform, PcaModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One projection over the concatenated modalities.
    Single,
    /// One projection per modality, outputs concatenated.
    PerModality,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Head(ProjectionHead),
    Pca(PcaModel),
}

impl Projection {
    pub fn input_dim(&self) -> usize {
        match self {
            Projection::Head(h) => h.input_dim(),
            Projection::Pca(p) => p.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Projection::Head(h) => h.output_dim(),
            Projection::Pca(p) => p.output_dim(),
        }
    }

    pub fn transform(&self, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        match self {
            Projection::Head(h) => h.forward(x),
            Projection::Pca(p) => pca_transform(p, x),
        }
    }

    fn kind(&self) -> ProjectionKind {
        match self {
            Projection::Head(_) => ProjectionKind::Head,
            Projection::Pca(_) => ProjectionKind::Pca,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedPipeline {
    mode: Mode,
    projections: Vec<Projection>,
    modality_dims: Vec<usize>,
}

impl AdaptedPipeline {
    pub fn new(mode: Mode, projections: Vec<Projection>, modality_dims: Vec<usize>) -> Result<Self> {
        let expected_inputs: Vec<usize> = match mode {
            Mode::Single => vec![modality_dims.iter().sum()],
            Mode::PerModality => modality_dims.clone(),
        };
        if projections.len() != expected_inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: expected_inputs.len(),
                actual: projections.len(),
            });
        }
        for (p, &d) in projections.iter().zip(&expected_inputs) {
            if p.input_dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: p.input_dim(),
                });
            }
        }
        Ok(AdaptedPipeline {
            mode,
            projections,
            modality_dims,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn projections(&self) -> &[Projection] {
        &self.projections
    }

    pub fn modality_dims(&self) -> &[usize] {
        &self.modality_dims
    }

    pub fn output_dim(&self) -> usize {
        self.projections.iter().map(Projection::output_dim).sum()
    }

    /// SHA-256 over the mode, input dims and every parameter. Two pipelines
    /// share a fingerprint iff they are bit-identical.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?} {:?}\n", self.mode, self.modality_dims));
        for p in &self.projections {
            match p {
                Projection::Head(head) => h.update(head.network().to_text()),
                Projection::Pca(m) => h.update(m.to_text()),
            }
        }
        hex::encode(h.finalize())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.projections.len());
        for (j, p) in self.projections.iter().enumerate() {
            let file = PathBuf::from(format!("projection_{j}.txt"));
            let path = dir.join(&file);
            match p {
                Projection::Head(h) => h.save(&path)?,
                Projection::Pca(m) => m.save(&path)?,
            }
            entries.push(ProjectionEntry { kind: p.kind(), file });
        }
        let manifest = PipelineManifest {
            format_version: PIPELINE_VERSION,
            mode: self.mode,
            modality_dims: self.modality_dims.clone(),
            projections: entries,
        };
        let path = dir.join(PIPELINE_FILE);
        let text = toml::to_string(&manifest).map_err(|e| Error::format(&path, e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<AdaptedPipeline> {
        let path = dir.join(PIPELINE_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: PipelineManifest =
            toml::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        if manifest.format_version != PIPELINE_VERSION {
            return Err(Error::format(&path, "unsupported pipeline format_version"));
        }
        let projections = manifest
            .projections
            .iter()
            .map(|entry| {
                let file = dir.join(&entry.file);
                Ok(match entry.kind {
                    ProjectionKind::Head => Projection::Head(ProjectionHead::load(&file)?),
                    ProjectionKind::Pca => Projection::Pca(PcaModel::load(&file)?),
                })
            })
            .collect::<Result<_>>()?;
        AdaptedPipeline::new(manifest.mode, projections, manifest.modality_dims)
    }
}

pub const PIPELINE_FILE: &str = "pipeline.toml";
const PIPELINE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ProjectionKind {
    Head,
    Pca,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProjectionEntry {
    kind: ProjectionKind,
    file: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct PipelineManifest {
    format_version: u32,
    mode: Mode,
    modality_dims: Vec<usize>,
    #[serde(rename = "projection")]
    projections: Vec<ProjectionEntry>,
}

/// Projects a dataset: `n × K` in single mode, `n × Σ K_j` per modality.
pub fn apply(pipeline: &AdaptedPipeline, ds: &MultimodalDataset) -> Result<EmbeddingMatrix> {
    let dims = ds.dims();
    if dims.len() != pipeline.modality_dims.len() {
        return Err(Error::DimensionMismatch {
            expected: pipeline.modality_dims.len(),
            actual: dims.len(),
        });
    }
    for (&got, &want) in dims.iter().zip(&pipeline.modality_dims) {
        if got != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                actual: got,
            });
        }
    }
    match pipeline.mode {
        Mode::Single => pipeline.projections[0].transform(&concat_modalities(ds)),
        Mode::PerModality => {
            let blocks = pipeline
                .projections
                .iter()
                .zip(ds.modalities())
                .map(|(p, m)| p.transform(m))
                .collect::<Result<Vec<_>>>()?;
            Ok(concat_matrices(&blocks))
        }
    }
}

/// PCA counterpart of contrastive adaptation, `k` components per projection.
pub fn fit_pca_pipeline(ds: &MultimodalDataset, mode: Mode, k: usize) -> Result<AdaptedPipeline> {
    let projections = match mode {
        Mode::Single => vec![Projection::Pca(pca_fit(&concat_modalities(ds), k)?)],
        Mode::PerModality => ds
            .modalities()
            .iter()
            .map(|m| pca_fit(m, k).map(Projection::Pca))
            .collect::<Result<_>>()?,
    };
    AdaptedPipeline::new(mode, projections, ds.dims())
}
