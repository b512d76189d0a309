//! Datasets of per-modality embedding matrices with aligned binary labels.

mod io;
mod synth;

pub use io::{load_dataset, save_dataset, save_embeddings, save_labels, DatasetManifest, ModalityEntry, MANIFEST_VERSION};
pub use synth::{generate_synthetic, signal_basis, Nonlinearity, SynthSpec};

use std::collections::HashSet;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense `n × d` matrix of finite doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix(Array2<f64>);

impl EmbeddingMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some((idx, _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("embedding matrix at row {}, column {}", idx.0, idx.1),
            });
        }
        Ok(EmbeddingMatrix(values))
    }

    pub(crate) fn from_trusted(values: Array2<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        EmbeddingMatrix(values)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> EmbeddingMatrix {
        EmbeddingMatrix(self.0.select(Axis(0), indices))
    }

    /// Column block `[start, start + width)`.
    pub fn column_block(&self, start: usize, width: usize) -> EmbeddingMatrix {
        EmbeddingMatrix(self.0.slice(s![.., start..start + width]).to_owned())
    }
}

/// Per-modality embeddings of `n` samples plus their binary labels.
///
/// Row `i` of every modality and `labels[i]` describe `sample_ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalDataset {
    names: Vec<String>,
    modalities: Vec<EmbeddingMatrix>,
    labels: Vec<u8>,
    sample_ids: Vec<String>,
}

impl MultimodalDataset {
    pub fn new(
        names: Vec<String>,
        modalities: Vec<EmbeddingMatrix>,
        labels: Vec<u8>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        if modalities.is_empty() {
            return Err(Error::InvalidConfig("dataset needs at least one modality".into()));
        }
        if names.len() != modalities.len() {
            return Err(Error::DimensionMismatch {
                expected: modalities.len(),
                actual: names.len(),
            });
        }
        let n = labels.len();
        if sample_ids.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: sample_ids.len(),
            });
        }
        for m in &modalities {
            if m.rows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: m.rows(),
                });
            }
            if m.cols() == 0 {
                return Err(Error::InvalidConfig("modality with zero columns".into()));
            }
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::InvalidLabel {
                id: sample_ids[i].clone(),
                value: l.to_string(),
            });
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId {
                    id: id.clone(),
                    path: "<dataset>".into(),
                });
            }
        }
        Ok(MultimodalDataset {
            names,
            modalities,
            labels,
            sample_ids,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_modalities(&self) -> usize {
        self.modalities.len()
    }

    pub fn modality(&self, j: usize) -> &EmbeddingMatrix {
        &self.modalities[j]
    }

    pub fn modalities(&self) -> &[EmbeddingMatrix] {
        &self.modalities
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modalities.iter().map(EmbeddingMatrix::cols).collect()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn has_both_classes(&self) -> bool {
        has_both_classes(&self.labels)
    }

    /// Subset of rows, preserving the given order.
    pub fn select(&self, indices: &[usize]) -> MultimodalDataset {
        MultimodalDataset {
            names: self.names.clone(),
            modalities: self
                .modalities
                .iter()
                .map(|m| m.select_rows(indices))
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
        }
    }

    /// Replaces modality `j`; used by tests that perturb one modality.
    pub fn with_modality(&self, j: usize, matrix: EmbeddingMatrix) -> Result<MultimodalDataset> {
        let mut modalities = self.modalities.clone();
        modalities[j] = matrix;
        MultimodalDataset::new(
            self.names.clone(),
            modalities,
            self.labels.clone(),
            self.sample_ids.clone(),
        )
    }

    /// SHA-256 over ids, labels, dimensions and the bit patterns of every value.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_samples() as u64).to_le_bytes());
        for (id, &label) in self.sample_ids.iter().zip(&self.labels) {
            hasher.update(id.as_bytes());
            hasher.update([0u8, label]);
        }
        for m in &self.modalities {
            hasher.update((m.cols() as u64).to_le_bytes());
            for v in m.as_array().iter() {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

pub(crate) fn has_both_classes(labels: &[u8]) -> bool {
    labels.contains(&0) && labels.contains(&1)
}

/// Column-wise concatenation of all modalities, in modality order.
pub fn concat_modalities(ds: &MultimodalDataset) -> EmbeddingMatrix {
    if ds.n_modalities() == 1 {
        return ds.modality(0).clone();
    }
    let views: Vec<_> = ds.modalities.iter().map(EmbeddingMatrix::view).collect();
    EmbeddingMatrix(concatenate(Axis(1), &views).expect("modalities share row count"))
}

pub(crate) fn concat_matrices(blocks: &[EmbeddingMatrix]) -> EmbeddingMatrix {
    let views: Vec<_> = blocks.iter().map(EmbeddingMatrix::view).collect();
    EmbeddingMatrix(concatenate(Axis(1), &views).expect("blocks share row count"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small() -> MultimodalDataset {
        MultimodalDataset::new(
            vec!["a".into(), "b".into()],
            vec![
                EmbeddingMatrix::new(array![[1.0, 2.0], [3.0, 4.0]]).unwrap(),
                EmbeddingMatrix::new(array![[5.0, 6.0, 7.0], [8.0, 9.0, 10.0]]).unwrap(),
            ],
            vec![0, 1],
            vec!["x".into(), "y".into()],
        )
        .unwrap()
    }

    #[test]
    fn concat_single_modality_is_identity() {
        let ds = small().select(&[0, 1]);
        let one = MultimodalDataset::new(
            vec!["a".into()],
            vec![ds.modality(0).clone()],
            ds.labels().to_vec(),
            ds.sample_ids().to_vec(),
        )
        .unwrap();
        assert_eq!(concat_modalities(&one), *one.modality(0));
    }

    #[test]
    fn concat_places_blocks_in_order() {
        let ds = small();
        let c = concat_modalities(&ds);
        assert_eq!(c.cols(), 5);
        assert_eq!(c.view().row(1).to_vec(), vec![3.0, 4.0, 8.0, 9.0, 10.0]);
        assert_eq!(c.column_block(0, 2), *ds.modality(0));
        assert_eq!(c.column_block(2, 3), *ds.modality(1));
    }

    #[test]
    fn rejects_non_finite_and_misaligned() {
        assert!(matches!(
            EmbeddingMatrix::new(array![[1.0, f64::NAN]]),
            Err(Error::NonFinite { .. })
        ));
        let err = MultimodalDataset::new(
            vec!["a".into()],
            vec![EmbeddingMatrix::new(array![[1.0]]).unwrap()],
            vec![0, 1],
            vec!["x".into(), "y".into()],
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let dup = MultimodalDataset::new(
            vec!["a".into()],
            vec![EmbeddingMatrix::new(array![[1.0], [2.0]]).unwrap()],
            vec![0, 1],
            vec!["x".into(), "x".into()],
        );
        assert!(matches!(dup, Err(Error::DuplicateId { .. })));
    }

    #[test]
    fn fingerprint_tracks_values() {
        let a = small();
        let b = a
            .with_modality(0, EmbeddingMatrix::new(array![[1.0, 2.0], [3.0, 4.5]]).unwrap())
            .unwrap();
        assert_eq!(a.fingerprint(), small().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
