//! On-disk formats.
//!
//! A dataset is described by a TOML manifest:
//!
//! ```toml
//! format_version = 1
//! labels = "labels.csv"
//!
//! [[modality]]
//! name = "notes"
//! path = "notes.csv"
//! ```
//!
//! Relative paths resolve against the manifest's directory. Modality files
//! have the header `id,dim_0,...,dim_{d-1}`; the label file has `id,label`.
//! Rows are matched by id, and the loaded dataset is ordered by id
//! (byte-wise), so file row order never matters.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EmbeddingMatrix, MultimodalDataset};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalityEntry {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub labels: PathBuf,
    #[serde(rename = "modality")]
    pub modalities: Vec<ModalityEntry>,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: DatasetManifest =
            toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if manifest.format_version != MANIFEST_VERSION {
            return Err(Error::format(
                path,
                format!("unsupported format_version {}", manifest.format_version),
            ));
        }
        if manifest.modalities.is_empty() {
            return Err(Error::format(path, "manifest lists no modality"));
        }
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::format(path, e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

fn insert_unique<V>(map: &mut HashMap<String, V>, id: &str, v: V, path: &Path) -> Result<()> {
    if map.insert(id.to_owned(), v).is_some() {
        return Err(Error::DuplicateId {
            id: id.to_owned(),
            path: path.to_path_buf(),
        });
    }
    Ok(())
}

struct ModalityRows {
    dim: usize,
    rows: HashMap<String, Vec<f64>>,
}

fn read_modality(path: &Path) -> Result<ModalityRows> {
    let mut rdr = open_csv(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.get(0) != Some("id") {
        return Err(Error::format(path, "first column must be `id`"));
    }
    let dim = header.len() - 1;
    if dim == 0 {
        return Err(Error::format(path, "no embedding columns"));
    }
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("dim_{k}") {
            return Err(Error::format(path, format!("expected column `dim_{k}`, found `{name}`")));
        }
    }
    let mut rows = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let id = &record[0];
        let values = record
            .iter()
            .skip(1)
            .map(|s| {
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(path, format!("`{s}` is not a number (id `{id}`)")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite {
                        context: format!("{} (id `{id}`)", path.display()),
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        insert_unique(&mut rows, id, values, path)?;
    }
    Ok(ModalityRows { dim, rows })
}

fn read_labels(path: &Path) -> Result<HashMap<String, u8>> {
    let mut rdr = open_csv(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "label"] {
        return Err(Error::format(path, "label header must be `id,label`"));
    }
    let mut labels = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let label = match record[1].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::InvalidLabel {
                    id: record[0].to_owned(),
                    value: other.to_owned(),
                })
            }
        };
        insert_unique(&mut labels, &record[0], label, path)?;
    }
    Ok(labels)
}

/// Loads a dataset from its manifest, aligning rows by id.
pub fn load_dataset(manifest_path: &Path) -> Result<MultimodalDataset> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let label_path = resolve(base, &manifest.labels);
    let labels = read_labels(&label_path)?;

    let mut ids: Vec<String> = labels.keys().cloned().collect();
    ids.sort_unstable();

    let mut names = Vec::with_capacity(manifest.modalities.len());
    let mut matrices = Vec::with_capacity(manifest.modalities.len());
    for entry in &manifest.modalities {
        let path = resolve(base, &entry.path);
        let modality = read_modality(&path)?;
        if let Some(id) = modality.rows.keys().find(|id| !labels.contains_key(*id)) {
            return Err(Error::UnalignedId {
                id: id.clone(),
                present: path.clone(),
                missing: label_path.clone(),
            });
        }
        let mut values = Array2::zeros((ids.len(), modality.dim));
        for (i, id) in ids.iter().enumerate() {
            let row = modality.rows.get(id).ok_or_else(|| Error::UnalignedId {
                id: id.clone(),
                present: label_path.clone(),
                missing: path.clone(),
            })?;
            values.row_mut(i).assign(&ndarray::aview1(row));
        }
        names.push(entry.name.clone());
        matrices.push(EmbeddingMatrix::from_trusted(values));
    }
    let label_vec = ids.iter().map(|id| labels[id]).collect();
    MultimodalDataset::new(names, matrices, label_vec, ids)
}

/// Writes a matrix in the modality CSV format. Values use Rust's shortest
/// round-trip decimal rendering, so reloading reproduces every bit.
pub fn save_embeddings(mat: &EmbeddingMatrix, ids: &[String], path: &Path) -> Result<()> {
    if mat.rows() != ids.len() {
        return Err(Error::DimensionMismatch {
            expected: mat.rows(),
            actual: ids.len(),
        });
    }
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = std::iter::once("id".to_owned())
        .chain((0..mat.cols()).map(|k| format!("dim_{k}")))
        .collect();
    wtr.write_record(&header).map_err(|e| csv_err(path, e))?;
    let mut record = Vec::with_capacity(mat.cols() + 1);
    for (id, row) in ids.iter().zip(mat.view().rows()) {
        record.clear();
        record.push(id.clone());
        record.extend(row.iter().map(|v| format!("{v:?}")));
        wtr.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

pub fn save_labels(labels: &[u8], ids: &[String], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    wtr.write_record(["id", "label"]).map_err(|e| csv_err(path, e))?;
    for (id, label) in ids.iter().zip(labels) {
        wtr.write_record([id.as_str(), &label.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Writes `ds` into `dir` as `dataset.toml`, `labels.csv` and one
/// `modality_<j>.csv` per modality. Returns the manifest path.
pub fn save_dataset(ds: &MultimodalDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut modalities = Vec::with_capacity(ds.n_modalities());
    for (j, (name, m)) in ds.names().iter().zip(ds.modalities()).enumerate() {
        let file = PathBuf::from(format!("modality_{j}.csv"));
        save_embeddings(m, ds.sample_ids(), &dir.join(&file))?;
        modalities.push(ModalityEntry {
            name: name.clone(),
            path: file,
        });
    }
    save_labels(ds.labels(), ds.sample_ids(), &dir.join("labels.csv"))?;
    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        labels: "labels.csv".into(),
        modalities,
    };
    let path = dir.join("dataset.toml");
    manifest.write(&path)?;
    Ok(path)
}
