//! Principal component analysis baseline.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};

use crate::data::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Fitted PCA: `transform(x) = (x - mean) · componentsᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    /// `K × d`, orthonormal rows, descending explained variance.
    components: Array2<f64>,
    explained_variance: Array1<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &Array1<f64> {
        &self.explained_variance
    }

    pub fn input_dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "embadapt-pca 1").unwrap();
        writeln!(out, "shape {} {}", self.output_dim(), self.input_dim()).unwrap();
        let row = |out: &mut String, vals: &mut dyn Iterator<Item = &f64>| {
            let line: Vec<String> = vals.map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        };
        row(&mut out, &mut self.mean.iter());
        row(&mut out, &mut self.explained_variance.iter());
        for r in self.components.rows() {
            row(&mut out, &mut r.iter());
        }
        out
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<PcaModel> {
        let err = |m: &str| Error::format(origin, m.to_owned());
        let mut lines = text.lines();
        if lines.next() != Some("embadapt-pca 1") {
            return Err(err("unsupported PCA header"));
        }
        let shape: Vec<usize> = lines
            .next()
            .and_then(|l| l.strip_prefix("shape "))
            .ok_or_else(|| err("missing shape line"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err("bad shape")))
            .collect::<Result<_>>()?;
        let [k, d] = shape[..] else {
            return Err(err("shape needs two numbers"));
        };
        let mut parse = |width: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = lines
                .next()
                .ok_or_else(|| err("unexpected end of file"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err("bad value")))
                .collect::<Result<_>>()?;
            if vals.len() != width {
                return Err(err("row has wrong length"));
            }
            Ok(vals)
        };
        let mean = Array1::from(parse(d)?);
        let explained_variance = Array1::from(parse(k)?);
        let mut flat = Vec::with_capacity(k * d);
        for _ in 0..k {
            flat.extend(parse(d)?);
        }
        Ok(PcaModel {
            mean,
            components: Array2::from_shape_vec((k, d), flat).expect("lengths checked"),
            explained_variance,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<PcaModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PcaModel::from_text(&text, path)
    }
}

/// Fits `k` principal components from the `(n-1)`-normalized covariance.
/// Each component's largest-magnitude entry is made positive.
pub fn pca_fit(x: &EmbeddingMatrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::InvalidConfig("PCA needs at least two rows".into()));
    }
    if k == 0 || k > (n - 1).min(d) {
        return Err(Error::InvalidConfig(format!(
            "PCA size {k} must lie in 1..={}",
            (n - 1).min(d)
        )));
    }
    let view = x.view();
    let first = view.row(0);
    if view.rows().into_iter().all(|r| r == first) {
        return Err(Error::ZeroVariance);
    }

    let mean = view.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &view - &mean;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Array2::zeros((k, d));
    let mut explained_variance = Array1::zeros(k);
    for (row, &idx) in order.iter().take(k).enumerate() {
        let col = eig.eigenvectors.column(idx);
        let pivot = (0..d)
            .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a)))
            .expect("d >= 1");
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..d {
            components[[row, c]] = sign * col[c];
        }
        explained_variance[row] = eig.eigenvalues[idx].max(0.0);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

pub fn pca_transform(model: &PcaModel, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    if x.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: x.cols(),
        });
    }
    let centered = &x.view() - &model.mean;
    EmbeddingMatrix::new(centered.dot(&model.components.t()))
}
