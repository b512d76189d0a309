mod common;

use common::*;
use embadapt::{pca_fit, pca_transform, EmbeddingMatrix};
use ndarray::Array2;
use rand::Rng;

const EIGEN_TOL: f64 = 1e-8;

fn matrix(rows: &[Vec<f64>]) -> EmbeddingMatrix {
    EmbeddingMatrix::new(Array2::from_shape_fn((rows.len(), rows[0].len()), |(i, j)| rows[i][j])).unwrap()
}

#[test]
fn components_match_jacobi_oracle() {
    let mut r = rng(100);
    for _ in 0..50 {
        let d = r.random_range(2..=8usize);
        let n = r.random_range(d + 2..=20usize);
        let x = random_rows(n, d, &mut r);
        let k = d;
        let model = pca_fit(&matrix(&x), k).unwrap();
        let oracle = jacobi_eigen(&covariance(&x));
        for (c, (value, vector)) in oracle.iter().enumerate().take(k) {
            assert!((model.explained_variance()[c] - value).abs() < EIGEN_TOL);
            for (j, v) in vector.iter().enumerate() {
                assert!((model.components()[[c, j]] - v).abs() < EIGEN_TOL, "component {c}");
            }
        }
    }
}

#[test]
fn components_are_orthonormal_and_sorted() {
    let mut r = rng(5);
    let x = random_rows(30, 6, &mut r);
    let model = pca_fit(&matrix(&x), 4).unwrap();
    let gram = model.components().dot(&model.components().t());
    for ((i, j), v) in gram.indexed_iter() {
        assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
    }
    let ev = model.explained_variance();
    assert!(ev.windows(2).into_iter().all(|w| w[0] >= w[1]) && ev.iter().all(|&v| v >= 0.0));
}

#[test]
fn full_rank_transform_is_an_isometry() {
    let mut r = rng(6);
    for _ in 0..20 {
        let d = r.random_range(2..=8usize);
        let x = random_rows(d + 5, d, &mut r);
        let m = matrix(&x);
        let y = pca_transform(&pca_fit(&m, d).unwrap(), &m).unwrap();
        for i in 0..x.len() {
            for j in 0..x.len() {
                let dx = (&m.view().row(i) - &m.view().row(j)).mapv(|v| v * v).sum().sqrt();
                let dy = (&y.view().row(i) - &y.view().row(j)).mapv(|v| v * v).sum().sqrt();
                assert!((dx - dy).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn explained_variance_sums_to_total_variance() {
    let mut r = rng(7);
    let x: Vec<Vec<f64>> = (0..500)
        .map(|_| (0..5).map(|_| r.sample::<f64, _>(rand_distr::StandardNormal)).collect())
        .collect();
    let model = pca_fit(&matrix(&x), 5).unwrap();
    let cov = covariance(&x);
    let trace: f64 = (0..5).map(|i| cov[i][i]).sum();
    assert!((model.explained_variance().sum() - trace).abs() < 1e-6);
}

fn reconstruction_error(x: &Array2<f64>, basis: &Array2<f64>) -> f64 {
    let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
    let c = x - &mean;
    let recon = c.dot(&basis.t()).dot(basis);
    (&c - &recon).mapv(|v| v * v).sum()
}

#[test]
fn pca_beats_random_rank_two_projections() {
    let mut r = rng(9);
    for _ in 0..10 {
        let x = random_rows(6, 4, &mut r);
        let m = matrix(&x);
        let model = pca_fit(&m, 2).unwrap();
        let best = reconstruction_error(m.as_array(), model.components());
        for _ in 0..100 {
            // Gram-Schmidt on two random vectors.
            let a: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let a: Vec<f64> = a.iter().map(|v| v / na).collect();
            let dot: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
            let b: Vec<f64> = b.iter().zip(&a).map(|(q, p)| q - dot * p).collect();
            let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let basis = Array2::from_shape_fn((2, 4), |(i, j)| if i == 0 { a[j] } else { b[j] / nb });
            assert!(best <= reconstruction_error(m.as_array(), &basis) + 1e-12);
        }
    }
}

#[test]
fn fit_ignores_rows_it_is_not_given() {
    let mut r = rng(10);
    let x = random_rows(12, 4, &mut r);
    let train: Vec<Vec<f64>> = x[..9].to_vec();
    let full = matrix(&x);
    let a = pca_fit(&full.select_rows(&(0..9).collect::<Vec<_>>()), 3).unwrap();
    let b = pca_fit(&matrix(&train), 3).unwrap();
    assert_eq!(a, b);
}
