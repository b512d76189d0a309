//! Independent reference implementations used as test oracles. None of this
//! calls into the crate's numerical code paths.

#![allow(dead_code)]

use embadapt::net::Network;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plain-loop copy of a network's parameters: `(weights[in][out], bias[out])`.
#[derive(Clone, Debug)]
pub struct NaiveNet {
    pub layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
    pub normalize: bool,
}

impl NaiveNet {
    pub fn from_network(net: &Network) -> NaiveNet {
        NaiveNet {
            layers: net
                .layers()
                .iter()
                .map(|l| {
                    let w = l.weights.rows().into_iter().map(|r| r.to_vec()).collect();
                    (w, l.bias.to_vec())
                })
                .collect(),
            normalize: net.normalize(),
        }
    }

    /// Smallest norm of an output row before normalization.
    pub fn min_output_norm(&self, x: &[Vec<f64>]) -> f64 {
        let raw = NaiveNet { layers: self.layers.clone(), normalize: false };
        raw.forward(x).0.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(f64::INFINITY, f64::min)
    }

    /// Largest distance between two output rows after scaling each to unit
    /// norm; zero when the head maps the whole batch onto one ray.
    pub fn output_spread(&self, x: &[Vec<f64>]) -> f64 {
        let unit = NaiveNet { layers: self.layers.clone(), normalize: true };
        let out = unit.forward(x).0;
        let mut spread: f64 = 0.0;
        for a in &out {
            for b in &out {
                spread = spread.max(a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt());
            }
        }
        spread
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|(w, b)| w.len() * b.len() + b.len()).sum()
    }

    /// Mutable reference to parameter `p` in layer order: weights row-major, then bias.
    pub fn param_mut(&mut self, mut p: usize) -> &mut f64 {
        for (w, b) in &mut self.layers {
            let nw = w.len() * b.len();
            if p < nw {
                let cols = b.len();
                return &mut w[p / cols][p % cols];
            }
            p -= nw;
            if p < b.len() {
                return &mut b[p];
            }
            p -= b.len();
        }
        panic!("parameter index out of range")
    }

    /// Forward pass; also returns the smallest |pre-activation| of any hidden
    /// unit, the distance to the nearest ReLU kink.
    pub fn forward(&self, x: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let mut min_abs = f64::INFINITY;
        let last = self.layers.len() - 1;
        let out = x
            .iter()
            .map(|row| {
                let mut cur = row.clone();
                for (l, (w, b)) in self.layers.iter().enumerate() {
                    let mut next = b.clone();
                    for (i, &xi) in cur.iter().enumerate() {
                        for (o, n) in next.iter_mut().enumerate() {
                            *n += xi * w[i][o];
                        }
                    }
                    if l < last {
                        for v in &mut next {
                            min_abs = min_abs.min(v.abs());
                            *v = v.max(0.0);
                        }
                    }
                    cur = next;
                }
                if self.normalize {
                    let norm = cur.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        cur.iter_mut().for_each(|v| *v /= norm);
                    }
                }
                cur
            })
            .collect();
        (out, min_abs)
    }
}

/// Summed binary cross-entropy over the pairs `v <= u` (or `v < u`), evaluated
/// term by term from its definition.
pub fn naive_pair_loss(p: &[Vec<f64>], labels: &[u8], tau: f64, self_pairs: bool) -> f64 {
    let mut total = 0.0;
    for u in 0..p.len() {
        let end = if self_pairs { u + 1 } else { u };
        for v in 0..end {
            let s: f64 = p[u].iter().zip(&p[v]).map(|(a, b)| a * b).sum::<f64>() / tau;
            let sigma = |t: f64| 1.0 / (1.0 + (-t).exp());
            // 1 - sigma(s) == sigma(-s); the subtraction would cancel for large s
            total -= if labels[u] == labels[v] { sigma(s).ln() } else { sigma(-s).ln() };
        }
    }
    total
}

/// Elementwise relative error with a floor of 1e-5 on the denominator.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    rel_err_floor(analytic, numeric, 1e-5)
}

/// Elementwise relative error with the given floor on the denominator.
pub fn rel_err_floor(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

pub fn random_rows(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// AUC by counting every (positive, negative) pair, ties worth one half.
pub fn brute_force_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenpairs sorted by descending eigenvalue, each vector with its
/// largest-magnitude entry positive.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigen(a: &[Vec<f64>]) -> Vec<(f64, Vec<f64>)> {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i][j]).collect();
            let pivot = (0..n).fold(0, |b, i| if col[i].abs() > col[b].abs() { i } else { b });
            if col[pivot] < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            (a[j][j], col)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs
}

/// Sample covariance with n - 1 normalization, by explicit loops.
pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let d = x[0].len();
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| x.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}

/// One random end-to-end gradient check: a head, a batch and a label vector.
pub struct GradInstance {
    pub net: Network,
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub tau: f64,
    pub self_pairs: bool,
}

/// Draws an instance with dims <= 8, batch <= 6 and `hidden` hidden layers,
/// redrawing until no hidden pre-activation lies within 1e-3 of the ReLU kink
/// and no output row lies within 0.25 of the origin, and the outputs do not
/// all share one direction. Near the origin normalization is singular;
/// without it a dead head makes the loss flat to first order; and a
/// normalized head that collapses the batch onto one ray has an identically
/// zero gradient. In each case truncation error swamps the comparison.
pub fn grad_instance(seed: u64, hidden: usize) -> GradInstance {
    let mut r = rng(seed);
    loop {
        let m = r.random_range(3..=8usize);
        let k = r.random_range(2..m);
        let mut dims = vec![m];
        for _ in 0..hidden {
            dims.push(r.random_range(2..=8usize));
        }
        dims.push(k);
        let normalize = r.random_bool(0.5);
        let net = Network::init(&dims, normalize, &mut embadapt::rng::rng_from(r.random(), &[])).unwrap();
        let b = r.random_range(2..=6usize);
        let x = random_rows(b, m, &mut r);
        let labels: Vec<u8> = (0..b).map(|_| r.random_range(0..2)).collect();
        let tau = [0.1, 0.5, 1.0][r.random_range(0..3usize)];
        let self_pairs = r.random_bool(0.5);
        let naive = NaiveNet::from_network(&net);
        let (_, min_abs) = naive.forward(&x);
        if min_abs > 1e-3 && naive.min_output_norm(&x) > 0.25 && naive.output_spread(&x) > 0.05 {
            return GradInstance { net, x, labels, tau, self_pairs };
        }
    }
}

/// Largest elementwise relative error between the crate's analytic
/// loss-through-head gradient and central finite differences (step `h`) of
/// the naive oracle. The denominator floor is 1e-5 times the loss (at least
/// 1e-5), since finite-difference truncation and rounding scale with the
/// loss rather than with the entry; near-zero entries are judged on that
/// absolute scale.
pub fn end_to_end_gradient_error(inst: &GradInstance, h: f64) -> f64 {
    use embadapt::{build_pairs, contrastive_loss};
    let xs = ndarray::Array2::from_shape_fn((inst.x.len(), inst.x[0].len()), |(i, j)| inst.x[i][j]);
    let trace = inst.net.trace(xs.view()).unwrap();
    let pairs = build_pairs(&inst.labels, inst.self_pairs).unwrap();
    let loss = contrastive_loss(trace.output().view(), &pairs, inst.tau, false).unwrap();
    let grads = inst.net.backward_trace(&trace, loss.gradient.view()).unwrap();
    let analytic: Vec<f64> = grads
        .weights
        .iter()
        .zip(&grads.biases)
        .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
        .collect();

    let base = NaiveNet::from_network(&inst.net);
    let loss_at = |net: &NaiveNet| naive_pair_loss(&net.forward(&inst.x).0, &inst.labels, inst.tau, inst.self_pairs);
    assert_eq!(analytic.len(), base.n_params());
    let floor = 1e-5 * loss.total.abs().max(1.0);
    let mut worst: f64 = 0.0;
    for (p, &a) in analytic.iter().enumerate() {
        let mut plus = base.clone();
        *plus.param_mut(p) += h;
        let mut minus = base.clone();
        *minus.param_mut(p) -= h;
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
        worst = worst.max(rel_err_floor(a, numeric, floor));
    }
    worst
}
