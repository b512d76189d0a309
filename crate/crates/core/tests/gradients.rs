mod common;

use common::*;
use embadapt::net::Network;
use embadapt::{build_pairs, contrastive_loss};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;

fn to_array(rows: &[Vec<f64>]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), rows[0].len()), |(i, j)| rows[i][j])
}

#[test]
fn backward_matches_finite_differences_on_5_4_3_head() {
    let mut r = rng(42);
    for normalize in [false, true] {
        let net = Network::init(&[5, 4, 3], normalize, &mut embadapt::rng::rng_from(3, &[])).unwrap();
        let x = random_rows(4, 5, &mut r);
        let dir = random_rows(4, 3, &mut r);
        let grads = net.backward(to_array(&x).view(), to_array(&dir).view()).unwrap();
        let naive = NaiveNet::from_network(&net);
        let (_, min_abs) = naive.forward(&x);
        assert!(min_abs > 1e-3, "instance sits on a kink");
        let objective = |n: &NaiveNet| -> f64 {
            n.forward(&x).0.iter().zip(&dir).map(|(o, d)| o.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()).sum()
        };
        let analytic: Vec<f64> = grads
            .weights
            .iter()
            .zip(&grads.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
            .collect();
        for (p, &a) in analytic.iter().enumerate() {
            let mut plus = naive.clone();
            *plus.param_mut(p) += FD_STEP;
            let mut minus = naive.clone();
            *minus.param_mut(p) -= FD_STEP;
            let numeric = (objective(&plus) - objective(&minus)) / (2.0 * FD_STEP);
            assert!(rel_err(a, numeric) < FD_REL_TOL, "param {p}: {a} vs {numeric}");
        }
    }
}

#[test]
fn loss_gradient_wrt_projections_matches_finite_differences() {
    let mut r = rng(8);
    for trial in 0..10 {
        let b = 6;
        let k = r.random_range(2..=5usize);
        let p = random_rows(b, k, &mut r);
        let labels: Vec<u8> = (0..b).map(|_| r.random_range(0..2)).collect();
        let self_pairs = trial % 2 == 0;
        let tau = 0.1 + r.random_range(0.0..1.0);
        let pairs = build_pairs(&labels, self_pairs).unwrap();
        let got = contrastive_loss(to_array(&p).view(), &pairs, tau, false).unwrap();
        let expected_loss = naive_pair_loss(&p, &labels, tau, self_pairs);
        assert!((got.total - expected_loss).abs() < 1e-10 * (1.0 + expected_loss));
        for i in 0..b {
            for j in 0..k {
                let mut plus = p.clone();
                plus[i][j] += FD_STEP;
                let mut minus = p.clone();
                minus[i][j] -= FD_STEP;
                let numeric = (naive_pair_loss(&plus, &labels, tau, self_pairs)
                    - naive_pair_loss(&minus, &labels, tau, self_pairs))
                    / (2.0 * FD_STEP);
                let a = got.gradient[[i, j]];
                assert!(rel_err(a, numeric) < FD_REL_TOL, "trial {trial} ({i},{j}): {a} vs {numeric}");
            }
        }
    }
}

#[test]
fn balanced_weights_scale_each_pair_class() {
    let p = vec![vec![0.3, -0.2], vec![0.1, 0.4], vec![-0.5, 0.2]];
    let labels = [1, 1, 0];
    let pairs = build_pairs(&labels, false).unwrap();
    // pairs: (1,0) same, (2,0) diff, (2,1) diff -> weights 3/1 and 3/2
    let got = contrastive_loss(to_array(&p).view(), &pairs, 0.5, true).unwrap();
    let s = |u: usize, v: usize| p[u].iter().zip(&p[v]).map(|(a, b)| a * b).sum::<f64>() / 0.5;
    let bce = |s: f64, same: bool| {
        let sig = 1.0 / (1.0 + (-s).exp());
        if same { -sig.ln() } else { -(1.0 - sig).ln() }
    };
    let expected = 3.0 * bce(s(1, 0), true) + 1.5 * (bce(s(2, 0), false) + bce(s(2, 1), false));
    assert!((got.total - expected).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn end_to_end_gradients_for_every_depth(seed in any::<u64>(), hidden in 0usize..=2) {
        let inst = grad_instance(seed, hidden);
        let err = end_to_end_gradient_error(&inst, FD_STEP);
        prop_assert!(err < FD_REL_TOL, "relative error {err}");
    }
}
