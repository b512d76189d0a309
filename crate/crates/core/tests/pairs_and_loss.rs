use embadapt::contrastive::pair_loss;
use embadapt::{build_pairs, contrastive_loss};
use ndarray::array;
use proptest::prelude::*;

proptest! {
    #[test]
    fn pair_counts_and_indicator(labels in prop::collection::vec(0u8..2, 2..=256), self_pairs in any::<bool>()) {
        let b = labels.len();
        let pb = build_pairs(&labels, self_pairs).unwrap();
        let expected = if self_pairs { b * (b + 1) / 2 } else { b * (b - 1) / 2 };
        prop_assert_eq!(pb.len(), expected);
        for p in pb.pairs() {
            let ordered = if self_pairs { p.v <= p.u } else { p.v < p.u };
            prop_assert!(ordered);
            prop_assert_eq!(p.same, labels[p.u] == labels[p.v]);
        }
        let order: Vec<(usize, usize)> = pb.pairs().iter().map(|p| (p.u, p.v)).collect();
        let mut sorted = order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(order, sorted);
    }

    #[test]
    fn relabeling_keeps_indicators(labels in prop::collection::vec(0u8..2, 2..=64)) {
        let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
        prop_assert_eq!(build_pairs(&labels, true).unwrap(), build_pairs(&flipped, true).unwrap());
    }

    #[test]
    fn loss_is_non_negative(
        values in prop::collection::vec(-3.0f64..3.0, 12),
        labels in prop::collection::vec(0u8..2, 4),
        tau in 0.05f64..2.0,
    ) {
        let p = ndarray::Array2::from_shape_vec((4, 3), values).unwrap();
        let pb = build_pairs(&labels, true).unwrap();
        let l = contrastive_loss(p.view(), &pb, tau, false).unwrap();
        prop_assert!(l.total >= 0.0);
        prop_assert!(l.mean >= 0.0);
    }
}

#[test]
fn positive_pair_loss_vanishes_as_cosine_approaches_one() {
    let tau = 0.1;
    let mut previous = f64::INFINITY;
    for angle in [1.0f64, 0.5, 0.1, 0.01, 0.0] {
        let p = array![[1.0, 0.0], [angle.cos(), angle.sin()]];
        let pb = build_pairs(&[1, 1], false).unwrap();
        let l = contrastive_loss(p.view(), &pb, tau, false).unwrap().total;
        assert!(l < previous);
        previous = l;
    }
    assert!((previous - pair_loss(10.0, true)).abs() < 1e-15);
    assert!(previous < 5e-5);
}

#[test]
fn closed_form_anchors() {
    let ln2 = std::f64::consts::LN_2;
    assert!((pair_loss(0.0, true) - ln2).abs() < 1e-12);
    assert!((pair_loss(0.0, false) - ln2).abs() < 1e-12);
    let expected = -(1.0 / (1.0 + (-10.0f64).exp())).ln();
    assert!((pair_loss(10.0, true) - expected).abs() < 1e-10);
}
