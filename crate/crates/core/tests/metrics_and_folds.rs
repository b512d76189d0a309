mod common;

use common::*;
use embadapt::eval::{accuracy, auc, f1, stratified_kfold, Confusion};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn auc_matches_pairwise_count() {
    let mut r = rng(77);
    for _ in 0..100 {
        let n = r.random_range(2..=40usize);
        let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        // Coarse scores so ties are common.
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..8) as f64 / 4.0).collect();
        assert_eq!(auc(&labels, &scores).unwrap(), brute_force_auc(&labels, &scores));
    }
}

#[test]
fn f1_and_accuracy_on_enumerated_confusions() {
    for tp in 0..5usize {
        for fp in 0..5usize {
            for tn in 0..5usize {
                for fn_ in 0..5usize {
                    let mut t = Vec::new();
                    let mut p = Vec::new();
                    for (count, truth, pred) in [(tp, 1, 1), (fp, 0, 1), (tn, 0, 0), (fn_, 1, 0)] {
                        t.extend(std::iter::repeat_n(truth, count));
                        p.extend(std::iter::repeat_n(pred, count));
                    }
                    let denom = 2 * tp + fp + fn_;
                    let want_f1 = if denom == 0 { 0.0 } else { (2 * tp) as f64 / denom as f64 };
                    assert_eq!(f1(&t, &p).unwrap(), want_f1);
                    let total = tp + fp + tn + fn_;
                    if total > 0 {
                        let acc = accuracy(&t, &p).unwrap();
                        assert_eq!(acc, (tp + tn) as f64 / total as f64);
                        let c = Confusion::new(&t, &p).unwrap();
                        let error_rate = (c.fp + c.fn_) as f64 / total as f64;
                        assert!((acc + error_rate - 1.0).abs() < 1e-15);
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn auc_invariant_under_monotone_maps(
        scores in prop::collection::vec(-5.0f64..5.0, 4..30),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let mut labels: Vec<u8> = scores.iter().map(|_| r.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let base = auc(&labels, &scores).unwrap();
        let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s - 7.0).collect();
        prop_assert_eq!(auc(&labels, &exp).unwrap(), base);
        prop_assert_eq!(auc(&labels, &affine).unwrap(), base);
    }

    #[test]
    fn f1_invariant_under_permutation(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..50), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let (t, p): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rng(seed));
        let (ts, ps): (Vec<u8>, Vec<u8>) = shuffled.into_iter().unzip();
        prop_assert_eq!(f1(&t, &p).unwrap(), f1(&ts, &ps).unwrap());
    }

    #[test]
    fn folds_partition_and_stratify(n0 in 5usize..60, n1 in 5usize..60, k in 2usize..=5, seed in any::<u64>()) {
        let mut labels = vec![0u8; n0];
        labels.extend(vec![1u8; n1]);
        labels.shuffle(&mut rng(seed ^ 1));
        let plan = stratified_kfold(&labels, k, seed).unwrap();
        let mut seen = vec![0usize; labels.len()];
        for f in 0..k {
            for &i in plan.test(f) {
                seen[i] += 1;
            }
            for class in [0u8, 1] {
                let global = labels.iter().filter(|&&l| l == class).count() as f64 / k as f64;
                let here = plan.test(f).iter().filter(|&&i| labels[i] == class).count() as f64;
                prop_assert!((here - global).abs() <= 1.0);
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }
}

use rand::seq::SliceRandom;

#[test]
fn eighty_twenty_split() {
    let labels: Vec<u8> = (0..100).map(|i| (i >= 80) as u8).collect();
    let plan = stratified_kfold(&labels, 5, 3).unwrap();
    for f in 0..5 {
        let pos = plan.test(f).iter().filter(|&&i| labels[i] == 1).count();
        let neg = plan.test(f).len() - pos;
        assert!((15..=17).contains(&neg), "{neg}");
        assert!((3..=5).contains(&pos), "{pos}");
    }
}
