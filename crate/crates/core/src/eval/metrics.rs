//! Binary classification metrics with label 1 as the positive class.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn new(y_true: &[u8], y_pred: &[u8]) -> Result<Confusion> {
        check_len(y_true.len(), y_pred.len())?;
        let mut c = Confusion::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, 0) => c.tn += 1,
                (1, 0) => c.fn_ += 1,
                _ => {
                    return Err(Error::InvalidLabel {
                        id: "<metric input>".into(),
                        value: format!("{t}/{p}"),
                    })
                }
            }
        }
        Ok(c)
    }

    /// `2TP / (2TP + FP + FN)`, or 0 when the denominator is 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.fp + self.tn + self.fn_;
        if total == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / total as f64
        }
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, actual: b });
    }
    Ok(())
}

pub fn f1(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    Ok(Confusion::new(y_true, y_pred)?.f1())
}

pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    Ok(Confusion::new(y_true, y_pred)?.accuracy())
}

/// Area under the ROC curve from the Mann-Whitney U statistic, ties counted
/// as one half through mid-ranks.
pub fn auc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    check_len(y_true.len(), scores.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite { context: "AUC scores".into() });
    }
    let n_pos = y_true.iter().filter(|&&y| y == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Ranks are doubled so tied mid-ranks stay integral.
    let mut pos_rank_sum2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank2 = (start + 1 + end) as u64;
        let positives = order[start..end].iter().filter(|&&i| y_true[i] == 1).count() as u64;
        pos_rank_sum2 += mid_rank2 * positives;
        start = end;
    }
    let n_pos = n_pos as u64;
    let u2 = pos_rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg as u64) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [0, 1, 1, 0];
        assert_eq!(f1(&y, &y).unwrap(), 1.0);
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
        assert_eq!(auc(&y, &[0.1, 0.8, 0.9, 0.2]).unwrap(), 1.0);
    }

    #[test]
    fn f1_formula() {
        // TP=2, FP=1, FN=1, TN=1
        let t = [1, 1, 0, 1, 0];
        let p = [1, 1, 1, 0, 0];
        assert!((f1(&t, &p).unwrap() - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(accuracy(&t, &p).unwrap(), 0.6);
        assert_eq!(f1(&[0, 0], &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn auc_ties_and_small_case() {
        assert_eq!(auc(&[0, 1, 0, 1], &[0.3; 4]).unwrap(), 0.5);
        assert_eq!(auc(&[1, 0, 1], &[0.9, 0.8, 0.3]).unwrap(), 0.5);
        assert!(matches!(auc(&[1, 1], &[0.1, 0.2]), Err(Error::SingleClass)));
    }
}
