use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{rng_from, STREAM_FOLDS};

/// Stratified k-fold split; test sets partition `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    n: usize,
    test: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.test.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ascending test indices of fold `f`.
    pub fn test(&self, f: usize) -> &[usize] {
        &self.test[f]
    }

    /// Ascending training indices of fold `f`.
    pub fn train(&self, f: usize) -> Vec<usize> {
        let mut in_test = vec![false; self.n];
        for &i in &self.test[f] {
            in_test[i] = true;
        }
        (0..self.n).filter(|&i| !in_test[i]).collect()
    }
}

/// Shuffles each class with a seeded generator and deals its members
/// round-robin over the folds, so every fold holds `⌊c/k⌋` or `⌈c/k⌉`
/// members of a class of size `c`.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig("k must be at least 2".into()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
    }
    let mut test = vec![Vec::new(); k];
    let mut offset = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::InvalidConfig(format!(
                "class {class} has {} members, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(&mut rng_from(seed, &[STREAM_FOLDS, class as u64]));
        for (p, &i) in members.iter().enumerate() {
            test[(offset + p) % k].push(i);
        }
        offset = (offset + members.len()) % k;
    }
    for fold in &mut test {
        fold.sort_unstable();
    }
    Ok(FoldPlan { n: labels.len(), test })
}
