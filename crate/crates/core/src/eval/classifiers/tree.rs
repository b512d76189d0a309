use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::Result;
use crate::rng::{derive_seed, rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSubset {
    All,
    Sqrt,
    Count(usize),
}

impl FeatureSubset {
    fn size(self, d: usize) -> usize {
        match self {
            FeatureSubset::All => d,
            FeatureSubset::Sqrt => ((d as f64).sqrt().round() as usize).clamp(1, d),
            FeatureSubset::Count(c) => c.clamp(1, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: FeatureSubset,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: Some(10),
            min_leaf: 2,
            max_features: FeatureSubset::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        /// Fraction of class-1 training rows reaching this leaf.
        score: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary CART tree grown greedily on Gini impurity. Rows go left when
/// `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    params: &'a CartParams,
    rng: Rng,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
    left_len: usize,
}

impl Builder<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            score: pos as f64 / n as f64,
        });
        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        if pos == 0 || pos == n || !depth_ok || n < 2 * self.params.min_leaf {
            return id;
        }
        let Some(split) = self.best_split(idx, pos) else {
            return id;
        };
        let f = split.feature;
        idx.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]).then(a.cmp(&b)));
        let (l, r) = idx.split_at_mut(split.left_len);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: f,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        let m = self.params.max_features.size(d);
        if m == d {
            return (0..d).collect();
        }
        let mut f = sample(&mut self.rng, d, m).into_vec();
        f.sort_unstable();
        f
    }

    fn best_split(&mut self, idx: &[usize], pos: usize) -> Option<Split> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut sorted = idx.to_vec();
        let mut best: Option<Split> = None;
        for f in self.candidate_features() {
            let col = self.x.column(f);
            sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            let mut left_pos = 0usize;
            for s in 1..n {
                left_pos += self.y[sorted[s - 1]] as usize;
                if s < min_leaf || n - s < min_leaf {
                    continue;
                }
                let (lo, hi) = (col[sorted[s - 1]], col[sorted[s]]);
                if lo >= hi {
                    continue;
                }
                let right_pos = pos - left_pos;
                let (ls, rs) = (s as f64, (n - s) as f64);
                let impurity = left_pos as f64 * (ls - left_pos as f64) / ls
                    + right_pos as f64 * (rs - right_pos as f64) / rs;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some(Split {
                        feature: f,
                        threshold: if mid < hi { mid } else { lo },
                        impurity,
                        left_len: s,
                    });
                }
            }
        }
        best
    }
}

impl DecisionTree {
    /// `seed` only matters when `max_features` samples a subset.
    pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &CartParams, seed: u64) -> Result<Self> {
        let mut idx: Vec<usize> = (0..x.nrows()).collect();
        Ok(Self::fit_rows(x, y, params, seed, &mut idx))
    }

    fn fit_rows(x: ArrayView2<f64>, y: &[u8], params: &CartParams, seed: u64, idx: &mut [usize]) -> Self {
        let mut builder = Builder {
            x,
            y,
            params,
            rng: rng_from(seed, &[0x7EE]),
            nodes: Vec::new(),
        };
        builder.grow(idx, 0);
        DecisionTree {
            nodes: builder.nodes,
            n_features: x.ncols(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn score_row(&self, row: ndarray::ArrayView1<f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { score } => return score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.score_row(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: CartParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            bootstrap: true,
            tree: CartParams {
                max_depth: None,
                min_leaf: 1,
                max_features: FeatureSubset::Sqrt,
            },
        }
    }
}

/// Bagged CART trees; the score is the mean of the trees' leaf fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_features: usize,
}

impl RandomForest {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &ForestParams, seed: u64) -> Result<Self> {
        let n = x.nrows();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let tree_seed = derive_seed(seed, &[t as u64]);
                let mut idx: Vec<usize> = if params.bootstrap {
                    let mut rng = rng_from(tree_seed, &[0xb007]);
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit_rows(x, y, &params.tree, tree_seed, &mut idx)
            })
            .collect();
        Ok(RandomForest {
            trees,
            n_features: x.ncols(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.n_features
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut total = vec![0.0; x.nrows()];
        for tree in &self.trees {
            for (acc, s) in total.iter_mut().zip(tree.predict_proba(x)) {
                *acc += s;
            }
        }
        let k = self.trees.len() as f64;
        total.into_iter().map(|s| s / k).collect()
    }
}
