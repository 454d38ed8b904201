//! Random forest of CART trees: Gini impurity, bootstrap bagging, random
//! feature subsetting per split.
//!
//! Determinism contract: per-tree RNG streams derive from the training seed
//! and the tree index; split ties break on lowest feature index, then lowest
//! cut value. When the sampled feature subset admits no valid split, the
//! search widens over the remaining features before giving up, so a node
//! only becomes a leaf when no feature can split it.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::FeatureSubsetRule;
use crate::corpus::Label;
use crate::seed;

/// Flattened tree node. `feature < 0` marks a leaf carrying a posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub posterior: f64,
}

impl TreeNode {
    fn leaf(posterior: f64) -> TreeNode {
        TreeNode {
            feature: -1,
            threshold: 0.0,
            left: 0,
            right: 0,
            posterior,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.feature < 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[i8]) -> f64 {
        let mut idx = 0usize;
        loop {
            let node = &self.nodes[idx];
            if node.is_leaf() {
                return node.posterior;
            }
            idx = if f64::from(x[node.feature as usize]) <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
}

pub fn predict_score(model: &RfModel, x: &[i8]) -> f64 {
    let sum: f64 = model.trees.iter().map(|t| t.predict(x)).sum();
    sum / model.trees.len() as f64
}

struct Grower<'a> {
    data: &'a [(Vec<i8>, Label)],
    width: usize,
    max_depth: Option<u32>,
    min_leaf: usize,
    subset: FeatureSubsetRule,
    nodes: Vec<TreeNode>,
}

fn phish_fraction(data: &[(Vec<i8>, Label)], indices: &[usize]) -> f64 {
    let positives = indices
        .iter()
        .filter(|&&i| data[i].1 == Label::Phishing)
        .count();
    positives as f64 / indices.len() as f64
}

fn gini(p: f64) -> f64 {
    2.0 * p * (1.0 - p)
}

struct Split {
    feature: usize,
    threshold: f64,
    weighted_gini: f64,
}

impl<'a> Grower<'a> {
    fn subset_size(&self) -> usize {
        match self.subset {
            FeatureSubsetRule::All => self.width,
            FeatureSubsetRule::Sqrt => ((self.width as f64).sqrt().round() as usize).max(1),
            FeatureSubsetRule::Fixed(k) => (k as usize).clamp(1, self.width),
        }
    }

    /// Best split of `indices` over `features`, if any is valid.
    fn best_split(&self, indices: &[usize], features: &[usize]) -> Option<Split> {
        let mut best: Option<Split> = None;
        let n = indices.len() as f64;
        for &feature in features {
            // ternary features: candidate thresholds between distinct values
            let mut present = [false; 3];
            for &i in indices {
                present[(self.data[i].0[feature] + 1) as usize] = true;
            }
            for threshold in [-0.5f64, 0.5f64] {
                let viable = if threshold < 0.0 {
                    present[0] && (present[1] || present[2])
                } else {
                    (present[0] || present[1]) && present[2]
                };
                if !viable {
                    continue;
                }
                let mut n_left = 0usize;
                let mut pos_left = 0usize;
                let mut pos_right = 0usize;
                for &i in indices {
                    let v = f64::from(self.data[i].0[feature]);
                    let positive = self.data[i].1 == Label::Phishing;
                    if v <= threshold {
                        n_left += 1;
                        pos_left += usize::from(positive);
                    } else {
                        pos_right += usize::from(positive);
                    }
                }
                let n_right = indices.len() - n_left;
                if n_left < self.min_leaf || n_right < self.min_leaf {
                    continue;
                }
                let gini_left = gini(pos_left as f64 / n_left as f64);
                let gini_right = gini(pos_right as f64 / n_right as f64);
                let weighted = (n_left as f64 * gini_left + n_right as f64 * gini_right) / n;
                let better = match &best {
                    None => true,
                    Some(b) => {
                        weighted < b.weighted_gini - 1e-12
                            || ((weighted - b.weighted_gini).abs() <= 1e-12
                                && (feature, threshold) < (b.feature, b.threshold))
                    }
                };
                if better {
                    best = Some(Split {
                        feature,
                        threshold,
                        weighted_gini: weighted,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, indices: Vec<usize>, depth: u32, rng: &mut seed::Rng) -> u32 {
        let posterior = phish_fraction(self.data, &indices);
        let node_idx = self.nodes.len() as u32;
        self.nodes.push(TreeNode::leaf(posterior));

        let depth_reached = self.max_depth.map(|d| depth >= d).unwrap_or(false);
        if posterior == 0.0 || posterior == 1.0 || depth_reached || indices.len() < 2 {
            return node_idx;
        }

        // deterministic subset draw, then sorted for stable tie-breaks
        let k = self.subset_size();
        let mut pool: Vec<usize> = (0..self.width).collect();
        for i in 0..k.min(self.width) {
            let j = rng.gen_range(i..self.width);
            pool.swap(i, j);
        }
        let mut sampled: Vec<usize> = pool[..k].to_vec();
        sampled.sort_unstable();
        let mut split = self.best_split(&indices, &sampled);
        if split.is_none() && k < self.width {
            let mut remaining: Vec<usize> = pool[k..].to_vec();
            remaining.sort_unstable();
            split = self.best_split(&indices, &remaining);
        }
        let Some(split) = split else {
            return node_idx;
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices.into_iter().partition(|&i| {
            f64::from(self.data[i].0[split.feature]) <= split.threshold
        });
        let left = self.grow(left_idx, depth + 1, rng);
        let right = self.grow(right_idx, depth + 1, rng);
        let node = &mut self.nodes[node_idx as usize];
        node.feature = split.feature as i32;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        node_idx
    }
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    width: usize,
    data: &[(Vec<i8>, Label)],
    n_trees: u32,
    max_depth: Option<u32>,
    min_leaf: u32,
    bagging: bool,
    subset: FeatureSubsetRule,
    seed_value: u64,
) -> RfModel {
    let mut trees = Vec::with_capacity(n_trees as usize);
    for t in 0..n_trees {
        let mut rng = seed::rng(seed::mix(seed_value, u64::from(t)));
        let indices: Vec<usize> = if bagging {
            (0..data.len()).map(|_| rng.gen_range(0..data.len())).collect()
        } else {
            (0..data.len()).collect()
        };
        let mut grower = Grower {
            data,
            width,
            max_depth,
            min_leaf: min_leaf.max(1) as usize,
            subset,
            nodes: Vec::new(),
        };
        grower.grow(indices, 0, &mut rng);
        trees.push(Tree {
            nodes: grower.nodes,
        });
    }
    RfModel { trees }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn xor_data() -> Vec<(Vec<i8>, Label)> {
        // no single split has gain at the root; a full tree must still
        // shatter it
        vec![
            (vec![-1, -1], Label::Benign),
            (vec![-1, 1], Label::Phishing),
            (vec![1, -1], Label::Phishing),
            (vec![1, 1], Label::Benign),
        ]
    }

    #[test]
    fn single_unpruned_tree_shatters_consistent_data() {
        let data = xor_data();
        let model = train(2, &data, 1, None, 1, false, FeatureSubsetRule::All, 3);
        for (x, label) in &data {
            let score = predict_score(&model, x);
            let predicted = score >= 0.5;
            assert_eq!(predicted, *label == Label::Phishing, "x={x:?} score={score}");
        }
    }

    #[test]
    fn forest_votes_average_leaf_posteriors() {
        let leaf = |p: f64| Tree {
            nodes: vec![TreeNode::leaf(p)],
        };
        let model = RfModel {
            trees: vec![leaf(1.0), leaf(0.0)],
        };
        assert_abs_diff_eq!(predict_score(&model, &[0; 4]), 0.5);
        let uniform = RfModel {
            trees: vec![leaf(0.7); 5],
        };
        assert_abs_diff_eq!(predict_score(&uniform, &[0; 4]), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let mut data = xor_data();
        data.extend(xor_data());
        let a = train(2, &data, 8, None, 1, true, FeatureSubsetRule::Sqrt, 9);
        let b = train(2, &data, 8, None, 1, true, FeatureSubsetRule::Sqrt, 9);
        assert_eq!(a, b);
        let c = train(2, &data, 8, None, 1, true, FeatureSubsetRule::Sqrt, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn max_depth_zero_gives_single_leaf() {
        let data = xor_data();
        let model = train(2, &data, 1, Some(0), 1, false, FeatureSubsetRule::All, 1);
        assert_eq!(model.trees[0].nodes.len(), 1);
        assert_abs_diff_eq!(predict_score(&model, &[1, 1]), 0.5);
    }
}
