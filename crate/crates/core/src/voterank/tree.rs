//! Entropy decision trees over mixed features: numeric threshold splits for
//! topic weights and price, one-vs-rest equality splits for the category.

use serde::{Deserialize, Serialize};

use super::{FeatureRow, PRICE_FEATURE_OFFSET};

/// Split predicate of an internal node. Rows satisfying the test go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// Numeric feature (topic weight or price) ≤ threshold.
    Numeric { feature: usize, threshold: f64 },
    /// Category equals this value.
    Category { value: u32 },
}

impl SplitTest {
    fn goes_left(&self, topics: &[f64], category: u32, price: f64) -> bool {
        match *self {
            SplitTest::Numeric { feature, threshold } => {
                numeric_value(topics, price, feature) <= threshold
            }
            SplitTest::Category { value } => category == value,
        }
    }
}

/// Flattened tree node. Children are indices into the tree's node array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        label: u32,
    },
    Split {
        test: SplitTest,
        /// The feature subset drawn at this node.
        subset: Vec<usize>,
        left: usize,
        right: usize,
    },
}

/// A single grown tree; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, topics: &[f64], category: u32, price: f64) -> u32 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    test, left, right, ..
                } => {
                    at = if test.goes_left(topics, category, price) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Numeric feature accessor: topic weights first, then price.
pub(super) fn numeric_value(topics: &[f64], price: f64, feature: usize) -> f64 {
    if feature < topics.len() {
        topics[feature]
    } else {
        debug_assert_eq!(feature, topics.len() + PRICE_FEATURE_OFFSET);
        price
    }
}

fn row_numeric(row: &FeatureRow, feature: usize) -> f64 {
    numeric_value(&row.topics, row.price, feature)
}

/// Shannon entropy in bits of a label count vector.
fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn label_counts(rows: &[FeatureRow], indices: &[usize], n_labels: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_labels];
    for &i in indices {
        counts[rows[i].label as usize] += 1;
    }
    counts
}

/// Majority label, ties broken by smallest label id.
pub(super) fn majority_label(rows: &[FeatureRow], indices: &[usize], n_labels: usize) -> u32 {
    let counts = label_counts(rows, indices, n_labels);
    let mut best = 0usize;
    for (label, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = label;
        }
    }
    best as u32
}

/// Finds the information-gain-maximizing split among the given features.
///
/// Numeric candidates are the midpoints between adjacent distinct sorted
/// values, evaluated ascending; categorical candidates are one-vs-rest
/// equality tests on the values present, ascending. The first maximum wins,
/// so the choice is deterministic and independent of row order. Returns None
/// when no candidate has positive gain.
pub fn best_split(
    rows: &[FeatureRow],
    indices: &[usize],
    features: &[usize],
    n_labels: usize,
) -> Option<(SplitTest, f64)> {
    let n = indices.len();
    if n < 2 {
        return None;
    }
    let total_counts = label_counts(rows, indices, n_labels);
    let parent = entropy(&total_counts, n);
    let n_topics = rows[indices[0]].topics.len();
    let category_feature = n_topics + 1;

    let mut best: Option<(SplitTest, f64)> = None;
    let mut consider = |test: SplitTest, gain: f64| {
        if gain > 0.0 && best.as_ref().is_none_or(|(_, g)| gain > *g) {
            best = Some((test, gain));
        }
    };

    for &feature in features {
        if feature == category_feature {
            let mut values: Vec<u32> = indices.iter().map(|&i| rows[i].category).collect();
            values.sort_unstable();
            values.dedup();
            if values.len() < 2 {
                continue;
            }
            for value in values {
                let mut left = vec![0usize; n_labels];
                let mut n_left = 0usize;
                for &i in indices {
                    if rows[i].category == value {
                        left[rows[i].label as usize] += 1;
                        n_left += 1;
                    }
                }
                let gain = split_gain(parent, &total_counts, &left, n, n_left);
                consider(SplitTest::Category { value }, gain);
            }
        } else {
            let mut pairs: Vec<(f64, u32)> = indices
                .iter()
                .map(|&i| (row_numeric(&rows[i], feature), rows[i].label))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0usize; n_labels];
            for i in 0..n - 1 {
                left[pairs[i].1 as usize] += 1;
                if pairs[i].0 < pairs[i + 1].0 {
                    let mid = 0.5 * (pairs[i].0 + pairs[i + 1].0);
                    // rounding can land the midpoint on the right value; fall
                    // back to the left value so `x <= threshold` still
                    // separates the pair
                    let threshold = if mid < pairs[i + 1].0 {
                        mid
                    } else {
                        pairs[i].0
                    };
                    let gain = split_gain(parent, &total_counts, &left, n, i + 1);
                    consider(SplitTest::Numeric { feature, threshold }, gain);
                }
            }
        }
    }
    best
}

fn split_gain(parent: f64, total: &[usize], left: &[usize], n: usize, n_left: usize) -> f64 {
    if n_left == 0 || n_left == n {
        return 0.0;
    }
    let right: Vec<usize> = total.iter().zip(left).map(|(&t, &l)| t - l).collect();
    let n_right = n - n_left;
    let weighted = (n_left as f64 / n as f64) * entropy(left, n_left)
        + (n_right as f64 / n as f64) * entropy(&right, n_right);
    parent - weighted
}

pub(super) struct GrowParams {
    pub m: usize,
    pub n_features: usize,
    pub n_labels: usize,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

/// Recursively grows a tree over `indices` (bootstrap row indices, repeats
/// allowed). At each node `m` features are drawn without replacement; growth
/// stops on purity, on nodes smaller than `min_leaf`, at `max_depth`, or when
/// no split has positive gain.
pub(super) fn grow(
    rows: &[FeatureRow],
    indices: &[usize],
    params: &GrowParams,
    rng: &mut impl rand::Rng,
    nodes: &mut Vec<Node>,
    depth: usize,
) -> usize {
    let first_label = rows[indices[0]].label;
    let pure = indices.iter().all(|&i| rows[i].label == first_label);
    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if pure || indices.len() < params.min_leaf || depth_capped {
        let label = if pure {
            first_label
        } else {
            majority_label(rows, indices, params.n_labels)
        };
        nodes.push(Node::Leaf { label });
        return nodes.len() - 1;
    }

    let mut subset = rand::seq::index::sample(rng, params.n_features, params.m).into_vec();
    subset.sort_unstable();

    match best_split(rows, indices, &subset, params.n_labels) {
        None => {
            nodes.push(Node::Leaf {
                label: majority_label(rows, indices, params.n_labels),
            });
            nodes.len() - 1
        }
        Some((test, _gain)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| test.goes_left(&rows[i].topics, rows[i].category, rows[i].price));
            let at = nodes.len();
            nodes.push(Node::Split {
                test,
                subset,
                left: 0,
                right: 0,
            });
            let left = grow(rows, &left_idx, params, rng, nodes, depth + 1);
            let right = grow(rows, &right_idx, params, rng, nodes, depth + 1);
            if let Node::Split {
                left: l, right: r, ..
            } = &mut nodes[at]
            {
                *l = left;
                *r = right;
            }
            at
        }
    }
}
