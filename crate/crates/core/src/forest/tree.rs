use rayon::prelude::*;

use super::{FeatureMatrix, ForestConfig, MaxFeatures};
use crate::rng::PortableRng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// Nodes in pre-order; the root is node 0 and children follow their parent.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, row: &[f32]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature as usize] as f64 <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    /// Length of the longest root-to-leaf path; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// Row indices of every column sorted by value (ties by row index), computed
/// once and shared by all trees.
pub(crate) struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub(crate) fn new(x: &FeatureMatrix) -> Self {
        let order = (0..x.cols())
            .into_par_iter()
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
                idx.sort_by(|&a, &b| {
                    x.get(a as usize, f)
                        .total_cmp(&x.get(b as usize, f))
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Presorted { order }
    }
}

struct Task {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
}

struct Best {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

/// Grows one tree on the rows with non-zero `weights`. Returns the tree and
/// the unnormalised impurity decrease credited to each feature.
pub(crate) fn grow(
    x: &FeatureMatrix,
    y: &[f64],
    presorted: &Presorted,
    weights: &[u32],
    cfg: &ForestConfig,
    rng: &mut PortableRng,
) -> (Tree, Vec<f64>) {
    let n_features = x.cols();
    // In-bag view of each presorted column; partitioned in place per node.
    let mut lists: Vec<Vec<u32>> = presorted
        .order
        .iter()
        .map(|col| {
            col.iter()
                .copied()
                .filter(|&r| weights[r as usize] > 0)
                .collect()
        })
        .collect();
    let n_in = lists[0].len();
    let mut goes_left = vec![false; x.rows()];
    let mut scratch: Vec<u32> = Vec::with_capacity(n_in);
    let mut importance = vec![0.0; n_features];
    let mut candidates: Vec<usize> = (0..n_features).collect();

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![Task {
        node: 0,
        start: 0,
        end: n_in,
        depth: 0,
    }];

    while let Some(task) = stack.pop() {
        let rows = &lists[0][task.start..task.end];
        let mut w_sum = 0.0;
        let mut wy_sum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &r in rows {
            let w = weights[r as usize] as f64;
            let v = y[r as usize];
            w_sum += w;
            wy_sum += w * v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let mean = wy_sum / w_sum;
        nodes[task.node] = Node::Leaf { value: mean };

        if task.depth >= cfg.max_depth || w_sum < cfg.min_samples_split as f64 || hi - lo <= 1e-12 {
            continue;
        }

        let sse: f64 = rows
            .iter()
            .map(|&r| {
                let d = y[r as usize] - mean;
                weights[r as usize] as f64 * d * d
            })
            .sum();
        let tolerance = 1e-10 * sse;

        let features: &[usize] = match cfg.max_features {
            MaxFeatures::Count(k) if k < n_features => {
                // Partial Fisher-Yates, then ascending order for the tie rule.
                for i in 0..k {
                    let j = i + rng.below((n_features - i) as u64) as usize;
                    candidates.swap(i, j);
                }
                candidates[..k].sort_unstable();
                &candidates[..k]
            }
            _ => {
                candidates.sort_unstable();
                &candidates
            }
        };

        let mut best: Option<Best> = None;
        for &f in features {
            let col = &lists[f][task.start..task.end];
            let mut w_left = 0.0;
            let mut s_left = 0.0;
            for pair in col.windows(2) {
                let (a, b) = (pair[0] as usize, pair[1] as usize);
                let w = weights[a] as f64;
                w_left += w;
                s_left += w * (y[a] - mean);
                let va = x.get(a, f);
                let vb = x.get(b, f);
                if va == vb {
                    continue;
                }
                let w_right = w_sum - w_left;
                // With centred targets the right sum is -s_left, so the
                // decrease SSE - SSE_L - SSE_R reduces to this.
                let decrease = s_left * s_left * w_sum / (w_left * w_right);
                if best
                    .as_ref()
                    .is_none_or(|b| decrease > b.decrease + tolerance)
                {
                    best = Some(Best {
                        feature: f,
                        threshold: (va as f64 + vb as f64) / 2.0,
                        decrease,
                    });
                }
            }
        }

        // Gains within the tie tolerance of zero are round-off.
        let Some(best) = best.filter(|b| b.decrease > tolerance) else {
            continue;
        };
        importance[best.feature] += best.decrease;

        let split_col = &lists[best.feature][task.start..task.end];
        let mut n_left = 0;
        for &r in split_col {
            let left = x.get(r as usize, best.feature) as f64 <= best.threshold;
            goes_left[r as usize] = left;
            n_left += left as usize;
        }
        for list in lists.iter_mut() {
            stable_partition(&mut list[task.start..task.end], &goes_left, &mut scratch);
        }

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[task.node] = Node::Split {
            feature: best.feature as u32,
            threshold: best.threshold,
            left: left as u32,
            right: right as u32,
        };
        let mid = task.start + n_left;
        // Right pushed first so the left subtree is finished first.
        stack.push(Task {
            node: right,
            start: mid,
            end: task.end,
            depth: task.depth + 1,
        });
        stack.push(Task {
            node: left,
            start: task.start,
            end: mid,
            depth: task.depth + 1,
        });
    }

    (renumber_preorder(&nodes), importance)
}

fn stable_partition(slice: &mut [u32], goes_left: &[bool], scratch: &mut Vec<u32>) {
    scratch.clear();
    let mut k = 0;
    for i in 0..slice.len() {
        let r = slice[i];
        if goes_left[r as usize] {
            slice[k] = r;
            k += 1;
        } else {
            scratch.push(r);
        }
    }
    slice[k..].copy_from_slice(scratch);
}

/// Children are allocated in pairs, so the raw order is not pre-order.
fn renumber_preorder(nodes: &[Node]) -> Tree {
    let mut out = Vec::with_capacity(nodes.len());
    let mut stack = vec![(0usize, None::<(usize, bool)>)];
    while let Some((i, parent)) = stack.pop() {
        let at = out.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut out[p] {
                if is_left {
                    *left = at as u32;
                } else {
                    *right = at as u32;
                }
            }
        }
        out.push(nodes[i]);
        if let Node::Split { left, right, .. } = nodes[i] {
            stack.push((right as usize, Some((at, false))));
            stack.push((left as usize, Some((at, true))));
        }
    }
    Tree { nodes: out }
}
