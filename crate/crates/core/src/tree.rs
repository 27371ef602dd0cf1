//! Axis-aligned classification trees grown on weighted samples with the
//! Gini criterion. With no depth limit a tree reproduces every label of its
//! (bootstrap) training sample.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, Point};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node<T> {
    Leaf {
        label: Label,
    },
    /// `x[feature] > threshold` goes right.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    /// Node 0 is the root.
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict(&self, x: &Point<T>) -> Label {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[feature] > threshold { right } else { left },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Model("tree without nodes".into()));
        }
        for (k, n) in self.nodes.iter().enumerate() {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = *n
            {
                if feature > 1 || !threshold.is_finite() {
                    return Err(Error::Model(format!("bad split at node {k}")));
                }
                if left <= k || right <= k || left >= self.nodes.len() || right >= self.nodes.len() {
                    return Err(Error::Model(format!("bad child index at node {k}")));
                }
            }
        }
        Ok(())
    }
}

/// Weighted label of the majority; ties go to `Positive`.
fn majority<T: Scalar>(w_pos: T, w_neg: T) -> Label {
    if w_pos >= w_neg {
        Label::Positive
    } else {
        Label::Negative
    }
}

fn gini<T: Scalar>(w_pos: T, w_neg: T) -> T {
    let total = w_pos + w_neg;
    if total <= T::zero() {
        return T::zero();
    }
    // total·(1 − p² − q²) = 2·w_pos·w_neg / total
    T::lit(2.0) * w_pos * w_neg / total
}

struct Grower<'a, T> {
    points: &'a [Point<T>],
    positive: &'a [bool],
    weights: &'a [T],
    max_depth: Option<usize>,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Grower<'_, T> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let (mut w_pos, mut w_neg) = (T::zero(), T::zero());
        for &i in idx.iter() {
            if self.positive[i] {
                w_pos = w_pos + self.weights[i];
            } else {
                w_neg = w_neg + self.weights[i];
            }
        }
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf {
            label: majority(w_pos, w_neg),
        });
        let pure = w_pos == T::zero() || w_neg == T::zero();
        if pure || self.max_depth.is_some_and(|d| depth >= d) {
            return me;
        }
        let Some((feature, threshold)) = self.best_split(idx, w_pos, w_neg) else {
            return me;
        };
        let mut split = 0;
        for k in 0..idx.len() {
            if !(self.points[idx[k]][feature] > threshold) {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }

    fn best_split(&self, idx: &mut [usize], w_pos: T, w_neg: T) -> Option<(usize, T)> {
        let mut best: Option<(T, usize, T)> = None;
        for f in 0..2 {
            idx.sort_by(|&a, &b| {
                self.points[a][f]
                    .partial_cmp(&self.points[b][f])
                    .expect("finite features")
                    .then(a.cmp(&b))
            });
            let (mut lp, mut ln) = (T::zero(), T::zero());
            for k in 0..idx.len() - 1 {
                let i = idx[k];
                if self.positive[i] {
                    lp = lp + self.weights[i];
                } else {
                    ln = ln + self.weights[i];
                }
                let (a, b) = (self.points[i][f], self.points[idx[k + 1]][f]);
                if a < b {
                    let impurity = gini(lp, ln) + gini(w_pos - lp, w_neg - ln);
                    if best.is_none_or(|(bi, _, _)| impurity < bi) {
                        let mut mid = (a + b) / T::lit(2.0);
                        if mid >= b {
                            mid = a;
                        }
                        best = Some((impurity, f, mid));
                    }
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Grows a tree on the points with positive weight. `max_depth = None`
/// grows until every leaf is pure or holds a single location.
pub fn fit_tree<T: Scalar>(data: &Dataset<T>, weights: &[T], max_depth: Option<usize>) -> Result<Tree<T>> {
    if data.is_empty() {
        return Err(invalid("cannot fit a tree on an empty dataset"));
    }
    if weights.len() != data.len() {
        return Err(invalid("data and weights differ in length"));
    }
    if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
        return Err(invalid("tree weights must be finite and nonnegative"));
    }
    let mut idx: Vec<usize> = (0..data.len()).filter(|&i| weights[i] > T::zero()).collect();
    if idx.is_empty() {
        return Err(Error::Degenerate("tree weights sum to zero".into()));
    }
    let points: Vec<Point<T>> = data.points.iter().map(|p| p.x).collect();
    let positive: Vec<bool> = data.points.iter().map(|p| p.y == Label::Positive).collect();
    let mut grower = Grower {
        points: &points,
        positive: &positive,
        weights,
        max_depth,
        nodes: Vec::new(),
    };
    grower.grow(&mut idx, 0);
    Ok(Tree {
        nodes: grower.nodes,
    })
}
