//! Static kd-tree for k-nearest-neighbour and fixed-radius queries.
//!
//! Below [`BRUTE_FORCE_BELOW`] points the index skips the tree and scans
//! linearly. Results are ordered by `(squared distance, index)` so queries
//! are deterministic even when distances tie.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::point_process::{dist2, PointConfiguration};

/// Point count under which queries are answered by a linear scan.
pub const BRUTE_FORCE_BELOW: usize = 64;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    config: &'a PointConfiguration,
    perm: Vec<usize>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cand {
    d2: f64,
    idx: usize,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> KdTree<'a> {
    pub fn new(config: &'a PointConfiguration) -> Self {
        let n = config.len();
        let mut tree = KdTree {
            config,
            perm: (0..n).collect(),
            nodes: Vec::new(),
            root: None,
        };
        if n >= BRUTE_FORCE_BELOW {
            tree.root = Some(tree.build(0, n));
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let dim = self.config.dim();
        let mut axis = 0;
        let mut widest = -1.0;
        for a in 0..dim {
            let (lo, hi) = self.perm[start..end]
                .iter()
                .map(|&i| self.config.point(i)[a])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            if hi - lo > widest {
                widest = hi - lo;
                axis = a;
            }
        }
        let mid = (start + end) / 2;
        let cfg = self.config;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            cfg.point(a)[axis]
                .total_cmp(&cfg.point(b)[axis])
                .then(a.cmp(&b))
        });
        let value = cfg.point(self.perm[mid])[axis];
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[slot] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        slot
    }

    /// The `k` nearest points to `q` as `(index, distance)`, closest first.
    pub fn knn(&self, q: &[f64], k: usize) -> Vec<(usize, f64)> {
        self.knn_filtered(q, k, |_| true)
    }

    /// k nearest among the points accepted by `keep`.
    pub fn knn_filtered<F: Fn(usize) -> bool>(&self, q: &[f64], k: usize, keep: F) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
        match self.root {
            None => {
                for i in 0..self.config.len() {
                    if keep(i) {
                        push_bounded(&mut heap, k, Cand { d2: dist2(q, self.config.point(i)), idx: i });
                    }
                }
            }
            Some(root) => self.knn_rec(root, q, k, &keep, &mut heap),
        }
        let mut out: Vec<Cand> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.idx, c.d2.sqrt())).collect()
    }

    fn knn_rec<F: Fn(usize) -> bool>(
        &self,
        node: usize,
        q: &[f64],
        k: usize,
        keep: &F,
        heap: &mut BinaryHeap<Cand>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    if keep(i) {
                        push_bounded(heap, k, Cand { d2: dist2(q, self.config.point(i)), idx: i });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, q, k, keep, heap);
                let bound = if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().map_or(f64::INFINITY, |c| c.d2)
                };
                if diff * diff <= bound {
                    self.knn_rec(far, q, k, keep, heap);
                }
            }
        }
    }

    /// Nearest point accepted by `keep`.
    pub fn nearest_filtered<F: Fn(usize) -> bool>(&self, q: &[f64], keep: F) -> Option<(usize, f64)> {
        self.knn_filtered(q, 1, keep).into_iter().next()
    }

    /// Indices of all points within closed distance `r` of `q`, ascending.
    pub fn within(&self, q: &[f64], r: f64) -> Vec<usize> {
        let r2 = r * r;
        let mut out = Vec::new();
        match self.root {
            None => {
                for i in 0..self.config.len() {
                    if dist2(q, self.config.point(i)) <= r2 {
                        out.push(i);
                    }
                }
            }
            Some(root) => self.within_rec(root, q, r, r2, &mut out),
        }
        out.sort_unstable();
        out
    }

    fn within_rec(&self, node: usize, q: &[f64], r: f64, r2: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    if dist2(q, self.config.point(i)) <= r2 {
                        out.push(i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                if diff <= r {
                    self.within_rec(left, q, r, r2, out);
                }
                if diff >= -r {
                    self.within_rec(right, q, r, r2, out);
                }
            }
        }
    }
}

fn push_bounded(heap: &mut BinaryHeap<Cand>, k: usize, c: Cand) {
    if heap.len() < k {
        heap.push(c);
    } else if let Some(top) = heap.peek() {
        if c < *top {
            heap.pop();
            heap.push(c);
        }
    }
}
