//! Geometric graphs on point configurations: the on-line nearest
//! neighbour graph, the Euclidean minimal spanning tree (batch and
//! incremental) and fixed-radius geometric graphs.

mod components;
mod mst;
mod onng;
mod union_find;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::point_process::{dist, PointConfiguration};

pub use components::{geometric_components, ComponentLabeling};
pub use mst::{
    build_mst_brute, build_mst_kruskal, max_degree, mst_insert, mst_insert_ordered, mst_length,
    verify_minimax, InsertionOrder, InsertionStep, InsertionTrace, MinimaxMode, MinimaxReport,
};
pub use onng::{build_onng, onng_length, onng_parents};
pub use union_find::UnionFind;

/// Undirected edge between two point indices, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

impl Edge {
    pub fn new(i: usize, j: usize, length: f64) -> Self {
        Edge {
            a: i.min(j),
            b: i.max(j),
            length,
        }
    }

    pub fn between(config: &PointConfiguration, i: usize, j: usize) -> Self {
        Edge::new(i, j, dist(config.point(i), config.point(j)))
    }

    pub fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }

    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    /// Total order used for every tie-break: length, then endpoints.
    pub fn key_cmp(&self, other: &Edge) -> Ordering {
        self.length
            .total_cmp(&other.length)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Spanning tree over an indexed point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTree {
    base: PointConfiguration,
    edges: Vec<Edge>,
}

impl WeightedTree {
    /// Validates that `edges` form a spanning tree of `base` with Euclidean
    /// lengths.
    pub fn from_edges(base: PointConfiguration, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = base.len();
        let expected = n.saturating_sub(1);
        if edges.len() != expected {
            return Err(GeoError::param(
                "edges",
                format!("spanning tree on {n} points needs {expected} edges, got {}", edges.len()),
            ));
        }
        let mut uf = UnionFind::new(n);
        let mut out = Vec::with_capacity(edges.len());
        for (i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(GeoError::param("edges", format!("invalid edge ({i},{j})")));
            }
            if !uf.union(i, j) {
                return Err(GeoError::param("edges", format!("edge ({i},{j}) closes a cycle")));
            }
            out.push(Edge::between(&base, i, j));
        }
        Ok(WeightedTree::from_parts(base, out))
    }

    pub(crate) fn from_parts(base: PointConfiguration, mut edges: Vec<Edge>) -> Self {
        edges.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
        WeightedTree { base, edges }
    }

    pub fn base(&self) -> &PointConfiguration {
        &self.base
    }

    /// Edges sorted by endpoint pair.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.a, e.b)).collect()
    }

    /// Edge set keyed by endpoint coordinates, comparable across
    /// differently indexed configurations.
    pub fn coordinate_edge_set(&self) -> BTreeSet<(Vec<u64>, Vec<u64>)> {
        let key = |i: usize| -> Vec<u64> { self.base.point(i).iter().map(|c| c.to_bits()).collect() };
        self.edges
            .iter()
            .map(|e| {
                let (p, q) = (key(e.a), key(e.b));
                if p <= q {
                    (p, q)
                } else {
                    (q, p)
                }
            })
            .collect()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.base.len()];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.base.len()];
        for e in &self.edges {
            adj[e.a].push((e.b, e.length));
            adj[e.b].push((e.a, e.length));
        }
        adj
    }

    /// Sum of `w(|e|)` over edges.
    pub fn total(&self, w: &WeightFunction) -> f64 {
        self.edges.iter().map(|e| w.eval(e.length)).sum()
    }

    pub fn is_spanning_tree(&self) -> bool {
        let n = self.base.len();
        if self.edges.len() != n.saturating_sub(1) {
            return false;
        }
        let mut uf = UnionFind::new(n);
        self.edges.iter().all(|e| uf.union(e.a, e.b))
    }
}

/// Non-decreasing profile used by truncated weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `x^alpha`
    Power(f64),
    /// Piecewise-linear through `(x, y)` knots, constant outside the range.
    Table(Vec<(f64, f64)>),
}

impl Profile {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Power(a) => x.powf(*a),
            Profile::Table(knots) => {
                let first = knots[0];
                if x <= first.0 {
                    return first.1;
                }
                for w in knots.windows(2) {
                    let (x0, y0) = w[0];
                    let (x1, y1) = w[1];
                    if x <= x1 {
                        if x1 == x0 {
                            return y1;
                        }
                        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }
}

/// Edge weight `phi : [0, inf) -> [0, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFunction {
    Zero,
    Identity,
    Power(f64),
    /// `1(x <= r)`
    IndicatorLe(f64),
    /// `psi(x) 1(x <= r)`, `r` may be infinite (`null` in JSON).
    Truncated {
        psi: Profile,
        #[serde(with = "infinite_as_null")]
        r: f64,
    },
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
        if r.is_infinite() && *r > 0.0 {
            s.serialize_none()
        } else {
            s.serialize_some(r)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl WeightFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightFunction::Power(a) if !(*a > 0.0) || !a.is_finite() => {
                Err(GeoError::param("weight", "power exponent must be positive"))
            }
            WeightFunction::IndicatorLe(r) if !(*r > 0.0) => {
                Err(GeoError::param("weight", "indicator radius must be positive"))
            }
            WeightFunction::Truncated { psi, r } => {
                if !(*r > 0.0) {
                    return Err(GeoError::param("weight", "truncation level must be positive"));
                }
                match psi {
                    Profile::Power(a) if !(*a > 0.0) || !a.is_finite() => {
                        Err(GeoError::param("weight", "power exponent must be positive"))
                    }
                    Profile::Table(k) => {
                        if k.is_empty() {
                            return Err(GeoError::param("weight", "empty table"));
                        }
                        let ok = k.iter().all(|(x, y)| x.is_finite() && y.is_finite() && *y >= 0.0)
                            && k.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
                        if ok {
                            Ok(())
                        } else {
                            Err(GeoError::param("weight", "table must be finite, nonnegative and non-decreasing"))
                        }
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            WeightFunction::Zero => 0.0,
            WeightFunction::Identity => x,
            WeightFunction::Power(a) => x.powf(*a),
            WeightFunction::IndicatorLe(r) => {
                if x <= *r {
                    1.0
                } else {
                    0.0
                }
            }
            WeightFunction::Truncated { psi, r } => {
                if x <= *r {
                    psi.eval(x)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, WeightFunction::Zero)
    }
}
