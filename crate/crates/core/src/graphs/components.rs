use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::graphs::UnionFind;
use crate::point_process::PointConfiguration;
use crate::spatial::KdTree;

/// Connected components of the graph joining points at distance `<= r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentLabeling {
    /// Component id per point; ids are `0..count` in order of first
    /// appearance.
    pub labels: Vec<usize>,
    pub count: usize,
}

impl ComponentLabeling {
    /// Sizes of the components, indexed by label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.count];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

pub fn geometric_components(config: &PointConfiguration, r: f64) -> Result<ComponentLabeling> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(GeoError::param("r", "connection radius must be positive and finite"));
    }
    let n = config.len();
    let mut uf = UnionFind::new(n);
    let tree = KdTree::new(config);
    for i in 0..n {
        for j in tree.within(config.point(i), r) {
            if j > i {
                uf.union(i, j);
            }
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut count = 0;
    for i in 0..n {
        let root = uf.find(i);
        if ids[root] == usize::MAX {
            ids[root] = count;
            count += 1;
        }
        labels.push(ids[root]);
    }
    Ok(ComponentLabeling { labels, count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{dist, sample_poisson, Point, Region, SeedState};

    fn bfs_count(c: &PointConfiguration, r: f64) -> usize {
        let n = c.len();
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| i != j && dist(c.point(i), c.point(j)) <= r).collect())
            .collect();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut queue = std::collections::VecDeque::from([s]);
            seen[s] = true;
            while let Some(v) = queue.pop_front() {
                for w in 0..n {
                    if adj[v][w] && !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn small_cases() {
        let far = PointConfiguration::from_points(2, &[vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(geometric_components(&far, 1.0).unwrap().count, 3);
        let chain = PointConfiguration::from_points(2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(geometric_components(&chain, 1.0).unwrap().count, 1);
        assert!(geometric_components(&chain, 0.0).is_err());
        assert_eq!(geometric_components(&PointConfiguration::empty(2), 1.0).unwrap().count, 0);
    }

    #[test]
    fn union_find_matches_bfs_and_is_monotone() {
        let w = Region::cube(Point::origin(2), 2.8).unwrap();
        for k in 0..20 {
            let c = sample_poisson(&w, 1.0, SeedState::new(9, k)).unwrap();
            let mut prev = usize::MAX;
            for r in [0.2, 0.5, 0.8, 1.2, 2.0, 4.0] {
                let lab = geometric_components(&c, r).unwrap();
                assert_eq!(lab.count, bfs_count(&c, r));
                assert!(lab.count <= prev);
                prev = lab.count;
                assert_eq!(lab.sizes().iter().sum::<usize>(), c.len());
            }
        }
    }
}
