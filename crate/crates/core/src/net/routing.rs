use serde::{Deserialize, Serialize};

use super::paths::PathSet;
use crate::error::{Error, Result};

/// Tolerance on per-demand split sums.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Per-(demand, candidate path) split fractions in the flat layout of a
/// [`PathSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingConfig {
    fractions: Vec<f64>,
    offsets: Vec<usize>,
}

impl RoutingConfig {
    pub fn from_fractions(pathset: &PathSet, fractions: Vec<f64>) -> Result<Self> {
        if fractions.len() != pathset.path_count() {
            return Err(Error::dim("routing vector", pathset.path_count(), fractions.len()));
        }
        Ok(Self {
            fractions,
            offsets: pathset.offsets().to_vec(),
        })
    }

    /// Everything on the first (shortest) candidate path.
    pub fn shortest_path(pathset: &PathSet) -> Self {
        let mut fractions = vec![0.0; pathset.path_count()];
        for d in 0..pathset.demand_count() {
            if !pathset.paths(d).is_empty() {
                fractions[pathset.offset(d)] = 1.0;
            }
        }
        Self {
            fractions,
            offsets: pathset.offsets().to_vec(),
        }
    }

    /// Even split over every candidate path.
    pub fn uniform(pathset: &PathSet) -> Self {
        let mut fractions = vec![0.0; pathset.path_count()];
        for d in 0..pathset.demand_count() {
            let n = pathset.paths(d).len();
            let o = pathset.offset(d);
            for f in &mut fractions[o..o + n] {
                *f = 1.0 / n as f64;
            }
        }
        Self {
            fractions,
            offsets: pathset.offsets().to_vec(),
        }
    }

    pub fn demand_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.fractions
    }

    pub fn demand(&self, d: usize) -> &[f64] {
        &self.fractions[self.offsets[d]..self.offsets[d + 1]]
    }

    pub fn demand_mut(&mut self, d: usize) -> &mut [f64] {
        let (a, b) = (self.offsets[d], self.offsets[d + 1]);
        &mut self.fractions[a..b]
    }

    pub fn matches_layout(&self, pathset: &PathSet) -> bool {
        self.offsets == pathset.offsets()
    }

    /// Checks `0 <= r <= 1` and unit sums per routable demand.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for d in 0..self.demand_count() {
            let split = self.demand(d);
            if split.is_empty() {
                continue;
            }
            if let Some(bad) = split.iter().find(|&&x| !(-tol..=1.0 + tol).contains(&x)) {
                return Err(Error::InvalidRouting(format!(
                    "demand {d} has split fraction {bad} outside [0, 1]"
                )));
            }
            let sum: f64 = split.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidRouting(format!(
                    "demand {d} splits sum to {sum}"
                )));
            }
        }
        Ok(())
    }

    /// Clips to `[0, 1]` and renormalizes each demand onto the simplex.
    pub fn project_to_simplex(&mut self) {
        for d in 0..self.demand_count() {
            let split = self.demand_mut(d);
            if split.is_empty() {
                continue;
            }
            for x in split.iter_mut() {
                *x = x.clamp(0.0, 1.0);
            }
            let sum: f64 = split.iter().sum();
            if sum > 0.0 {
                for x in split.iter_mut() {
                    *x /= sum;
                }
            } else {
                let n = split.len() as f64;
                split.iter_mut().for_each(|x| *x = 1.0 / n);
            }
        }
    }

    /// L1 distance between two routings over the same layout.
    pub fn l1_distance(&self, other: &RoutingConfig) -> f64 {
        assert_eq!(self.offsets, other.offsets, "routing layouts differ");
        self.fractions
            .iter()
            .zip(&other.fractions)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Overwrites the splits of the demands at `positions` with those of
    /// `sub`, whose demand `i` corresponds to `positions[i]`.
    pub fn embed(&mut self, positions: &[usize], sub: &RoutingConfig) {
        assert_eq!(positions.len(), sub.demand_count());
        for (i, &d) in positions.iter().enumerate() {
            self.demand_mut(d).copy_from_slice(sub.demand(i));
        }
    }

    /// The splits of the demands at `positions`, laid out like `subset`.
    pub fn extract(&self, positions: &[usize], subset: &PathSet) -> RoutingConfig {
        let mut fractions = Vec::with_capacity(subset.path_count());
        for &d in positions {
            fractions.extend_from_slice(self.demand(d));
        }
        RoutingConfig {
            fractions,
            offsets: subset.offsets().to_vec(),
        }
    }
}

/// Link loads `y = sum_d P_d w_d r_[d]` for demand volumes `w`.
///
/// Demands without candidate paths carry no load.
pub fn compute_link_loads(pathset: &PathSet, w: &[f64], r: &RoutingConfig) -> Result<Vec<f64>> {
    if w.len() != pathset.demand_count() {
        return Err(Error::dim("demand vector", pathset.demand_count(), w.len()));
    }
    if !r.matches_layout(pathset) {
        return Err(Error::dim("routing vector", pathset.path_count(), r.len()));
    }
    let mut y = vec![0.0; pathset.edge_count()];
    for (d, &wd) in w.iter().enumerate() {
        if wd == 0.0 {
            continue;
        }
        for (path, &frac) in pathset.paths(d).iter().zip(r.demand(d)) {
            let v = wd * frac;
            if v == 0.0 {
                continue;
            }
            for &e in &path.edges {
                y[e] += v;
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Demand, Path, Topology};

    fn two_paths_one_demand() -> PathSet {
        // Demand 0 -> 1 over two parallel single-link paths (edges 0 and 1).
        let paths = vec![vec![
            Path { nodes: vec![0, 1], edges: vec![0] },
            Path { nodes: vec![0, 1], edges: vec![1] },
        ]];
        PathSet::from_parts(vec![Demand::new(0, 1)], vec![0], paths, 2)
    }

    #[test]
    fn single_path_load() {
        let t = Topology::parse("nodes 2\n0 1 10\n").unwrap();
        let ps = PathSet::build(&t, 4).unwrap();
        let r = RoutingConfig::shortest_path(&ps);
        // demands are (0,1) and (1,0); the latter is unroutable.
        let y = compute_link_loads(&ps, &[4.0, 0.0], &r).unwrap();
        assert_eq!(y, vec![4.0]);
    }

    #[test]
    fn even_split_over_disjoint_paths() {
        let ps = two_paths_one_demand();
        let r = RoutingConfig::from_fractions(&ps, vec![0.5, 0.5]).unwrap();
        assert_eq!(compute_link_loads(&ps, &[4.0], &r).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let ps = two_paths_one_demand();
        let r = RoutingConfig::uniform(&ps);
        assert!(compute_link_loads(&ps, &[1.0, 2.0], &r).is_err());
        assert!(RoutingConfig::from_fractions(&ps, vec![1.0]).is_err());
    }

    #[test]
    fn validation_and_projection() {
        let ps = two_paths_one_demand();
        let mut r = RoutingConfig::from_fractions(&ps, vec![0.7, 0.4]).unwrap();
        assert!(r.validate(SIMPLEX_TOL).is_err());
        r.project_to_simplex();
        assert!(r.validate(SIMPLEX_TOL).is_ok());
        let mut neg = RoutingConfig::from_fractions(&ps, vec![-0.1, 1.1]).unwrap();
        assert!(neg.validate(SIMPLEX_TOL).is_err());
        neg.project_to_simplex();
        assert_eq!(neg.as_slice(), &[0.0, 1.0]);
    }
}
