//! Per-link aggregation of elephant routing fractions.
//!
//! For link `l`, `M_l` is an `n'_w x n'_p` 0/1 matrix with `M_l[d, p] = 1`
//! when path `p` belongs to elephant `d` and traverses `l`. The aggregated
//! fraction `r^agg_l = M_l r'` is then the share of each elephant carried by
//! the link. Stacking all `M_l` in edge order gives `M^agg`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::paths::PathSet;
use super::routing::RoutingConfig;

/// Rank tolerance relative to the largest singular value of `M^agg`.
const RANK_RTOL: f64 = 1e-10;
/// Least-squares residual above which a target is declared inconsistent.
pub const INFEASIBLE_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct AggregationMaps {
    demand_count: usize,
    path_count: usize,
    edge_count: usize,
    /// For each link, the `(demand, flat path index)` pairs with a 1 in `M_l`.
    entries: Vec<Vec<(usize, usize)>>,
    pathset: PathSet,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DisaggregationError {
    #[error("aggregation map has column rank {rank} < {paths}; routing is ambiguous")]
    Ambiguous { rank: usize, paths: usize },
    #[error("no routing reproduces the aggregated fractions (residual {residual:e})")]
    Infeasible { residual: f64 },
    #[error("aggregated matrix has shape {got:?}, expected {expected:?}")]
    Dimension {
        expected: (usize, usize),
        got: (usize, usize),
    },
}

impl AggregationMaps {
    /// Builds the maps for the demands of `pathset` (normally the elephants).
    pub fn new(pathset: &PathSet) -> Self {
        let edge_count = pathset.edge_count();
        let mut entries = vec![Vec::new(); edge_count];
        for d in 0..pathset.demand_count() {
            let base = pathset.offset(d);
            for (j, path) in pathset.paths(d).iter().enumerate() {
                for &e in &path.edges {
                    entries[e].push((d, base + j));
                }
            }
        }
        Self {
            demand_count: pathset.demand_count(),
            path_count: pathset.path_count(),
            edge_count,
            entries,
            pathset: pathset.clone(),
        }
    }

    pub fn demand_count(&self) -> usize {
        self.demand_count
    }

    pub fn path_count(&self) -> usize {
        self.path_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn pathset(&self) -> &PathSet {
        &self.pathset
    }

    /// Nonzero `(demand, path)` entries of `M_l`.
    pub fn link_entries(&self, link: usize) -> &[(usize, usize)] {
        &self.entries[link]
    }

    /// Dense `M_l`.
    pub fn link_matrix(&self, link: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.demand_count, self.path_count);
        for &(d, p) in &self.entries[link] {
            m[(d, p)] = 1.0;
        }
        m
    }

    /// Dense `M^agg`, the vertical stack of all `M_l` in edge order.
    pub fn stacked(&self) -> DMatrix<f64> {
        let w = self.demand_count;
        let mut m = DMatrix::zeros(self.edge_count * w, self.path_count);
        for (l, entries) in self.entries.iter().enumerate() {
            for &(d, p) in entries {
                m[(l * w + d, p)] = 1.0;
            }
        }
        m
    }

    /// Numerical column rank of `M^agg`.
    pub fn column_rank(&self) -> usize {
        let m = self.stacked();
        if m.ncols() == 0 {
            return 0;
        }
        let sv = m.svd(false, false).singular_values;
        let max = sv.max();
        if max == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > RANK_RTOL * max).count()
    }
}

/// `r^agg` as an `n'_w x n_l` matrix whose column `l` is `M_l r'`.
pub fn aggregate_routing(maps: &AggregationMaps, r_prime: &RoutingConfig) -> DMatrix<f64> {
    assert_eq!(
        r_prime.len(),
        maps.path_count,
        "routing does not match the aggregation maps"
    );
    let r = r_prime.as_slice();
    let mut agg = DMatrix::zeros(maps.demand_count, maps.edge_count);
    for (l, entries) in maps.entries.iter().enumerate() {
        for &(d, p) in entries {
            agg[(d, l)] += r[p];
        }
    }
    agg
}

/// Recovers `r'` from `r^agg` by least squares on `M^agg r' = vec(r^agg)`.
///
/// Fails with `Ambiguous` when `M^agg` is column-rank deficient and with
/// `Infeasible` when no exact solution exists.
pub fn disaggregate_routing(
    maps: &AggregationMaps,
    r_agg: &DMatrix<f64>,
) -> Result<RoutingConfig, DisaggregationError> {
    let expected = (maps.demand_count, maps.edge_count);
    if r_agg.shape() != expected {
        return Err(DisaggregationError::Dimension {
            expected,
            got: r_agg.shape(),
        });
    }
    let m = maps.stacked();
    let w = maps.demand_count;
    let mut rhs = DVector::zeros(m.nrows());
    for l in 0..maps.edge_count {
        for d in 0..w {
            rhs[l * w + d] = r_agg[(d, l)];
        }
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let rank = sv
        .iter()
        .filter(|&&s| s > RANK_RTOL * max)
        .count();
    if rank < maps.path_count {
        return Err(DisaggregationError::Ambiguous {
            rank,
            paths: maps.path_count,
        });
    }
    // Full column rank, so the normal equations are positive definite. The
    // SVD solve is not used here: with clustered singular values (many exactly
    // 1 for 0/1 maps) its singular vectors lose accuracy and exact targets
    // came back with residuals near 1e-3.
    let mt = m.transpose();
    let x = (&mt * &m)
        .cholesky()
        .expect("full column rank")
        .solve(&(&mt * &rhs));
    let residual = (&m * &x - &rhs).amax();
    if residual > INFEASIBLE_RESIDUAL {
        return Err(DisaggregationError::Infeasible { residual });
    }
    Ok(RoutingConfig::from_fractions(&maps.pathset, x.as_slice().to_vec())
        .expect("solution has one entry per path"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Demand, Path};

    /// Triangle A=0, B=1, C=2 with edges AB=0, BC=1, AC=2 and one demand A->C
    /// over paths A-B-C and A-C.
    fn triangle() -> PathSet {
        let paths = vec![vec![
            Path { nodes: vec![0, 1, 2], edges: vec![0, 1] },
            Path { nodes: vec![0, 2], edges: vec![2] },
        ]];
        PathSet::from_parts(vec![Demand::new(0, 2)], vec![1], paths, 3)
    }

    #[test]
    fn aggregates_split_per_link() {
        let ps = triangle();
        let maps = AggregationMaps::new(&ps);
        let r = RoutingConfig::from_fractions(&ps, vec![0.7, 0.3]).unwrap();
        let agg = aggregate_routing(&maps, &r);
        assert_eq!(agg.shape(), (1, 3));
        assert!((agg[(0, 0)] - 0.7).abs() < 1e-15);
        assert!((agg[(0, 1)] - 0.7).abs() < 1e-15);
        assert!((agg[(0, 2)] - 0.3).abs() < 1e-15);

        let first = RoutingConfig::from_fractions(&ps, vec![1.0, 0.0]).unwrap();
        assert_eq!(aggregate_routing(&maps, &first).as_slice(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn stacked_is_vertical_stack_of_link_matrices() {
        let maps = AggregationMaps::new(&triangle());
        let stacked = maps.stacked();
        for l in 0..3 {
            let ml = maps.link_matrix(l);
            assert_eq!(stacked.rows(l, 1), ml.rows(0, 1));
        }
    }

    #[test]
    fn recovers_split() {
        let ps = triangle();
        let maps = AggregationMaps::new(&ps);
        let r = RoutingConfig::from_fractions(&ps, vec![0.7, 0.3]).unwrap();
        let back = disaggregate_routing(&maps, &aggregate_routing(&maps, &r)).unwrap();
        assert!(back.l1_distance(&r) < 1e-12);
    }

    #[test]
    fn identical_paths_are_ambiguous() {
        let paths = vec![vec![
            Path { nodes: vec![0, 1], edges: vec![0] },
            Path { nodes: vec![0, 1], edges: vec![0] },
        ]];
        let ps = PathSet::from_parts(vec![Demand::new(0, 1)], vec![0], paths, 1);
        let maps = AggregationMaps::new(&ps);
        let agg = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(
            disaggregate_routing(&maps, &agg),
            Err(DisaggregationError::Ambiguous { rank: 1, paths: 2 })
        ));
    }

    #[test]
    fn inconsistent_target_is_infeasible() {
        let ps = triangle();
        let maps = AggregationMaps::new(&ps);
        let r = RoutingConfig::from_fractions(&ps, vec![0.7, 0.3]).unwrap();
        let mut agg = aggregate_routing(&maps, &r);
        agg[(0, 0)] += 0.1;
        assert!(matches!(
            disaggregate_routing(&maps, &agg),
            Err(DisaggregationError::Infeasible { .. })
        ));
        let wrong = DMatrix::zeros(2, 3);
        assert!(matches!(
            disaggregate_routing(&maps, &wrong),
            Err(DisaggregationError::Dimension { .. })
        ));
    }
}
