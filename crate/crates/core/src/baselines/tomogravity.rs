use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{PathSet, RoutingConfig};

const PINV_RTOL: f64 = 1e-10;
const IPF_RTOL: f64 = 1e-14;
const IPF_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomogravityEstimate {
    /// Estimated traffic, one entry per demand of the path set.
    pub estimate: Vec<f64>,
    pub prior: Vec<f64>,
    /// Max-norm residual of the measurement fit at `estimate`.
    pub residual: f64,
}

impl TomogravityEstimate {
    /// `||estimate - truth||_2 / ||truth||_2`.
    pub fn relative_error(&self, truth: &[f64]) -> f64 {
        let num: f64 = self
            .estimate
            .iter()
            .zip(truth)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = truth.iter().map(|b| b * b).sum();
        (num / den).sqrt()
    }
}

/// Total traffic leaving and entering every node.
pub fn node_marginals(pathset: &PathSet, node_count: usize, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut egress = vec![0.0; node_count];
    let mut ingress = vec![0.0; node_count];
    for (d, &wd) in pathset.demands().iter().zip(w) {
        egress[d.src] += wd;
        ingress[d.dst] += wd;
    }
    (egress, ingress)
}

/// Gravity prior `g_d = x_src * y_dst` with `x`, `y` fitted so that the prior
/// reproduces the node marginals over the demands of `pathset`.
///
/// Demands absent from the path set (the self pairs) are structural zeros, so
/// the plain `egress * ingress / total` product would not match the
/// marginals; the factors are found by iterative proportional fitting.
pub fn gravity_prior(pathset: &PathSet, egress: &[f64], ingress: &[f64]) -> Vec<f64> {
    let total: f64 = egress.iter().sum();
    if total <= 0.0 {
        return vec![0.0; pathset.demand_count()];
    }
    let n = egress.len();
    let mut x: Vec<f64> = egress.iter().map(|e| e / total.sqrt()).collect();
    let mut y: Vec<f64> = ingress.iter().map(|i| i / total.sqrt()).collect();
    let mut out_of = vec![Vec::new(); n];
    let mut into = vec![Vec::new(); n];
    for d in pathset.demands() {
        out_of[d.src].push(d.dst);
        into[d.dst].push(d.src);
    }
    let fit = |target: &[f64], factor: &mut [f64], other: &[f64], pairs: &[Vec<usize>]| {
        let mut worst = 0.0f64;
        for v in 0..target.len() {
            let s: f64 = pairs[v].iter().map(|&u| other[u]).sum();
            let next = if s > 0.0 { target[v] / s } else { 0.0 };
            worst = worst.max((next * s - factor[v] * s).abs());
            factor[v] = next;
        }
        worst
    };
    for _ in 0..IPF_MAX_ITER {
        let a = fit(egress, &mut x, &y, &out_of);
        let b = fit(ingress, &mut y, &x, &into);
        if a.max(b) <= IPF_RTOL * total {
            break;
        }
    }
    pathset.demands().iter().map(|d| x[d.src] * y[d.dst]).collect()
}

/// Measurement matrix: link rows under `routing`, then one egress and one
/// ingress row per node.
fn measurement_matrix(pathset: &PathSet, routing: &RoutingConfig, node_count: usize) -> DMatrix<f64> {
    let n_l = pathset.edge_count();
    let mut a = DMatrix::zeros(n_l + 2 * node_count, pathset.demand_count());
    for d in 0..pathset.demand_count() {
        for (path, &frac) in pathset.paths(d).iter().zip(routing.demand(d)) {
            for &e in &path.edges {
                a[(e, d)] += frac;
            }
        }
        let dem = pathset.demand(d);
        a[(n_l + dem.src, d)] = 1.0;
        a[(n_l + node_count + dem.dst, d)] = 1.0;
    }
    a
}

/// `x + A^+ (b - A x)` restricted to the columns flagged in `free`.
fn least_norm_adjust(a: &DMatrix<f64>, b: &DVector<f64>, x: &mut DVector<f64>, free: &[bool]) {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&j| free[j]).collect();
    if cols.is_empty() {
        return;
    }
    let sub = a.select_columns(&cols);
    let r = b - a * &*x;
    let svd = sub.svd(true, true);
    let max = svd.singular_values.max();
    if max == 0.0 {
        return;
    }
    let delta = svd.solve(&r, PINV_RTOL * max).expect("svd computed with both factors");
    for (k, &j) in cols.iter().enumerate() {
        x[j] += delta[k];
    }
}

/// Tomogravity estimate from link loads measured under `routing` and per-node
/// egress/ingress totals.
///
/// The gravity prior is moved by the least-norm correction that fits every
/// measurement; negative entries are then clipped to zero and the remaining
/// entries re-fit once (with a final clip, so the estimate is nonnegative).
pub fn tomogravity_estimate(
    pathset: &PathSet,
    routing: &RoutingConfig,
    loads: &[f64],
    egress: &[f64],
    ingress: &[f64],
) -> Result<TomogravityEstimate> {
    let n_l = pathset.edge_count();
    let n = egress.len();
    if loads.len() != n_l {
        return Err(Error::dim("link load vector", n_l, loads.len()));
    }
    if ingress.len() != n {
        return Err(Error::dim("ingress vector", n, ingress.len()));
    }
    if !routing.matches_layout(pathset) {
        return Err(Error::dim("routing vector", pathset.path_count(), routing.len()));
    }
    if let Some(d) = pathset.demands().iter().find(|d| d.src >= n || d.dst >= n) {
        return Err(Error::InvalidParameter(format!("demand {d} outside the marginal vectors")));
    }
    let prior = gravity_prior(pathset, egress, ingress);
    let a = measurement_matrix(pathset, routing, n);
    let b = DVector::from_iterator(
        a.nrows(),
        loads.iter().chain(egress).chain(ingress).copied(),
    );
    let mut x = DVector::from_vec(prior.clone());
    let all = vec![true; x.len()];
    least_norm_adjust(&a, &b, &mut x, &all);
    if x.iter().any(|&v| v < 0.0) {
        let free: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        least_norm_adjust(&a, &b, &mut x, &free);
        x.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let residual = (&a * &x - &b).amax();
    Ok(TomogravityEstimate {
        estimate: x.as_slice().to_vec(),
        prior,
        residual,
    })
}
