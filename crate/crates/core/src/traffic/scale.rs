use serde::{Deserialize, Serialize};

use super::DemandSeries;
use crate::baselines::opt_route;
use crate::delay::DelayFunction;
use crate::error::{Error, Result};
use crate::net::{compute_link_loads, PathSet, RoutingConfig, Topology};
use crate::solver::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleOptions {
    /// Mean link utilization under OPT, averaged over the probe steps.
    pub target_mean: f64,
    /// Cap on the largest link utilization under OPT at any probe step.
    pub max_utilization: f64,
    pub probe_steps: usize,
    pub bisection_steps: usize,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        Self {
            target_mean: 0.35,
            max_utilization: 1.0,
            probe_steps: 8,
            bisection_steps: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaleOutcome {
    pub series: DemandSeries,
    pub gamma: f64,
    /// OPT utilization statistics at `gamma` over the probe steps.
    pub mean_utilization: f64,
    pub max_utilization: f64,
}

struct Probe<'a> {
    rows: Vec<&'a [f64]>,
    pathset: &'a PathSet,
    capacities: Vec<f64>,
    delay: &'a DelayFunction,
    solve: SolveOptions,
}

impl Probe<'_> {
    /// (mean of per-step mean utilization, max utilization) under OPT at `gamma`.
    fn utilization(&self, gamma: f64) -> Result<(f64, f64)> {
        let (mut mean, mut max) = (0.0, 0.0f64);
        for row in &self.rows {
            let w: Vec<f64> = row.iter().map(|v| v * gamma).collect();
            let out = opt_route(self.pathset, &w, self.delay, &self.capacities, &self.solve)?;
            let u: Vec<f64> = out.loads.iter().zip(&self.capacities).map(|(y, c)| y / c).collect();
            mean += u.iter().sum::<f64>() / u.len() as f64;
            max = u.iter().fold(max, |m, &x| m.max(x));
        }
        Ok((mean / self.rows.len() as f64, max))
    }
}

/// Multiplies `series` by the largest `gamma` (found by bisection) for which
/// OPT keeps the mean utilization at or below the target and the maximum
/// utilization at or below the cap, evaluated at evenly spaced probe steps.
pub fn scale_series(
    series: &DemandSeries,
    topo: &Topology,
    pathset: &PathSet,
    delay: &DelayFunction,
    opts: &ScaleOptions,
) -> Result<ScaleOutcome> {
    if series.steps() == 0 || opts.probe_steps == 0 {
        return Err(Error::InvalidParameter("nothing to scale".into()));
    }
    if !(opts.target_mean > 0.0 && opts.max_utilization > 0.0) {
        return Err(Error::InvalidParameter("utilization targets must be positive".into()));
    }
    if series.demand_count() != pathset.demand_count() {
        return Err(Error::dim("series width", pathset.demand_count(), series.demand_count()));
    }
    for d in pathset.unroutable() {
        if series.rows().iter().any(|r| r[d] > 0.0) {
            let dem = pathset.demand(d);
            return Err(Error::Unroutable {
                src: dem.src,
                dst: dem.dst,
            });
        }
    }
    let probes = opts.probe_steps.min(series.steps());
    let rows: Vec<&[f64]> = (0..probes)
        .map(|i| series.row(i * series.steps() / probes))
        .collect();
    if rows.iter().all(|r| r.iter().all(|&v| v == 0.0)) {
        return Err(Error::InvalidParameter("cannot scale an all-zero series".into()));
    }
    let probe = Probe {
        rows,
        pathset,
        capacities: topo.capacities(),
        delay,
        solve: SolveOptions::default(),
    };
    let ok = |gamma: f64| -> Result<bool> {
        let (mean, max) = probe.utilization(gamma)?;
        Ok(mean <= opts.target_mean && max <= opts.max_utilization)
    };

    // Starting guess from shortest-path loads, which are linear in gamma.
    let sp = RoutingConfig::shortest_path(pathset);
    let mut sp_mean = 0.0;
    for row in &probe.rows {
        let y = compute_link_loads(pathset, row, &sp)?;
        sp_mean += y.iter().zip(&probe.capacities).map(|(y, c)| y / c).sum::<f64>()
            / y.len() as f64;
    }
    sp_mean /= probe.rows.len() as f64;
    let mut lo = opts.target_mean / sp_mean;
    while !ok(lo)? {
        lo /= 2.0;
    }
    let mut hi = lo * 2.0;
    while ok(hi)? {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..opts.bisection_steps {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mean_utilization, max_utilization) = probe.utilization(lo)?;
    Ok(ScaleOutcome {
        series: series.scaled(lo),
        gamma: lo,
        mean_utilization,
        max_utilization,
    })
}
