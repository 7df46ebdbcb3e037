use crate::delay::DelayFunction;
use crate::error::{Error, Result};
use crate::net::{compute_link_loads, PathSet, RoutingConfig};
use crate::solver::{solve, ConvexProgram, SolveOptions, SolveStatus, Var};

/// Optimal split ratios and the delay they achieve.
#[derive(Debug, Clone)]
pub struct OptOutcome {
    pub routing: RoutingConfig,
    pub delay: f64,
    pub loads: Vec<f64>,
}

/// Minimizes total delay over the splits of the `controlled` demands while
/// every other demand keeps its split in `base`.
///
/// Demands with zero volume or a single candidate path are held at `base`.
/// The program works in utilization units so that link rows are well scaled.
pub fn optimize_routing(
    pathset: &PathSet,
    w: &[f64],
    base: &RoutingConfig,
    controlled: &[usize],
    delay: &DelayFunction,
    capacities: &[f64],
    opts: &SolveOptions,
) -> Result<OptOutcome> {
    let n_l = pathset.edge_count();
    if capacities.len() != n_l {
        return Err(Error::dim("capacity vector", n_l, capacities.len()));
    }
    if w.len() != pathset.demand_count() {
        return Err(Error::dim("demand vector", pathset.demand_count(), w.len()));
    }
    let mut is_free = vec![false; pathset.demand_count()];
    for &d in controlled {
        if d >= pathset.demand_count() {
            return Err(Error::InvalidParameter(format!("controlled demand {d} out of range")));
        }
        is_free[d] = w[d] > 0.0 && pathset.paths(d).len() > 1;
    }
    let fixed_w: Vec<f64> = w
        .iter()
        .zip(&is_free)
        .map(|(&wd, &f)| if f { 0.0 } else { wd })
        .collect();
    let fixed_loads = compute_link_loads(pathset, &fixed_w, base)?;

    let mut prog = ConvexProgram::new();
    let mut link_terms: Vec<Vec<(Var, f64)>> = vec![Vec::new(); n_l];
    let mut split_vars: Vec<(usize, Vec<Var>)> = Vec::new();
    for d in (0..pathset.demand_count()).filter(|&d| is_free[d]) {
        let vars: Vec<Var> = pathset.paths(d).iter().map(|_| prog.add_var(0.0, 1.0)).collect();
        for (path, &v) in pathset.paths(d).iter().zip(&vars) {
            for &e in &path.edges {
                link_terms[e].push((v, -w[d] / capacities[e]));
            }
        }
        let row: Vec<(Var, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
        prog.add_eq(&row, 1.0);
        split_vars.push((d, vars));
    }
    let pieces = delay.affine_pieces();
    for (e, mut terms) in link_terms.into_iter().enumerate() {
        let u = prog.add_free();
        terms.push((u, 1.0));
        prog.add_eq(&terms, fixed_loads[e] / capacities[e]);
        let t = prog.add_free();
        prog.add_linear(t, 1.0);
        for piece in &pieces {
            let s = prog.add_nonneg();
            prog.add_eq(&[(t, 1.0), (u, -piece.slope), (s, -1.0)], piece.intercept);
        }
    }

    let report = solve(&prog, opts);
    if report.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!("routing optimization ended {}", report.status)));
    }
    let mut routing = base.clone();
    for (d, vars) in &split_vars {
        for (slot, v) in routing.demand_mut(*d).iter_mut().zip(vars) {
            *slot = report.value(*v);
        }
    }
    routing.project_to_simplex();
    let loads = compute_link_loads(pathset, w, &routing)?;
    let delay = delay.total_delay(&loads, capacities)?;
    Ok(OptOutcome {
        routing,
        delay,
        loads,
    })
}

/// Per-step oracle: every flow is optimized against the true traffic.
pub fn opt_route(
    pathset: &PathSet,
    w: &[f64],
    delay: &DelayFunction,
    capacities: &[f64],
    opts: &SolveOptions,
) -> Result<OptOutcome> {
    let base = RoutingConfig::shortest_path(pathset);
    let all: Vec<usize> = (0..pathset.demand_count()).collect();
    optimize_routing(pathset, w, &base, &all, delay, capacities, opts)
}

/// Elephants optimized against `w`, mice on their shortest path.
pub fn elephant_route(
    pathset: &PathSet,
    w: &[f64],
    elephants: &[usize],
    delay: &DelayFunction,
    capacities: &[f64],
    opts: &SolveOptions,
) -> Result<OptOutcome> {
    let base = RoutingConfig::shortest_path(pathset);
    optimize_routing(pathset, w, &base, elephants, delay, capacities, opts)
}

/// CONST: the elephant optimum for the training-mean traffic, kept forever.
pub fn const_route(
    pathset: &PathSet,
    mean_w: &[f64],
    elephants: &[usize],
    delay: &DelayFunction,
    capacities: &[f64],
    opts: &SolveOptions,
) -> Result<RoutingConfig> {
    Ok(elephant_route(pathset, mean_w, elephants, delay, capacities, opts)?.routing)
}
