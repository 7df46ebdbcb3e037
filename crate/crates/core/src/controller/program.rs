use super::window::WindowData;
use super::ControllerConfig;
use crate::delay::DelayFunction;
use crate::error::{Error, Result};
use crate::net::{AggregationMaps, RoutingConfig};
use crate::predictor::PredictorModel;
use crate::solver::{ConvexProgram, Var};

/// Variable handles of a built controller program.
#[derive(Debug, Clone)]
pub struct ProgramLayout {
    /// `routing[h]`: elephant split variables at horizon step `h`.
    pub routing: Vec<Vec<Var>>,
    /// `loads[h][i]`: predicted load of link `i`, in load units.
    pub loads: Vec<Vec<Var>>,
    /// `dummy[p - 1][h][i]`: dummy load from window `p`, in load units.
    pub dummy: Vec<Vec<Vec<Var>>>,
    /// `g[p - 1][h][i]`: first variable of the contiguous `g` block.
    pub g_start: Vec<Vec<Vec<Var>>>,
    pub g_len: usize,
    /// Loads are expressed in multiples of this rate.
    pub load_unit: f64,
}

impl ProgramLayout {
    /// Routing variables at `h` read from a solution vector.
    pub fn routing_values(&self, x: &[f64], h: usize, like: &RoutingConfig) -> RoutingConfig {
        let mut r = like.clone();
        let mut k = 0;
        for d in 0..like.demand_count() {
            for slot in r.demand_mut(d) {
                *slot = x[self.routing[h][k].0];
                k += 1;
            }
        }
        r
    }
}

/// Builds the receding-horizon program of one decision.
///
/// `windows[p - 1]` holds the data of interval `k - p`. Link loads are
/// rescaled by the mean capacity so that all rows are of comparable size.
pub fn build_program(
    windows: &[WindowData],
    model: &PredictorModel,
    r_prev: &RoutingConfig,
    cfg: &ControllerConfig,
    maps: &AggregationMaps,
    delay: &DelayFunction,
    capacities: &[f64],
) -> Result<(ConvexProgram, ProgramLayout)> {
    let (n_w, n_l) = (maps.demand_count(), maps.edge_count());
    let (past, horizon) = (cfg.past, cfg.horizon);
    if windows.len() != past {
        return Err(Error::InsufficientData(format!(
            "{} sample windows, need {past}",
            windows.len()
        )));
    }
    if model.past() != past || model.horizon() < horizon {
        return Err(Error::InvalidParameter(format!(
            "predictor is {}x{}, controller needs {past}x{horizon}",
            model.past(),
            model.horizon()
        )));
    }
    if capacities.len() != n_l {
        return Err(Error::dim("capacity vector", n_l, capacities.len()));
    }
    if r_prev.len() != maps.path_count() || r_prev.demand_count() != n_w {
        return Err(Error::dim("previous routing", maps.path_count(), r_prev.len()));
    }
    let g_len = windows[0].column_count();
    let rows = windows[0].row_count();
    if windows.iter().any(|w| w.column_count() != g_len || w.row_count() != rows) {
        return Err(Error::InvalidParameter("sample windows differ in shape".into()));
    }
    let load_unit = capacities.iter().sum::<f64>() / n_l as f64;
    let pathset = maps.pathset();

    // Row-wise views of every window's data matrix.
    let row_views: Vec<Vec<Vec<(usize, f64)>>> = windows
        .iter()
        .map(|w| {
            let mut by_row = vec![Vec::new(); rows];
            for (c, col) in w.columns().iter().enumerate() {
                for &(r, v) in col {
                    by_row[r].push((c, v));
                }
            }
            by_row
        })
        .collect();

    let mut prog = ConvexProgram::new();
    let pieces = delay.affine_pieces();
    let mut routing = Vec::with_capacity(horizon);
    let mut loads = Vec::with_capacity(horizon);
    // ragg[h][i][d]: None where elephant d has no candidate path over link i.
    let mut ragg: Vec<Vec<Vec<Option<Var>>>> = Vec::with_capacity(horizon);

    for h in 0..horizon {
        let weight = cfg.discount.powi(h as i32);
        let r: Vec<Var> = (0..pathset.path_count()).map(|_| prog.add_var(0.0, 1.0)).collect();
        for d in 0..n_w {
            let range = pathset.offset(d)..pathset.offset(d + 1);
            if range.is_empty() {
                continue;
            }
            let row: Vec<(Var, f64)> = r[range].iter().map(|&v| (v, 1.0)).collect();
            prog.add_eq(&row, 1.0);
        }
        let mut agg_h = vec![vec![None; n_w]; n_l];
        for (i, agg_i) in agg_h.iter_mut().enumerate() {
            let mut terms: Vec<Vec<(Var, f64)>> = vec![Vec::new(); n_w];
            for &(d, p) in maps.link_entries(i) {
                terms[d].push((r[p], -1.0));
            }
            for (d, mut t) in terms.into_iter().enumerate() {
                if t.is_empty() {
                    continue;
                }
                let a = prog.add_var(0.0, 1.0);
                t.push((a, 1.0));
                prog.add_eq(&t, 0.0);
                agg_i[d] = Some(a);
            }
        }
        let y: Vec<Var> = (0..n_l).map(|_| prog.add_nonneg()).collect();
        for (i, &yi) in y.iter().enumerate() {
            let t = prog.add_free();
            prog.add_linear(t, weight);
            let scale = load_unit / capacities[i];
            for piece in &pieces {
                let s = prog.add_nonneg();
                prog.add_eq(&[(t, 1.0), (yi, -piece.slope * scale), (s, -1.0)], piece.intercept);
            }
        }
        // Route change against the previous step (h = 0: the previous decision).
        for (k, &v) in r.iter().enumerate() {
            let pos = prog.add_nonneg();
            let neg = prog.add_nonneg();
            prog.add_linear(pos, weight * cfg.alpha1);
            prog.add_linear(neg, weight * cfg.alpha1);
            if h == 0 {
                prog.add_eq(&[(v, 1.0), (pos, -1.0), (neg, 1.0)], r_prev.as_slice()[k]);
            } else {
                let prev: &Vec<Var> = &routing[h - 1];
                prog.add_eq(&[(v, 1.0), (prev[k], -1.0), (pos, -1.0), (neg, 1.0)], 0.0);
            }
        }
        routing.push(r);
        loads.push(y);
        ragg.push(agg_h);
    }

    let mut dummy = vec![vec![Vec::with_capacity(n_l); horizon]; past];
    let mut g_start = vec![vec![Vec::with_capacity(n_l); horizon]; past];
    for (pi, (window, by_row)) in windows.iter().zip(&row_views).enumerate() {
        for h in 0..horizon {
            for i in 0..n_l {
                let g: Vec<Var> = (0..g_len).map(|_| prog.add_free()).collect();
                if cfg.alpha2 > 0.0 {
                    for &v in &g {
                        prog.add_quadratic(v, 2.0 * cfg.alpha2);
                    }
                }
                let e_row = window.indicator_row(i);
                for (row, entries) in by_row.iter().enumerate() {
                    let mut terms: Vec<(Var, f64)> =
                        entries.iter().map(|&(c, v)| (g[c], v)).collect();
                    if row < n_w {
                        if let Some(a) = ragg[h][i][row] {
                            terms.push((a, -1.0));
                        }
                    }
                    let rhs = if row == e_row { 1.0 } else { 0.0 };
                    if terms.is_empty() && rhs == 0.0 {
                        continue;
                    }
                    prog.add_eq(&terms, rhs);
                }
                let yd = prog.add_free();
                let mut terms: Vec<(Var, f64)> = window
                    .loads()
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (g[c], v / load_unit))
                    .collect();
                terms.push((yd, -1.0));
                prog.add_eq(&terms, 0.0);
                dummy[pi][h].push(yd);
                g_start[pi][h].push(g[0]);
            }
        }
    }
    for h in 0..horizon {
        for i in 0..n_l {
            let mut terms = vec![(loads[h][i], 1.0)];
            for p in 1..=past {
                terms.push((dummy[p - 1][h][i], -model.coeff(p, h)));
            }
            prog.add_eq(&terms, 0.0);
        }
    }
    Ok((
        prog,
        ProgramLayout {
            routing,
            loads,
            dummy,
            g_start,
            g_len,
            load_unit,
        },
    ))
}
