//! Convex program representation and the interior-point backend.
//!
//! Programs are built through [`ConvexProgram`] and handed to [`solve`], which
//! lowers them to the conic form expected by Clarabel (equalities in the zero
//! cone, finite bounds as nonnegative slacks). Every failure mode is reported
//! through [`SolveStatus`].

mod program;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

pub use program::{ConvexProgram, Var};

/// Phase-1 residual above which a program is declared infeasible.
pub const INFEASIBILITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative tolerance on the reported residuals.
    pub tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// The objective is unbounded below on the feasible set.
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn is_optimal(self) -> bool {
        self == SolveStatus::Optimal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration-limit",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Primal point; clipped to the variable bounds. Empty unless the backend
    /// produced an iterate.
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_eq_residual: f64,
    pub iterations: u32,
}

impl SolveReport {
    fn without_solution(status: SolveStatus) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            max_eq_residual: f64::NAN,
            iterations: 0,
        }
    }

    pub fn value(&self, v: Var) -> f64 {
        self.x[v.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Smallest achievable max-norm violation of `A x = b` within the bounds
    /// (as found by the phase-1 solve).
    pub residual: f64,
}

/// Conic lowering of a program: `min 1/2 x'Px + q'x  s.t.  Ax + s = b`,
/// with the first `zero_rows` slacks in the zero cone and the rest nonnegative.
struct Conic {
    p: CscMatrix<f64>,
    q: Vec<f64>,
    a: CscMatrix<f64>,
    b: Vec<f64>,
    zero_rows: usize,
}

fn csc_from_triplets(m: usize, n: usize, triplets: &mut [(usize, usize, f64)]) -> CscMatrix<f64> {
    triplets.sort_unstable_by_key(|&(r, c, _)| (c, r));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(triplets.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(triplets.len());
    let mut last: Option<(usize, usize)> = None;
    for &(r, c, v) in triplets.iter() {
        if last == Some((r, c)) {
            *nzval.last_mut().unwrap() += v;
            continue;
        }
        rowval.push(r);
        nzval.push(v);
        colptr[c + 1] += 1;
        last = Some((r, c));
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

fn lower(prog: &ConvexProgram) -> Conic {
    let n = prog.var_count();
    let mut triplets = prog.triplets().to_vec();
    let mut b = prog.rhs().to_vec();
    // Fixed variables become equality rows.
    for (i, (&lo, &hi)) in prog.lower().iter().zip(prog.upper()).enumerate() {
        if lo == hi {
            triplets.push((b.len(), i, 1.0));
            b.push(lo);
        }
    }
    let zero_rows = b.len();
    for (i, (&lo, &hi)) in prog.lower().iter().zip(prog.upper()).enumerate() {
        if lo == hi {
            continue;
        }
        if lo.is_finite() {
            triplets.push((b.len(), i, -1.0));
            b.push(-lo);
        }
        if hi.is_finite() {
            triplets.push((b.len(), i, 1.0));
            b.push(hi);
        }
    }
    let a = csc_from_triplets(b.len(), n, &mut triplets);
    let mut diag: Vec<(usize, usize, f64)> = prog
        .quadratic()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, &w)| (i, i, w))
        .collect();
    let p = csc_from_triplets(n, n, &mut diag);
    Conic {
        p,
        q: prog.linear().to_vec(),
        a,
        b,
        zero_rows,
    }
}

fn has_crossed_bounds(prog: &ConvexProgram) -> bool {
    prog.lower().iter().zip(prog.upper()).any(|(lo, hi)| lo > hi)
}

fn b_scale(prog: &ConvexProgram) -> f64 {
    1.0 + prog.rhs().iter().fold(0.0f64, |m, b| m.max(b.abs()))
}

/// Solves `prog` to relative tolerance `opts.tol`.
///
/// Never panics on numerical trouble: invalid programs and solver breakdowns
/// are mapped to `Infeasible` or `IterationLimit`.
pub fn solve(prog: &ConvexProgram, opts: &SolveOptions) -> SolveReport {
    solve_impl(prog, opts, true)
}

fn solve_impl(prog: &ConvexProgram, opts: &SolveOptions, phase1_fallback: bool) -> SolveReport {
    if prog.validate().is_err() || has_crossed_bounds(prog) {
        return SolveReport::without_solution(SolveStatus::Infeasible);
    }
    let n = prog.var_count();
    if n == 0 {
        let feasible = prog.rhs().iter().all(|b| b.abs() <= opts.tol);
        let status = if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible };
        return SolveReport {
            status,
            x: Vec::new(),
            objective: prog.constant(),
            max_eq_residual: prog.rhs().iter().fold(0.0, |m, b| m.max(b.abs())),
            iterations: 0,
        };
    }
    let conic = lower(prog);
    let inner_tol = opts.tol.min(1e-8);
    let settings = DefaultSettingsBuilder::default()
        .verbose(opts.verbose)
        .max_iter(opts.max_iter)
        .tol_gap_abs(inner_tol)
        .tol_gap_rel(inner_tol)
        .tol_feas(inner_tol)
        .build()
        .expect("static solver settings are valid");
    let mut cones = Vec::with_capacity(2);
    if conic.zero_rows > 0 {
        cones.push(SupportedConeT::ZeroConeT(conic.zero_rows));
    }
    if conic.b.len() > conic.zero_rows {
        cones.push(SupportedConeT::NonnegativeConeT(conic.b.len() - conic.zero_rows));
    }
    let mut solver = match DefaultSolver::new(&conic.p, &conic.q, &conic.a, &conic.b, &cones, settings) {
        Ok(s) => s,
        Err(_) => return SolveReport::without_solution(SolveStatus::IterationLimit),
    };
    solver.solve();

    let iterations = solver.info.iterations;
    let mut x = solver.solution.x.clone();
    for (xi, (&lo, &hi)) in x.iter_mut().zip(prog.lower().iter().zip(prog.upper())) {
        *xi = xi.clamp(lo, hi);
    }
    let residual = prog.max_eq_residual(&x);
    let residual_ok = x.iter().all(|v| v.is_finite()) && residual <= opts.tol * b_scale(prog);
    let feasible = || !phase1_fallback || check_feasibility(prog, opts).feasible;
    let status = match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved if residual_ok => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            if feasible() {
                SolveStatus::Unbounded
            } else {
                SolveStatus::Infeasible
            }
        }
        _ => {
            if feasible() {
                SolveStatus::IterationLimit
            } else {
                SolveStatus::Infeasible
            }
        }
    };
    SolveReport {
        status,
        objective: prog.objective(&x),
        max_eq_residual: residual,
        x,
        iterations,
    }
}

/// Phase-1 test: is there an `x` within the bounds with `A x = b`?
///
/// Minimizes `sum(u + v)` subject to `A x + u - v = b`, `u, v >= 0` and reports
/// the largest remaining violation.
pub fn check_feasibility(prog: &ConvexProgram, opts: &SolveOptions) -> FeasibilityReport {
    if prog.validate().is_err() || has_crossed_bounds(prog) {
        return FeasibilityReport {
            feasible: false,
            residual: f64::INFINITY,
        };
    }
    if prog.eq_count() == 0 {
        return FeasibilityReport {
            feasible: true,
            residual: 0.0,
        };
    }
    let mut phase1 = ConvexProgram::new();
    let xs: Vec<Var> = prog
        .lower()
        .iter()
        .zip(prog.upper())
        .map(|(&lo, &hi)| phase1.add_var(lo, hi))
        .collect();
    let mut rows: Vec<Vec<(Var, f64)>> = vec![Vec::new(); prog.eq_count()];
    for &(r, c, a) in prog.triplets() {
        rows[r].push((xs[c], a));
    }
    for (row, &b) in rows.iter_mut().zip(prog.rhs()) {
        let u = phase1.add_nonneg();
        let v = phase1.add_nonneg();
        phase1.add_linear(u, 1.0);
        phase1.add_linear(v, 1.0);
        row.push((u, 1.0));
        row.push((v, -1.0));
        phase1.add_eq(row, b);
    }
    // Phase 1 is always feasible. It keeps at least the default iteration
    // budget so a tight cap on the caller's solve cannot turn a stalled
    // program into a false infeasibility verdict.
    let p1_opts = SolveOptions {
        max_iter: opts.max_iter.max(SolveOptions::default().max_iter),
        ..*opts
    };
    let report = solve_impl(&phase1, &p1_opts, false);
    if report.x.is_empty() {
        return FeasibilityReport {
            feasible: false,
            residual: f64::INFINITY,
        };
    }
    let x = &report.x[..prog.var_count()];
    let residual = prog.max_eq_residual(x);
    FeasibilityReport {
        feasible: residual <= INFEASIBILITY_THRESHOLD * b_scale(prog),
        residual,
    }
}
