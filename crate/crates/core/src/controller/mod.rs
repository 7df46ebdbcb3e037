//! Data-driven predictive routing of elephant flows.
//!
//! Within each control interval the controller applies its decision for the
//! first sample and small random perturbations of it for the remaining
//! samples. The (routing, link load) pairs from the last `L` intervals form
//! the data matrices from which future link loads under a candidate routing
//! are expressed, without any estimate of the traffic matrix.

mod basis;
mod perturb;
mod program;
mod window;

use std::collections::VecDeque;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use basis::BasisSet;
pub use perturb::{flat_dirichlet, mix_split, perturb, perturbed_count};
pub use program::{build_program, ProgramLayout};
pub use window::{
    check_persistent_excitation, ExcitationReport, SampleRecord, SampleWindow, WindowData,
};

use crate::delay::DelayFunction;
use crate::error::{Error, Result};
use crate::net::{AggregationMaps, RoutingConfig};
use crate::predictor::PredictorModel;
use crate::solver::{solve, ConvexProgram, SolveOptions, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Weight of the L1 route change.
    pub alpha1: f64,
    /// Weight of the squared norm of the data coefficients.
    pub alpha2: f64,
    /// `L`: past intervals used as data.
    pub past: usize,
    /// `H`: prediction horizon in intervals.
    pub horizon: usize,
    /// `N`: samples per control interval.
    pub samples_per_interval: usize,
    pub n_phi: usize,
    pub discount: f64,
    /// Share of elephants perturbed at each sample.
    pub perturb_fraction: f64,
    pub mixing_weight: f64,
    /// Each sample perturbs the previous sample rather than the decision.
    pub cumulative_perturbation: bool,
    /// Relative singular-value threshold of the excitation test.
    pub pe_rtol: f64,
    pub solve: SolveOptions,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            alpha1: 1000.0,
            alpha2: 1.0,
            past: 3,
            horizon: 2,
            samples_per_interval: 6,
            n_phi: 1,
            discount: 0.9,
            perturb_fraction: 1.0,
            mixing_weight: 0.05,
            cumulative_perturbation: false,
            pe_rtol: 1e-9,
            solve: SolveOptions::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.alpha1 >= 0.0 && self.alpha1.is_finite()) {
            return bad(format!("alpha1 must be a nonnegative number, got {}", self.alpha1));
        }
        if !(self.alpha2 >= 0.0 && self.alpha2.is_finite()) {
            return bad(format!("alpha2 must be a nonnegative number, got {}", self.alpha2));
        }
        if self.past < 1 || self.horizon < 1 {
            return bad(format!(
                "past and horizon must be at least 1, got {} and {}",
                self.past, self.horizon
            ));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad(format!("discount must lie in (0, 1], got {}", self.discount));
        }
        if !(0.0..=1.0).contains(&self.perturb_fraction) {
            return bad(format!("perturbation fraction {} outside [0, 1]", self.perturb_fraction));
        }
        if !(self.mixing_weight > 0.0 && self.mixing_weight <= 1.0) {
            return bad(format!("mixing weight {} outside (0, 1]", self.mixing_weight));
        }
        if !(self.pe_rtol > 0.0 && self.pe_rtol < 1.0) {
            return bad(format!("rank tolerance {} outside (0, 1)", self.pe_rtol));
        }
        BasisSet::polynomial(self.samples_per_interval, self.n_phi).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    PeDeficient,
    WarmUp,
}

impl DecisionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Infeasible => "infeasible",
            Self::Unbounded => "unbounded",
            Self::IterationLimit => "iteration-limit",
            Self::PeDeficient => "pe-deficient",
            Self::WarmUp => "warm-up",
        }
    }
}

impl fmt::Display for DecisionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<SolveStatus> for DecisionStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => Self::Optimal,
            SolveStatus::Infeasible => Self::Infeasible,
            SolveStatus::Unbounded => Self::Unbounded,
            SolveStatus::IterationLimit => Self::IterationLimit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub interval: usize,
    pub status: DecisionStatus,
    /// The previous routing was kept.
    pub fallback: bool,
    pub objective: Option<f64>,
    /// Smallest data-matrix rank over the windows used (0 during warm-up).
    pub pe_rank: usize,
    pub pe_required: usize,
    pub iterations: usize,
}

/// Controller state for one network.
#[derive(Debug, Clone)]
pub struct DeepTeController {
    cfg: ControllerConfig,
    basis: BasisSet,
    maps: AggregationMaps,
    capacities: Vec<f64>,
    delay: DelayFunction,
    model: PredictorModel,
    current: RoutingConfig,
    rng: ChaCha8Rng,
    windows: VecDeque<SampleWindow>,
    pending: Vec<SampleRecord>,
    interval: usize,
}

impl DeepTeController {
    /// `maps` covers the elephant demands only; `initial` is their routing
    /// in effect before the first decision.
    pub fn new(
        cfg: ControllerConfig,
        maps: AggregationMaps,
        capacities: Vec<f64>,
        delay: DelayFunction,
        model: PredictorModel,
        initial: RoutingConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if model.past() != cfg.past || model.horizon() < cfg.horizon {
            return Err(Error::InvalidParameter(format!(
                "predictor is {}x{}, controller needs {}x{}",
                model.past(),
                model.horizon(),
                cfg.past,
                cfg.horizon
            )));
        }
        if capacities.len() != maps.edge_count() {
            return Err(Error::dim("capacity vector", maps.edge_count(), capacities.len()));
        }
        if !initial.matches_layout(maps.pathset()) {
            return Err(Error::InvalidRouting(
                "initial routing does not match the elephant path set".into(),
            ));
        }
        Ok(Self {
            basis: BasisSet::polynomial(cfg.samples_per_interval, cfg.n_phi)?,
            cfg,
            maps,
            capacities,
            delay,
            model,
            current: initial,
            rng: ChaCha8Rng::seed_from_u64(seed),
            windows: VecDeque::new(),
            pending: Vec::new(),
            interval: 0,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn maps(&self) -> &AggregationMaps {
        &self.maps
    }

    /// The routing decided for the current interval.
    pub fn routing(&self) -> &RoutingConfig {
        &self.current
    }

    /// Overrides the current decision (used while windows fill).
    pub fn set_routing(&mut self, routing: RoutingConfig) -> Result<()> {
        if !routing.matches_layout(self.maps.pathset()) {
            return Err(Error::InvalidRouting(
                "routing does not match the elephant path set".into(),
            ));
        }
        self.current = routing;
        Ok(())
    }

    /// The `N` routings of the coming interval: the decision, then its
    /// perturbations (of the decision, or of the previous sample when
    /// perturbations are cumulative).
    pub fn plan_interval(&mut self) -> Vec<RoutingConfig> {
        let mut out = Vec::with_capacity(self.cfg.samples_per_interval);
        out.push(self.current.clone());
        for _ in 1..self.cfg.samples_per_interval {
            let anchor = if self.cfg.cumulative_perturbation {
                out.last().expect("nonempty")
            } else {
                &self.current
            };
            let next = perturb(
                anchor,
                self.cfg.perturb_fraction,
                self.cfg.mixing_weight,
                &mut self.rng,
            );
            out.push(next);
        }
        out
    }

    /// Stores the loads measured under a perturbed sample of the current
    /// interval. Samples must arrive in order.
    pub fn record(&mut self, routing: RoutingConfig, loads: Vec<f64>) -> Result<()> {
        if loads.len() != self.maps.edge_count() {
            return Err(Error::dim("link load vector", self.maps.edge_count(), loads.len()));
        }
        if !routing.matches_layout(self.maps.pathset()) {
            return Err(Error::InvalidRouting(
                "sample routing does not match the elephant path set".into(),
            ));
        }
        if self.pending.len() >= self.basis.samples() {
            return Err(Error::InvalidParameter(format!(
                "interval {} already holds {} samples",
                self.interval,
                self.pending.len()
            )));
        }
        self.pending.push(SampleRecord::new(&self.maps, routing, loads));
        Ok(())
    }

    /// Completes the current interval and keeps its window.
    pub fn close_interval(&mut self) -> Result<()> {
        if self.pending.len() != self.basis.samples() {
            return Err(Error::InsufficientData(format!(
                "interval {} has {} samples, expected {}",
                self.interval,
                self.pending.len(),
                self.basis.samples()
            )));
        }
        let window = SampleWindow {
            interval: self.interval,
            records: std::mem::take(&mut self.pending),
        };
        self.windows.push_back(window);
        while self.windows.len() > self.cfg.past {
            self.windows.pop_front();
        }
        self.interval += 1;
        Ok(())
    }

    /// Completed windows, oldest first.
    pub fn windows(&self) -> impl Iterator<Item = &SampleWindow> {
        self.windows.iter()
    }

    /// Decides the routing of interval `k`.
    pub fn decide(&mut self, k: usize) -> DecisionReport {
        self.decide_with(k, |_, _| {})
    }

    /// As [`decide`](Self::decide), letting `edit` alter the program before
    /// it is solved.
    pub fn decide_with<F>(&mut self, k: usize, edit: F) -> DecisionReport
    where
        F: FnOnce(&mut ConvexProgram, &ProgramLayout),
    {
        let (n_w, n_l) = (self.maps.demand_count(), self.maps.edge_count());
        let required = (n_w + n_l) * (1 + self.cfg.n_phi);
        let mut report = DecisionReport {
            interval: k,
            status: DecisionStatus::WarmUp,
            fallback: false,
            objective: None,
            pe_rank: 0,
            pe_required: required,
            iterations: 0,
        };
        if self.windows.len() < self.cfg.past {
            return report;
        }
        // windows[p - 1] is interval k - p.
        let mut data = Vec::with_capacity(self.cfg.past);
        let mut min_rank = usize::MAX;
        for w in self.windows.iter().rev() {
            match WindowData::build(w, &self.basis, n_w, n_l) {
                Ok(d) => {
                    min_rank = min_rank.min(d.excitation(self.cfg.pe_rtol).rank);
                    data.push(d);
                }
                Err(_) => {
                    min_rank = 0;
                    break;
                }
            }
        }
        report.pe_rank = min_rank;
        if min_rank < required {
            report.status = DecisionStatus::PeDeficient;
            report.fallback = true;
            return report;
        }
        let built = build_program(
            &data,
            &self.model,
            &self.current,
            &self.cfg,
            &self.maps,
            &self.delay,
            &self.capacities,
        );
        let (mut prog, layout) = match built {
            Ok(b) => b,
            Err(_) => {
                report.status = DecisionStatus::Infeasible;
                report.fallback = true;
                return report;
            }
        };
        edit(&mut prog, &layout);
        let solved = solve(&prog, &self.cfg.solve);
        report.iterations = solved.iterations as usize;
        report.status = solved.status.into();
        if !solved.status.is_optimal() {
            report.fallback = true;
            return report;
        }
        report.objective = Some(solved.objective);
        let mut next = layout.routing_values(&solved.x, 0, &self.current);
        next.project_to_simplex();
        self.current = next;
        report
    }
}

#[cfg(test)]
mod tests;
