use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::StepMetrics;
use super::Method;
use crate::baselines::{
    const_route, node_marginals, opt_route, tg_route, tomogravity_estimate, OptOutcome,
};
use crate::controller::{ControllerConfig, DecisionReport, DeepTeController};
use crate::delay::DelayFunction;
use crate::error::{Error, Result};
use crate::net::{compute_link_loads, AggregationMaps, PathSet, RoutingConfig, Topology};
use crate::predictor::{control_interval_means, fit_predictor};
use crate::solver::SolveOptions;
use crate::traffic::{time_means, DemandSeries};

/// A topology, its candidate paths and a demand series on it.
#[derive(Debug, Clone)]
pub struct Scenario {
    topology: Topology,
    pathset: PathSet,
    series: DemandSeries,
    capacities: Vec<f64>,
    delay: DelayFunction,
    controlled: Vec<usize>,
}

impl Scenario {
    pub fn new(topology: Topology, series: DemandSeries, paths_per_demand: usize) -> Result<Self> {
        let pathset = PathSet::build(&topology, paths_per_demand)?;
        if pathset.demands() != series.demands() {
            return Err(Error::InvalidParameter(
                "series demands do not match the all-pairs demands of the topology".into(),
            ));
        }
        let controlled = series
            .elephants()
            .iter()
            .copied()
            .filter(|&d| pathset.paths(d).len() > 1)
            .collect();
        Ok(Self {
            capacities: topology.capacities(),
            topology,
            pathset,
            series,
            delay: DelayFunction::default(),
            controlled,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn pathset(&self) -> &PathSet {
        &self.pathset
    }

    pub fn series(&self) -> &DemandSeries {
        &self.series
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn delay(&self) -> &DelayFunction {
        &self.delay
    }

    /// Elephant flows with routing freedom, in ascending demand order.
    pub fn controlled(&self) -> &[usize] {
        &self.controlled
    }

    fn loads(&self, step: usize, routing: &RoutingConfig) -> Result<Vec<f64>> {
        compute_link_loads(&self.pathset, self.series.row(step), routing)
    }
}

/// Per-step OPT solutions, shared by the OPT method and every PR denominator.
#[derive(Debug, Clone, Default)]
pub struct OptCache {
    outcomes: BTreeMap<usize, OptOutcome>,
}

impl OptCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, sc: &Scenario, step: usize, opts: &SolveOptions) -> Result<&OptOutcome> {
        if !self.outcomes.contains_key(&step) {
            let out = opt_route(sc.pathset(), sc.series.row(step), &sc.delay, &sc.capacities, opts)?;
            self.outcomes.insert(step, out);
        }
        Ok(&self.outcomes[&step])
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub method: Method,
    pub controller: ControllerConfig,
    /// Intervals of history available before evaluation (predictor fit, CONST mean).
    pub train_intervals: usize,
    pub eval_intervals: usize,
    pub seed: u64,
    pub solve: SolveOptions,
}

impl ExperimentConfig {
    /// Whole days of training followed by whole days of evaluation.
    pub fn daily(
        method: Method,
        controller: ControllerConfig,
        sample_interval: f64,
        train_days: usize,
        eval_days: usize,
        seed: u64,
    ) -> Result<Self> {
        let control = sample_interval * controller.samples_per_interval as f64;
        let per_day = crate::traffic::DAY_SECONDS / control;
        if !(per_day > 0.0) || (per_day - per_day.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "a day is not a whole number of {control} s control intervals"
            )));
        }
        let per_day = per_day.round() as usize;
        Ok(Self {
            method,
            controller,
            train_intervals: train_days * per_day,
            eval_intervals: eval_days * per_day,
            seed,
            solve: SolveOptions::default(),
        })
    }

    pub fn validate(&self, series: &DemandSeries) -> Result<()> {
        self.controller.validate()?;
        let n = self.controller.samples_per_interval;
        if self.eval_intervals == 0 {
            return Err(Error::InvalidParameter("no evaluation intervals".into()));
        }
        if self.train_intervals < self.controller.past + self.controller.horizon {
            return Err(Error::InvalidParameter(format!(
                "{} training intervals cannot fit a {}x{} predictor",
                self.train_intervals, self.controller.past, self.controller.horizon
            )));
        }
        let need = (self.train_intervals + self.eval_intervals) * n;
        if series.steps() < need {
            return Err(Error::InsufficientData(format!(
                "series has {} steps, the experiment needs {need}",
                series.steps()
            )));
        }
        Ok(())
    }

    fn first_eval_step(&self) -> usize {
        self.train_intervals * self.controller.samples_per_interval
    }

    fn end_step(&self) -> usize {
        (self.train_intervals + self.eval_intervals) * self.controller.samples_per_interval
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: Method,
    pub steps: Vec<StepMetrics>,
    pub decisions: Vec<DecisionReport>,
    /// Seconds; reported but never written to result files.
    pub wall_clock: f64,
}

impl MetricsReport {
    pub fn mean_pr(&self) -> f64 {
        super::mean(self.steps.iter().map(|s| s.pr))
    }

    pub fn mean_rc(&self) -> f64 {
        super::mean(self.steps.iter().map(|s| s.rc))
    }

    pub fn median_pr(&self) -> f64 {
        super::median(self.steps.iter().map(|s| s.pr))
    }

    /// Mean RC over the first step of each control interval.
    pub fn mean_decision_rc(&self, samples_per_interval: usize) -> f64 {
        super::decision_rc(&self.steps, samples_per_interval)
    }

    pub fn summary(&self, series: &str) -> super::SummaryRow {
        super::SummaryRow {
            series: series.to_string(),
            method: self.method,
            mean_pr: self.mean_pr(),
            mean_rc: self.mean_rc(),
            median_pr: self.median_pr(),
            fallback_frac: self.fallback_fraction(),
        }
    }

    pub fn fallback_count(&self) -> usize {
        self.decisions.iter().filter(|d| d.fallback).count()
    }

    pub fn fallback_fraction(&self) -> f64 {
        if self.decisions.is_empty() {
            0.0
        } else {
            self.fallback_count() as f64 / self.decisions.len() as f64
        }
    }
}

struct Recorder<'a> {
    sc: &'a Scenario,
    cfg: &'a ExperimentConfig,
    cache: &'a mut OptCache,
    prev: Option<RoutingConfig>,
    steps: Vec<StepMetrics>,
}

impl Recorder<'_> {
    /// Applies `routing` at `step`, returning the measured link loads.
    fn apply(
        &mut self,
        step: usize,
        routing: RoutingConfig,
        decision: Option<&DecisionReport>,
    ) -> Result<Vec<f64>> {
        let loads = self.sc.loads(step, &routing)?;
        if step >= self.cfg.first_eval_step() {
            let delay = self.sc.delay.total_delay(&loads, &self.sc.capacities)?;
            let opt_delay = self.cache.get(self.sc, step, &self.cfg.solve)?.delay;
            let pr = if opt_delay > 0.0 { delay / opt_delay } else { 1.0 };
            let rc = self.prev.as_ref().map_or(0.0, |p| p.l1_distance(&routing));
            self.steps.push(StepMetrics {
                step,
                time_s: step as f64 * self.sc.series.sample_interval(),
                method: self.cfg.method,
                delay,
                opt_delay,
                pr,
                rc,
                fallback: decision.is_some_and(|d| d.fallback),
                pe_rank: decision.map(|d| d.pe_rank),
            });
        }
        self.prev = Some(routing);
        Ok(loads)
    }
}

/// Runs one method over the evaluation window of the scenario.
///
/// Each method first routes the step (or, for DeeP-TE, the `L` intervals)
/// just before the window so that the first evaluated RC is well defined.
pub fn run_simulation(
    sc: &Scenario,
    cfg: &ExperimentConfig,
    cache: &mut OptCache,
) -> Result<MetricsReport> {
    cfg.validate(&sc.series)?;
    let started = std::time::Instant::now();
    let n = cfg.controller.samples_per_interval;
    let s0 = cfg.first_eval_step();
    let end = cfg.end_step();
    let train_rows = &sc.series.rows()[..s0];
    let mean_w = time_means(train_rows);
    let const_routing = const_route(
        &sc.pathset,
        &mean_w,
        &sc.controlled,
        &sc.delay,
        &sc.capacities,
        &cfg.solve,
    )?;
    let mut rec = Recorder {
        sc,
        cfg,
        cache,
        prev: None,
        steps: Vec::with_capacity(end - s0),
    };
    let mut decisions = Vec::new();

    match cfg.method {
        Method::Opt => {
            for s in s0 - 1..end {
                let r = rec.cache.get(sc, s, &cfg.solve)?.routing.clone();
                rec.apply(s, r, None)?;
            }
        }
        Method::Const => {
            for s in s0 - 1..end {
                rec.apply(s, const_routing.clone(), None)?;
            }
        }
        Method::Tg5 | Method::Tg30 => {
            let period = if cfg.method == Method::Tg5 { 1 } else { n };
            let nodes = sc.topology.node_count();
            let mut routing = const_routing.clone();
            let mut loads = rec.apply(s0 - 1, routing.clone(), None)?;
            for s in s0..end {
                if (s - s0) % period == 0 {
                    let prev_w = sc.series.row(s - 1);
                    let (egress, ingress) = node_marginals(&sc.pathset, nodes, prev_w);
                    let est = tomogravity_estimate(&sc.pathset, &routing, &loads, &egress, &ingress)?;
                    routing = tg_route(
                        &est,
                        &sc.pathset,
                        &sc.controlled,
                        &sc.delay,
                        &sc.capacities,
                        &cfg.solve,
                    )?;
                }
                loads = rec.apply(s, routing.clone(), None)?;
            }
        }
        Method::DeepTe => {
            let ccfg = cfg.controller;
            let means = control_interval_means(train_rows, n)?;
            let model = fit_predictor(&means, ccfg.past, ccfg.horizon)?;
            let sub = sc.pathset.subset(&sc.controlled);
            let maps = AggregationMaps::new(&sub);
            let initial = const_routing.extract(&sc.controlled, &sub);
            let mut ctl = DeepTeController::new(
                ccfg,
                maps,
                sc.capacities.clone(),
                sc.delay.clone(),
                model,
                initial,
                cfg.seed,
            )?;
            let base = RoutingConfig::shortest_path(&sc.pathset);
            let k0 = cfg.train_intervals - ccfg.past;
            for k in k0..cfg.train_intervals + cfg.eval_intervals {
                let decision = (k >= cfg.train_intervals).then(|| ctl.decide(k));
                let plan = ctl.plan_interval();
                for (j, r) in plan.into_iter().enumerate() {
                    let mut full = base.clone();
                    full.embed(&sc.controlled, &r);
                    let here = if j == 0 { decision.as_ref() } else { None };
                    let loads = rec.apply(k * n + j, full, here)?;
                    if j > 0 {
                        ctl.record(r, loads)?;
                    }
                }
                ctl.close_interval()?;
                decisions.extend(decision);
            }
        }
    }
    Ok(MetricsReport {
        method: cfg.method,
        steps: rec.steps,
        decisions,
        wall_clock: started.elapsed().as_secs_f64(),
    })
}
