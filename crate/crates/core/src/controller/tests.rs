use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::net::{compute_link_loads, PathSet, Topology};
use crate::topologies;

struct Fixture {
    topo: Topology,
    full: PathSet,
    elephants: Vec<usize>,
    maps: AggregationMaps,
    w: Vec<f64>,
}

fn fixture(seed: u64) -> Fixture {
    let topo = topologies::builtin("geant").unwrap();
    let full = PathSet::build(&topo, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elephants: Vec<usize> = (0..full.demand_count())
        .filter(|&d| full.paths(d).len() > 1)
        .step_by(37)
        .take(8)
        .collect();
    elephants.sort_unstable();
    let caps = topo.capacities();
    let mean_cap = caps.iter().sum::<f64>() / caps.len() as f64;
    let w: Vec<f64> = (0..full.demand_count())
        .map(|d| {
            let base = if elephants.contains(&d) { 0.02 } else { 0.0005 };
            base * mean_cap * rng.random_range(0.5..1.5)
        })
        .collect();
    let maps = AggregationMaps::new(&full.subset(&elephants));
    Fixture {
        topo,
        full,
        elephants,
        maps,
        w,
    }
}

impl Fixture {
    fn loads(&self, sub: &RoutingConfig) -> Vec<f64> {
        let mut r = RoutingConfig::shortest_path(&self.full);
        r.embed(&self.elephants, sub);
        compute_link_loads(&self.full, &self.w, &r).unwrap()
    }

    fn controller(&self, cfg: ControllerConfig, seed: u64) -> DeepTeController {
        let model = PredictorModel::moving_average(cfg.past, cfg.horizon).unwrap();
        DeepTeController::new(
            cfg,
            self.maps.clone(),
            self.topo.capacities(),
            DelayFunction::default(),
            model,
            RoutingConfig::shortest_path(self.maps.pathset()),
            seed,
        )
        .unwrap()
    }

    /// Runs one interval under constant traffic.
    fn fill(&self, ctl: &mut DeepTeController) {
        let plan = ctl.plan_interval();
        for r in plan.into_iter().skip(1) {
            let y = self.loads(&r);
            ctl.record(r, y).unwrap();
        }
        ctl.close_interval().unwrap();
    }
}

#[test]
fn defaults_validate_and_odd_samples_fail() {
    ControllerConfig::default().validate().unwrap();
    let cfg = ControllerConfig {
        samples_per_interval: 5,
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
    let cfg = ControllerConfig {
        horizon: 0,
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
}

#[test]
fn two_path_elephants_defeat_the_quadratic_basis() {
    let fx = fixture(1);
    let cfg = ControllerConfig {
        n_phi: 2,
        ..Default::default()
    };
    let mut ctl = fx.controller(cfg, 3);
    fx.fill(&mut ctl);
    let w = ctl.windows().next().unwrap();
    let rep = check_persistent_excitation(w, ctl.basis(), &fx.maps, 1e-9).unwrap();
    assert_eq!(rep.rank + 1, rep.required);
}

#[test]
fn perturbed_windows_are_exciting() {
    let fx = fixture(1);
    let mut ctl = fx.controller(ControllerConfig::default(), 3);
    fx.fill(&mut ctl);
    let w = ctl.windows().next().unwrap();
    let rep = check_persistent_excitation(w, ctl.basis(), &fx.maps, 1e-9).unwrap();
    assert!(rep.full_rank, "{rep:?}");
    assert_eq!(rep.required, (8 + 36) * 2);
}

#[test]
fn constant_routing_is_not_exciting() {
    let fx = fixture(1);
    let basis = BasisSet::polynomial(6, 0).unwrap();
    let r = RoutingConfig::uniform(fx.maps.pathset());
    let records = (0..5)
        .map(|_| SampleRecord::new(&fx.maps, r.clone(), fx.loads(&r)))
        .collect();
    let w = SampleWindow {
        interval: 0,
        records,
    };
    let rep = check_persistent_excitation(&w, &basis, &fx.maps, 1e-9).unwrap();
    assert!(!rep.full_rank);
}

#[test]
fn dummy_loads_match_direct_evaluation() {
    let fx = fixture(2);
    let cfg = ControllerConfig {
        n_phi: 0,
        ..Default::default()
    };
    let mut ctl = fx.controller(cfg, 5);
    fx.fill(&mut ctl);
    let w = ctl.windows().next().unwrap();
    let data = WindowData::build(w, ctl.basis(), 8, 36).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let mut cand = RoutingConfig::uniform(fx.maps.pathset());
        for d in 0..cand.demand_count() {
            let x = flat_dirichlet(cand.demand(d).len(), &mut rng);
            cand.demand_mut(d).copy_from_slice(&x);
        }
        let ragg = crate::net::aggregate_routing(&fx.maps, &cand);
        let (dummy, resid) = data.dummy_loads(&ragg).unwrap();
        assert!(resid < 1e-9);
        let direct = fx.loads(&cand);
        for (a, b) in dummy.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn geant_program_has_expected_g_blocks() {
    let fx = fixture(1);
    let cfg = ControllerConfig::default();
    let mut ctl = fx.controller(cfg, 3);
    for _ in 0..3 {
        fx.fill(&mut ctl);
    }
    let basis = ctl.basis().clone();
    let data: Vec<WindowData> = ctl
        .windows()
        .map(|w| WindowData::build(w, &basis, 8, 36).unwrap())
        .collect();
    let model = PredictorModel::moving_average(3, 2).unwrap();
    let (_, layout) = build_program(
        &data,
        &model,
        ctl.routing(),
        &cfg,
        &fx.maps,
        &DelayFunction::default(),
        &fx.topo.capacities(),
    )
    .unwrap();
    assert_eq!(layout.g_len, 180);
    let blocks: usize = layout.g_start.iter().flatten().map(Vec::len).sum();
    assert_eq!(blocks, 3 * 2 * 36);
}

#[test]
fn warm_up_keeps_routing() {
    let fx = fixture(1);
    let mut ctl = fx.controller(ControllerConfig::default(), 3);
    let before = ctl.routing().clone();
    let rep = ctl.decide(0);
    assert_eq!(rep.status, DecisionStatus::WarmUp);
    assert!(!rep.fallback);
    assert_eq!(ctl.routing(), &before);
}

#[test]
fn infeasible_program_falls_back() {
    let fx = fixture(4);
    let mut ctl = fx.controller(ControllerConfig::default(), 3);
    for _ in 0..3 {
        fx.fill(&mut ctl);
    }
    let before = ctl.routing().clone();
    let rep = ctl.decide_with(3, |prog, layout| {
        let v = layout.routing[0][0];
        prog.add_eq(&[(v, 1.0)], 2.0);
    });
    assert!(rep.fallback);
    assert_eq!(rep.status, DecisionStatus::Infeasible);
    assert_eq!(ctl.routing(), &before);
}

#[test]
fn decisions_are_valid_and_repeatable() {
    let fx = fixture(4);
    let run = || {
        let mut ctl = fx.controller(ControllerConfig::default(), 11);
        let mut out = Vec::new();
        for k in 0..5 {
            if k >= 3 {
                let rep = ctl.decide(k);
                assert_eq!(rep.status, DecisionStatus::Optimal, "{rep:?}");
                ctl.routing().validate(1e-6).unwrap();
                out.push(ctl.routing().clone());
            }
            fx.fill(&mut ctl);
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn sparse_perturbation_is_not_exciting() {
    let fx = fixture(1);
    let cfg = ControllerConfig {
        perturb_fraction: 0.05,
        ..Default::default()
    };
    let mut deficient = 0;
    for seed in 0..10 {
        let mut ctl = fx.controller(cfg, seed);
        fx.fill(&mut ctl);
        let w = ctl.windows().next().unwrap();
        let rep = check_persistent_excitation(w, ctl.basis(), &fx.maps, 1e-9).unwrap();
        deficient += usize::from(!rep.full_rank);
    }
    assert_eq!(deficient, 10);
}
