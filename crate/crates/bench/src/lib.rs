//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use deepte::controller::{ControllerConfig, DeepTeController};
use deepte::delay::DelayFunction;
use deepte::net::{compute_link_loads, AggregationMaps, PathSet, RoutingConfig, Topology};
use deepte::predictor::PredictorModel;
use deepte::topologies;

pub fn geant() -> Topology {
    topologies::builtin("geant").unwrap()
}

/// A random demand vector where `elephants` carry about 40 times the volume
/// of every other pair, sized so the network is moderately loaded.
pub fn demand(ps: &PathSet, caps: &[f64], elephants: &[usize], seed: u64) -> Vec<f64> {
    let unit = caps.iter().sum::<f64>() / caps.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ps.demand_count())
        .map(|d| {
            let share = if elephants.contains(&d) { 0.02 } else { 0.0005 };
            unit * share * rng.random_range(0.5..1.5)
        })
        .collect()
}

/// A geant controller over eight four-path elephants with `past` completed
/// sample windows, ready to decide.
pub fn ready_controller(cfg: ControllerConfig) -> DeepTeController {
    let topo = geant();
    let full = PathSet::build(&topo, 4).unwrap();
    let elephants: Vec<usize> = (0..full.demand_count())
        .filter(|&d| full.paths(d).len() == 4)
        .step_by(41)
        .take(8)
        .collect();
    let sub = full.subset(&elephants);
    let caps = topo.capacities();
    let w = demand(&full, &caps, &elephants, 3);
    let model = PredictorModel::moving_average(cfg.past, cfg.horizon).unwrap();
    let mut ctl = DeepTeController::new(
        cfg,
        AggregationMaps::new(&sub),
        caps,
        DelayFunction::default(),
        model,
        RoutingConfig::uniform(&sub),
        9,
    )
    .unwrap();
    for _ in 0..cfg.past {
        for r in ctl.plan_interval().into_iter().skip(1) {
            let mut fr = RoutingConfig::shortest_path(&full);
            fr.embed(&elephants, &r);
            let y = compute_link_loads(&full, &w, &fr).unwrap();
            ctl.record(r, y).unwrap();
        }
        ctl.close_interval().unwrap();
    }
    ctl
}
