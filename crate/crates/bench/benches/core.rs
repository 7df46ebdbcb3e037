use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use deepte::baselines::opt_route;
use deepte::controller::ControllerConfig;
use deepte::delay::DelayFunction;
use deepte::net::PathSet;
use deepte::solver::SolveOptions;
use deepte_bench::{demand, geant, ready_controller};

fn paths(c: &mut Criterion) {
    let topo = geant();
    c.bench_function("geant k=4 path set", |b| b.iter(|| PathSet::build(&topo, 4).unwrap()));
}

fn opt(c: &mut Criterion) {
    let topo = geant();
    let ps = PathSet::build(&topo, 4).unwrap();
    let caps = topo.capacities();
    let w = demand(&ps, &caps, &[], 1);
    let f = DelayFunction::default();
    let opts = SolveOptions::default();
    c.bench_function("geant OPT solve", |b| {
        b.iter(|| opt_route(&ps, &w, &f, &caps, &opts).unwrap())
    });
}

fn controller(c: &mut Criterion) {
    let ctl = ready_controller(ControllerConfig::default());
    let mut group = c.benchmark_group("controller");
    group.sample_size(10);
    group.bench_function("geant decision, 8 elephants", |b| {
        b.iter_batched(|| ctl.clone(), |mut ctl| ctl.decide(0), BatchSize::LargeInput)
    });
    group.finish();
}

criterion_group!(benches, paths, opt, controller);
criterion_main!(benches);
