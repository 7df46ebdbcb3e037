use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use deepte::controller::flat_dirichlet;
use deepte::net::{
    aggregate_routing, compute_link_loads, disaggregate_routing, k_shortest_paths,
    AggregationMaps, Demand, DisaggregationError, Edge, PathSet, RoutingConfig, Topology,
};
use deepte::topologies;

fn random_routing<R: Rng>(ps: &PathSet, rng: &mut R) -> RoutingConfig {
    let mut r = RoutingConfig::uniform(ps);
    for d in 0..r.demand_count() {
        let n = r.demand(d).len();
        if n > 0 {
            r.demand_mut(d).copy_from_slice(&flat_dirichlet(n, rng));
        }
    }
    r
}

fn random_graph(n: usize, p: f64, seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.random_bool(p) {
                edges.push(Edge { src: a, dst: b, capacity: 1.0 });
            }
        }
    }
    Topology::new(n, edges).unwrap()
}

/// Every simple path, sorted by hops and then by node sequence.
fn all_simple_paths(topo: &Topology, src: usize, dst: usize) -> Vec<Vec<usize>> {
    fn walk(topo: &Topology, path: &mut Vec<usize>, dst: usize, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == dst {
            out.push(path.clone());
            return;
        }
        for &e in topo.out_edges(u) {
            let v = topo.edge(e).dst;
            if !path.contains(&v) {
                path.push(v);
                walk(topo, path, dst, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(topo, &mut vec![src], dst, &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[test]
fn k_shortest_paths_match_brute_force() {
    for seed in 0..40 {
        let topo = random_graph(7, 0.35, seed);
        for src in 0..7 {
            for dst in (0..7).filter(|&d| d != src) {
                let brute = all_simple_paths(&topo, src, dst);
                for k in [1, 3, 6] {
                    let got: Vec<Vec<usize>> = k_shortest_paths(&topo, Demand::new(src, dst), k)
                        .unwrap()
                        .into_iter()
                        .map(|p| p.nodes)
                        .collect();
                    let want: Vec<Vec<usize>> = brute.iter().take(k).cloned().collect();
                    assert_eq!(got, want, "seed {seed} {src}->{dst} k={k}");
                }
            }
        }
    }
}

#[test]
fn bundled_path_sets_are_loop_free_and_consistent() {
    for name in topologies::NAMES {
        let topo = topologies::builtin(name).unwrap();
        let ps = PathSet::build(&topo, 4).unwrap();
        assert!(ps.unroutable().is_empty(), "{name}");
        for d in 0..ps.demand_count() {
            let dem = ps.demand(d);
            let mut seen = HashSet::new();
            for p in ps.paths(d) {
                assert_eq!((p.nodes[0], *p.nodes.last().unwrap()), (dem.src, dem.dst));
                let distinct: HashSet<_> = p.nodes.iter().collect();
                assert_eq!(distinct.len(), p.nodes.len());
                for (w, &e) in p.nodes.windows(2).zip(&p.edges) {
                    assert_eq!((topo.edge(e).src, topo.edge(e).dst), (w[0], w[1]));
                }
                assert!(seen.insert(p.nodes.clone()));
            }
            let hops: Vec<usize> = ps.paths(d).iter().map(|p| p.hops()).collect();
            assert!(hops.windows(2).all(|h| h[0] <= h[1]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loads_superpose_and_conserve_volume(seed in any::<u64>(), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let topo = topologies::builtin("geant").unwrap();
        let ps = PathSet::build(&topo, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_routing(&ps, &mut rng);
        let w1: Vec<f64> = (0..ps.demand_count()).map(|_| rng.random_range(0.0..5.0)).collect();
        let w2: Vec<f64> = (0..ps.demand_count()).map(|_| rng.random_range(0.0..5.0)).collect();
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
        let y1 = compute_link_loads(&ps, &w1, &r).unwrap();
        let y2 = compute_link_loads(&ps, &w2, &r).unwrap();
        let y = compute_link_loads(&ps, &mix, &r).unwrap();
        for i in 0..y.len() {
            let want = a * y1[i] + b * y2[i];
            prop_assert!((y[i] - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
        // Total link load equals the split-weighted hop volume.
        let hop_volume: f64 = (0..ps.demand_count())
            .map(|d| {
                ps.paths(d).iter().zip(r.demand(d)).map(|(p, f)| w1[d] * f * p.hops() as f64).sum::<f64>()
            })
            .sum();
        let total: f64 = y1.iter().sum();
        prop_assert!((total - hop_volume).abs() <= 1e-9 * hop_volume);
    }

    #[test]
    fn aggregated_fractions_lie_in_the_unit_interval(seed in any::<u64>()) {
        let topo = topologies::builtin("ta1").unwrap();
        let ps = PathSet::build(&topo, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks: Vec<usize> = (0..10).map(|_| rng.random_range(0..ps.demand_count())).collect::<HashSet<_>>().into_iter().collect();
        let sub = ps.subset(&picks);
        let maps = AggregationMaps::new(&sub);
        let agg = aggregate_routing(&maps, &random_routing(&sub, &mut rng));
        prop_assert!(agg.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn projection_lands_on_the_simplex(values in prop::collection::vec(-2.0f64..2.0, 8)) {
        let topo = topologies::builtin("geant").unwrap();
        let ps = PathSet::build(&topo, 4).unwrap().subset(&[5, 40]);
        let n = ps.path_count();
        let mut r = RoutingConfig::from_fractions(&ps, values[..n].to_vec()).unwrap();
        r.project_to_simplex();
        r.validate(1e-12).unwrap();
    }
}

#[test]
fn disaggregation_round_trips_on_geant_elephants() {
    let topo = topologies::builtin("geant").unwrap();
    let ps = PathSet::build(&topo, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let multi: Vec<usize> = (0..ps.demand_count()).filter(|&d| ps.paths(d).len() > 1).collect();
    let mut recovered = 0;
    for _ in 0..30 {
        let mut picks: Vec<usize> = (0..8).map(|_| multi[rng.random_range(0..multi.len())]).collect();
        picks.sort_unstable();
        picks.dedup();
        let sub = ps.subset(&picks);
        let maps = AggregationMaps::new(&sub);
        let r = random_routing(&sub, &mut rng);
        match disaggregate_routing(&maps, &aggregate_routing(&maps, &r)) {
            Ok(back) => {
                assert!(back.l1_distance(&r) < 1e-8);
                recovered += 1;
            }
            Err(DisaggregationError::Ambiguous { rank, paths }) => {
                assert!(rank < paths);
                assert!(maps.column_rank() < maps.path_count());
            }
            Err(e) => panic!("{e}"),
        }
    }
    assert!(recovered > 0);
}

#[test]
fn disaggregation_is_exact_with_clustered_singular_values() {
    // M^agg here has many singular values at exactly 1; a pseudo-inverse
    // built from its SVD left residuals near 2e-3.
    let topo = topologies::builtin("geant").unwrap();
    let ps = PathSet::build(&topo, 4).unwrap();
    let sub = ps.subset(&[19, 31, 135, 158, 191, 199, 245, 246, 265]);
    let maps = AggregationMaps::new(&sub);
    assert_eq!(maps.column_rank(), maps.path_count());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let r = random_routing(&sub, &mut rng);
        let back = disaggregate_routing(&maps, &aggregate_routing(&maps, &r)).unwrap();
        assert!(back.l1_distance(&r) < 1e-10);
    }
}
