use std::f64::consts::TAU;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DemandSeries, DAY_SECONDS};
use crate::error::{Error, Result};
use crate::net::{Demand, Topology};

/// Total base volume before utilization scaling, in rate units.
const BASE_TOTAL: f64 = 1000.0;

/// How foreground (elephant) pairs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForegroundRule {
    /// Uniform among pairs whose shortest path has at least `min_hops` hops.
    LongPairs { min_hops: usize },
    /// Uniform among ordered pairs of the `count` highest-degree nodes.
    KeyNodes { count: usize },
}

impl ForegroundRule {
    /// The rule used for a named topology: long pairs on geant, key nodes elsewhere.
    pub fn for_topology(name: &str) -> Self {
        if name.eq_ignore_ascii_case("geant") {
            ForegroundRule::LongPairs { min_hops: 2 }
        } else {
            ForegroundRule::KeyNodes { count: 7 }
        }
    }

    fn candidates(&self, topo: &Topology, demands: &[Demand]) -> Vec<usize> {
        match *self {
            ForegroundRule::LongPairs { min_hops } => {
                let dist: Vec<Vec<Option<usize>>> =
                    (0..topo.node_count()).map(|s| topo.hop_distances(s)).collect();
                (0..demands.len())
                    .filter(|&d| {
                        let dem = demands[d];
                        dist[dem.src][dem.dst].is_some_and(|h| h >= min_hops)
                    })
                    .collect()
            }
            ForegroundRule::KeyNodes { count } => {
                let mut nodes: Vec<usize> = (0..topo.node_count()).collect();
                nodes.sort_by(|&a, &b| topo.degree(b).cmp(&topo.degree(a)).then(a.cmp(&b)));
                let mut key = vec![false; topo.node_count()];
                for &v in nodes.iter().take(count) {
                    key[v] = true;
                }
                (0..demands.len())
                    .filter(|&d| key[demands[d].src] && key[demands[d].dst])
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub days: usize,
    /// Sample interval in seconds.
    pub sample_interval: f64,
    pub elephant_count: usize,
    /// Fraction of the total volume carried by background flows.
    pub background_share: f64,
    pub diurnal_period: f64,
    /// Relative sinusoid amplitude.
    pub amplitude: f64,
    /// Standard deviation of the multiplicative Gaussian noise.
    pub noise_level: f64,
    pub seed: u64,
    /// Mean link utilization aimed at by [`super::scale_series`].
    pub utilization_target: f64,
    pub foreground: ForegroundRule,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            days: 3,
            sample_interval: 300.0,
            elephant_count: 8,
            background_share: 0.2,
            diurnal_period: DAY_SECONDS,
            amplitude: 0.4,
            noise_level: 0.05,
            seed: 0,
            utilization_target: 0.35,
            foreground: ForegroundRule::LongPairs { min_hops: 2 },
        }
    }
}

impl GenParams {
    pub fn steps(&self) -> usize {
        (self.days as f64 * DAY_SECONDS / self.sample_interval).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.days == 0 {
            return bad("days must be positive");
        }
        if !(self.sample_interval > 0.0) {
            return bad("sample interval must be positive");
        }
        let per_day = DAY_SECONDS / self.sample_interval;
        if (per_day - per_day.round()).abs() > 1e-9 {
            return bad("sample interval must divide one day");
        }
        if !(self.background_share > 0.0 && self.background_share < 1.0) {
            return bad("background share must lie in (0, 1)");
        }
        if !(self.diurnal_period > 0.0) {
            return bad("diurnal period must be positive");
        }
        if !(self.amplitude >= 0.0) || !(self.noise_level >= 0.0) {
            return bad("amplitude and noise level must be nonnegative");
        }
        Ok(())
    }
}

/// The two factors of a generated series: the noiseless diurnal volumes and
/// the multiplicative noise applied on top of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesComponents {
    pub demands: Vec<Demand>,
    pub clean: Vec<Vec<f64>>,
    pub noise: Vec<Vec<f64>>,
    pub elephants: Vec<usize>,
}

impl SeriesComponents {
    /// `max(clean * noise, 0)` after an optional reshaping of the clean part.
    pub fn combine(&self, clean: &[Vec<f64>]) -> Vec<Vec<f64>> {
        clean
            .iter()
            .zip(&self.noise)
            .map(|(c, z)| c.iter().zip(z).map(|(a, b)| (a * b).max(0.0)).collect())
            .collect()
    }
}

pub fn generate_components(topo: &Topology, params: &GenParams) -> Result<SeriesComponents> {
    params.validate()?;
    let demands = Demand::all_pairs(topo.node_count());
    let candidates = params.foreground.candidates(topo, &demands);
    if params.elephant_count > candidates.len() {
        return Err(Error::InvalidParameter(format!(
            "{} foreground flows requested but only {} eligible pairs",
            params.elephant_count,
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut elephants: Vec<usize> = index::sample(&mut rng, candidates.len(), params.elephant_count)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    elephants.sort_unstable();

    let n_w = demands.len();
    let mut base: Vec<f64> = (0..n_w).map(|_| rng.random_range(0.5..1.5)).collect();
    let bg_sum: f64 = base.iter().sum();
    base.iter_mut()
        .for_each(|b| *b *= params.background_share * BASE_TOTAL / bg_sum);
    let fg: Vec<f64> = (0..elephants.len()).map(|_| rng.random_range(0.5..1.5)).collect();
    let fg_sum: f64 = fg.iter().sum();
    for (&d, f) in elephants.iter().zip(&fg) {
        base[d] += f * (1.0 - params.background_share) * BASE_TOTAL / fg_sum;
    }
    let phases: Vec<f64> = (0..n_w).map(|_| rng.random_range(0.0..TAU)).collect();

    let steps = params.steps();
    let mut clean = Vec::with_capacity(steps);
    let mut noise = Vec::with_capacity(steps);
    for s in 0..steps {
        let t = s as f64 * params.sample_interval;
        let arg = TAU * t / params.diurnal_period;
        clean.push(
            (0..n_w)
                .map(|d| base[d] * (1.0 + params.amplitude * (arg + phases[d]).sin()))
                .collect::<Vec<f64>>(),
        );
        noise.push(
            (0..n_w)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    1.0 + params.noise_level * z
                })
                .collect::<Vec<f64>>(),
        );
    }
    Ok(SeriesComponents {
        demands,
        clean,
        noise,
        elephants,
    })
}

/// Diurnal series with background flows on every pair and
/// `params.elephant_count` foreground flows, unscaled.
pub fn generate_series(topo: &Topology, params: &GenParams) -> Result<DemandSeries> {
    let comp = generate_components(topo, params)?;
    let values = comp.combine(&comp.clean);
    DemandSeries::new(
        comp.demands,
        values,
        params.sample_interval,
        comp.elephants,
        params.seed,
    )
}
