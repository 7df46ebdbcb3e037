use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::net::RoutingConfig;

/// `r <- (1 - weight) r + weight r_hat`, preserving the unit sum.
pub fn mix_split(split: &mut [f64], r_hat: &[f64], weight: f64) {
    for (r, h) in split.iter_mut().zip(r_hat) {
        *r = (1.0 - weight) * *r + weight * h;
    }
    let sum: f64 = split.iter().sum();
    if sum > 0.0 {
        split.iter_mut().for_each(|r| *r /= sum);
    }
}

/// A draw from the flat Dirichlet distribution of dimension `n`.
pub fn flat_dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sum);
    v
}

/// Number of demands touched by one perturbation: `ceil(fraction * n)`, at
/// least one.
pub fn perturbed_count(fraction: f64, demands: usize) -> usize {
    ((fraction * demands as f64).ceil() as usize).clamp(1, demands.max(1))
}

/// Mixes a flat Dirichlet draw into the splits of a uniformly chosen subset
/// of `ceil(fraction * n)` demands.
pub fn perturb<R: Rng + ?Sized>(
    current: &RoutingConfig,
    fraction: f64,
    weight: f64,
    rng: &mut R,
) -> RoutingConfig {
    let mut out = current.clone();
    let n = current.demand_count();
    if n == 0 {
        return out;
    }
    let k = perturbed_count(fraction, n);
    let mut chosen = index::sample(rng, n, k).into_vec();
    chosen.sort_unstable();
    for d in chosen {
        let len = out.demand(d).len();
        if len < 2 {
            continue;
        }
        let r_hat = flat_dirichlet(len, rng);
        mix_split(out.demand_mut(d), &r_hat, weight);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_arithmetic() {
        let mut r = [1.0, 0.0, 0.0, 0.0];
        mix_split(&mut r, &[0.25; 4], 0.05);
        let expected = [0.9625, 0.0125, 0.0125, 0.0125];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn small_fraction_rounds_up() {
        assert_eq!(perturbed_count(0.05, 8), 1);
        assert_eq!(perturbed_count(0.0, 8), 1);
        assert_eq!(perturbed_count(0.2, 8), 2);
        assert_eq!(perturbed_count(1.0, 8), 8);
    }
}
