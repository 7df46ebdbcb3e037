use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intra-interval basis functions evaluated at the sample offsets of one
/// control interval (the unperturbed first sample excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    offsets: Vec<f64>,
    /// `values[i][s] = phi_i(offsets[s])`.
    values: Vec<Vec<f64>>,
}

impl BasisSet {
    /// Offsets `-N/2+1 ..= N/2-1` with `phi_1(o) = o` and
    /// `phi_2(o) = o^2 - mean(o^2)`; `n_phi` selects how many are used.
    pub fn polynomial(samples_per_interval: usize, n_phi: usize) -> Result<Self> {
        let n = samples_per_interval;
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "samples per control interval must be even and at least 2, got {n}"
            )));
        }
        let half = (n / 2) as i64;
        let offsets: Vec<f64> = (-half + 1..half).map(|o| o as f64).collect();
        Self::from_offsets(offsets, n_phi)
    }

    /// Same polynomial family at arbitrary offsets (centered first).
    pub fn from_offsets(offsets: Vec<f64>, n_phi: usize) -> Result<Self> {
        if n_phi > 2 {
            return Err(Error::InvalidParameter(format!(
                "at most two basis functions (linear, quadratic) are available, got {n_phi}"
            )));
        }
        if offsets.is_empty() {
            return Err(Error::InvalidParameter("no sample offsets".into()));
        }
        let m = offsets.len() as f64;
        let center = offsets.iter().sum::<f64>() / m;
        let centered: Vec<f64> = offsets.iter().map(|o| o - center).collect();
        let mut values = Vec::with_capacity(n_phi);
        if n_phi >= 1 {
            values.push(centered.clone());
        }
        if n_phi >= 2 {
            let sq_mean = centered.iter().map(|o| o * o).sum::<f64>() / m;
            values.push(centered.iter().map(|o| o * o - sq_mean).collect());
        }
        Ok(Self { offsets, values })
    }

    pub fn n_phi(&self) -> usize {
        self.values.len()
    }

    /// Samples per window (`N - 1`).
    pub fn samples(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// `phi_i` at sample `s` (0-based basis index).
    pub fn value(&self, i: usize, s: usize) -> f64 {
        self.values[i][s]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Diagonal of `S_i = diag(phi_i(o_s) (x) 1_{n_l})` over the window columns
    /// ordered sample-major, link-minor.
    pub fn scaling_diagonal(&self, i: usize, n_l: usize) -> Vec<f64> {
        self.values[i]
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, n_l))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_samples_give_five_offsets() {
        let b = BasisSet::polynomial(6, 2).unwrap();
        assert_eq!(b.offsets(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(b.values()[0], vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(b.values()[1], vec![2.0, -1.0, -2.0, -1.0, 2.0]);
    }

    #[test]
    fn shipped_bases_have_zero_mean() {
        let b = BasisSet::polynomial(6, 2).unwrap();
        for phi in b.values() {
            assert_eq!(phi.iter().sum::<f64>(), 0.0);
        }
        for n in [2, 4, 8, 10, 12] {
            let b = BasisSet::polynomial(n, 2).unwrap();
            for phi in b.values() {
                assert!(phi.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_interval_is_rejected() {
        assert!(BasisSet::polynomial(5, 1).is_err());
        assert!(BasisSet::polynomial(6, 3).is_err());
    }

    #[test]
    fn scaling_diagonal_repeats_per_link() {
        let b = BasisSet::polynomial(4, 1).unwrap();
        assert_eq!(b.scaling_diagonal(0, 2), vec![-1.0, -1.0, 0.0, 0.0, 1.0, 1.0]);
    }
}
