//! Convex piecewise-linear link delay cost.
//!
//! `f(u)` is zero at zero utilization, has slope `slopes[0]` up to
//! `breakpoints[0]`, slope `slopes[1]` up to `breakpoints[1]`, and so on; the
//! last slope extends to infinity so overloaded links keep a finite cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DelaySpec", into = "DelaySpec")]
pub struct DelayFunction {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    /// `f` at each breakpoint.
    knots: Vec<f64>,
}

/// Serialized form: paired breakpoint and slope lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelaySpec {
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl TryFrom<DelaySpec> for DelayFunction {
    type Error = Error;

    fn try_from(spec: DelaySpec) -> Result<Self> {
        DelayFunction::new(spec.breakpoints, spec.slopes)
    }
}

impl From<DelayFunction> for DelaySpec {
    fn from(f: DelayFunction) -> Self {
        DelaySpec {
            breakpoints: f.breakpoints,
            slopes: f.slopes,
        }
    }
}

/// One affine piece `f(u) >= slope * u + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePiece {
    pub slope: f64,
    pub intercept: f64,
}

/// Epigraph inequality `cost_link >= coeff * load_link + offset`, with the
/// capacity already folded into `coeff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpigraphTerm {
    pub link: usize,
    pub coeff: f64,
    pub offset: f64,
}

impl Default for DelayFunction {
    fn default() -> Self {
        Self::new(
            vec![1.0 / 3.0, 2.0 / 3.0, 0.9, 1.0, 1.1],
            vec![1.0, 3.0, 10.0, 70.0, 500.0, 5000.0],
        )
        .expect("default delay function is convex")
    }
}

impl DelayFunction {
    /// `slopes.len()` must be `breakpoints.len() + 1`; breakpoints strictly
    /// increasing and positive; slopes positive and strictly increasing.
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "delay function needs one more slope than breakpoints ({} vs {})",
                slopes.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.first().is_some_and(|&b| b <= 0.0)
            || breakpoints.windows(2).any(|w| w[1] <= w[0])
            || breakpoints.iter().any(|b| !b.is_finite())
        {
            return Err(Error::InvalidParameter(
                "delay breakpoints must be positive and strictly increasing".into(),
            ));
        }
        if slopes[0] <= 0.0 || slopes.windows(2).any(|w| w[1] <= w[0]) || slopes.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "delay slopes must be positive and strictly increasing (convexity)".into(),
            ));
        }
        let mut f = Self {
            breakpoints,
            slopes,
            knots: Vec::new(),
        };
        f.knots = f.compute_knots();
        Ok(f)
    }

    fn compute_knots(&self) -> Vec<f64> {
        let mut knots = Vec::with_capacity(self.breakpoints.len());
        let (mut prev_b, mut acc) = (0.0, 0.0);
        for (b, s) in self.breakpoints.iter().zip(&self.slopes) {
            acc += s * (b - prev_b);
            knots.push(acc);
            prev_b = *b;
        }
        knots
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// `f(u)` for `u >= 0`.
    pub fn eval(&self, utilization: f64) -> Result<f64> {
        if utilization < 0.0 || utilization.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "negative utilization {utilization}"
            )));
        }
        Ok(self.eval_unchecked(utilization))
    }

    fn eval_unchecked(&self, u: f64) -> f64 {
        let seg = self.breakpoints.partition_point(|&b| b < u);
        let (start, base) = if seg == 0 {
            (0.0, 0.0)
        } else {
            (self.breakpoints[seg - 1], self.knots[seg - 1])
        };
        base + self.slopes[seg] * (u - start)
    }

    /// Affine forms whose pointwise maximum equals `f` on `u >= 0`.
    pub fn affine_pieces(&self) -> Vec<AffinePiece> {
        let mut out = Vec::with_capacity(self.slopes.len());
        out.push(AffinePiece {
            slope: self.slopes[0],
            intercept: 0.0,
        });
        for (k, (&b, &fb)) in self.breakpoints.iter().zip(&self.knots).enumerate() {
            let slope = self.slopes[k + 1];
            out.push(AffinePiece {
                slope,
                intercept: fb - slope * b,
            });
        }
        out
    }

    /// Linear inequalities `cost >= (a_k / C) * load + b_k`, one per segment.
    pub fn epigraph_terms(&self, link: usize, capacity: f64) -> Result<Vec<EpigraphTerm>> {
        if !(capacity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "link {link} has nonpositive capacity {capacity}"
            )));
        }
        Ok(self
            .affine_pieces()
            .into_iter()
            .map(|p| EpigraphTerm {
                link,
                coeff: p.slope / capacity,
                offset: p.intercept,
            })
            .collect())
    }

    /// `sum_l f(y_l / C_l)`.
    pub fn total_delay(&self, loads: &[f64], capacities: &[f64]) -> Result<f64> {
        if loads.len() != capacities.len() {
            return Err(Error::dim("load vector", capacities.len(), loads.len()));
        }
        let mut total = 0.0;
        for (y, c) in loads.iter().zip(capacities) {
            total += self.eval(y.max(0.0) / c)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_values() {
        let f = DelayFunction::default();
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        assert!((f.eval(0.5).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!(f.eval(-0.1).is_err());
    }

    #[test]
    fn exact_on_breakpoints() {
        let f = DelayFunction::default();
        // 1/3, then +3*(1/3), then +10*(0.9-2/3), ...
        let expected = [1.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0 + 10.0 * (0.9 - 2.0 / 3.0)];
        for (b, e) in f.breakpoints()[..3].iter().zip(expected) {
            assert!((f.eval(*b).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn just_above_breakpoints_uses_next_segment() {
        let f = DelayFunction::default();
        let pieces = f.affine_pieces();
        for (k, &b) in f.breakpoints().iter().enumerate() {
            let u = b + 1e-7;
            let next = pieces[k + 1];
            assert!((f.eval(u).unwrap() - (next.slope * u + next.intercept)).abs() < 1e-9);
        }
    }

    #[test]
    fn beyond_last_breakpoint_last_piece_is_active() {
        let f = DelayFunction::default();
        let pieces = f.affine_pieces();
        let last = pieces.last().unwrap();
        for u in [1.2, 2.0, 10.0] {
            let max = pieces
                .iter()
                .map(|p| p.slope * u + p.intercept)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(max, last.slope * u + last.intercept);
            assert!((f.eval(u).unwrap() - max).abs() < 1e-9 * max);
        }
    }

    #[test]
    fn single_segment_epigraph() {
        let f = DelayFunction::new(vec![], vec![1.0]).unwrap();
        let terms = f.epigraph_terms(3, 10.0).unwrap();
        assert_eq!(
            terms,
            vec![EpigraphTerm {
                link: 3,
                coeff: 0.1,
                offset: 0.0
            }]
        );
    }

    #[test]
    fn epigraph_max_at_half_utilization() {
        let f = DelayFunction::default();
        let terms = f.epigraph_terms(0, 100.0).unwrap();
        let max = terms
            .iter()
            .map(|t| t.coeff * 50.0 + t.offset)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((max - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonconvex() {
        assert!(DelayFunction::new(vec![0.5], vec![2.0, 1.0]).is_err());
        assert!(DelayFunction::new(vec![0.5, 0.4], vec![1.0, 2.0, 3.0]).is_err());
        assert!(DelayFunction::new(vec![0.5], vec![1.0]).is_err());
        assert!(DelayFunction::new(vec![], vec![0.0]).is_err());
    }

    #[test]
    fn total_delay_sums_links() {
        let f = DelayFunction::default();
        assert_eq!(f.total_delay(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((f.total_delay(&[5.0], &[10.0]).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!(f.total_delay(&[1.0], &[1.0, 2.0]).is_err());
    }
}
