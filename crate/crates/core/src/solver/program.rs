use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Handle to a program variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(pub usize);

/// Solver-neutral convex program in standard form:
///
/// ```text
/// minimize    c'x + 1/2 x' diag(q) x + constant
/// subject to  A x = b
///             lo <= x <= hi
/// ```
///
/// `q >= 0`, `A` sparse. Inequalities are expressed with slack variables and
/// bounds by the caller.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvexProgram {
    /// Infinite bounds are written as `null` in JSON.
    #[serde(with = "lower_bounds")]
    lower: Vec<f64>,
    #[serde(with = "upper_bounds")]
    upper: Vec<f64>,
    linear: Vec<f64>,
    quadratic: Vec<f64>,
    constant: f64,
    /// `(row, column, value)` triplets of `A`; duplicates are summed.
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl ConvexProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var_count(&self) -> usize {
        self.lower.len()
    }

    pub fn eq_count(&self) -> usize {
        self.rhs.len()
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64) -> Var {
        assert!(!lower.is_nan() && !upper.is_nan(), "NaN bound");
        self.lower.push(lower);
        self.upper.push(upper);
        self.linear.push(0.0);
        self.quadratic.push(0.0);
        Var(self.lower.len() - 1)
    }

    pub fn add_free(&mut self) -> Var {
        self.add_var(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_nonneg(&mut self) -> Var {
        self.add_var(0.0, f64::INFINITY)
    }

    /// Adds `coeff` to the linear objective coefficient of `v`.
    pub fn add_linear(&mut self, v: Var, coeff: f64) {
        self.linear[v.0] += coeff;
    }

    /// Adds `weight` to the diagonal quadratic coefficient of `v`, so the
    /// objective gains `weight / 2 * v^2`.
    pub fn add_quadratic(&mut self, v: Var, weight: f64) {
        assert!(weight >= 0.0, "quadratic weights must be nonnegative");
        self.quadratic[v.0] += weight;
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// Appends the row `sum terms = rhs` and returns its index.
    pub fn add_eq(&mut self, terms: &[(Var, f64)], rhs: f64) -> usize {
        let row = self.rhs.len();
        for &(v, a) in terms {
            assert!(v.0 < self.var_count(), "unknown variable");
            if a != 0.0 {
                self.triplets.push((row, v.0, a));
            }
        }
        self.rhs.push(rhs);
        row
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[f64] {
        &self.quadratic
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Checks dimensions, bound ordering and the sign of `q`.
    pub fn validate(&self) -> Result<()> {
        let n = self.var_count();
        for (name, len) in [
            ("upper bounds", self.upper.len()),
            ("linear objective", self.linear.len()),
            ("quadratic objective", self.quadratic.len()),
        ] {
            if len != n {
                return Err(Error::dim(name, n, len));
            }
        }
        if let Some(&(r, c, _)) = self
            .triplets
            .iter()
            .find(|&&(r, c, _)| r >= self.rhs.len() || c >= n)
        {
            return Err(Error::InvalidParameter(format!(
                "constraint entry ({r}, {c}) outside {}x{n}",
                self.rhs.len()
            )));
        }
        if self.quadratic.iter().any(|&q| !(q >= 0.0)) {
            return Err(Error::InvalidParameter(
                "quadratic weights must be nonnegative".into(),
            ));
        }
        if self.triplets.iter().any(|t| !t.2.is_finite()) || self.rhs.iter().any(|b| !b.is_finite())
        {
            return Err(Error::InvalidParameter("non-finite constraint data".into()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for i in 0..x.len() {
            v += self.linear[i] * x[i] + 0.5 * self.quadratic[i] * x[i] * x[i];
        }
        v
    }

    /// `A x - b`.
    pub fn eq_residuals(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for &(row, col, a) in &self.triplets {
            r[row] += a * x[col];
        }
        r
    }

    /// Largest absolute equality violation.
    pub fn max_eq_residual(&self, x: &[f64]) -> f64 {
        self.eq_residuals(x)
            .into_iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Largest violation of the variable bounds.
    pub fn max_bound_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .fold(0.0, |m, (&xi, (&lo, &hi))| {
                m.max(lo - xi).max(xi - hi)
            })
    }

    /// Writes the program as JSON for cross-checking with external solvers.
    pub fn dump_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

fn serialize_bounds<S: serde::Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|b| b.is_finite().then_some(*b)))
}

fn deserialize_bounds<'de, D: serde::Deserializer<'de>>(d: D, missing: f64) -> Result<Vec<f64>, D::Error> {
    let raw: Vec<Option<f64>> = Deserialize::deserialize(d)?;
    Ok(raw.into_iter().map(|b| b.unwrap_or(missing)).collect())
}

mod lower_bounds {
    pub fn serialize<S: serde::Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        super::serialize_bounds(v, s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        super::deserialize_bounds(d, f64::NEG_INFINITY)
    }
}

mod upper_bounds {
    pub fn serialize<S: serde::Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        super::serialize_bounds(v, s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        super::deserialize_bounds(d, f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_rows_and_objective() {
        let mut p = ConvexProgram::new();
        let x = p.add_var(0.0, 10.0);
        let y = p.add_free();
        p.add_linear(x, 2.0);
        p.add_quadratic(y, 4.0);
        p.add_eq(&[(x, 1.0), (y, -1.0)], 1.0);
        assert_eq!(p.var_count(), 2);
        assert_eq!(p.eq_count(), 1);
        assert_eq!(p.objective(&[1.0, 2.0]), 2.0 + 8.0);
        assert_eq!(p.eq_residuals(&[3.0, 2.0]), vec![0.0]);
        assert_eq!(p.max_bound_violation(&[11.0, 0.0]), 1.0);
        p.validate().unwrap();
    }

    #[test]
    fn json_dump_round_trips() {
        let mut p = ConvexProgram::new();
        let x = p.add_nonneg();
        let y = p.add_free();
        p.add_linear(x, 1.0);
        p.add_eq(&[(x, 2.0), (y, 1.0)], 3.0);
        let back = ConvexProgram::from_json(&p.dump_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
