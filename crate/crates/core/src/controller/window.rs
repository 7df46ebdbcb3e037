use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::BasisSet;
use crate::error::{Error, Result};
use crate::net::{aggregate_routing, AggregationMaps, RoutingConfig};

/// One perturbed sample: elephant routing in effect and the measured loads.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub routing: RoutingConfig,
    /// `n'_w x n_l` aggregated fractions of `routing`.
    pub ragg: DMatrix<f64>,
    pub loads: Vec<f64>,
}

impl SampleRecord {
    pub fn new(maps: &AggregationMaps, routing: RoutingConfig, loads: Vec<f64>) -> Self {
        let ragg = aggregate_routing(maps, &routing);
        Self {
            routing,
            ragg,
            loads,
        }
    }
}

/// The perturbed samples of one completed control interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub interval: usize,
    pub records: Vec<SampleRecord>,
}

/// Result of the persistent-excitation test on one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcitationReport {
    pub full_rank: bool,
    pub rank: usize,
    pub required: usize,
}

/// The per-link data matrix of one window.
///
/// Column `(s, j)` (sample-major, link-minor) holds
/// `[r_j(s); phi_1(s) r_j(s); ..; e_j; phi_1(s) e_j; ..]` where `r_j(s)` is
/// column `j` of the aggregated routing; `loads[(s, j)]` is the matching
/// measured load `y_j(s)`.
#[derive(Debug, Clone)]
pub struct WindowData {
    n_w: usize,
    n_l: usize,
    n_phi: usize,
    columns: Vec<Vec<(usize, f64)>>,
    loads: Vec<f64>,
}

impl WindowData {
    pub fn build(window: &SampleWindow, basis: &BasisSet, n_w: usize, n_l: usize) -> Result<Self> {
        if window.records.len() != basis.samples() {
            return Err(Error::InsufficientData(format!(
                "window of interval {} has {} samples, expected {}",
                window.interval,
                window.records.len(),
                basis.samples()
            )));
        }
        let n_phi = basis.n_phi();
        let blocks = 1 + n_phi;
        let mut columns = Vec::with_capacity(basis.samples() * n_l);
        let mut loads = Vec::with_capacity(basis.samples() * n_l);
        for (s, rec) in window.records.iter().enumerate() {
            if rec.ragg.shape() != (n_w, n_l) {
                return Err(Error::dim("aggregated routing rows", n_w, rec.ragg.nrows()));
            }
            if rec.loads.len() != n_l {
                return Err(Error::dim("link load vector", n_l, rec.loads.len()));
            }
            let scale: Vec<f64> = std::iter::once(1.0)
                .chain((0..n_phi).map(|i| basis.value(i, s)))
                .collect();
            for j in 0..n_l {
                let mut col = Vec::new();
                for (b, &c) in scale.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    for d in 0..n_w {
                        let v = rec.ragg[(d, j)];
                        if v != 0.0 {
                            col.push((b * n_w + d, c * v));
                        }
                    }
                }
                for (b, &c) in scale.iter().enumerate() {
                    if c != 0.0 {
                        col.push((blocks * n_w + b * n_l + j, c));
                    }
                }
                columns.push(col);
                loads.push(rec.loads[j]);
            }
        }
        Ok(Self {
            n_w,
            n_l,
            n_phi,
            columns,
            loads,
        })
    }

    /// `(n'_w + n_l)(1 + n_phi)`.
    pub fn row_count(&self) -> usize {
        (self.n_w + self.n_l) * (1 + self.n_phi)
    }

    /// `n_g = (N - 1) n_l`.
    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<(usize, f64)>] {
        &self.columns
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    /// Row index of the unit entry of `e_i` in the unscaled block.
    pub fn indicator_row(&self, link: usize) -> usize {
        (1 + self.n_phi) * self.n_w + link
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.row_count(), self.column_count());
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Numerical rank test of the routing/indicator rows.
    pub fn excitation(&self, rtol: f64) -> ExcitationReport {
        let required = self.row_count();
        let sv = self.dense().singular_values();
        let max = sv.max();
        let rank = if max > 0.0 {
            sv.iter().filter(|&&s| s > rtol * max).count()
        } else {
            0
        };
        ExcitationReport {
            full_rank: rank == required,
            rank,
            required,
        }
    }

    /// Right-hand side `[r_i; 0; e_i; 0]` for target link `i`.
    pub fn target(&self, ragg: &DMatrix<f64>, link: usize) -> DVector<f64> {
        let mut t = DVector::zeros(self.row_count());
        for d in 0..self.n_w {
            t[d] = ragg[(d, link)];
        }
        t[self.indicator_row(link)] = 1.0;
        t
    }

    /// Dummy loads for a candidate aggregated routing: for each link `i`,
    /// the least-norm `g` with `D g = target_i` followed by `y_i = loads . g`.
    ///
    /// Returns the loads and the largest residual of `D g = target_i`.
    pub fn dummy_loads(&self, ragg: &DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
        if ragg.shape() != (self.n_w, self.n_l) {
            return Err(Error::dim("aggregated routing rows", self.n_w, ragg.nrows()));
        }
        let d = self.dense();
        let svd = d.clone().svd(true, true);
        let eps = 1e-12 * svd.singular_values.max();
        let y = DVector::from_column_slice(&self.loads);
        let mut out = Vec::with_capacity(self.n_l);
        let mut worst = 0.0f64;
        for i in 0..self.n_l {
            let t = self.target(ragg, i);
            let g = svd.solve(&t, eps).expect("svd computed with both factors");
            worst = worst.max((&d * &g - &t).amax());
            out.push(y.dot(&g));
        }
        Ok((out, worst))
    }
}

/// Persistent-excitation test of a completed window.
pub fn check_persistent_excitation(
    window: &SampleWindow,
    basis: &BasisSet,
    maps: &AggregationMaps,
    rtol: f64,
) -> Result<ExcitationReport> {
    let data = WindowData::build(window, basis, maps.demand_count(), maps.edge_count())?;
    Ok(data.excitation(rtol))
}
