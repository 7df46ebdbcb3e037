//! Synthetic traffic-matrix time series.

mod generate;
mod io;
mod scale;

pub use generate::{generate_components, generate_series, ForegroundRule, GenParams, SeriesComponents};
pub use io::sidecar_path;
pub use scale::{scale_series, ScaleOptions, ScaleOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::Demand;

/// Seconds per day.
pub const DAY_SECONDS: f64 = 86_400.0;

/// Demand volumes per sample step over all ordered node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSeries {
    demands: Vec<Demand>,
    /// `values[s][d]`, one row per sample step.
    values: Vec<Vec<f64>>,
    sample_interval: f64,
    elephants: Vec<usize>,
    seed: u64,
}

/// Sidecar metadata stored next to the series CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub sample_interval: f64,
    pub elephants: Vec<usize>,
    pub seed: u64,
    pub steps: usize,
}

impl DemandSeries {
    pub fn new(
        demands: Vec<Demand>,
        values: Vec<Vec<f64>>,
        sample_interval: f64,
        elephants: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        if !(sample_interval > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample interval {sample_interval} must be positive"
            )));
        }
        for row in &values {
            if row.len() != demands.len() {
                return Err(Error::dim("traffic row", demands.len(), row.len()));
            }
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("invalid demand volume {v}")));
            }
        }
        let mut seen = elephants.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != elephants.len() || seen.last().is_some_and(|&e| e >= demands.len()) {
            return Err(Error::InvalidParameter(
                "elephant indices must be distinct demand indices".into(),
            ));
        }
        Ok(Self {
            demands,
            values,
            sample_interval,
            elephants,
            seed,
        })
    }

    pub fn demands(&self) -> &[Demand] {
        &self.demands
    }

    pub fn demand_count(&self) -> usize {
        self.demands.len()
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s]
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn elephants(&self) -> &[usize] {
        &self.elephants
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> SeriesMeta {
        SeriesMeta {
            sample_interval: self.sample_interval,
            elephants: self.elephants.clone(),
            seed: self.seed,
            steps: self.steps(),
        }
    }

    /// Every entry multiplied by `gamma`.
    pub fn scaled(&self, gamma: f64) -> DemandSeries {
        let values = self
            .values
            .iter()
            .map(|r| r.iter().map(|v| v * gamma).collect())
            .collect();
        DemandSeries {
            values,
            ..self.clone()
        }
    }

    /// Same metadata with new rows (e.g. reshaped traffic).
    pub fn with_rows(&self, values: Vec<Vec<f64>>) -> Result<DemandSeries> {
        DemandSeries::new(
            self.demands.clone(),
            values,
            self.sample_interval,
            self.elephants.clone(),
            self.seed,
        )
    }

    /// Time mean of every demand.
    pub fn time_means(&self) -> Vec<f64> {
        time_means(&self.values)
    }

    /// Steps `start..end` as a new series.
    pub fn window(&self, start: usize, end: usize) -> DemandSeries {
        DemandSeries {
            values: self.values[start..end].to_vec(),
            ..self.clone()
        }
    }
}

pub fn time_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; width];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows.len().max(1) as f64);
    mean
}

/// The `count` demands with the largest time-mean volume, ties broken by
/// lower index; returned in ascending index order.
pub fn select_elephants(rows: &[Vec<f64>], count: usize) -> Result<Vec<usize>> {
    let means = time_means(rows);
    if count > means.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot pick {count} elephants among {} demands",
            means.len()
        )));
    }
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let mut chosen = order[..count].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Replaces every demand, within each block of `n` steps, by its
/// least-squares polynomial fit of the given degree (0: block mean, 1: line).
pub fn fit_within_intervals(rows: &[Vec<f64>], n: usize, degree: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || rows.len() % n != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} steps do not split into blocks of {n}",
            rows.len()
        )));
    }
    if degree > 1 {
        return Err(Error::InvalidParameter("only degree 0 and 1 fits are supported".into()));
    }
    let width = rows.first().map_or(0, Vec::len);
    let center = (n as f64 - 1.0) / 2.0;
    let sxx: f64 = (0..n).map(|j| (j as f64 - center).powi(2)).sum();
    let mut out = Vec::with_capacity(rows.len());
    for block in rows.chunks(n) {
        let mut fitted = vec![vec![0.0; width]; n];
        for d in 0..width {
            let mean = block.iter().map(|r| r[d]).sum::<f64>() / n as f64;
            let slope = if degree == 1 && sxx > 0.0 {
                block
                    .iter()
                    .enumerate()
                    .map(|(j, r)| (j as f64 - center) * r[d])
                    .sum::<f64>()
                    / sxx
            } else {
                0.0
            };
            for (j, row) in fitted.iter_mut().enumerate() {
                row[d] = (mean + slope * (j as f64 - center)).max(0.0);
            }
        }
        out.extend(fitted);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_flow_is_the_elephant() {
        let rows = vec![vec![1.0, 9.0, 2.0], vec![1.0, 8.0, 3.0]];
        assert_eq!(select_elephants(&rows, 1).unwrap(), vec![1]);
    }

    #[test]
    fn ties_prefer_low_indices() {
        let rows = vec![vec![1.0; 6]];
        assert_eq!(select_elephants(&rows, 3).unwrap(), vec![0, 1, 2]);
        assert!(select_elephants(&rows, 7).is_err());
    }

    #[test]
    fn interval_fits() {
        let rows: Vec<Vec<f64>> = (0..6).map(|s| vec![(s * s) as f64]).collect();
        let pc = fit_within_intervals(&rows, 3, 0).unwrap();
        assert_eq!(pc[0][0], 5.0 / 3.0);
        assert_eq!(pc[3][0], 50.0 / 3.0);
        let lin: Vec<Vec<f64>> = (0..6).map(|s| vec![2.0 + s as f64]).collect();
        let pl = fit_within_intervals(&lin, 3, 1).unwrap();
        for (a, b) in pl.iter().zip(&lin) {
            assert!((a[0] - b[0]).abs() < 1e-12);
        }
    }

    fn geant_params(seed: u64) -> GenParams {
        GenParams {
            seed,
            ..GenParams::default()
        }
    }

    #[test]
    fn three_days_of_five_minute_samples() {
        let topo = crate::topologies::builtin("geant").unwrap();
        let s = generate_series(&topo, &geant_params(1)).unwrap();
        assert_eq!(s.steps(), 864);
        assert_eq!(s.elephants().len(), 8);
        assert_eq!(s.demand_count(), 22 * 21);
        assert!(s.rows().iter().flatten().all(|&v| v >= 0.0));
        assert_eq!(select_elephants(s.rows(), 8).unwrap(), s.elephants());
    }

    #[test]
    fn foreground_share_near_eighty_percent() {
        let topo = crate::topologies::builtin("geant").unwrap();
        for seed in 0..5 {
            let s = generate_series(&topo, &geant_params(seed)).unwrap();
            let means = s.time_means();
            let total: f64 = means.iter().sum();
            let fg: f64 = s.elephants().iter().map(|&d| means[d]).sum();
            assert!((0.75..=0.85).contains(&(fg / total)), "{}", fg / total);
        }
    }

    #[test]
    fn flat_params_give_constant_series() {
        let topo = crate::topologies::builtin("france").unwrap();
        let params = GenParams {
            amplitude: 0.0,
            noise_level: 0.0,
            days: 1,
            foreground: ForegroundRule::for_topology("france"),
            ..GenParams::default()
        };
        let s = generate_series(&topo, &params).unwrap();
        for row in s.rows() {
            assert_eq!(row, s.row(0));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let topo = crate::topologies::builtin("geant").unwrap();
        let a = generate_series(&topo, &geant_params(9)).unwrap();
        let b = generate_series(&topo, &geant_params(9)).unwrap();
        assert_eq!(a, b);
        let c = generate_series(&topo, &geant_params(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn save_and_load_round_trip() {
        let topo = crate::topologies::builtin("geant").unwrap();
        let params = GenParams {
            days: 1,
            ..geant_params(3)
        };
        let s = generate_series(&topo, &params).unwrap();
        let dir = std::env::temp_dir().join(format!("deepte-series-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("series.csv");
        s.save(&path).unwrap();
        assert!(sidecar_path(&path).exists());
        assert_eq!(DemandSeries::load(&path).unwrap(), s);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_bad_series() {
        let d = vec![Demand::new(0, 1)];
        assert!(DemandSeries::new(d.clone(), vec![vec![-1.0]], 300.0, vec![], 0).is_err());
        assert!(DemandSeries::new(d.clone(), vec![vec![1.0]], 300.0, vec![0, 0], 0).is_err());
        assert!(DemandSeries::new(d, vec![vec![1.0]], 300.0, vec![0], 0).is_ok());
    }
}
