//! Scalar-coefficient linear predictor for control-interval mean traffic.
//!
//! `w_hat(k + h) = sum_{p=1..L} X[p, h] * w_bar(k - p)`. The coefficients are
//! shared by every demand, which is what lets the controller push the
//! prediction through the (linear) load map without ever seeing `w_hat`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge weight of the least-squares fit.
pub const RIDGE_LAMBDA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    past: usize,
    horizon: usize,
    /// Row-major `L x H`: entry `(p - 1) * H + h` is `X[p, h]`.
    coefficients: Vec<f64>,
}

impl PredictorModel {
    pub fn new(past: usize, horizon: usize, coefficients: Vec<f64>) -> Result<Self> {
        if past == 0 || horizon == 0 {
            return Err(Error::InvalidParameter(
                "predictor horizons must be positive".into(),
            ));
        }
        if coefficients.len() != past * horizon {
            return Err(Error::dim("predictor coefficients", past * horizon, coefficients.len()));
        }
        Ok(Self {
            past,
            horizon,
            coefficients,
        })
    }

    /// `X[p, h] = 1/L`: the plain moving average.
    pub fn moving_average(past: usize, horizon: usize) -> Result<Self> {
        Self::new(past, horizon, vec![1.0 / past as f64; past * horizon])
    }

    pub fn past(&self) -> usize {
        self.past
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `X[p, h]` for `p` in `1..=L`, `h` in `0..H`.
    pub fn coeff(&self, p: usize, h: usize) -> f64 {
        assert!((1..=self.past).contains(&p) && h < self.horizon);
        self.coefficients[(p - 1) * self.horizon + h]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Self = serde_json::from_str(text)?;
        Self::new(raw.past, raw.horizon, raw.coefficients)
    }
}

/// Per-interval means of `rows` (one row per sample step) over blocks of `n`.
pub fn control_interval_means(rows: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || rows.len() % n != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} samples do not split into intervals of {n}",
            rows.len()
        )));
    }
    let width = rows.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(rows.len() / n);
    for block in rows.chunks(n) {
        let mut mean = vec![0.0; width];
        for row in block {
            if row.len() != width {
                return Err(Error::dim("traffic row", width, row.len()));
            }
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        out.push(mean);
    }
    Ok(out)
}

/// Design and target matrices of the fit: one row per (interval `k`, demand)
/// with history `[w_bar(k-1) .. w_bar(k-L)]` and future `[w_bar(k) .. w_bar(k+H-1)]`.
pub fn hankel_data(
    means: &[Vec<f64>],
    past: usize,
    horizon: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if means.len() < past + horizon {
        return Err(Error::InsufficientData(format!(
            "{} interval means, need at least {}",
            means.len(),
            past + horizon
        )));
    }
    let width = means[0].len();
    let starts = means.len() - past - horizon + 1;
    let rows = starts * width;
    let mut history = DMatrix::zeros(rows, past);
    let mut future = DMatrix::zeros(rows, horizon);
    for i in 0..starts {
        let k = i + past;
        for d in 0..width {
            let row = i * width + d;
            for p in 1..=past {
                history[(row, p - 1)] = means[k - p][d];
            }
            for h in 0..horizon {
                future[(row, h)] = means[k + h][d];
            }
        }
    }
    Ok((history, future))
}

/// Ridge least squares `argmin ||W_f - W_h X||^2 + lambda ||X||^2`.
pub fn fit_predictor(means: &[Vec<f64>], past: usize, horizon: usize) -> Result<PredictorModel> {
    if past == 0 || horizon == 0 {
        return Err(Error::InvalidParameter(
            "predictor horizons must be positive".into(),
        ));
    }
    let (wh, wf) = hankel_data(means, past, horizon)?;
    let mut gram = wh.transpose() * &wh;
    for i in 0..past {
        gram[(i, i)] += RIDGE_LAMBDA;
    }
    let rhs = wh.transpose() * wf;
    let x = gram
        .cholesky()
        .ok_or_else(|| Error::InsufficientData("predictor normal equations are singular".into()))?
        .solve(&rhs);
    let mut coefficients = Vec::with_capacity(past * horizon);
    for p in 0..past {
        for h in 0..horizon {
            coefficients.push(x[(p, h)]);
        }
    }
    PredictorModel::new(past, horizon, coefficients)
}

/// `H` predicted mean vectors; `recent[p - 1]` must be `w_bar(k - p)`.
pub fn predict_means(model: &PredictorModel, recent: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if recent.len() != model.past {
        return Err(Error::dim("recent interval means", model.past, recent.len()));
    }
    let width = recent[0].len();
    if let Some(bad) = recent.iter().find(|r| r.len() != width) {
        return Err(Error::dim("interval mean", width, bad.len()));
    }
    Ok((0..model.horizon)
        .map(|h| {
            let mut out = vec![0.0; width];
            for (p, mean) in recent.iter().enumerate() {
                let c = model.coeff(p + 1, h);
                for (o, v) in out.iter_mut().zip(mean) {
                    *o += c * v;
                }
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_means() {
        let rows: Vec<Vec<f64>> = (0..6).map(|s| vec![s as f64, 2.0]).collect();
        let m = control_interval_means(&rows, 3).unwrap();
        assert_eq!(m, vec![vec![1.0, 2.0], vec![4.0, 2.0]]);
        assert!(control_interval_means(&rows, 4).is_err());
    }

    #[test]
    fn constant_training_gives_average() {
        let means = vec![vec![5.0, 5.0, 5.0]; 40];
        let model = fit_predictor(&means, 3, 2).unwrap();
        for &c in model.coefficients() {
            assert!((c - 1.0 / 3.0).abs() < 1e-8, "{c}");
        }
        let pred = predict_means(&model, &means[..3]).unwrap();
        assert!(pred.iter().flatten().all(|v| (v - 5.0).abs() < 1e-8));
    }

    #[test]
    fn linear_trend_is_extrapolated() {
        // Two days of 30-minute means at Mbps scale.
        let means: Vec<Vec<f64>> = (0..96)
            .map(|k| vec![100.0 + 5.0 * k as f64, 1000.0 - 2.0 * k as f64])
            .collect();
        let model = fit_predictor(&means, 3, 2).unwrap();
        let k = 60;
        let recent: Vec<Vec<f64>> = (1..=3).map(|p| means[k - p].clone()).collect();
        let pred = predict_means(&model, &recent).unwrap();
        for h in 0..2 {
            for d in 0..2 {
                assert!((pred[h][d] - means[k + h][d]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn shape_and_errors() {
        let means = vec![vec![1.0]; 4];
        assert!(fit_predictor(&means, 3, 2).is_err());
        let model = PredictorModel::moving_average(3, 2).unwrap();
        assert_eq!(model.coefficients().len(), 6);
        assert!(predict_means(&model, &means[..2]).is_err());
        let back = PredictorModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn picks_most_recent() {
        let model = PredictorModel::new(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let recent = vec![vec![7.0], vec![1.0], vec![2.0]];
        assert_eq!(predict_means(&model, &recent).unwrap(), vec![vec![7.0]]);
    }
}
