use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::run::MetricsReport;
use super::Method;
use crate::error::{Error, Result};

/// One row of the per-step CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub time_s: f64,
    pub method: Method,
    pub delay: f64,
    pub opt_delay: f64,
    pub pr: f64,
    pub rc: f64,
    #[serde(with = "flag")]
    pub fallback: bool,
    /// Set on DeeP-TE decision steps only.
    pub pe_rank: Option<usize>,
}

mod flag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        Ok(u8::deserialize(d)? != 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub series: String,
    pub method: Method,
    pub mean_pr: f64,
    pub mean_rc: f64,
    pub median_pr: f64,
    pub fallback_frac: f64,
}

/// Quartiles of the per-series means of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub series: usize,
    pub pr_q1: f64,
    pub pr_median: f64,
    pub pr_q3: f64,
    pub rc_q1: f64,
    pub rc_median: f64,
    pub rc_q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    pub stats: Vec<MethodStats>,
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Linear-interpolation quantile (`q` in [0, 1]); NaN for no values.
pub fn quantile(values: impl IntoIterator<Item = f64>, q: f64) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    quantile(values, 0.5)
}

/// Per-series averages and per-method quartiles over series.
pub fn aggregate_metrics(reports: &[(String, MetricsReport)]) -> Result<SummaryTable> {
    if reports.is_empty() {
        return Err(Error::InsufficientData("no reports to aggregate".into()));
    }
    let rows: Vec<SummaryRow> = reports.iter().map(|(series, r)| r.summary(series)).collect();
    Ok(summary_table(rows))
}

/// Per-method quartiles over the given per-series rows.
pub fn summary_table(rows: Vec<SummaryRow>) -> SummaryTable {
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let stats = methods
        .into_iter()
        .map(|m| {
            let of = |f: fn(&SummaryRow) -> f64| -> Vec<f64> {
                rows.iter().filter(|r| r.method == m).map(f).collect()
            };
            let pr = of(|r| r.mean_pr);
            let rc = of(|r| r.mean_rc);
            MethodStats {
                method: m,
                series: pr.len(),
                pr_q1: quantile(pr.iter().copied(), 0.25),
                pr_median: median(pr.iter().copied()),
                pr_q3: quantile(pr.iter().copied(), 0.75),
                rc_q1: quantile(rc.iter().copied(), 0.25),
                rc_median: median(rc.iter().copied()),
                rc_q3: quantile(rc.iter().copied(), 0.75),
            }
        })
        .collect();
    SummaryTable { rows, stats }
}

/// Summary row of one per-step table; decisions are the rows carrying a rank.
pub fn summarize_steps(series: &str, steps: &[StepMetrics]) -> Result<SummaryRow> {
    let first = steps
        .first()
        .ok_or_else(|| Error::InsufficientData(format!("no steps for series {series}")))?;
    if steps.iter().any(|s| s.method != first.method) {
        return Err(Error::InvalidParameter(format!(
            "step table of series {series} mixes methods"
        )));
    }
    let decisions = steps.iter().filter(|s| s.pe_rank.is_some()).count();
    let fallbacks = steps.iter().filter(|s| s.fallback).count();
    Ok(SummaryRow {
        series: series.to_string(),
        method: first.method,
        mean_pr: mean(steps.iter().map(|s| s.pr)),
        mean_rc: mean(steps.iter().map(|s| s.rc)),
        median_pr: median(steps.iter().map(|s| s.pr)),
        fallback_frac: if decisions == 0 {
            0.0
        } else {
            fallbacks as f64 / decisions as f64
        },
    })
}

/// Mean RC over the first step of each control interval.
pub fn decision_rc(steps: &[StepMetrics], samples_per_interval: usize) -> f64 {
    mean(
        steps
            .iter()
            .filter(|s| s.step % samples_per_interval == 0)
            .map(|s| s.rc),
    )
}

pub fn write_steps_csv<W: Write>(out: W, steps: &[StepMetrics]) -> Result<()> {
    write_rows(out, steps, "step metrics")
}

pub fn read_steps_csv<R: Read>(input: R) -> Result<Vec<StepMetrics>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    write_rows(out, rows, "summary")
}

pub fn write_stats_csv<W: Write>(out: W, stats: &[MethodStats]) -> Result<()> {
    write_rows(out, stats, "method statistics")
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T], what: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(what, e))?;
    Ok(())
}
