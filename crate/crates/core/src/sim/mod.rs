//! Discrete-time simulation of routing methods over a demand series.

mod metrics;
mod run;

pub use metrics::{
    aggregate_metrics, decision_rc, mean, median, quantile, read_steps_csv, summarize_steps,
    summary_table, write_stats_csv, write_steps_csv, write_summary_csv, MethodStats,
    StepMetrics, SummaryRow, SummaryTable,
};
pub use run::{run_simulation, ExperimentConfig, MetricsReport, OptCache, Scenario};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    DeepTe,
    Opt,
    Const,
    Tg5,
    Tg30,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::DeepTe, Method::Opt, Method::Const, Method::Tg5, Method::Tg30];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DeepTe => "deepte",
            Method::Opt => "opt",
            Method::Const => "const",
            Method::Tg5 => "tg5",
            Method::Tg30 => "tg30",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown method `{s}` (expected deepte, opt, const, tg5 or tg30)"
                ))
            })
    }
}
