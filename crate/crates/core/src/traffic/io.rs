use std::fs;
use std::path::{Path, PathBuf};

use super::{DemandSeries, SeriesMeta};
use crate::error::{Error, Result};
use crate::net::Demand;

/// `series.csv` -> `series.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn parse_header(field: &str, col: usize) -> Result<Demand> {
    let parse = |s: &str| s.trim().parse::<usize>().ok();
    match field.split_once('>') {
        Some((a, b)) if parse(a).is_some() && parse(b).is_some() => {
            Ok(Demand::new(parse(a).unwrap(), parse(b).unwrap()))
        }
        _ => Err(Error::Parse {
            line: 1,
            msg: format!("column {col}: expected `src>dst`, got `{field}`"),
        }),
    }
}

impl DemandSeries {
    /// Writes the CSV matrix and its JSON sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(csv_path)?;
        wtr.write_record(self.demands.iter().map(|d| d.to_string()))?;
        for row in &self.values {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::io(csv_path, e))?;
        let meta = serde_json::to_string_pretty(&self.meta())?;
        let side = sidecar_path(csv_path);
        fs::write(&side, meta + "\n").map_err(|e| Error::io(side, e))
    }

    /// Reads a CSV matrix and its JSON sidecar.
    pub fn load(csv_path: &Path) -> Result<DemandSeries> {
        let side = sidecar_path(csv_path);
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: SeriesMeta = serde_json::from_str(&text)?;
        let mut rdr = csv::Reader::from_path(csv_path)?;
        let demands = rdr
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, f)| parse_header(f, i))
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 2,
                        msg: format!("`{f}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            values.push(row);
        }
        if values.len() != meta.steps {
            return Err(Error::dim("series steps", meta.steps, values.len()));
        }
        DemandSeries::new(demands, values, meta.sample_interval, meta.elephants, meta.seed)
    }
}
