//! Result serialization: time-series emission (CSV/JSON) and the run report.

use selspin_core::{Error, Result};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One output row: time, optional dimensionless time, named observables.
#[derive(Debug, Clone, Serialize)]
pub struct TimeSeriesRecord {
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub observables: BTreeMap<String, f64>,
}

fn fmt_real(v: f64) -> String {
    // 17 significant digits round-trips every f64
    format!("{v:.16e}")
}

/// Write records as CSV (header row, fixed column order: t, tau when
/// present, then observables sorted by name, LF endings) or as a JSON array
/// with the same keys. Probability-typed columns are clamped to [0, 1] in
/// the emitted text only; the number of clamped values is returned.
pub fn emit_timeseries(
    records: &[TimeSeriesRecord],
    format: Format,
    path: &Path,
    probability_columns: &BTreeSet<String>,
) -> Result<usize> {
    if records.is_empty() {
        return Err(Error::Usage("refusing to write an empty time series".into()));
    }
    let columns: Vec<String> = records[0].observables.keys().cloned().collect();
    let has_tau = records[0].tau.is_some();
    for r in records {
        if r.observables.keys().cloned().collect::<Vec<_>>() != columns
            || r.tau.is_some() != has_tau
        {
            return Err(Error::Usage(
                "time-series records must share one column set".into(),
            ));
        }
    }
    let mut clamped = 0usize;
    let mut clamp = |name: &str, v: f64| -> f64 {
        if probability_columns.contains(name) && !(0.0..=1.0).contains(&v) {
            clamped += 1;
            v.clamp(0.0, 1.0)
        } else {
            v
        }
    };
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push('t');
            if has_tau {
                out.push_str(",tau");
            }
            for c in &columns {
                out.push(',');
                out.push_str(c);
            }
            out.push('\n');
            for r in records {
                out.push_str(&fmt_real(r.t));
                if let Some(tau) = r.tau {
                    out.push(',');
                    out.push_str(&fmt_real(tau));
                }
                for c in &columns {
                    out.push(',');
                    out.push_str(&fmt_real(clamp(c, r.observables[c])));
                }
                out.push('\n');
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = records
                .iter()
                .map(|r| {
                    let mut map = serde_json::Map::new();
                    map.insert("t".into(), serde_json::json!(r.t));
                    if let Some(tau) = r.tau {
                        map.insert("tau".into(), serde_json::json!(tau));
                    }
                    for c in &columns {
                        map.insert(
                            c.clone(),
                            serde_json::json!(clamp(c, r.observables[c])),
                        );
                    }
                    serde_json::Value::Object(map)
                })
                .collect();
            out = serde_json::to_string_pretty(&rows)
                .map_err(|e| Error::Parse(e.to_string()))?;
            out.push('\n');
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(clamped)
}

/// Engine settings echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct EngineMeta {
    pub method: String,
    pub steps_per_period: u32,
    pub tolerance: f64,
}

/// Self-contained, byte-reproducible run summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub engine: EngineMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// fully resolved scenario echo, absent for verify-transform
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    /// SHA-256 over the command name and the resolved inputs
    pub input_sha256: String,
    pub results: serde_json::Value,
    pub clamped_display_values: usize,
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let text = self.to_json();
        match path {
            Some(p) => {
                std::fs::write(p, text)?;
            }
            None => {
                print!("{text}");
            }
        }
        Ok(())
    }
}

pub fn input_hash(parts: &[&str]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
