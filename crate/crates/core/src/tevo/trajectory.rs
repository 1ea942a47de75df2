use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Renormalize, Scheme};
use crate::error::{Error, Result};
use crate::netops::AsMps;
use crate::symtensor::TruncationPolicy;

/// One row of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub step: usize,
    pub t: f64,
    /// Norm for pure states, trace for density operators.
    pub norm: f64,
    /// One entry per plan observable; `None` off its recording interval.
    pub observables: Vec<Option<f64>>,
    /// Normalized sector distribution keyed by integer charge (`N` for
    /// density operators).
    pub sectors: BTreeMap<i32, f64>,
    /// Squared norm in odd vectorized charges (density operators only).
    pub odd_weight: Option<f64>,
    /// Cumulative discarded weight up to this step.
    pub truncation: f64,
    pub max_bond: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub scheme: Scheme,
    pub dt: f64,
    pub n_steps: usize,
    pub policy: TruncationPolicy,
    pub renormalize: Renormalize,
    pub density: bool,
    pub labels: Vec<String>,
    pub cumulative_truncation: f64,
    pub final_max_bond: usize,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub records: Vec<Record>,
    pub final_state: AsMps,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

impl Trajectory {
    /// Every charge that appears in any record, ascending.
    pub fn charges(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self.records.iter().flat_map(|r| r.sectors.keys().copied()).collect();
        set.into_iter().collect()
    }

    /// Values of observable `label` as `(t, value)` pairs on its schedule.
    pub fn series(&self, label: &str) -> Option<Vec<(f64, f64)>> {
        let k = self.meta.labels.iter().position(|l| l == label)?;
        Some(self.records.iter().filter_map(|r| r.observables[k].map(|v| (r.t, v))).collect())
    }

    /// CSV with columns `step, t, norm|trace, <observables>, P_<q>...,
    /// truncation, max_bond` and `odd_weight` for density runs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let charges = self.charges();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "t".into(), if self.meta.density { "trace".into() } else { "norm".into() }];
        header.extend(self.meta.labels.iter().cloned());
        header.extend(charges.iter().map(|q| format!("P_{q}")));
        header.push("truncation".into());
        header.push("max_bond".into());
        if self.meta.density {
            header.push("odd_weight".into());
        }
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![r.step.to_string(), fmt(r.t), fmt(r.norm)];
            row.extend(r.observables.iter().map(|v| v.map(fmt).unwrap_or_default()));
            row.extend(charges.iter().map(|q| fmt(r.sectors.get(q).copied().unwrap_or(0.0))));
            row.push(fmt(r.truncation));
            row.push(r.max_bond.to_string());
            if self.meta.density {
                row.push(fmt(r.odd_weight.unwrap_or(0.0)));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is UTF-8"))
    }

    /// Writes `<stem>.csv` and the metadata sidecar `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        let json = serde_json::to_string_pretty(&self.meta)?;
        std::fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
        Ok(())
    }
}
