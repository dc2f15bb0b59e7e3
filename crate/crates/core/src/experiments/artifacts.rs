use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::spec_hash;
use crate::energetics::{EnergyReport, Engine};
use crate::moments::Reservoir;
use crate::network::NetworkSpec;
use crate::Result;

/// Steady-state record written by the `steady-state` and `ergotropy` commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyRecord {
    pub spec_hash: String,
    pub bath: Reservoir,
    pub engine: Engine,
    pub energies: Vec<f64>,
    pub ergotropies: Vec<f64>,
    pub passive: Vec<f64>,
}

pub fn steady_json(spec: &NetworkSpec, bath: Reservoir, report: &EnergyReport) -> SteadyRecord {
    SteadyRecord {
        spec_hash: spec_hash(spec, bath),
        bath: bath.normalized(),
        engine: report.engine,
        energies: report.per_mode_energy.clone(),
        ergotropies: report.per_mode_ergotropy.clone(),
        passive: report.per_mode_passive.clone(),
    }
}

pub fn write_steady_json(path: &Path, record: &SteadyRecord) -> Result<()> {
    let text = serde_json::to_string_pretty(record)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// `t, E_charger, E_b1, ...` with one line per report.
pub fn write_trajectory_csv(path: &Path, reports: &[EnergyReport]) -> Result<()> {
    let n_modes = reports.first().map_or(0, |r| r.per_mode_energy.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "E_charger".to_string()];
    header.extend((1..n_modes).map(|k| format!("E_b{k}")));
    w.write_record(&header)?;
    for r in reports {
        let mut line = vec![r.time.unwrap_or(f64::INFINITY).to_string()];
        line.extend(r.per_mode_energy.iter().map(f64::to_string));
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}
