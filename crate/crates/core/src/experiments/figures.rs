use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::closed_form::{self, optimal_coupling};
use crate::config::spec_hash;
use crate::energetics::{ergotropy_gaussian, stored_energy};
use crate::moments::{assemble, GaussianState, Reservoir};
use crate::network::{NetworkSpec, TopologyKind};
use crate::{Error, Result};

const KAPPA: f64 = 0.003;
const STRONG_DRIVE: f64 = 0.01;
const WEAK_DRIVE: f64 = 0.001;
const OMEGA: f64 = 1.0;
const KINDS: [TopologyKind; 2] = [TopologyKind::Cascaded, TopologyKind::Parallel];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

pub const FIGURES: [FigureId; 6] = [
    FigureId::Fig1,
    FigureId::Fig2,
    FigureId::Fig3,
    FigureId::Fig4,
    FigureId::Fig5,
    FigureId::Fig6,
];

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }

    fn description(self) -> &'static str {
        match self {
            FigureId::Fig1 => "steady terminal energy and optimal coupling versus N, nonreciprocal",
            FigureId::Fig2 => "per-mode energy dynamics at N=2 for three coupling strengths",
            FigureId::Fig3 => "steady terminal energy versus N and versus J, reciprocal and nonreciprocal",
            FigureId::Fig4 => "terminal energy dynamics at N=3 and N=4 for all topology and reciprocity combinations",
            FigureId::Fig5 => "energy and ergotropy dynamics in thermal reservoirs",
            FigureId::Fig6 => "ergotropy dynamics and enhancement factor in squeezed reservoirs at N=2",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FIGURES
            .into_iter()
            .find(|f| f.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown figure '{s}', expected fig1..fig6")))
    }
}

/// Table of string cells with a fixed header.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cell(x: f64) -> String {
    x.to_string()
}

fn opt_cell(x: Result<f64>) -> String {
    x.map(cell).unwrap_or_default()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.log10(), hi.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect()
}

fn reciprocity_label(nonreciprocal: bool) -> &'static str {
    if nonreciprocal {
        "nonreciprocal"
    } else {
        "reciprocal"
    }
}

fn network(kind: TopologyKind, n: usize, j: f64, nonreciprocal: bool, eps: f64) -> Result<NetworkSpec> {
    if nonreciprocal {
        NetworkSpec::nonreciprocal(kind, n, j, KAPPA, eps, OMEGA)
    } else {
        NetworkSpec::reciprocal(kind, n, j, KAPPA, eps, OMEGA)
    }
}

fn trajectory(spec: &NetworkSpec, bath: Reservoir, times: &[f64]) -> Result<Vec<GaussianState>> {
    assemble(spec, bath).evolve(&GaussianState::ground(spec.n_modes()), times)
}

/// Provenance shared by every figure.
struct Meta {
    specs: Vec<Value>,
    extra: serde_json::Map<String, Value>,
}

impl Meta {
    fn new() -> Self {
        Self {
            specs: Vec::new(),
            extra: serde_json::Map::new(),
        }
    }

    fn record(&mut self, label: String, spec: &NetworkSpec, bath: Reservoir) {
        self.specs.push(json!({
            "series": label,
            "spec_hash": spec_hash(spec, bath),
            "spec": spec,
            "bath": bath.normalized(),
        }));
    }
}

/// Write `<fig>.csv` and `<fig>.meta.json` into `out_dir`.
pub fn reproduce(fig: FigureId, out_dir: &Path, workers: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let (table, meta) = pool.install(|| match fig {
        FigureId::Fig1 => fig1(),
        FigureId::Fig2 => fig2(),
        FigureId::Fig3 => fig3(),
        FigureId::Fig4 => fig4(),
        FigureId::Fig5 => fig5(),
        FigureId::Fig6 => fig6(),
    })?;
    let csv_path = out_dir.join(format!("{fig}.csv"));
    let meta_path = out_dir.join(format!("{fig}.meta.json"));
    table.write(&csv_path)?;
    let mut doc = json!({
        "figure": fig.name(),
        "description": fig.description(),
        "units": {"energy": "omega", "time": "1/omega", "rates": "omega"},
        "parameters": {"kappa": KAPPA, "omega": OMEGA},
        "engines": {"qbnet-core": env!("CARGO_PKG_VERSION")},
        "columns": table.header,
        "series": meta.specs,
    });
    if let Value::Object(map) = &mut doc {
        map.extend(meta.extra);
    }
    std::fs::write(&meta_path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(vec![csv_path, meta_path])
}

fn fig1() -> Result<(Table, Meta)> {
    let mut t = Table::new(&["topology", "n", "j_op", "e_terminal_closed_form", "e_terminal_gaussian"]);
    let mut meta = Meta::new();
    for kind in KINDS {
        for n in 1..=8 {
            let j = optimal_coupling(kind, n, KAPPA);
            let spec = network(kind, n, j, true, STRONG_DRIVE)?;
            let term = spec.topology.terminal();
            let cf = match kind {
                TopologyKind::Cascaded => closed_form::energy_cascaded_ss(&spec, term),
                TopologyKind::Parallel => closed_form::energy_parallel_ss(&spec, term),
            };
            let g = assemble(&spec, Reservoir::Vacuum).steady_state()?;
            t.rows.push(vec![
                kind.to_string(),
                n.to_string(),
                cell(j),
                opt_cell(cf),
                cell(stored_energy(&g, term, OMEGA)),
            ]);
            meta.record(format!("{kind} n={n}"), &spec, Reservoir::Vacuum);
        }
    }
    meta.extra.insert("drive".into(), json!(STRONG_DRIVE));
    Ok((t, meta))
}

fn fig2() -> Result<(Table, Meta)> {
    let times = linspace(0.0, 5000.0, 101);
    let n = 2;
    let mut cases = Vec::new();
    for kind in KINDS {
        for (regime, j) in [
            ("weak", 0.001),
            ("optimal", optimal_coupling(kind, n, KAPPA)),
            ("strong", 0.01),
        ] {
            cases.push((kind, regime, network(kind, n, j, true, STRONG_DRIVE)?));
        }
    }
    let blocks: Vec<Vec<Vec<String>>> = cases
        .par_iter()
        .map(|(kind, regime, spec)| -> Result<Vec<Vec<String>>> {
            let states = trajectory(spec, Reservoir::Vacuum, &times)?;
            Ok(states
                .iter()
                .map(|s| {
                    let mut row = vec![
                        kind.to_string(),
                        regime.to_string(),
                        cell(spec.coupling.amplitudes[0]),
                        cell(s.time),
                    ];
                    row.extend((0..=n).map(|m| cell(stored_energy(s, m, OMEGA))));
                    row.extend((0..=n).map(|m| {
                        opt_cell(match kind {
                            TopologyKind::Cascaded => closed_form::energy_cascaded_t(spec, m, s.time),
                            TopologyKind::Parallel => closed_form::energy_parallel_t(spec, m, s.time),
                        })
                    }));
                    row
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&[
        "topology", "regime", "j", "t", "e_charger", "e_b1", "e_b2", "cf_charger", "cf_b1", "cf_b2",
    ]);
    t.rows = blocks.into_iter().flatten().collect();
    let mut meta = Meta::new();
    for (kind, regime, spec) in &cases {
        meta.record(format!("{kind} {regime}"), spec, Reservoir::Vacuum);
    }
    meta.extra.insert("drive".into(), json!(STRONG_DRIVE));
    Ok((t, meta))
}

fn fig3() -> Result<(Table, Meta)> {
    let mut t = Table::new(&["panel", "topology", "reciprocity", "n", "j", "e_terminal"]);
    let mut meta = Meta::new();
    for kind in KINDS {
        for nonrec in [true, false] {
            for n in 1..=8 {
                let j = optimal_coupling(kind, n, KAPPA);
                let spec = network(kind, n, j, nonrec, STRONG_DRIVE)?;
                t.rows.push(vec![
                    "versus_n".into(),
                    kind.to_string(),
                    reciprocity_label(nonrec).into(),
                    n.to_string(),
                    cell(j),
                    cell(closed_form::terminal_energy_linear(&spec)?),
                ]);
            }
        }
    }
    let grid = logspace(1e-4, 1e-1, 121);
    for kind in KINDS {
        for n in [3, 4] {
            for nonrec in [true, false] {
                for &j in &grid {
                    let spec = network(kind, n, j, nonrec, STRONG_DRIVE)?;
                    t.rows.push(vec![
                        "versus_j".into(),
                        kind.to_string(),
                        reciprocity_label(nonrec).into(),
                        n.to_string(),
                        cell(j),
                        cell(closed_form::terminal_energy_linear(&spec)?),
                    ]);
                }
                let spec = network(kind, n, grid[0], nonrec, STRONG_DRIVE)?;
                meta.record(
                    format!("{kind} {} n={n} (J swept)", reciprocity_label(nonrec)),
                    &spec,
                    Reservoir::Vacuum,
                );
            }
        }
    }
    meta.extra.insert("drive".into(), json!(STRONG_DRIVE));
    meta.extra.insert("j_grid".into(), json!({"lo": 1e-4, "hi": 1e-1, "points": 121, "spacing": "log"}));
    Ok((t, meta))
}

fn fig4() -> Result<(Table, Meta)> {
    let times = linspace(0.0, 20000.0, 201);
    let mut cases = Vec::new();
    for n in [3, 4] {
        for kind in KINDS {
            for nonrec in [true, false] {
                let j = optimal_coupling(kind, n, KAPPA);
                cases.push((kind, nonrec, network(kind, n, j, nonrec, STRONG_DRIVE)?));
            }
        }
    }
    let blocks: Vec<(Vec<Vec<String>>, f64)> = cases
        .par_iter()
        .map(|(kind, nonrec, spec)| -> Result<_> {
            let term = spec.topology.terminal();
            let rows = trajectory(spec, Reservoir::Vacuum, &times)?
                .iter()
                .map(|s| {
                    vec![
                        kind.to_string(),
                        reciprocity_label(*nonrec).into(),
                        spec.topology.n_batteries.to_string(),
                        cell(spec.coupling.amplitudes[0]),
                        cell(s.time),
                        cell(stored_energy(s, term, OMEGA)),
                    ]
                })
                .collect();
            let relax = assemble(spec, Reservoir::Vacuum).relaxation_time(0.95)?;
            Ok((rows, relax))
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["topology", "reciprocity", "n", "j", "t", "e_terminal"]);
    let mut meta = Meta::new();
    let mut relax = Vec::new();
    for ((kind, nonrec, spec), (rows, tr)) in cases.iter().zip(blocks) {
        t.rows.extend(rows);
        let label = format!("{kind} {} n={}", reciprocity_label(*nonrec), spec.topology.n_batteries);
        relax.push(json!({"series": label, "relaxation_time_95": tr}));
        meta.record(label, spec, Reservoir::Vacuum);
    }
    meta.extra.insert("drive".into(), json!(STRONG_DRIVE));
    meta.extra.insert("relaxation_times".into(), Value::Array(relax));
    Ok((t, meta))
}

fn fig5() -> Result<(Table, Meta)> {
    let times = linspace(0.0, 5000.0, 101);
    let mut cases = Vec::new();
    for (label, kind, n) in [
        ("single", TopologyKind::Cascaded, 1),
        ("cascaded", TopologyKind::Cascaded, 2),
        ("parallel", TopologyKind::Parallel, 2),
    ] {
        let j = optimal_coupling(kind, n, KAPPA);
        for n_th in [0.0, 1.0, 2.0] {
            cases.push((label, n_th, network(kind, n, j, true, WEAK_DRIVE)?));
        }
    }
    let blocks: Vec<Vec<Vec<String>>> = cases
        .par_iter()
        .map(|(label, n_th, spec)| -> Result<_> {
            let bath = Reservoir::thermal(*n_th)?;
            let mut rows = Vec::new();
            for s in trajectory(spec, bath, &times)? {
                for m in 1..spec.n_modes() {
                    rows.push(vec![
                        label.to_string(),
                        cell(*n_th),
                        cell(s.time),
                        format!("b{m}"),
                        cell(stored_energy(&s, m, OMEGA)),
                        cell(ergotropy_gaussian(&s, m, OMEGA)),
                    ]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["configuration", "n_th", "t", "mode", "energy", "ergotropy"]);
    t.rows = blocks.into_iter().flatten().collect();
    let mut meta = Meta::new();
    for (label, n_th, spec) in &cases {
        meta.record(format!("{label} n_th={n_th}"), spec, Reservoir::thermal(*n_th)?);
    }
    meta.extra.insert("drive".into(), json!(WEAK_DRIVE));
    Ok((t, meta))
}

fn fig6() -> Result<(Table, Meta)> {
    let n = 2;
    let times = linspace(0.0, 5000.0, 101);
    let mut t = Table::new(&[
        "panel", "topology", "reciprocity", "r", "t", "energy", "ergotropy", "enhancement",
    ]);
    let mut meta = Meta::new();
    let mut cases = Vec::new();
    for kind in KINDS {
        let j = optimal_coupling(kind, n, KAPPA);
        for (nonrec, r) in [(true, 0.0), (true, 0.5), (true, 1.0), (false, 0.0)] {
            cases.push((kind, nonrec, r, network(kind, n, j, nonrec, WEAK_DRIVE)?));
        }
    }
    let blocks: Vec<Vec<Vec<String>>> = cases
        .par_iter()
        .map(|(kind, nonrec, r, spec)| -> Result<_> {
            let term = spec.topology.terminal();
            Ok(trajectory(spec, Reservoir::squeezed(*r, 0.0)?, &times)?
                .iter()
                .map(|s| {
                    vec![
                        "dynamics".into(),
                        kind.to_string(),
                        reciprocity_label(*nonrec).into(),
                        cell(*r),
                        cell(s.time),
                        cell(stored_energy(s, term, OMEGA)),
                        cell(ergotropy_gaussian(s, term, OMEGA)),
                        String::new(),
                    ]
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    t.rows = blocks.into_iter().flatten().collect();
    for (kind, nonrec, r, spec) in &cases {
        meta.record(
            format!("{kind} {} r={r}", reciprocity_label(*nonrec)),
            spec,
            Reservoir::squeezed(*r, 0.0)?,
        );
    }
    for kind in KINDS {
        let spec = network(kind, n, optimal_coupling(kind, n, KAPPA), true, WEAK_DRIVE)?;
        let term = spec.topology.terminal();
        for r in linspace(0.0, 1.5, 16) {
            let bath = Reservoir::squeezed(r, 0.0)?;
            let s = assemble(&spec, bath).steady_state()?;
            t.rows.push(vec![
                "enhancement".into(),
                kind.to_string(),
                reciprocity_label(true).into(),
                cell(r),
                String::new(),
                cell(stored_energy(&s, term, OMEGA)),
                cell(ergotropy_gaussian(&s, term, OMEGA)),
                cell(crate::energetics::enhancement_factor(&spec, bath, term)?),
            ]);
        }
    }
    meta.extra.insert("drive".into(), json!(WEAK_DRIVE));
    meta.extra.insert("squeezing_phase".into(), json!(0.0));
    Ok((t, meta))
}
