//! Parameter sweeps over the engines, figure presets and flat-file artifacts.

mod artifacts;
mod figures;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form;
use crate::energetics::{EnergyReport, Engine};
use crate::fock::{self, FockConfig, Lindbladian};
use crate::moments::{assemble, GaussianState, Reservoir};
use crate::network::{NetworkSpec, Reciprocity, TopologyKind};
use crate::spectral;
use crate::{Error, Result};

pub use artifacts::{steady_json, write_steady_json, write_trajectory_csv, SteadyRecord};
pub use figures::{reproduce, FigureId, FIGURES};

/// Relative agreement required between the exact engines.
pub const EXACT_TOLERANCE: f64 = 1e-6;
/// Relative and absolute agreement required against the Fock oracle.
pub const ORACLE_RELATIVE: f64 = 1e-3;
pub const ORACLE_ABSOLUTE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    CouplingJ,
    BatteryN,
    Time,
    ThermalN,
    SqueezeR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Energy,
    Ergotropy,
    RelaxTime,
    ParityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    ClosedForm,
    Gaussian,
    Spectral,
    FockOracle,
}

macro_rules! named_enum {
    ($t:ty, $what:literal, $($v:ident => $s:literal),+ $(,)?) => {
        impl $t {
            pub fn name(self) -> &'static str {
                match self { $(Self::$v => $s),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
                    $($s => Ok(Self::$v),)+
                    other => Err(Error::Config(format!("unknown {} '{other}'", $what))),
                }
            }
        }
    };
}

named_enum!(Axis, "axis", CouplingJ => "coupling_j", BatteryN => "battery_n", Time => "time",
    ThermalN => "thermal_n", SqueezeR => "squeeze_r");
named_enum!(Observable, "observable", Energy => "energy", Ergotropy => "ergotropy",
    RelaxTime => "relax_time", ParityReport => "parity_report");
named_enum!(EngineKind, "engine", ClosedForm => "closed_form", Gaussian => "gaussian",
    Spectral => "spectral", FockOracle => "fock_oracle");

/// Settings for Fock-oracle evaluations inside a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    /// Levels kept per mode.
    pub levels: usize,
    /// Steady states: integration window and extrapolated tolerance.
    pub window: f64,
    pub tol: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            levels: 12,
            window: 200.0,
            tol: 1e-7,
        }
    }
}

impl OracleSettings {
    pub fn config(&self, n_modes: usize) -> FockConfig {
        FockConfig::uniform(self.levels, n_modes)
    }
}

/// A one-dimensional sweep of a base network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub spec: NetworkSpec,
    pub bath: Reservoir,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub observables: BTreeSet<Observable>,
    pub engines: BTreeSet<EngineKind>,
    #[serde(default)]
    pub oracle: OracleSettings,
    /// Fraction of the steady terminal energy defining the relaxation time.
    #[serde(default = "default_threshold")]
    pub relax_threshold: f64,
}

fn default_threshold() -> f64 {
    0.95
}

/// One sweep point: the spec, bath and optional time it evaluates.
#[derive(Debug, Clone)]
pub struct Point {
    pub index: usize,
    pub x: f64,
    pub spec: NetworkSpec,
    pub bath: Reservoir,
    pub time: Option<f64>,
}

/// One grid point, observable and engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub x: f64,
    pub observable: Observable,
    pub engine: EngineKind,
    /// Labels of `values`: mode names, or report fields.
    pub components: Vec<String>,
    pub values: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
    /// Cross-engine comparisons that exceeded the tolerances.
    pub disagreements: Vec<String>,
}

fn mode_labels(n_modes: usize) -> Vec<String> {
    std::iter::once("charger".to_string())
        .chain((1..n_modes).map(|k| format!("b{k}")))
        .collect()
}

fn supports(engine: EngineKind, obs: Observable) -> bool {
    use EngineKind::*;
    use Observable::*;
    matches!(
        (engine, obs),
        (ClosedForm, Energy | Ergotropy)
            | (Gaussian, Energy | Ergotropy | RelaxTime)
            | (Spectral, Energy | ParityReport)
            | (FockOracle, Energy | Ergotropy)
    )
}

/// Uniform reciprocal network with equal damping everywhere.
fn spectral_params(spec: &NetworkSpec) -> Option<(f64, f64)> {
    let c = &spec.coupling;
    let j = c.amplitudes[0];
    let kappa = spec.local.charger;
    let uniform = c.amplitudes.iter().all(|&x| x == j)
        && c.coop_rates.iter().all(|&g| g == 0.0)
        && spec.local.batteries.iter().all(|&k| k == kappa);
    uniform.then_some((j, kappa))
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPlan(msg));
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        if self.observables.is_empty() {
            return bad("no observables requested".into());
        }
        if self.engines.is_empty() {
            return bad("no engines requested".into());
        }
        if self.grid.iter().any(|x| !x.is_finite()) {
            return bad("grid has non-finite entries".into());
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return bad("grid must be strictly monotone".into());
        }
        let lo = self.grid.iter().cloned().fold(f64::INFINITY, f64::min);
        match self.axis {
            Axis::BatteryN if self.grid.iter().any(|&x| x < 1.0 || x.fract() != 0.0) => {
                return bad("battery counts must be positive integers".into());
            }
            _ if lo < 0.0 => return bad(format!("{} grid must be nonnegative", self.axis)),
            _ => {}
        }
        if !(self.relax_threshold > 0.0 && self.relax_threshold < 1.0) {
            return bad("relaxation threshold must lie in (0, 1)".into());
        }
        self.spec.validate()?;

        let vacuum = matches!(self.bath.normalized(), Reservoir::Vacuum)
            && !matches!(self.axis, Axis::ThermalN | Axis::SqueezeR);
        let timed = self.axis == Axis::Time;
        for &e in &self.engines {
            for &o in &self.observables {
                if !supports(e, o) {
                    return bad(format!("engine {e} does not provide {o}"));
                }
            }
            match e {
                EngineKind::ClosedForm => {
                    if self.spec.check_nonreciprocity() != Reciprocity::Nonreciprocal {
                        return bad("closed forms need a nonreciprocal network".into());
                    }
                    if !vacuum {
                        return bad("closed forms need a vacuum bath".into());
                    }
                }
                EngineKind::Spectral => {
                    if spectral_params(&self.spec).is_none() {
                        return bad(
                            "spectral engine needs a uniform reciprocal network with equal damping".into(),
                        );
                    }
                    if !vacuum || timed {
                        return bad("spectral engine gives vacuum steady states only".into());
                    }
                    if self.observables.contains(&Observable::ParityReport)
                        && self.spec.topology.kind != TopologyKind::Cascaded
                    {
                        return bad("parity reports need a cascaded chain".into());
                    }
                }
                EngineKind::Gaussian | EngineKind::FockOracle => {}
            }
        }
        if timed && self.observables.contains(&Observable::RelaxTime) {
            return bad("relaxation time is not a function of time".into());
        }
        Ok(())
    }

    /// Concrete points in grid order.
    pub fn points(&self) -> Result<Vec<Point>> {
        self.grid
            .iter()
            .enumerate()
            .map(|(index, &x)| {
                let mut p = Point {
                    index,
                    x,
                    spec: self.spec.clone(),
                    bath: self.bath.normalized(),
                    time: None,
                };
                match self.axis {
                    Axis::CouplingJ => p.spec = self.spec.with_coupling(x)?,
                    Axis::BatteryN => p.spec = self.spec.with_batteries(x as usize)?,
                    Axis::Time => p.time = Some(x),
                    Axis::ThermalN => p.bath = Reservoir::thermal(x)?,
                    Axis::SqueezeR => {
                        let phase = match self.bath {
                            Reservoir::Squeezed { phase, .. } => phase,
                            _ => 0.0,
                        };
                        p.bath = Reservoir::squeezed(x, phase)?;
                    }
                }
                Ok(p)
            })
            .collect()
    }
}

/// Values of one observable from one engine at one point.
pub fn evaluate(
    engine: EngineKind,
    obs: Observable,
    point: &Point,
    plan: &SweepPlan,
) -> Result<(Vec<String>, Vec<f64>)> {
    let spec = &point.spec;
    match (engine, obs) {
        (_, Observable::Energy | Observable::Ergotropy) if supports(engine, obs) => {
            let report = engine_report(engine, spec, point.bath, point.time, &plan.oracle)?;
            let values = if obs == Observable::Energy {
                report.per_mode_energy
            } else {
                report.per_mode_ergotropy
            };
            Ok((mode_labels(spec.n_modes()), values))
        }
        (EngineKind::Gaussian, Observable::RelaxTime) => {
            let t = assemble(spec, point.bath).relaxation_time(plan.relax_threshold)?;
            Ok((vec!["terminal".into()], vec![t]))
        }
        (EngineKind::Spectral, Observable::ParityReport) => {
            let (j, kappa) = spectral_params(spec).ok_or_else(spectral_unsupported)?;
            let r = spectral::parity_report(spec.topology.n_batteries, j, kappa, spec.drive)?;
            let components = ["terminal_energy", "has_zero_mode", "central_weight", "modal_sum"];
            Ok((
                components.map(String::from).to_vec(),
                vec![
                    spec.frequency * r.terminal_energy,
                    if r.has_zero_mode { 1.0 } else { 0.0 },
                    r.mode_weights[r.central_mode()].norm(),
                    r.terminal_amplitude.norm(),
                ],
            ))
        }
        (e, o) => Err(Error::InvalidPlan(format!("engine {e} does not provide {o}"))),
    }
}

fn spectral_unsupported() -> Error {
    Error::UnsupportedSpec("spectral engine needs a uniform reciprocal network with equal damping".into())
}

/// Per-mode energetics from any engine, at time `t` after starting in the
/// ground state or (`None`) in the steady state. Closed forms and the
/// spectral engine describe vacuum baths, where every mode stays coherent
/// and ergotropy equals energy.
pub fn engine_report(
    engine: EngineKind,
    spec: &NetworkSpec,
    bath: Reservoir,
    time: Option<f64>,
    oracle: &OracleSettings,
) -> Result<EnergyReport> {
    let vacuum_only = |what: &str| -> Result<()> {
        if matches!(bath.normalized(), Reservoir::Vacuum) {
            Ok(())
        } else {
            Err(Error::UnsupportedSpec(format!("{what} engine needs a vacuum bath")))
        }
    };
    let coherent = |energy: Vec<f64>, engine: Engine| {
        let passive = vec![0.0; energy.len()];
        EnergyReport::from_parts(energy, passive, engine, time)
    };
    match engine {
        EngineKind::ClosedForm => {
            vacuum_only("closed-form")?;
            let energy = (0..spec.n_modes())
                .map(|k| match (spec.topology.kind, time) {
                    (TopologyKind::Cascaded, None) => closed_form::energy_cascaded_ss(spec, k),
                    (TopologyKind::Cascaded, Some(t)) => closed_form::energy_cascaded_t(spec, k, t),
                    (TopologyKind::Parallel, None) => closed_form::energy_parallel_ss(spec, k),
                    (TopologyKind::Parallel, Some(t)) => closed_form::energy_parallel_t(spec, k, t),
                })
                .collect::<Result<_>>()?;
            Ok(coherent(energy, Engine::ClosedForm))
        }
        EngineKind::Spectral => {
            vacuum_only("spectral")?;
            if time.is_some() {
                return Err(Error::UnsupportedSpec("spectral engine gives steady states only".into()));
            }
            let (j, kappa) = spectral_params(spec).ok_or_else(spectral_unsupported)?;
            let b = spectral::steady_amplitudes(j, kappa, spec.drive, spec.topology.kind, spec.topology.n_batteries)?;
            let energy = b.iter().map(|z| spec.frequency * z.norm_sqr()).collect();
            Ok(coherent(energy, Engine::Spectral))
        }
        EngineKind::Gaussian => gaussian_report(spec, bath, time),
        EngineKind::FockOracle => oracle_report(spec, bath, time, oracle),
    }
}

/// Gaussian report at time `t` from the ground state, or in the steady state.
pub fn gaussian_report(spec: &NetworkSpec, bath: Reservoir, time: Option<f64>) -> Result<EnergyReport> {
    let sys = assemble(spec, bath);
    let state = match time {
        None => sys.steady_state()?,
        Some(t) => sys
            .evolve(&GaussianState::ground(spec.n_modes()), &[t])?
            .pop()
            .expect("one output"),
    };
    let mut report = EnergyReport::from_gaussian(&state, spec.frequency);
    report.time = time;
    Ok(report)
}

/// Fock-oracle report at time `t` from the ground state, or in the steady state.
pub fn oracle_report(
    spec: &NetworkSpec,
    bath: Reservoir,
    time: Option<f64>,
    settings: &OracleSettings,
) -> Result<EnergyReport> {
    let cfg = settings.config(spec.n_modes());
    let rho = match time {
        None => fock::oracle_steady_state(spec, bath, &cfg, settings.window, settings.tol)?,
        Some(t) => {
            let lind = Lindbladian::new(spec, bath, &cfg)?;
            lind.integrate(&fock::DensityMatrix::ground(&cfg.dims), &[t])?
                .pop()
                .expect("one output")
        }
    };
    fock::fock_report(&rho, spec.frequency, cfg.tail_threshold, time)
}

fn tolerance(a: EngineKind, b: EngineKind, x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if a == EngineKind::FockOracle || b == EngineKind::FockOracle {
        (ORACLE_RELATIVE * scale).max(ORACLE_ABSOLUTE)
    } else {
        (EXACT_TOLERANCE * scale).max(1e-14)
    }
}

fn cross_check(rows: &[SweepRow]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            if a.index != b.index || a.observable != b.observable || a.engine == b.engine {
                continue;
            }
            if a.error.is_some() || b.error.is_some() || a.components != b.components {
                continue;
            }
            for ((label, x), y) in a.components.iter().zip(&a.values).zip(&b.values) {
                if (x - y).abs() > tolerance(a.engine, b.engine, *x, *y) {
                    out.push(format!(
                        "point {} ({}): {} {label} {} = {x} vs {} = {y}",
                        a.index, a.x, a.observable, a.engine, b.engine
                    ));
                }
            }
        }
    }
    out
}

/// Evaluate every point, observable and engine with `workers` threads.
/// Engine failures land in the row's error column.
pub fn run(plan: &SweepPlan, workers: usize) -> Result<SweepResult> {
    plan.validate()?;
    let points = plan.points()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let per_point: Vec<Vec<SweepRow>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let mut rows = Vec::new();
                for &obs in &plan.observables {
                    for &engine in &plan.engines {
                        let (components, values, error) = match evaluate(engine, obs, p, plan) {
                            Ok((c, v)) => (c, v, None),
                            Err(e) => (Vec::new(), Vec::new(), Some(e.to_string())),
                        };
                        rows.push(SweepRow {
                            index: p.index,
                            x: p.x,
                            observable: obs,
                            engine,
                            components,
                            values,
                            error,
                        });
                    }
                }
                rows
            })
            .collect()
    });
    let rows: Vec<SweepRow> = per_point.into_iter().flatten().collect();
    let disagreements = if plan.engines.len() >= 2 {
        cross_check(&rows)
    } else {
        Vec::new()
    };
    Ok(SweepResult {
        axis: plan.axis,
        rows,
        disagreements,
    })
}

impl SweepResult {
    /// Long-format CSV: one line per row component; failed rows keep one
    /// line with an empty value and the message in `error`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["point", self.axis.name(), "observable", "engine", "component", "value", "error"])?;
        for r in &self.rows {
            let head = [r.index.to_string(), r.x.to_string(), r.observable.to_string(), r.engine.to_string()];
            match &r.error {
                Some(e) => {
                    w.write_record(head.iter().map(String::as_str).chain(["", "", e.as_str()]))?;
                }
                None => {
                    for (c, v) in r.components.iter().zip(&r.values) {
                        let v = v.to_string();
                        w.write_record(head.iter().map(String::as_str).chain([c.as_str(), v.as_str(), ""]))?;
                    }
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    /// Rows of one observable and engine, in grid order.
    pub fn series(&self, obs: Observable, engine: EngineKind) -> impl Iterator<Item = &SweepRow> {
        self.rows
            .iter()
            .filter(move |r| r.observable == obs && r.engine == engine)
    }
}
