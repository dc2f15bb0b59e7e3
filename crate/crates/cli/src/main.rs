use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbnet_core::closed_form::optimal_coupling;
use qbnet_core::config::NetworkConfig;
use qbnet_core::energetics::EnergyReport;
use qbnet_core::experiments::{
    self, engine_report, reproduce, Axis, EngineKind, FigureId, Observable, OracleSettings, SweepPlan,
    FIGURES,
};
use qbnet_core::moments::Reservoir;
use qbnet_core::spectral::parity_report;
use qbnet_core::{Error, NetworkSpec, TopologyKind};

/// Driven bosonic quantum battery networks: steady states, dynamics,
/// sweeps and figure data.
#[derive(Parser, Debug)]
#[command(name = "qbnet", version)]
struct Cli {
    /// Network configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Comma-separated engines: closed_form, gaussian, spectral, fock_oracle.
    #[arg(long, global = true, value_delimiter = ',')]
    engines: Vec<String>,
    /// Cross-check results against a second engine (only `fock`).
    #[arg(long, global = true)]
    verify: Option<String>,
    /// Worker threads for sweeps and figures.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Fock levels kept per mode.
    #[arg(long, global = true, default_value_t = 12)]
    fock_levels: usize,
    /// Fock steady states: integration window per convergence check.
    #[arg(long, global = true, default_value_t = 200.0)]
    fock_window: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady per-mode energies and ergotropies.
    SteadyState,
    /// Per-mode energies from the ground state on a uniform time grid.
    Dynamics {
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// One-dimensional parameter sweep.
    Sweep {
        /// coupling_j, battery_n, time, thermal_n or squeeze_r.
        #[arg(long)]
        axis: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Vec<f64>,
        /// Comma-separated observables: energy, ergotropy, relax_time, parity_report.
        #[arg(long, value_delimiter = ',', default_value = "energy")]
        observables: Vec<String>,
    },
    /// Modal decomposition of the terminal response of reciprocal chains.
    ParityScan {
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Evaluate every chain at its own optimal coupling instead of the configured J.
        #[arg(long)]
        at_optimum: bool,
    },
    /// Energy, ergotropy and passive energy per mode.
    Ergotropy {
        /// Evaluate at this time after starting from the ground state.
        #[arg(long)]
        time: Option<f64>,
    },
    /// Write `<figN>.csv` and `<figN>.meta.json` (or `all`).
    Reproduce { figure: String },
}

struct Loaded {
    spec: NetworkSpec,
    bath: Reservoir,
}

fn load(cli: &Cli) -> Result<Loaded, Error> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let cfg = NetworkConfig::from_path(path)?;
    Ok(Loaded {
        spec: cfg.to_spec()?,
        bath: cfg.reservoir(),
    })
}

fn engines(cli: &Cli, default: EngineKind) -> Result<Vec<EngineKind>, Error> {
    let mut out: Vec<EngineKind> = Vec::new();
    for e in &cli.engines {
        let e: EngineKind = e.parse()?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    if out.is_empty() {
        out.push(default);
    }
    match cli.verify.as_deref() {
        None => {}
        Some("fock") => {
            if !out.contains(&EngineKind::FockOracle) {
                out.push(EngineKind::FockOracle);
            }
        }
        Some(other) => return Err(Error::Config(format!("unknown verifier '{other}', expected fock"))),
    }
    Ok(out)
}

fn oracle(cli: &Cli) -> OracleSettings {
    OracleSettings {
        levels: cli.fock_levels,
        window: cli.fock_window,
        ..OracleSettings::default()
    }
}

fn write(path: &Path, text: String) -> Result<(), Error> {
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Fail when a report disagrees with the first one beyond the cross-engine tolerances.
fn compare(reports: &[EnergyReport]) -> Result<(), Error> {
    let Some(first) = reports.first() else {
        return Ok(());
    };
    for r in &reports[1..] {
        let oracle = r.engine == qbnet_core::energetics::Engine::FockOracle
            || first.engine == qbnet_core::energetics::Engine::FockOracle;
        let pairs = first
            .per_mode_energy
            .iter()
            .zip(&r.per_mode_energy)
            .chain(first.per_mode_ergotropy.iter().zip(&r.per_mode_ergotropy));
        for (a, b) in pairs {
            let scale = a.abs().max(b.abs());
            let tol = if oracle {
                (experiments::ORACLE_RELATIVE * scale).max(experiments::ORACLE_ABSOLUTE)
            } else {
                (experiments::EXACT_TOLERANCE * scale).max(1e-14)
            };
            if (a - b).abs() > tol {
                return Err(Error::NotConverged(format!(
                    "{:?} and {:?} disagree: {a} vs {b}",
                    first.engine, r.engine
                )));
            }
        }
    }
    Ok(())
}

fn print_report(r: &EnergyReport) {
    println!("engine {:?}", r.engine);
    for (m, ((e, w), p)) in r
        .per_mode_energy
        .iter()
        .zip(&r.per_mode_ergotropy)
        .zip(&r.per_mode_passive)
        .enumerate()
    {
        let name = if m == 0 { "charger".to_string() } else { format!("b{m}") };
        println!("  {name:>8}  energy {e:.10e}  ergotropy {w:.10e}  passive {p:.10e}");
    }
}

fn steady_state(cli: &Cli) -> Result<(), Error> {
    let net = load(cli)?;
    let settings = oracle(cli);
    let mut records = Vec::new();
    let mut reports = Vec::new();
    for e in engines(cli, EngineKind::Gaussian)? {
        let r = engine_report(e, &net.spec, net.bath, None, &settings)?;
        print_report(&r);
        records.push(experiments::steady_json(&net.spec, net.bath, &r));
        reports.push(r);
    }
    write(&cli.out.join("steady_state.json"), serde_json::to_string_pretty(&records)? + "\n")?;
    compare(&reports)
}

fn dynamics(cli: &Cli, t_end: f64, points: usize) -> Result<(), Error> {
    let net = load(cli)?;
    if t_end.is_nan() || t_end <= 0.0 || points < 2 {
        return Err(Error::InvalidParameter("need t_end > 0 and at least two points".into()));
    }
    let times: Vec<f64> = (0..points)
        .map(|k| t_end * k as f64 / (points - 1) as f64)
        .collect();
    let settings = oracle(cli);
    let list = engines(cli, EngineKind::Gaussian)?;
    let mut last = Vec::new();
    for (i, e) in list.iter().enumerate() {
        let reports = trajectory(*e, &net, &times, &settings)?;
        let name = if i == 0 {
            "dynamics.csv".to_string()
        } else {
            format!("dynamics.{e}.csv")
        };
        let path = cli.out.join(name);
        experiments::write_trajectory_csv(&path, &reports)?;
        println!("wrote {}", path.display());
        last.push(reports);
    }
    for k in 0..times.len() {
        let at: Vec<EnergyReport> = last.iter().map(|r| r[k].clone()).collect();
        compare(&at)?;
    }
    Ok(())
}

fn trajectory(
    engine: EngineKind,
    net: &Loaded,
    times: &[f64],
    settings: &OracleSettings,
) -> Result<Vec<EnergyReport>, Error> {
    use qbnet_core::fock::{fock_report, DensityMatrix, Lindbladian};
    use qbnet_core::moments::{assemble, GaussianState};
    let spec = &net.spec;
    match engine {
        EngineKind::Gaussian => {
            let states = assemble(spec, net.bath).evolve(&GaussianState::ground(spec.n_modes()), times)?;
            Ok(states
                .iter()
                .map(|s| EnergyReport::from_gaussian(s, spec.frequency))
                .collect())
        }
        EngineKind::FockOracle => {
            let cfg = settings.config(spec.n_modes());
            let lind = Lindbladian::new(spec, net.bath, &cfg)?;
            lind.integrate(&DensityMatrix::ground(&cfg.dims), times)?
                .iter()
                .map(|rho| fock_report(rho, spec.frequency, cfg.tail_threshold, Some(rho.time)))
                .collect()
        }
        other => times
            .iter()
            .map(|&t| engine_report(other, spec, net.bath, Some(t), settings))
            .collect(),
    }
}

fn sweep(cli: &Cli, axis: &str, grid: &[f64], observables: &[String]) -> Result<(), Error> {
    let net = load(cli)?;
    let plan = SweepPlan {
        spec: net.spec,
        bath: net.bath,
        axis: axis.parse::<Axis>()?,
        grid: grid.to_vec(),
        observables: observables
            .iter()
            .map(|o| o.parse::<Observable>())
            .collect::<Result<BTreeSet<_>, _>>()?,
        engines: engines(cli, EngineKind::Gaussian)?.into_iter().collect(),
        oracle: oracle(cli),
        relax_threshold: 0.95,
    };
    let result = experiments::run(&plan, cli.workers)?;
    let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
    write(&cli.out.join("sweep.csv"), result.to_csv()?)?;
    if failed > 0 {
        eprintln!("{failed} of {} rows failed; see the error column", result.rows.len());
    }
    if !result.disagreements.is_empty() {
        for d in &result.disagreements {
            eprintln!("disagreement: {d}");
        }
        return Err(Error::NotConverged(format!(
            "{} cross-engine disagreements",
            result.disagreements.len()
        )));
    }
    Ok(())
}

fn parity_scan(cli: &Cli, n_max: usize, at_optimum: bool) -> Result<(), Error> {
    let net = load(cli)?;
    let spec = &net.spec;
    let kappa = spec.local.charger;
    let mut reports = Vec::new();
    println!("{:>3} {:>12} {:>16} {:>9}", "N", "J", "terminal energy", "zero mode");
    for n in 1..=n_max {
        let j = if at_optimum {
            optimal_coupling(TopologyKind::Cascaded, n, kappa)
        } else {
            spec.coupling.amplitudes[0]
        };
        let mut r = parity_report(n, j, kappa, spec.drive)?;
        r.terminal_energy *= spec.frequency;
        println!("{n:>3} {j:>12.6e} {:>16.8e} {:>9}", r.terminal_energy, r.has_zero_mode);
        reports.push(r);
    }
    write(&cli.out.join("parity_scan.json"), serde_json::to_string_pretty(&reports)? + "\n")
}

fn ergotropy(cli: &Cli, time: Option<f64>) -> Result<(), Error> {
    let net = load(cli)?;
    let settings = oracle(cli);
    let mut reports = Vec::new();
    for e in engines(cli, EngineKind::Gaussian)? {
        let r = engine_report(e, &net.spec, net.bath, time, &settings)?;
        print_report(&r);
        reports.push(r);
    }
    write(&cli.out.join("ergotropy.json"), serde_json::to_string_pretty(&reports)? + "\n")?;
    compare(&reports)
}

fn reproduce_cmd(cli: &Cli, figure: &str) -> Result<(), Error> {
    let figures: Vec<FigureId> = if figure.eq_ignore_ascii_case("all") {
        FIGURES.to_vec()
    } else {
        vec![figure.parse()?]
    };
    for f in figures {
        for path in reproduce(f, &cli.out, cli.workers)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    if cli.workers == 0 {
        return Err(Error::InvalidParameter("--workers must be at least 1".into()));
    }
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::SteadyState => steady_state(cli),
        Command::Dynamics { t_end, points } => dynamics(cli, *t_end, *points),
        Command::Sweep {
            axis,
            grid,
            observables,
        } => sweep(cli, axis, grid, observables),
        Command::ParityScan { n_max, at_optimum } => parity_scan(cli, *n_max, *at_optimum),
        Command::Ergotropy { time } => ergotropy(cli, *time),
        Command::Reproduce { figure } => reproduce_cmd(cli, figure),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
