//! `qbound`: scenario runner for certified spin-system bounds.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qbound::scenario::{
    preset, BathConfig, MeasureSelection, MeasurementSpec, ModelSpec, ObjectiveSpec, ResultTable, Scenario,
    ScenarioConfig, ShotPoint, Sides, Strategy, PRESETS,
};
use qbound::sdp::write_sdpa;

#[derive(Parser)]
#[command(
    name = "qbound",
    version,
    about = "Certified bounds on spin-system observables from moment relaxations and finite-shot data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state energy of the transverse-field Ising grid.
    BoundEnergy {
        #[command(flatten)]
        grid: GridArgs,
        /// Measure the `K` strings most frequent in the constraints instead
        /// of the Hamiltonian's own strings.
        #[arg(long, value_name = "K")]
        measured: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Steady-state heat current of a grid between two baths.
    BoundHeat {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0.001)]
        gamma_hot: f64,
        #[arg(long, default_value_t = 0.011)]
        gamma_cold: f64,
        #[arg(long, default_value_t = 1.0)]
        t_hot: f64,
        #[arg(long, default_value_t = 0.1)]
        t_cold: f64,
        /// Steady-state constraints to generate.
        #[arg(long, default_value_t = 400)]
        budget: usize,
        /// Measure the first `K` generated strings without a Z instead of
        /// the current's own strings.
        #[arg(long, value_name = "K")]
        measured: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Lower bound on the purity of the Ising ground state.
    BoundPurity {
        #[command(flatten)]
        grid: GridArgs,
        /// Largest string weight kept in the truncated purity.
        #[arg(long, default_value_t = 2)]
        max_weight: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Runs the shot schedule of a config or preset.
    SweepShots {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Reruns the schedule at several confidence levels on the same data.
    SweepConfidence {
        /// Confidence levels `1 - delta`.
        #[arg(long, value_delimiter = ',', default_values_t = [0.68, 0.95, 0.997])]
        levels: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Writes the relaxation of one scenario point in sparse SDPA format.
    ExportSdpa {
        #[arg(long, value_parser = parse_strategy, default_value = "sdp")]
        strategy: Strategy,
        /// Shot total of the exported point (the first scheduled one by
        /// default).
        #[arg(long)]
        n_tot: Option<u64>,
        #[arg(long, default_value_t = 0)]
        repeat: u32,
        /// Export the maximization (negated objective) instead.
        #[arg(long)]
        upper: bool,
        #[arg(long, default_value = "problem.dat-s")]
        sdpa: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Exact value of the scenario objective from the dense oracle.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = 2)]
    rows: usize,
    #[arg(long, default_value_t = 2)]
    cols: usize,
    /// Transverse field (and bath quantum `2g` where relevant).
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    /// Nearest-neighbour coupling.
    #[arg(long, default_value_t = 1.0)]
    j: f64,
    /// Moment-matrix size including the identity.
    #[arg(long, default_value_t = 60)]
    moment_size: usize,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario file (TOML); replaces the subcommand's template.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped scenario: fig3, fig4, fig5, fig6 or fig7-desk.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated shot totals.
    #[arg(long, value_delimiter = ',')]
    shots: Option<Vec<u64>>,
    #[arg(long)]
    repeats: Option<u32>,
    #[arg(long)]
    delta: Option<f64>,
    /// Adds the zero-width infinite-shot point.
    #[arg(long)]
    infinite_shots: bool,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Per-group summary as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print the resolved scenario and exit.
    #[arg(long)]
    dry_run: bool,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s.to_ascii_lowercase().as_str() {
        "measure" => Ok(Strategy::Measure),
        "sdp" => Ok(Strategy::Sdp),
        "sdp_measure" | "sdp&measure" => Ok(Strategy::SdpMeasure),
        _ => Err(format!("unknown strategy `{s}` (measure, sdp, sdp_measure)")),
    }
}

/// Marks failures that come from the user's input.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(e.into()))
}

fn template(
    name: &str,
    model: ModelSpec,
    objective: ObjectiveSpec,
    measurement: MeasurementSpec,
    moment_size: usize,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        model,
        objective,
        delta: 0.003,
        shots: vec![10_000, 100_000, 1_000_000],
        infinite_shots: false,
        measurement,
        moment_size,
        constraint_budget: 0,
        rdm_blocks: Vec::new(),
        strategies: vec![Strategy::Measure, Strategy::Sdp, Strategy::SdpMeasure],
        bounds: Sides::Both,
        repeats: 1,
        seed: 0,
        solver: Default::default(),
    }
}

fn tfi(grid: &GridArgs) -> ModelSpec {
    ModelSpec::Tfi { rows: grid.rows, cols: grid.cols, g: grid.g, j: grid.j }
}

/// Config from `--config`/`--preset`, else the template, then overrides.
fn resolve(run: &RunArgs, fallback: Option<ScenarioConfig>) -> anyhow::Result<ScenarioConfig> {
    let mut c = if let Some(path) = &run.config {
        ScenarioConfig::load(path).with_context(|| format!("reading {}", path.display())).map_err(config_err)?
    } else if let Some(name) = &run.preset {
        preset(name).map_err(|e| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            config_err(anyhow::anyhow!("{e}; available: {}", names.join(", ")))
        })?
    } else {
        fallback.ok_or_else(|| config_err(anyhow::anyhow!("this command needs --config or --preset")))?
    };
    if let Some(seed) = run.seed {
        c.seed = seed;
    }
    if let Some(shots) = &run.shots {
        c.shots = shots.clone();
    }
    if let Some(r) = run.repeats {
        c.repeats = r;
    }
    if let Some(d) = run.delta {
        c.delta = d;
    }
    if run.infinite_shots {
        c.infinite_shots = true;
    }
    c.validate().map_err(config_err)?;
    Ok(c)
}

fn prepare(c: ScenarioConfig) -> anyhow::Result<Scenario> {
    Scenario::prepare(c).map_err(config_err)
}

fn write_outputs(run: &RunArgs, s: &Scenario, table: &ResultTable) -> anyhow::Result<()> {
    let f = File::create(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    table.write_csv(BufWriter::new(f))?;
    let summary = s.summary(table);
    if let Some(path) = &run.json {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        summary.write_json(BufWriter::new(f))?;
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}: {} rows -> {}", summary.scenario, table.rows.len(), run.out.display())?;
    if let Some(e) = summary.exact {
        writeln!(out, "exact value {e:.10}")?;
    }
    writeln!(
        out,
        "{:<12} {:>10} {:>8} {:>7} {:>14} {:>14} {:>12}",
        "strategy", "n_tot", "delta", "solved", "mean lb", "mean ub", "mean width"
    )?;
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    for g in &summary.groups {
        let n = g.n_tot.map_or_else(|| "inf".to_string(), |n| n.to_string());
        writeln!(
            out,
            "{:<12} {:>10} {:>8} {:>3}/{:<3} {:>14} {:>14} {:>12}",
            g.strategy.label(),
            n,
            g.delta,
            g.solved,
            g.rows,
            opt(g.mean_lb),
            opt(g.mean_ub),
            opt(g.mean_width)
        )?;
    }
    Ok(())
}

fn run_and_report(run: &RunArgs, c: ScenarioConfig, deltas: Option<Vec<f64>>) -> anyhow::Result<()> {
    if run.dry_run {
        print!("{}", c.to_toml()?);
        return Ok(());
    }
    let s = prepare(c)?;
    let table = match deltas {
        Some(d) => s.run_deltas(&d),
        None => s.run(),
    };
    write_outputs(run, &s, &table)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::BoundEnergy { grid, measured, run } => {
            let t = template(
                "bound-energy",
                tfi(&grid),
                ObjectiveSpec::Energy,
                MeasurementSpec {
                    selection: measured
                        .map_or(MeasureSelection::ObjectiveStrings, |k| MeasureSelection::MostFrequent { k }),
                    ..Default::default()
                },
                grid.moment_size,
            );
            let c = resolve(&run, Some(ScenarioConfig { bounds: Sides::Lower, ..t }))?;
            run_and_report(&run, c, None)
        }
        Command::BoundHeat { grid, gamma_hot, gamma_cold, t_hot, t_cold, budget, measured, run } => {
            let model = ModelSpec::BoundaryDriven {
                rows: grid.rows,
                cols: grid.cols,
                g: grid.g,
                j: grid.j,
                hot: BathConfig { temperature: t_hot, rate: gamma_hot, quantum: None },
                cold: BathConfig { temperature: t_cold, rate: gamma_cold, quantum: None },
            };
            let measurement = MeasurementSpec {
                selection: measured
                    .map_or(MeasureSelection::ObjectiveStrings, |k| MeasureSelection::FirstGenerated { k }),
                exclude: "Z".into(),
                energy: false,
            };
            let mut t = template("bound-heat", model, ObjectiveSpec::HeatCurrent, measurement, grid.moment_size);
            t.constraint_budget = budget;
            let c = resolve(&run, Some(t))?;
            run_and_report(&run, c, None)
        }
        Command::BoundPurity { grid, max_weight, run } => {
            let mut t = template(
                "bound-purity",
                tfi(&grid),
                ObjectiveSpec::Purity { max_weight },
                MeasurementSpec { selection: MeasureSelection::SecondOrderAll, ..Default::default() },
                grid.moment_size,
            );
            t.strategies = vec![Strategy::SdpMeasure];
            let c = resolve(&run, Some(t))?;
            run_and_report(&run, c, None)
        }
        Command::SweepShots { run } => {
            let c = resolve(&run, None)?;
            run_and_report(&run, c, None)
        }
        Command::SweepConfidence { levels, run } => {
            let fallback = preset("fig7-desk").map_err(config_err)?;
            let c = resolve(&run, Some(fallback))?;
            let mut deltas = Vec::with_capacity(levels.len());
            for l in levels {
                if !(l > 0.0 && l < 1.0) {
                    return Err(config_err(anyhow::anyhow!("confidence level {l} outside (0, 1)")));
                }
                deltas.push(1.0 - l);
            }
            run_and_report(&run, c, Some(deltas))
        }
        Command::ExportSdpa { strategy, n_tot, repeat, upper, sdpa, run } => {
            let c = resolve(&run, None)?;
            if run.dry_run {
                print!("{}", c.to_toml()?);
                return Ok(());
            }
            let s = prepare(c)?;
            let point = match n_tot {
                Some(n) => ShotPoint::Finite(n),
                None => s.points().first().copied().unwrap_or(ShotPoint::Infinite),
            };
            let p = s.problem_at(strategy, point, repeat, s.config().delta).map_err(config_err)?;
            let p = if upper { p.negated() } else { p };
            write_sdpa(&p, &sdpa).with_context(|| format!("writing {}", sdpa.display()))?;
            println!(
                "{} at N_tot={} repeat {repeat}: {} variables, {} blocks, {} rows -> {}",
                strategy.label(),
                point.as_f64(),
                p.num_vars,
                p.blocks.len(),
                p.rows.len(),
                sdpa.display()
            );
            Ok(())
        }
        Command::Oracle { run } => {
            let mut c = resolve(&run, None)?;
            // only the exact state is needed
            c.strategies = vec![Strategy::Sdp];
            c.moment_size = 0;
            c.constraint_budget = 0;
            c.rdm_blocks.clear();
            let s = prepare(c)?;
            let value = s
                .exact_value()
                .ok_or_else(|| config_err(anyhow::anyhow!("{} qubits is beyond the dense oracle", s.num_qubits())))?;
            println!("{}: exact objective {value:.12}", s.config().name);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(ce) = e.downcast_ref::<ConfigError>() {
                eprintln!("error: {ce}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}
