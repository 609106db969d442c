//! Batch runs over a shot schedule.
//!
//! The registry, constraints, moment basis and measured observables are
//! built once per scenario; only the simulated records change between
//! `(N_tot, repeat)` points. Each point yields one row per strategy.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::{build_intervals, IntervalConstraint, MeasurementRecord};
use crate::error::{Error, Result};
use crate::models::{
    build_boundary_driven, build_majumdar_ghosh, build_single_qubit, build_tfi_2d, heat_current_poly, BathSpec,
    LindbladModel, MgNormalization,
};
use crate::oracle::{MAX_PURE_QUBITS, MAX_STEADY_QUBITS};
use crate::pauli::{OperatorPoly, Pauli, PauliString};
use crate::relax::{
    build_moment_matrix, build_rdm_block, generate_steady_constraints, select_moment_basis, HermitianBlock, IndexSet,
    IndexSetSizes, LinearMomentConstraint, MomentId, MomentRegistry,
};
use crate::sampler::{simulate_records, DimerCovering, ShotSource};
use crate::sdp::{
    self, purity_epigraph, BoundResult, ConicProblem, Direction, DualPoint, Objective, PuritySpec, Solution,
    SolveHints, SolverSettings, SolverStatus,
};

/// Tag written as the first line of every result CSV.
pub const CSV_SCHEMA: &str = "qbound.rows.v1";

fn one() -> f64 {
    1.0
}

/// Bath as written in a config; the quantum defaults to `2g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub temperature: f64,
    pub rate: f64,
    #[serde(default)]
    pub quantum: Option<f64>,
}

impl BathConfig {
    fn spec(&self, g: f64) -> Result<BathSpec> {
        BathSpec::new(self.temperature, self.rate, self.quantum.unwrap_or(2.0 * g))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Ground state of the transverse-field Ising grid.
    Tfi {
        rows: usize,
        cols: usize,
        #[serde(default = "one")]
        g: f64,
        #[serde(default = "one")]
        j: f64,
    },
    /// Steady state of the grid between a hot (first column) and a cold
    /// (last column) bath.
    BoundaryDriven {
        rows: usize,
        cols: usize,
        #[serde(default = "one")]
        g: f64,
        #[serde(default = "one")]
        j: f64,
        hot: BathConfig,
        cold: BathConfig,
    },
    SingleQubit {
        #[serde(default = "one")]
        g: f64,
        rate_up: f64,
        rate_down: f64,
    },
    MajumdarGhosh {
        n: usize,
        #[serde(default)]
        normalization: MgNormalization,
        #[serde(default)]
        covering: DimerCovering,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    Energy,
    HeatCurrent,
    /// Truncated purity over all strings of weight `1..=max_weight`.
    Purity {
        #[serde(default = "two")]
        max_weight: usize,
    },
    /// `Σ c·P` with strings written as `"X1 Y3"`.
    Custom {
        terms: Vec<(f64, String)>,
    },
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSelection {
    ObjectiveStrings,
    /// Every string of weight one or two.
    SecondOrderAll,
    /// The `k` registered strings occurring most often in the constraints.
    MostFrequent {
        k: usize,
    },
    /// The first `k` strings in order of registration.
    FirstGenerated {
        k: usize,
    },
    Custom {
        strings: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSpec {
    #[serde(flatten)]
    pub selection: MeasureSelection,
    /// Letters that cannot be measured, e.g. `"Z"`.
    #[serde(default)]
    pub exclude: String,
    /// Also measure the Hamiltonian, scaled to unit coefficient norm.
    #[serde(default)]
    pub energy: bool,
}

impl Default for MeasurementSpec {
    fn default() -> Self {
        MeasurementSpec { selection: MeasureSelection::ObjectiveStrings, exclude: String::new(), energy: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Confidence bands only.
    #[serde(rename = "Measure", alias = "measure")]
    Measure,
    /// Positivity and steady-state constraints only.
    #[serde(rename = "SDP", alias = "sdp")]
    Sdp,
    #[serde(rename = "SDP&Measure", alias = "sdp_measure")]
    SdpMeasure,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Measure => "Measure",
            Strategy::Sdp => "SDP",
            Strategy::SdpMeasure => "SDP&Measure",
        }
    }

    fn uses_data(self) -> bool {
        self != Strategy::Sdp
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sides {
    #[default]
    Both,
    Lower,
}

fn default_delta() -> f64 {
    0.003
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Measure, Strategy::Sdp, Strategy::SdpMeasure]
}

fn default_repeats() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelSpec,
    pub objective: ObjectiveSpec,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Total shot budgets `N_tot`, split evenly over the measured observables.
    #[serde(default)]
    pub shots: Vec<u64>,
    /// Adds a point with zero-width bands at the true values.
    #[serde(default)]
    pub infinite_shots: bool,
    #[serde(default)]
    pub measurement: MeasurementSpec,
    /// Moment-matrix size including the identity; 0 disables the block.
    #[serde(default)]
    pub moment_size: usize,
    /// Steady-state constraints to generate (open systems only).
    #[serde(default)]
    pub constraint_budget: usize,
    /// Site subsets (1-based) with a reduced-density-matrix block each.
    #[serde(default)]
    pub rdm_blocks: Vec<Vec<usize>>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub bounds: Sides,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots.is_empty() && !self.infinite_shots {
            return Err(Error::Config("shot schedule is empty".into()));
        }
        if self.shots.contains(&0) {
            return Err(Error::Config("shot totals must be positive".into()));
        }
        if self.repeats < 1 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta {} outside (0, 1)", self.delta)));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies selected".into()));
        }
        for c in self.measurement.exclude.chars().filter(|c| !c.is_whitespace() && *c != ',') {
            if !matches!(Pauli::from_char(c), Some(Pauli::X | Pauli::Y | Pauli::Z)) {
                return Err(Error::Config(format!("cannot exclude letter `{c}`")));
            }
        }
        Ok(())
    }

    fn excluded(&self) -> Vec<Pauli> {
        self.measurement.exclude.chars().filter_map(Pauli::from_char).filter(|p| *p != Pauli::I).collect()
    }
}

/// A total shot budget, or the infinite-shot limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShotPoint {
    Finite(u64),
    Infinite,
}

impl ShotPoint {
    pub fn as_f64(self) -> f64 {
        match self {
            ShotPoint::Finite(n) => n as f64,
            ShotPoint::Infinite => f64::INFINITY,
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub strategy: Strategy,
    /// `inf` for the infinite-shot limit.
    pub n_tot: f64,
    pub repeat: u32,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
    pub status: String,
    /// Seconds.
    pub wall_time: f64,
    /// Risk of the bounds; 0 when no data entered.
    pub delta: f64,
}

impl ResultRow {
    pub fn width(&self) -> Option<f64> {
        Some(self.ub? - self.lb?)
    }
}

enum Target {
    Linear(OperatorPoly),
    Purity(PuritySpec),
}

/// A scenario with its symbolic structure built.
pub struct Scenario {
    config: ScenarioConfig,
    hamiltonian: OperatorPoly,
    target: Target,
    reg: MomentRegistry,
    blocks: Vec<HermitianBlock>,
    linear: Vec<LinearMomentConstraint>,
    observables: Vec<OperatorPoly>,
    source: Option<ShotSource>,
    exact: Option<f64>,
}

impl Scenario {
    pub fn prepare(config: ScenarioConfig) -> Result<Scenario> {
        config.validate()?;
        let (hamiltonian, model, n) = build_model(&config.model)?;
        let mut reg = MomentRegistry::new(n);

        let target = match &config.objective {
            ObjectiveSpec::Energy => Target::Linear(hamiltonian.clone()),
            ObjectiveSpec::HeatCurrent => {
                let m =
                    model.as_ref().ok_or_else(|| Error::Config("heat current needs an open-system model".into()))?;
                Target::Linear(heat_current_poly(m)?)
            }
            ObjectiveSpec::Custom { terms } => {
                let mut o = OperatorPoly::zero(n);
                for (c, s) in terms {
                    o.add_term(PauliString::parse_sparse(s, n)?, (*c).into());
                }
                Target::Linear(o)
            }
            ObjectiveSpec::Purity { max_weight } => {
                let strings = low_weight_strings(n, *max_weight)?;
                for s in &strings {
                    reg.register(s, IndexSet::Objective)?;
                }
                Target::Purity(purity_epigraph(&reg, &strings)?)
            }
        };
        let seeds: Vec<PauliString> = match &target {
            Target::Linear(o) => {
                reg.register_poly(o, IndexSet::Objective)?;
                o.strings().filter(|s| !s.is_identity()).cloned().collect()
            }
            Target::Purity(p) => p.moments.iter().map(|&id| reg.string(id).clone()).collect(),
        };

        let linear = match (&model, config.constraint_budget) {
            (Some(m), b) if b > 0 => {
                if seeds.is_empty() {
                    return Err(Error::Config("objective has no strings to seed the constraints".into()));
                }
                generate_steady_constraints(m, &seeds, b, &mut reg)?
            }
            _ => Vec::new(),
        };

        let mut blocks = Vec::new();
        if config.moment_size > 0 {
            let basis = select_moment_basis(&reg, config.moment_size)?;
            blocks.push(build_moment_matrix(&basis.strings, &mut reg)?.block);
        }
        for (k, sites) in config.rdm_blocks.iter().enumerate() {
            if sites.iter().any(|&s| s == 0 || s > n) {
                return Err(Error::Config(format!("RDM block {sites:?} names a site outside 1..={n}")));
            }
            let zero: Vec<usize> = sites.iter().map(|s| s - 1).collect();
            let mut b = build_rdm_block(&zero, &mut reg)?;
            b.label = format!("rdm[{k}]");
            blocks.push(b);
        }

        let wants_data = config.strategies.iter().any(|s| s.uses_data());
        let mut observables = Vec::new();
        if wants_data {
            for s in select_measured(&config, &target, &reg, n)? {
                reg.register_silent(&s, IndexSet::Measured)?;
                observables.push(OperatorPoly::from_string(s, 1.0.into()));
            }
            if config.measurement.energy {
                let l1 = hamiltonian.coefficient_l1();
                if l1 == 0.0 {
                    return Err(Error::Config("cannot measure a zero Hamiltonian".into()));
                }
                reg.register_poly(&hamiltonian, IndexSet::Measured)?;
                observables.push(hamiltonian.scale_real(1.0 / l1));
            }
            if observables.is_empty() {
                return Err(Error::Config("measurement strategy selects no observables".into()));
            }
        }

        let source = match build_source(&config.model, &hamiltonian, model.as_ref(), n) {
            Ok(s) => Some(s),
            Err(e @ Error::TooLarge(_)) if wants_data => {
                return Err(Error::Config(format!("cannot simulate measurements: {e}")))
            }
            Err(Error::TooLarge(_)) => None,
            Err(e) => return Err(e),
        };
        let exact = match (&source, &target) {
            (Some(src), Target::Linear(o)) => Some(src.true_value(o)?),
            (Some(ShotSource::Exact(s)), Target::Purity(_)) => Some(s.purity()),
            (Some(ShotSource::MajumdarGhosh { .. }), Target::Purity(_)) => Some(1.0),
            (None, _) => None,
        };

        log::info!(
            "scenario `{}`: {} qubits, {} variables, {} blocks, {} linear constraints, {} observables",
            config.name,
            n,
            reg.num_variables(),
            blocks.len(),
            linear.len(),
            observables.len()
        );
        Ok(Scenario { config, hamiltonian, target, reg, blocks, linear, observables, source, exact })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn num_qubits(&self) -> usize {
        self.reg.num_qubits()
    }

    pub fn registry(&self) -> &MomentRegistry {
        &self.reg
    }

    pub fn hamiltonian(&self) -> &OperatorPoly {
        &self.hamiltonian
    }

    pub fn observables(&self) -> &[OperatorPoly] {
        &self.observables
    }

    pub fn linear_constraints(&self) -> &[LinearMomentConstraint] {
        &self.linear
    }

    pub fn blocks(&self) -> &[HermitianBlock] {
        &self.blocks
    }

    /// True value of the objective in the simulated state, when available.
    pub fn exact_value(&self) -> Option<f64> {
        self.exact
    }

    pub fn source(&self) -> Option<&ShotSource> {
        self.source.as_ref()
    }

    pub fn points(&self) -> Vec<ShotPoint> {
        let mut p: Vec<ShotPoint> = self.config.shots.iter().map(|&n| ShotPoint::Finite(n)).collect();
        if self.config.infinite_shots {
            p.push(ShotPoint::Infinite);
        }
        p
    }

    /// Per-observable shot count `max(1, N_tot / K)`.
    pub fn shots_per_observable(&self, n_tot: u64) -> u64 {
        (n_tot / self.observables.len().max(1) as u64).max(1)
    }

    /// Confidence bands for one point and repeat.
    pub fn intervals(&self, point: ShotPoint, repeat: u32, delta: f64) -> Result<Vec<IntervalConstraint>> {
        let source = self.source.as_ref().ok_or_else(|| Error::Config("no measurement source".into()))?;
        match point {
            ShotPoint::Infinite => self
                .observables
                .iter()
                .map(|o| Ok(IntervalConstraint::exact(o.clone(), source.true_value(o)?)))
                .collect(),
            ShotPoint::Finite(n_tot) => {
                let records = self.records(n_tot, repeat)?;
                build_intervals(&records, delta)
            }
        }
    }

    /// Simulated records; independent of `delta`.
    pub fn records(&self, n_tot: u64, repeat: u32) -> Result<Vec<MeasurementRecord>> {
        let source = self.source.as_ref().ok_or_else(|| Error::Config("no measurement source".into()))?;
        let shots = vec![self.shots_per_observable(n_tot); self.observables.len()];
        simulate_records(source, &self.observables, &shots, point_seed(self.config.seed, n_tot), repeat)
    }

    /// Conic problem of `strategy` with the given bands.
    pub fn problem(&self, strategy: Strategy, intervals: &[IntervalConstraint], delta: f64) -> Result<ConicProblem> {
        let objective = match &self.target {
            Target::Linear(o) => Objective::Linear(o),
            Target::Purity(p) => Objective::Purity(p),
        };
        let (blocks, linear, bands): (&[HermitianBlock], &[LinearMomentConstraint], &[IntervalConstraint]) =
            match strategy {
                Strategy::Measure => (&[], &[], intervals),
                Strategy::Sdp => (&self.blocks, &self.linear, &[]),
                Strategy::SdpMeasure => (&self.blocks, &self.linear, intervals),
            };
        sdp::assemble(&self.reg, objective, blocks, linear, bands, 1.0 - delta)
    }

    /// Problem for one strategy at one point, as run by [`Scenario::run`].
    pub fn problem_at(&self, strategy: Strategy, point: ShotPoint, repeat: u32, delta: f64) -> Result<ConicProblem> {
        let bands = if strategy.uses_data() { self.intervals(point, repeat, delta)? } else { Vec::new() };
        self.problem(strategy, &bands, delta)
    }

    fn directions(&self) -> Vec<Direction> {
        let lower_only = matches!(self.target, Target::Purity(_)) || self.config.bounds == Sides::Lower;
        if lower_only {
            vec![Direction::Lower]
        } else {
            vec![Direction::Lower, Direction::Upper]
        }
    }

    fn solve_sdp_only(&self) -> Result<Vec<Solution>> {
        let p = self.problem(Strategy::Sdp, &[], 0.0)?;
        self.directions()
            .into_iter()
            .map(|d| sdp::solve_direction(&p, d, &self.config.solver, &SolveHints::default()))
            .collect()
    }

    /// All rows at the configured `delta`.
    pub fn run(&self) -> ResultTable {
        self.run_deltas(&[self.config.delta])
    }

    /// Rows for each risk level in turn; the simulated records are shared
    /// across levels.
    pub fn run_deltas(&self, deltas: &[f64]) -> ResultTable {
        let start = Instant::now();
        let strategies = &self.config.strategies;
        let needs_sdp = strategies.iter().any(|s| *s != Strategy::Measure);
        let sdp_only = if needs_sdp { Some(self.solve_sdp_only()) } else { None };
        if let Some(Err(e)) = &sdp_only {
            log::warn!("SDP-only solve failed: {e}");
        }
        let sdp_ok = match &sdp_only {
            Some(Ok(s)) => Some(s.as_slice()),
            _ => None,
        };
        let sdp_row = |point: ShotPoint, repeat: u32| -> ResultRow {
            match &sdp_only {
                Some(Ok(sols)) => {
                    let results: Vec<&BoundResult> = sols.iter().map(|s| &s.result).collect();
                    self.row(Strategy::Sdp, point, repeat, 0.0, &results)
                }
                Some(Err(e)) => self.error_row(Strategy::Sdp, point, repeat, 0.0, e),
                None => unreachable!(),
            }
        };

        let mut jobs = Vec::new();
        for &delta in deltas {
            for point in self.points() {
                let repeats = if point == ShotPoint::Infinite { 1 } else { self.config.repeats };
                for r in 0..repeats {
                    jobs.push((delta, point, r));
                }
            }
        }
        let rows: Vec<Vec<ResultRow>> = jobs
            .par_iter()
            .map(|&(delta, point, repeat)| {
                let bands = if strategies.iter().any(|s| s.uses_data()) {
                    Some(self.intervals(point, repeat, delta))
                } else {
                    None
                };
                strategies
                    .iter()
                    .map(|&s| {
                        if s == Strategy::Sdp {
                            return sdp_row(point, repeat);
                        }
                        let bands = match bands.as_ref() {
                            Some(Ok(b)) => b,
                            Some(Err(e)) => return self.error_row(s, point, repeat, delta, e),
                            None => unreachable!(),
                        };
                        match self.solve_with_data(s, bands, delta, sdp_ok) {
                            Ok(results) => {
                                let refs: Vec<&BoundResult> = results.iter().collect();
                                self.row(s, point, repeat, delta, &refs)
                            }
                            Err(e) => self.error_row(s, point, repeat, delta, &e),
                        }
                    })
                    .collect()
            })
            .collect();
        log::info!("scenario `{}` finished in {:.1}s", self.config.name, start.elapsed().as_secs_f64());
        ResultTable { rows: rows.into_iter().flatten().collect() }
    }

    fn solve_with_data(
        &self,
        strategy: Strategy,
        bands: &[IntervalConstraint],
        delta: f64,
        sdp_only: Option<&[Solution]>,
    ) -> Result<Vec<BoundResult>> {
        let p = self.problem(strategy, bands, delta)?;
        let zero = DualPoint::default();
        self.directions()
            .into_iter()
            .enumerate()
            .map(|(k, d)| {
                let mut hints = SolveHints { duals: vec![&zero], admm: None };
                if strategy == Strategy::SdpMeasure {
                    if let Some(s) = sdp_only.and_then(|s| s.get(k)) {
                        hints.duals.push(&s.dual);
                        hints.admm = s.admm.as_ref();
                    }
                }
                Ok(sdp::solve_direction(&p, d, &self.config.solver, &hints)?.result)
            })
            .collect()
    }

    fn row(
        &self,
        strategy: Strategy,
        point: ShotPoint,
        repeat: u32,
        delta: f64,
        results: &[&BoundResult],
    ) -> ResultRow {
        let mut lb = None;
        let mut ub = None;
        let mut status = SolverStatus::Optimal;
        let mut wall_time = 0.0;
        for r in results {
            match r.direction {
                Direction::Lower => lb = r.bound(),
                Direction::Upper => ub = r.bound(),
            }
            if status_rank(r.status) > status_rank(status) {
                status = r.status;
            }
            wall_time += r.wall_time;
        }
        ResultRow {
            scenario: self.config.name.clone(),
            strategy,
            n_tot: point.as_f64(),
            repeat,
            lb,
            ub,
            status: status.as_str().to_string(),
            wall_time,
            delta,
        }
    }

    fn error_row(&self, strategy: Strategy, point: ShotPoint, repeat: u32, delta: f64, e: &Error) -> ResultRow {
        log::warn!("{} at N_tot={} repeat {repeat}: {e}", strategy.label(), point.as_f64());
        ResultRow {
            scenario: self.config.name.clone(),
            strategy,
            n_tot: point.as_f64(),
            repeat,
            lb: None,
            ub: None,
            status: "error".into(),
            wall_time: 0.0,
            delta,
        }
    }

    pub fn summary(&self, table: &ResultTable) -> Summary {
        Summary {
            scenario: self.config.name.clone(),
            num_qubits: self.num_qubits(),
            index_sets: self.reg.index_sets(),
            moment_size: self.blocks.iter().find(|b| b.label == "moment").map_or(0, |b| b.dim),
            linear_constraints: self.linear.len(),
            measured: self.observables.len(),
            exact: self.exact,
            groups: table.groups(),
        }
    }
}

fn status_rank(s: SolverStatus) -> u8 {
    match s {
        SolverStatus::Optimal => 0,
        SolverStatus::NearOptimal => 1,
        SolverStatus::NumericalFailure => 2,
        SolverStatus::Unbounded => 3,
        SolverStatus::Infeasible => 4,
    }
}

/// Seed for one shot total; repeats and observables pick distinct streams.
fn point_seed(seed: u64, n_tot: u64) -> u64 {
    seed ^ n_tot.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn build_model(spec: &ModelSpec) -> Result<(OperatorPoly, Option<LindbladModel>, usize)> {
    Ok(match *spec {
        ModelSpec::Tfi { rows, cols, g, j } => {
            let h = build_tfi_2d(rows, cols, g, j)?;
            (h, None, rows * cols)
        }
        ModelSpec::BoundaryDriven { rows, cols, g, j, hot, cold } => {
            let m = build_boundary_driven(rows, cols, g, j, hot.spec(g)?, cold.spec(g)?)?;
            (m.hamiltonian.clone(), Some(m), rows * cols)
        }
        ModelSpec::SingleQubit { g, rate_up, rate_down } => {
            let m = build_single_qubit(g, rate_up, rate_down)?;
            (m.hamiltonian.clone(), Some(m), 1)
        }
        ModelSpec::MajumdarGhosh { n, normalization, .. } => (build_majumdar_ghosh(n, normalization)?, None, n),
    })
}

fn build_source(spec: &ModelSpec, h: &OperatorPoly, model: Option<&LindbladModel>, n: usize) -> Result<ShotSource> {
    match (spec, model) {
        (ModelSpec::MajumdarGhosh { n, covering, .. }, _) => ShotSource::majumdar_ghosh(*n, *covering),
        (_, Some(m)) => {
            if n > MAX_STEADY_QUBITS {
                return Err(Error::TooLarge(format!("steady state of {n} qubits")));
            }
            ShotSource::steady_state(m)
        }
        (_, None) => {
            if n > MAX_PURE_QUBITS {
                return Err(Error::TooLarge(format!("ground state of {n} qubits")));
            }
            ShotSource::ground_state(h)
        }
    }
}

/// All strings with weight in `1..=max_weight`, canonical order.
pub fn low_weight_strings(n: usize, max_weight: usize) -> Result<Vec<PauliString>> {
    if max_weight > 3 {
        return Err(Error::TooLarge(format!("all strings up to weight {max_weight}")));
    }
    let mut out = Vec::new();
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    fn rec(
        n: usize,
        start: usize,
        left: usize,
        cur: &mut Vec<(usize, Pauli)>,
        out: &mut Vec<PauliString>,
        letters: &[Pauli; 3],
    ) {
        if !cur.is_empty() {
            out.push(PauliString::from_sites(n, cur).expect("sites in range"));
        }
        if left == 0 {
            return;
        }
        for site in start..n {
            for &p in letters {
                cur.push((site, p));
                rec(n, site + 1, left - 1, cur, out, letters);
                cur.pop();
            }
        }
    }
    rec(n, 0, max_weight, &mut Vec::new(), &mut out, &letters);
    out.sort();
    Ok(out)
}

fn select_measured(
    config: &ScenarioConfig,
    target: &Target,
    reg: &MomentRegistry,
    n: usize,
) -> Result<Vec<PauliString>> {
    let excluded = config.excluded();
    let allowed = |s: &PauliString| !s.is_identity() && !excluded.iter().any(|&p| s.contains_letter(p));
    let mut seen = HashSet::new();
    let mut keep = |list: Vec<PauliString>| -> Vec<PauliString> {
        list.into_iter().filter(|s| allowed(s) && seen.insert(s.clone())).collect()
    };
    let take = |list: Vec<PauliString>, k: usize| -> Result<Vec<PauliString>> {
        if k > list.len() {
            return Err(Error::Config(format!(
                "strategy asks for {k} strings but only {} are registered and measurable",
                list.len()
            )));
        }
        Ok(list.into_iter().take(k).collect())
    };
    match &config.measurement.selection {
        MeasureSelection::ObjectiveStrings => Ok(keep(match target {
            Target::Linear(o) => o.strings().cloned().collect(),
            Target::Purity(p) => p.moments.iter().map(|&id| reg.string(id).clone()).collect(),
        })),
        MeasureSelection::SecondOrderAll => Ok(keep(low_weight_strings(n, 2)?)),
        MeasureSelection::FirstGenerated { k } => {
            let all = keep((1..reg.len() as u32).map(|i| reg.string(MomentId(i)).clone()).collect());
            take(all, *k)
        }
        MeasureSelection::MostFrequent { k } => {
            let mut ids: Vec<MomentId> = (1..reg.len() as u32).map(MomentId).collect();
            ids.sort_by(|&a, &b| {
                reg.occurrences(b).cmp(&reg.occurrences(a)).then_with(|| reg.string(a).cmp(reg.string(b)))
            });
            take(keep(ids.into_iter().map(|id| reg.string(id).clone()).collect()), *k)
        }
        MeasureSelection::Custom { strings } => {
            let parsed = strings.iter().map(|s| PauliString::parse_sparse(s, n)).collect::<Result<Vec<_>>>()?;
            Ok(keep(parsed))
        }
    }
}

/// Mean bounds of one `(strategy, N_tot, delta)` group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub strategy: Strategy,
    /// `None` for the infinite-shot limit.
    pub n_tot: Option<u64>,
    pub delta: f64,
    pub rows: usize,
    /// Rows with both requested bounds present.
    pub solved: usize,
    pub mean_lb: Option<f64>,
    pub mean_ub: Option<f64>,
    pub mean_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub num_qubits: usize,
    pub index_sets: IndexSetSizes,
    pub moment_size: usize,
    pub linear_constraints: usize,
    pub measured: usize,
    pub exact: Option<f64>,
    pub groups: Vec<GroupSummary>,
}

impl Summary {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

fn mean(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = v.flatten().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

impl ResultTable {
    /// Groups in order of first appearance.
    pub fn groups(&self) -> Vec<GroupSummary> {
        let mut keys: Vec<(Strategy, u64, u64)> = Vec::new();
        for r in &self.rows {
            let k = (r.strategy, r.n_tot.to_bits(), r.delta.to_bits());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(s, n, d)| {
                let rows: Vec<&ResultRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.strategy == s && r.n_tot.to_bits() == n && r.delta.to_bits() == d)
                    .collect();
                let n_tot = f64::from_bits(n);
                GroupSummary {
                    strategy: s,
                    n_tot: n_tot.is_finite().then_some(n_tot as u64),
                    delta: f64::from_bits(d),
                    rows: rows.len(),
                    solved: rows.iter().filter(|r| r.lb.is_some() || r.ub.is_some()).count(),
                    mean_lb: mean(rows.iter().map(|r| r.lb)),
                    mean_ub: mean(rows.iter().map(|r| r.ub)),
                    mean_width: mean(rows.iter().map(|r| r.width())),
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#schema={CSV_SCHEMA}")?;
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        if self.rows.is_empty() {
            wtr.write_record(["scenario", "strategy", "n_tot", "repeat", "lb", "ub", "status", "wall_time", "delta"])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<ResultTable> {
        let mut r = BufReader::new(r);
        let mut tag = String::new();
        r.read_line(&mut tag)?;
        let want = format!("#schema={CSV_SCHEMA}");
        if tag.trim() != want {
            return Err(Error::Parse(format!("expected `{want}`, found `{}`", tag.trim())));
        }
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(ResultTable { rows })
    }
}

/// Builds and runs a scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<(Scenario, ResultTable)> {
    let s = Scenario::prepare(config.clone())?;
    let t = s.run();
    Ok((s, t))
}

/// Configs shipped with the toolkit.
pub const PRESETS: [(&str, &str); 5] = [
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7-desk", include_str!("../presets/fig7-desk.toml")),
];

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (_, text) =
        PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
    ScenarioConfig::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_qubit(strategies: &str) -> ScenarioConfig {
        ScenarioConfig::from_toml(&format!(
            r#"
            name = "sq"
            shots = [1000, 100000]
            repeats = 3
            seed = 5
            constraint_budget = 10
            moment_size = 2
            strategies = {strategies}
            [model]
            kind = "single_qubit"
            rate_up = 1.56518e-4
            rate_down = 1.156518e-3
            [objective]
            kind = "custom"
            terms = [[1.0, "X1"]]
            [measurement]
            kind = "custom"
            strings = ["Z1"]
            "#
        ))
        .unwrap()
    }

    #[test]
    fn presets_parse() {
        for (name, _) in PRESETS {
            let c = preset(name).unwrap();
            assert_eq!(c.name, name);
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = single_qubit(r#"["measure", "SDP&Measure"]"#);
        let again = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = single_qubit(r#"["sdp"]"#);
        c.repeats = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = single_qubit(r#"["sdp"]"#);
        c.shots.clear();
        assert!(c.validate().is_err());
        c.infinite_shots = true;
        assert!(c.validate().is_ok());
        assert!(ScenarioConfig::from_toml("name = 1").is_err());
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let s = Scenario::prepare(single_qubit(r#"["measure", "sdp", "sdp_measure"]"#)).unwrap();
        let t = s.run();
        assert_eq!(t.rows.len(), 2 * 3 * 3);
        assert_eq!(t.rows[0].strategy, Strategy::Measure);
        assert_eq!(t.rows[1].strategy, Strategy::Sdp);
        assert_eq!((t.rows[3].n_tot, t.rows[3].repeat), (1000.0, 1));
        for r in &t.rows {
            assert_eq!(r.status, "optimal", "{r:?}");
            assert!(r.lb.unwrap() <= r.ub.unwrap() + 1e-7);
        }
        // ⟨X⟩ = 0 in the steady state and the constraints pin it
        let sdp = &t.rows[1];
        assert_eq!(sdp.delta, 0.0);
        assert!(sdp.lb.unwrap().abs() < 1e-6 && sdp.ub.unwrap().abs() < 1e-6);
    }

    #[test]
    fn csv_round_trip_keeps_infinity_and_gaps() {
        let mut c = single_qubit(r#"["measure"]"#);
        c.infinite_shots = true;
        c.objective = ObjectiveSpec::Purity { max_weight: 1 };
        let s = Scenario::prepare(c).unwrap();
        let t = s.run();
        assert_eq!(t.rows.len(), 2 * 3 + 1);
        assert!(t.rows.last().unwrap().n_tot.is_infinite());
        assert!(t.rows.iter().all(|r| r.ub.is_none()));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with("#schema=qbound.rows.v1\nscenario,strategy,n_tot,repeat,lb,ub,status,wall_time,delta\n")
        );
        assert_eq!(ResultTable::read_csv(buf.as_slice()).unwrap(), t);
        assert!(ResultTable::read_csv(&b"scenario,strategy\n"[..]).is_err());
    }

    #[test]
    fn strategy_k_is_checked() {
        let mut c = single_qubit(r#"["measure"]"#);
        c.measurement.selection = MeasureSelection::FirstGenerated { k: 50 };
        assert!(matches!(Scenario::prepare(c), Err(Error::Config(_))));
    }

    #[test]
    fn low_weight_counts() {
        assert_eq!(low_weight_strings(4, 1).unwrap().len(), 12);
        assert_eq!(low_weight_strings(4, 2).unwrap().len(), 12 + 6 * 9);
        assert_eq!(low_weight_strings(3, 3).unwrap().len(), 63);
    }
}
