//! Relaxed problem assembly, solution and export.
//!
//! A [`ConicProblem`] minimizes a linear function of real moment variables
//! subject to a box, ranged linear rows and Hermitian PSD blocks affine in
//! the variables. Two solvers are provided: a primal–dual interior-point
//! method working natively on Hermitian blocks, and a first-order splitting
//! method for large blocks whose coefficient matrices have disjoint support.
//!
//! Reported bounds never come from a primal objective value. Every solve
//! ends by evaluating a Lagrangian lower bound at a dual point (PSD block
//! multipliers and row multipliers), which is valid whatever the accuracy of
//! the solver. Dual points from related problems can be offered as hints;
//! the best bound is kept.

mod admm;
mod assemble;
mod certificate;
mod embed;
mod export;
mod ipm;
pub mod linalg;
mod presolve;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relax::{MomentId, SparseEntries};

pub use admm::AdmmState;
pub use assemble::{assemble, purity_epigraph, Objective, PuritySpec};
pub use certificate::{lagrangian_bound, DualPoint};
pub use embed::{embed_hermitian, embed_sparse};
pub use export::{export_sdpa, write_sdpa, SdpaProblem};

/// PSD constraint `constant + Σ_i x_i terms_i ⪰ 0` on a Hermitian block.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock {
    pub dim: usize,
    pub label: String,
    pub constant: SparseEntries,
    pub terms: Vec<(usize, SparseEntries)>,
}

/// `lo ≤ Σ a_i x_i ≤ hi`; either side may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
    pub label: String,
}

impl LinearRow {
    pub fn is_equality(&self) -> bool {
        self.lo == self.hi
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }
}

/// `min offset + cᵀx` over the box, rows and PSD blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProblem {
    pub num_vars: usize,
    /// Moment behind each variable; auxiliary variables have `None`.
    pub var_moments: Vec<Option<MomentId>>,
    /// Variables that change sign when the state is complex conjugated;
    /// empty when unknown. Only used to shrink the problem.
    pub conjugation_odd: Vec<bool>,
    pub objective: Vec<f64>,
    pub offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LinearRow>,
    pub blocks: Vec<PsdBlock>,
    /// Probability that the measurement bands hold (1 without bands).
    pub confidence: f64,
    /// The objective is a convex surrogate that only admits lower bounds.
    pub lower_only: bool,
}

impl ConicProblem {
    /// `offset + cᵀx`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Same constraints, objective negated.
    pub fn negated(&self) -> ConicProblem {
        let mut p = self.clone();
        p.objective.iter_mut().for_each(|c| *c = -*c);
        p.offset = -p.offset;
        p
    }

    /// Largest possible objective over the box alone.
    pub fn box_max(&self) -> f64 {
        self.offset
            + self.objective.iter().enumerate().map(|(i, &c)| (c * self.lower[i]).max(c * self.upper[i])).sum::<f64>()
    }

    /// Scales the objective by `s > 0`.
    pub fn scaled(&self, s: f64) -> ConicProblem {
        let mut p = self.clone();
        p.objective.iter_mut().for_each(|c| *c *= s);
        p.offset *= s;
        p
    }

    /// Checks every index against the problem sizes.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        if self.objective.len() != n
            || self.lower.len() != n
            || self.upper.len() != n
            || self.var_moments.len() != n
            || !(self.conjugation_odd.is_empty() || self.conjugation_odd.len() == n)
        {
            return Err(Error::Shape("conic problem vectors disagree with the variable count".into()));
        }
        for r in &self.rows {
            if r.coeffs.iter().any(|&(i, _)| i >= n) {
                return Err(Error::Shape(format!("row `{}` references a missing variable", r.label)));
            }
        }
        for b in &self.blocks {
            let bad_entry = |e: &SparseEntries| e.iter().any(|&(r, c, _)| r >= b.dim || c >= b.dim);
            if bad_entry(&b.constant) || b.terms.iter().any(|(i, e)| *i >= n || bad_entry(e)) {
                return Err(Error::Shape(format!("block `{}` has an out-of-range index", b.label)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolverStatus {
    pub fn has_value(self) -> bool {
        matches!(self, SolverStatus::Optimal | SolverStatus::NearOptimal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::NearOptimal => "near_optimal",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::Unbounded => "unbounded",
            SolverStatus::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Interior point unless the Newton system would be too large.
    #[default]
    Auto,
    InteriorPoint,
    Admm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub method: Method,
    /// Relative gap between the certified bound and the primal objective
    /// for `optimal`.
    pub gap_tol: f64,
    /// Relative primal infeasibility accepted for `optimal`.
    pub feas_tol: f64,
    /// Relative gap accepted for `near_optimal`.
    pub near_gap_tol: f64,
    /// Relative gap at which the splitting method stops.
    pub admm_gap_tol: f64,
    pub max_iter: usize,
    pub admm_max_iter: usize,
    /// Interior point is used while `(variables in blocks)·Σ dim³` stays
    /// below this.
    pub ipm_work_limit: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            method: Method::Auto,
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            near_gap_tol: 1e-3,
            admm_gap_tol: 1e-6,
            max_iter: 80,
            admm_max_iter: 4000,
            ipm_work_limit: 2e10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Closed,
    InteriorPoint,
    Admm,
}

/// A certified bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub direction: Direction,
    pub status: SolverStatus,
    pub confidence: f64,
    /// Seconds.
    pub wall_time: f64,
    /// Objective at the solver's final primal point.
    pub primal_value: f64,
    pub iterations: usize,
    pub solver: SolverKind,
}

impl BoundResult {
    /// `value` when the status carries one.
    pub fn bound(&self) -> Option<f64> {
        self.status.has_value().then_some(self.value)
    }
}

/// Full output of one directional solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub result: BoundResult,
    /// Dual point behind the reported value (for the minimization form).
    pub dual: DualPoint,
    pub primal: Vec<f64>,
    pub admm: Option<AdmmState>,
}

/// Extra inputs for a solve.
#[derive(Clone, Debug, Default)]
pub struct SolveHints<'a> {
    /// Dual points of related problems, matched by block and row labels.
    pub duals: Vec<&'a DualPoint>,
    /// Starting point for the splitting method.
    pub admm: Option<&'a AdmmState>,
}

/// Lower bound on the minimum.
pub fn solve(problem: &ConicProblem) -> Result<BoundResult> {
    Ok(solve_direction(problem, Direction::Lower, &SolverSettings::default(), &SolveHints::default())?.result)
}

/// `(lower, upper)`; the upper bound is minus the lower bound of the
/// negated objective.
pub fn solve_both(problem: &ConicProblem, settings: &SolverSettings) -> Result<(BoundResult, BoundResult)> {
    let lo = solve_direction(problem, Direction::Lower, settings, &SolveHints::default())?.result;
    let hi = solve_direction(problem, Direction::Upper, settings, &SolveHints::default())?.result;
    Ok((lo, hi))
}

/// Solves one direction. Hint duals must come from solves in the same
/// direction.
pub fn solve_direction(
    problem: &ConicProblem,
    direction: Direction,
    settings: &SolverSettings,
    hints: &SolveHints<'_>,
) -> Result<Solution> {
    problem.validate()?;
    if direction == Direction::Upper && problem.lower_only {
        return Err(Error::UnsupportedDirection("this objective only admits lower bounds".into()));
    }
    let start = Instant::now();
    let owned;
    let p = match direction {
        Direction::Lower => problem,
        Direction::Upper => {
            owned = problem.negated();
            &owned
        }
    };
    let mut sol = solve_min(p, settings, hints)?;
    sol.result.direction = direction;
    sol.result.confidence = problem.confidence;
    if direction == Direction::Upper {
        sol.result.value = -sol.result.value;
        sol.result.primal_value = -sol.result.primal_value;
    }
    sol.result.wall_time = start.elapsed().as_secs_f64();
    Ok(sol)
}

fn solve_min(p: &ConicProblem, settings: &SolverSettings, hints: &SolveHints<'_>) -> Result<Solution> {
    let pre = presolve::presolve(p)?;
    let mut sol = match pre {
        presolve::Outcome::Infeasible(dual) => Solution {
            result: result_with(f64::INFINITY, f64::NAN, SolverStatus::Infeasible, 0, SolverKind::Closed),
            dual,
            primal: Vec::new(),
            admm: None,
        },
        presolve::Outcome::Reduced(red) => {
            if red.is_trivial() {
                let x = red.expand(&[]);
                let v = p.objective_value(&x);
                Solution {
                    result: result_with(v, v, SolverStatus::Optimal, 0, SolverKind::Closed),
                    dual: DualPoint::default(),
                    primal: x,
                    admm: None,
                }
            } else {
                let use_admm = match settings.method {
                    Method::Admm => true,
                    Method::InteriorPoint => false,
                    Method::Auto => red.ipm_work() > settings.ipm_work_limit,
                };
                if use_admm && admm::applicable(&red) {
                    admm::solve(p, &red, settings, hints.admm)?
                } else {
                    ipm::solve(p, &red, settings)?
                }
            }
        }
    };
    // Hints can only raise a valid bound.
    if sol.result.status != SolverStatus::Infeasible {
        for h in &hints.duals {
            let lb = lagrangian_bound(p, h);
            if lb > sol.result.value || !sol.result.value.is_finite() {
                sol.result.value = lb;
                sol.dual = (*h).clone();
            }
        }
        let primal = sol.result.primal_value;
        if primal.is_finite() && sol.result.value.is_finite() {
            let gap = (primal - sol.result.value).max(0.0) / (1.0 + primal.abs());
            if sol.result.status == SolverStatus::NearOptimal && gap <= settings.gap_tol * 10.0 {
                sol.result.status = SolverStatus::Optimal;
            }
        }
        if sol.result.value > p.box_max() + 1e-9 * (1.0 + p.box_max().abs()) {
            sol.result.status = SolverStatus::Infeasible;
        }
    }
    Ok(sol)
}

fn result_with(value: f64, primal: f64, status: SolverStatus, iterations: usize, solver: SolverKind) -> BoundResult {
    BoundResult {
        value,
        direction: Direction::Lower,
        status,
        confidence: 1.0,
        wall_time: 0.0,
        primal_value: primal,
        iterations,
        solver,
    }
}

#[cfg(test)]
mod tests;
