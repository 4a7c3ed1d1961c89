//! Brute-force solver for the original five-variable contract problem.
//!
//! Wages are enumerated on a uniform grid, the worker's effort is computed
//! from the promised wages alone, participation is enforced cell by cell,
//! and theft is chosen by direct search. Nothing from the closed-form
//! characterization is used except to size the wage box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characterization::eval_reduced;
use crate::error::{Error, Result};
use crate::model::{worker_utility_at, Contract, IdealTheft, Instance, MAX_EFFORT};
use crate::report::{Check, Report};
use crate::solver;

/// How the oracle computes the worker's effort response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcMode {
    /// Invert the marginal cost.
    #[default]
    Analytic,
    /// Scan `n_a` effort levels and keep the utility maximiser.
    Scan,
}

/// Enumeration grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub w_max: f64,
    pub n_w: usize,
    pub n_b: usize,
    pub n_a: usize,
    #[serde(default)]
    pub ic_mode: IcMode,
    /// Grow `w_max` to [`covering_wage`] when it is smaller.
    #[serde(default = "default_true")]
    pub auto_expand: bool,
}

fn default_true() -> bool {
    true
}

impl GridSpec {
    pub fn new(w_max: f64, n_w: usize) -> Self {
        Self {
            w_max,
            n_w,
            n_b: 16,
            n_a: 2001,
            ic_mode: IcMode::Analytic,
            auto_expand: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::check_param(
            "w_max",
            self.w_max,
            self.w_max > 0.0,
            "wage ceiling must be positive",
        )?;
        for (name, n) in [("n_w", self.n_w), ("n_b", self.n_b), ("n_a", self.n_a)] {
            if n < 2 {
                return Err(Error::InvalidParameter {
                    name,
                    value: n as f64,
                    reason: "grid needs at least 2 points",
                });
            }
        }
        Ok(())
    }

    /// The same box with the wage step halved (nested grid).
    pub fn refined(&self) -> Self {
        Self {
            n_w: 2 * self.n_w - 1,
            ..*self
        }
    }

    pub fn step(&self) -> f64 {
        self.w_max / (self.n_w - 1) as f64
    }
}

/// Best enumerated cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub contract: Contract,
    pub profit: f64,
    pub worker_u: f64,
    pub beta: IdealTheft,
    /// Wage ceiling actually used (after auto-expansion).
    pub w_max: f64,
    pub step: f64,
    pub feasible_cells: usize,
    /// A best wage sits on the ceiling, so the box may cut off the optimum.
    pub on_boundary: bool,
}

impl OracleSolution {
    /// Rejects solutions pinned to the wage ceiling.
    pub fn into_checked(self) -> Result<Self> {
        if self.on_boundary {
            Err(Error::UnreachableOptimum(self.w_max))
        } else {
            Ok(self)
        }
    }
}

/// Headroom of the auto-sized wage box over the closed-form high wage.
pub const BOX_HEADROOM: f64 = 1.25;

/// Wage ceiling that leaves [`BOX_HEADROOM`] above the closed-form high
/// wage at the solver's optimum. Only the box is taken from the solver; the
/// enumeration inside it is independent, and a best cell on the ceiling is
/// flagged.
pub fn covering_wage(instance: &Instance) -> Result<f64> {
    let solved = solver::solve(instance)?;
    Ok(BOX_HEADROOM
        * solved
            .contract
            .w_high
            .max(instance.market.reservation_utility))
}

/// Best value of `b - E(b)` over `b` in `[0, w]` and the theft attaining it.
fn best_theft(instance: &Instance, beta: IdealTheft, wage: f64, n_b: usize) -> (f64, f64) {
    let w = instance.max_theft(wage);
    let value = |b: f64| b - instance.expected_penalty(b);
    let mut best = (0.0, value(0.0));
    let mut consider = |b: f64| {
        let v = value(b);
        if v > best.1 || (v == best.1 && b < best.0) {
            best = (b, v);
        }
    };
    consider(beta.cap(w));
    consider(w);
    for i in 1..n_b.saturating_sub(1) {
        consider((w * i as f64 / (n_b - 1) as f64).min(w));
    }
    best
}

#[derive(Clone, Copy)]
struct Cell {
    profit: f64,
    i: usize,
    j: usize,
    effort: f64,
}

fn better(a: Option<Cell>, b: Option<Cell>) -> Option<Cell> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            let y_wins = y.profit > x.profit || (y.profit == x.profit && (y.i, y.j) < (x.i, x.j));
            Some(if y_wins { y } else { x })
        }
    }
}

/// Enumerates promised wage pairs and returns the most profitable feasible one.
pub fn brute_force_solve(instance: &Instance, grid: &GridSpec) -> Result<OracleSolution> {
    instance.validate()?;
    grid.validate()?;
    let mut grid = *grid;
    if grid.auto_expand {
        grid.w_max = grid.w_max.max(covering_wage(instance)?);
    }
    let beta = instance.beta();
    let cost = &instance.cost;
    let m = &instance.market;
    let u = m.reservation_utility;
    let step = grid.step();
    let wage = |i: usize| {
        if i + 1 == grid.n_w {
            grid.w_max
        } else {
            step * i as f64
        }
    };

    let theft: Vec<(f64, f64)> = (0..grid.n_w)
        .map(|i| best_theft(instance, beta, wage(i), grid.n_b))
        .collect();
    let scan: Vec<(f64, f64)> = match grid.ic_mode {
        IcMode::Analytic => Vec::new(),
        IcMode::Scan => (0..grid.n_a)
            .map(|k| {
                let a = MAX_EFFORT * k as f64 / (grid.n_a - 1) as f64;
                (a, cost.eval_cost(a))
            })
            .collect(),
    };
    let respond = |wh: f64, wl: f64| -> f64 {
        match grid.ic_mode {
            IcMode::Analytic => cost.inverse_marginal_cost(wh - wl),
            IcMode::Scan => {
                let mut best = (0.0, f64::NEG_INFINITY);
                for &(a, c) in &scan {
                    let v = a * wh + (1.0 - a) * wl - c;
                    if v > best.1 {
                        best = (a, v);
                    }
                }
                best.0
            }
        }
    };

    let (best, feasible) = (0..grid.n_w)
        .into_par_iter()
        .map(|i| {
            let wh = wage(i);
            let mut best: Option<Cell> = None;
            let mut feasible = 0usize;
            for j in 0..grid.n_w {
                let wl = wage(j);
                let a = respond(wh, wl);
                if worker_utility_at(cost, wh, wl, a) < u {
                    continue;
                }
                feasible += 1;
                let profit = a * (m.revenue_high() - wh + theft[i].1)
                    + (1.0 - a) * (m.revenue_low() - wl + theft[j].1);
                best = better(
                    best,
                    Some(Cell {
                        profit,
                        i,
                        j,
                        effort: a,
                    }),
                );
            }
            (best, feasible)
        })
        .reduce(|| (None, 0), |x, y| (better(x.0, y.0), x.1 + y.1));

    let cell = best.ok_or(Error::UnreachableOptimum(grid.w_max))?;
    let (wh, wl) = (wage(cell.i), wage(cell.j));
    let contract = Contract {
        w_high: wh,
        w_low: wl,
        b_high: theft[cell.i].0,
        b_low: theft[cell.j].0,
        effort: cell.effort,
    };
    Ok(OracleSolution {
        contract,
        profit: cell.profit,
        worker_u: worker_utility_at(cost, wh, wl, cell.effort),
        beta,
        w_max: grid.w_max,
        step,
        feasible_cells: feasible,
        on_boundary: cell.i + 1 == grid.n_w || cell.j + 1 == grid.n_w,
    })
}

/// Outcome of scanning theft for one output level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheftScan {
    pub wage: f64,
    /// `min(beta, w)`.
    pub expected: f64,
    pub argmax: f64,
    pub step: f64,
    pub unique: bool,
}

impl TheftScan {
    pub fn deviation(&self) -> f64 {
        (self.argmax - self.expected).abs()
    }

    pub fn passed(&self) -> bool {
        self.unique && self.deviation() <= self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheftRuleReport {
    pub a: f64,
    pub low: TheftScan,
    pub high: TheftScan,
}

impl TheftRuleReport {
    pub fn to_report(&self) -> Report {
        let mut r = Report::default();
        for (name, s) in [("low", &self.low), ("high", &self.high)] {
            r.push(Check::new(
                format!("theft rule ({name}, a={})", crate::numeric::fmt_num(self.a)),
                s.passed(),
                s.deviation(),
            ));
        }
        r
    }
}

/// Number of theft levels scanned by [`verify_theft_rule`].
pub const THEFT_SCAN_POINTS: usize = 10_000;

fn scan_theft(instance: &Instance, beta: IdealTheft, weight: f64, wage: f64) -> TheftScan {
    let n = THEFT_SCAN_POINTS;
    let top = instance.max_theft(wage);
    let step = top / (n - 1) as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut ties = 0;
    for i in 0..n {
        let b = if i + 1 == n { top } else { step * i as f64 };
        let v = weight * (b - instance.expected_penalty(b));
        if v > best.1 {
            best = (b, v);
            ties = 1;
        } else if v == best.1 {
            ties += 1;
        }
    }
    TheftScan {
        wage,
        expected: beta.cap(wage),
        argmax: best.0,
        step,
        // A zero wage leaves a single admissible theft.
        unique: ties == 1 || top == 0.0,
    }
}

/// Scans employer profit over theft `b` in `[0, w*(a)]` for both outcomes
/// at the closed-form wages for effort `a`.
pub fn verify_theft_rule(instance: &Instance, a: f64) -> Result<TheftRuleReport> {
    instance.validate()?;
    if !(a > 0.0 && a < MAX_EFFORT) {
        return Err(Error::EffortOutOfDomain(a));
    }
    let beta = instance.beta();
    let p = eval_reduced(instance, beta, a);
    Ok(TheftRuleReport {
        a,
        low: scan_theft(instance, beta, 1.0 - a, p.w_low),
        high: scan_theft(instance, beta, a, p.w_high),
    })
}

/// Solver-versus-oracle comparison at one grid resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub solver_profit: f64,
    pub oracle: OracleSolution,
}

impl Agreement {
    /// `solver - oracle`; nonnegative up to rounding.
    pub fn gap(&self) -> f64 {
        self.solver_profit - self.oracle.profit
    }

    pub fn tolerance(&self) -> f64 {
        2.0 * self.oracle.step
    }
}

pub fn compare_with_solver(instance: &Instance, grid: &GridSpec) -> Result<Agreement> {
    let solved = solver::solve(instance)?;
    Ok(Agreement {
        solver_profit: solved.profit,
        oracle: brute_force_solve(instance, grid)?,
    })
}

/// Gap below which refinement is not expected to make further progress.
pub const GAP_FLOOR: f64 = 1e-9;

/// Solver agreement on one grid: no beat, two-step gap, box sanity, and
/// wage-gap recovery.
pub fn verify_agreement(instance: &Instance, grid: &GridSpec) -> Result<Report> {
    let mut report = Report::default();
    let agreement = compare_with_solver(instance, grid)?;
    let gap = agreement.gap();
    let scale = 1.0 + agreement.solver_profit.abs();
    let o = &agreement.oracle;
    report.push(Check::within(
        "oracle does not beat solver",
        (-gap).max(0.0) / scale,
        1e-9,
    ));
    report.push(Check::within(
        "oracle within two wage steps of solver",
        gap.abs(),
        agreement.tolerance(),
    ));
    report.push(Check::new(
        "oracle optimum inside wage box",
        !o.on_boundary,
        0.0,
    ));
    if o.contract.effort > 0.0 {
        let c = &o.contract;
        let recovered = (c.w_high - c.w_low) - instance.cost.eval_marginal(c.effort);
        report.push(Check::within(
            "oracle wage gap equals c'(a)",
            recovered.abs(),
            2.0 * o.step,
        ));
    }
    Ok(report)
}

/// Solver-minus-oracle gaps on `levels` nested grids starting at `grid`.
pub fn refinement_gaps(instance: &Instance, grid: &GridSpec, levels: usize) -> Result<Vec<f64>> {
    let mut g = *grid;
    let mut gaps = Vec::with_capacity(levels);
    for _ in 0..levels {
        gaps.push(compare_with_solver(instance, &g)?.gap().max(0.0));
        g = g.refined();
    }
    Ok(gaps)
}

/// Passes when every refinement at least halves the gap. Gaps already under
/// [`GAP_FLOOR`] are exempt. The deviation is the worst ratio seen.
pub fn convergence_check(gaps: &[f64]) -> Check {
    let mut worst_ratio: f64 = 0.0;
    let mut converged = true;
    for w in gaps.windows(2) {
        if w[0] <= GAP_FLOOR {
            continue;
        }
        let ratio = w[1] / w[0];
        worst_ratio = worst_ratio.max(ratio);
        converged &= ratio <= 0.5;
    }
    Check::new("gap halves under refinement", converged, worst_ratio)
}

/// Full oracle verification: agreement, theft rule at five efforts, and
/// convergence over three nested grids.
pub fn verify_instance(instance: &Instance, grid: &GridSpec) -> Result<Report> {
    let mut report = verify_agreement(instance, grid)?;
    report.push(convergence_check(&refinement_gaps(instance, grid, 3)?));
    for a in [0.1, 0.25, 0.5, 0.75, 0.9] {
        report.extend(verify_theft_rule(instance, a)?.to_report());
    }
    Ok(report)
}
