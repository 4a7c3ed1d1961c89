//! Maximises the reduced objective `g(a)` over `[0, 1)`.
//!
//! `g` is continuous but its derivative jumps where a clamp in the closed
//! forms changes branch. Those break points are located by bisection, the
//! search interval is cut there, and each smooth piece is searched
//! separately. Past the last break point `wL* = 0` and the high-outcome theft
//! regime is fixed, so the slope of `g` is strictly decreasing; the upper
//! search bound is placed where that slope turns negative.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::characterization::eval_reduced;
use crate::error::{Error, Result};
use crate::model::{Contract, CostSpec, IdealTheft, Instance, MarketParams, MAX_EFFORT};
use crate::numeric::{bisect_decreasing, bisect_increasing, maximize_on_interval, Maximum};
use crate::report::{Check, Report};

/// Hard upper bound of the effort search.
pub const SEARCH_CAP: f64 = 1.0 - 1e-6;

/// Tail slope at which `g` is considered decreasing for good.
pub const TAIL_SLOPE: f64 = -1e-6;

/// Relative gap left between the last break point and the search bound.
const BREAK_MARGIN: f64 = 1e-3;

/// Pre-scan resolution inside each smooth segment.
const SEGMENT_SCAN_POINTS: usize = 48;

/// Efforts where `g` has a derivative discontinuity, plus the search bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakPoints {
    /// Where `u - a c'(a) + C(a) = 0`.
    #[serde(rename = "a_wL_zero")]
    pub low_wage_zero: Option<f64>,
    /// Where `wL*(a) = beta`.
    #[serde(rename = "a_wL_beta")]
    pub low_theft_switch: Option<f64>,
    /// Where `wH*(a) = beta`.
    #[serde(rename = "a_wH_beta")]
    pub high_theft_switch: Option<f64>,
    pub a_max: f64,
    /// The slope of `g` is known to be negative on `[a_max, 1)`.
    pub tail_certified: bool,
}

impl BreakPoints {
    pub fn present(&self) -> impl Iterator<Item = f64> {
        [
            self.low_wage_zero,
            self.low_theft_switch,
            self.high_theft_switch,
        ]
        .into_iter()
        .flatten()
    }
}

/// Best effort found on one smooth segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentOptimum {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub g: f64,
}

/// Optimal contract and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub contract: Contract,
    pub profit: f64,
    pub worker_u: f64,
    pub beta: IdealTheft,
    pub breaks: BreakPoints,
    pub segment_optima: Vec<SegmentOptimum>,
}

/// `c'(0) < P (yH - yL)`: sufficient for positive optimal effort.
pub fn positive_effort_condition(market: &MarketParams, cost: &CostSpec) -> Result<bool> {
    market.validate()?;
    cost.validate()?;
    Ok(cost.coefficient < market.output_gain())
}

/// Slope of `g` in the final regime (`wL* = bL* = 0`).
pub fn tail_slope(instance: &Instance, beta: IdealTheft, a: f64) -> f64 {
    let cost = &instance.cost;
    let gain = instance.market.output_gain();
    let marginal = cost.eval_marginal(a);
    let curvature = cost.eval_curvature(a);
    match beta {
        IdealTheft::Finite(b) if b < marginal => {
            gain - marginal + b - instance.expected_penalty(b) - a * curvature
        }
        _ => {
            // bH* = wH* = c'(a): the whole high wage is withheld.
            let gamma = instance.gamma();
            gain - instance.expected_penalty(marginal)
                - a * curvature * instance.penalty.eval_expected_marginal(gamma, marginal)
        }
    }
}

pub fn find_break_points(instance: &Instance) -> Result<BreakPoints> {
    instance.validate()?;
    Ok(break_points(instance, instance.beta()))
}

fn break_points(instance: &Instance, beta: IdealTheft) -> BreakPoints {
    let cost = &instance.cost;
    let u = instance.market.reservation_utility;
    let rent = |a: f64| cost.eval_rent(a);
    let rent_cap = rent(MAX_EFFORT);

    let low_wage_zero =
        (u > 0.0 && rent_cap >= u).then(|| bisect_increasing(rent, 0.0, MAX_EFFORT, u));

    let low_theft_switch = match beta {
        IdealTheft::Finite(b) if b > 0.0 && b < u && rent_cap >= u - b => {
            Some(bisect_increasing(rent, 0.0, MAX_EFFORT, u - b))
        }
        _ => None,
    };

    let high_wage = |a: f64| (u - rent(a)).max(0.0) + cost.eval_marginal(a);
    let high_theft_switch = match beta {
        IdealTheft::Finite(b) if b > u + cost.coefficient && high_wage(MAX_EFFORT) >= b => {
            Some(bisect_increasing(high_wage, 0.0, MAX_EFFORT, b))
        }
        _ => None,
    };

    let mut bp = BreakPoints {
        low_wage_zero,
        low_theft_switch,
        high_theft_switch,
        a_max: SEARCH_CAP,
        tail_certified: false,
    };

    let in_tail_regime = u == 0.0 || low_wage_zero.is_some();
    let last = bp.present().fold(0.0_f64, f64::max);
    if !in_tail_regime || last >= SEARCH_CAP {
        return bp;
    }
    let slope = |a: f64| tail_slope(instance, beta, a);
    if slope(SEARCH_CAP) > TAIL_SLOPE {
        return bp;
    }
    let start = (last + BREAK_MARGIN * (1.0 - last)).min(SEARCH_CAP);
    let turn = if slope(last) <= TAIL_SLOPE {
        last
    } else {
        bisect_decreasing(slope, last, SEARCH_CAP, TAIL_SLOPE)
    };
    bp.a_max = start.max(turn).min(SEARCH_CAP);
    bp.tail_certified = slope(bp.a_max) < 0.0;
    bp
}

/// Solves the one-dimensional search problem and rebuilds the contract.
pub fn solve(instance: &Instance) -> Result<SolveResult> {
    instance.validate()?;
    let beta = instance.beta();
    let breaks = break_points(instance, beta);

    let mut knots: Vec<f64> = std::iter::once(0.0)
        .chain(breaks.present().filter(|&b| b > 0.0 && b < breaks.a_max))
        .chain(std::iter::once(breaks.a_max))
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let g = |a: f64| eval_reduced(instance, beta, a).profit;
    let mut segment_optima = Vec::with_capacity(knots.len());
    let mut best: Option<Maximum> = None;
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let m = maximize_on_interval(g, lo, hi, SEGMENT_SCAN_POINTS);
        segment_optima.push(SegmentOptimum {
            lo,
            hi,
            a: m.x,
            g: m.value,
        });
        best = Some(match best {
            Some(b) => b.better(m),
            None => m,
        });
    }
    let best = best.unwrap_or(Maximum {
        x: 0.0,
        value: g(0.0),
    });
    if !breaks.tail_certified {
        debug!(
            "search bound a_max = {} is not certified by the tail slope",
            breaks.a_max
        );
    }

    let p = eval_reduced(instance, beta, best.x);
    if ![p.profit, p.w_high, p.worker_utility]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::Overflow(format!(
            "profit {} at a = {}",
            p.profit, p.a
        )));
    }
    Ok(SolveResult {
        contract: Contract {
            w_high: p.w_high,
            w_low: p.w_low,
            b_high: p.b_high,
            b_low: p.b_low,
            effort: p.a,
        },
        profit: p.profit,
        worker_u: p.worker_utility,
        beta,
        breaks,
        segment_optima,
    })
}

/// Uniform scan of `g` over `[0, SEARCH_CAP]` with `points` samples.
pub fn grid_scan(instance: &Instance, points: usize) -> Result<Maximum> {
    instance.validate()?;
    let beta = instance.beta();
    let n = points.max(2) - 1;
    let mut best = Maximum {
        x: 0.0,
        value: f64::NEG_INFINITY,
    };
    for i in 0..=n {
        let a = SEARCH_CAP * i as f64 / n as f64;
        best = best.better(Maximum {
            x: a,
            value: eval_reduced(instance, beta, a).profit,
        });
    }
    Ok(best)
}

/// Re-derives the invariants of a solve result against its instance.
pub fn check_result(instance: &Instance, result: &SolveResult) -> Report {
    let mut report = Report::default();
    if let Err(e) = instance.validate() {
        report.push(Check::new(format!("instance valid ({e})"), false, f64::NAN));
        return report;
    }
    let c = &result.contract;
    report.push(Check::new("wage bounds", c.validate().is_ok(), 0.0));
    let a = c.effort;
    if !(0.0..=MAX_EFFORT).contains(&a) {
        report.push(Check::new("effort in domain", false, a));
        return report;
    }
    let beta = instance.beta();
    let p = eval_reduced(instance, beta, a);
    let scale = 1.0 + p.profit.abs();
    report.push(Check::within(
        "profit equals g(a)",
        (result.profit - p.profit).abs() / scale,
        1e-9,
    ));
    report.push(Check::within(
        "beta matches instance",
        if beta == result.beta {
            0.0
        } else {
            f64::INFINITY
        },
        0.0,
    ));
    let wage_dev = (c.w_high - p.w_high).abs().max((c.w_low - p.w_low).abs());
    report.push(Check::within(
        "closed-form wages",
        wage_dev / (1.0 + p.w_high),
        1e-9,
    ));
    let theft_dev = (c.b_high - beta.cap(c.w_high))
        .abs()
        .max((c.b_low - beta.cap(c.w_low)).abs());
    report.push(Check::within(
        "theft = min(beta, w)",
        theft_dev,
        1e-9 * (1.0 + c.w_high),
    ));
    let u = instance.market.reservation_utility;
    report.push(Check::within(
        "individual rationality",
        (u - result.worker_u).max(0.0),
        1e-9 * (1.0 + u),
    ));
    report.push(Check::new(
        "effort below search bound",
        a <= result.breaks.a_max,
        (a - result.breaks.a_max).max(0.0),
    ));
    report
}
