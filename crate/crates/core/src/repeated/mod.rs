//! The repeated game: a fixed employer strategy against a worker who
//! forecasts theft from what they have seen.
//!
//! Each period the worker discounts promised wages by the current forecast,
//! best-responds to the effective wages `(w - b̂)^+`, and walks away if that
//! falls short of the reservation utility. Forecasts only move on periods in
//! which the worker was employed and so observed the theft.

mod forecast;

pub use forecast::{ForecastKind, ForecastRule, Forecaster};

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::model::{employer_profit, worker_best_response, worker_utility_at, Contract, Instance};
use crate::report::{Check, Report};
use crate::solver;

/// Forecast error below which a trace counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-8;

/// Slack on the participation constraint, so that a binding optimum is not
/// rejected over rounding.
pub fn ir_tolerance(u: f64) -> f64 {
    1e-9 * u.abs().max(1.0)
}

/// Promised wages and theft, repeated every period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedStrategy {
    #[serde(rename = "wH")]
    pub w_high: f64,
    #[serde(rename = "wL")]
    pub w_low: f64,
    #[serde(rename = "bH")]
    pub b_high: f64,
    #[serde(rename = "bL")]
    pub b_low: f64,
}

impl FixedStrategy {
    pub fn new(w_high: f64, w_low: f64, b_high: f64, b_low: f64) -> Result<Self> {
        let s = Self {
            w_high,
            w_low,
            b_high,
            b_low,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn honest(w_high: f64, w_low: f64) -> Result<Self> {
        Self::new(w_high, w_low, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        check_param(
            "wH",
            self.w_high,
            self.w_high >= 0.0,
            "wage must be nonnegative",
        )?;
        check_param(
            "wL",
            self.w_low,
            self.w_low >= 0.0,
            "wage must be nonnegative",
        )?;
        check_param(
            "bH",
            self.b_high,
            (0.0..=self.w_high).contains(&self.b_high),
            "theft must lie in [0, wH]",
        )?;
        check_param(
            "bL",
            self.b_low,
            (0.0..=self.w_low).contains(&self.b_low),
            "theft must lie in [0, wL]",
        )
    }

    /// Promise what is actually paid and steal nothing.
    pub fn honest_twin(&self) -> Self {
        Self {
            w_high: self.w_high - self.b_high,
            w_low: self.w_low - self.b_low,
            b_high: 0.0,
            b_low: 0.0,
        }
    }

    pub fn steals(&self) -> bool {
        self.b_high > 0.0 || self.b_low > 0.0
    }

    fn contract(&self, effort: f64) -> Contract {
        Contract {
            w_high: self.w_high,
            w_low: self.w_low,
            b_high: self.b_high,
            b_low: self.b_low,
            effort,
        }
    }
}

/// How the worker answers a pair of effective wages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub accepted: bool,
    pub effort: f64,
    /// Utility the worker expects at `effort`.
    pub utility: f64,
}

pub fn worker_response(instance: &Instance, eff_high: f64, eff_low: f64) -> Response {
    let (h, l) = (eff_high.max(0.0), eff_low.max(0.0));
    let effort = worker_best_response(&instance.cost, h, l);
    let utility = worker_utility_at(&instance.cost, h, l, effort);
    let u = instance.market.reservation_utility;
    Response {
        accepted: utility >= u - ir_tolerance(u),
        effort,
        utility,
    }
}

/// Per-period payoff once forecasts equal the actual theft.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub accepted: bool,
    pub effort: f64,
    pub profit: f64,
    pub worker_utility: f64,
}

/// The limit one-stage game: the worker sees `(w - b)^+` exactly.
pub fn steady_state(instance: &Instance, strategy: &FixedStrategy) -> Result<SteadyState> {
    instance.validate()?;
    strategy.validate()?;
    let r = worker_response(
        instance,
        strategy.w_high - strategy.b_high,
        strategy.w_low - strategy.b_low,
    );
    Ok(if r.accepted {
        SteadyState {
            accepted: true,
            effort: r.effort,
            profit: employer_profit(instance, &strategy.contract(r.effort)),
            worker_utility: r.utility,
        }
    } else {
        SteadyState {
            accepted: false,
            effort: 0.0,
            profit: 0.0,
            worker_utility: instance.market.reservation_utility,
        }
    })
}

pub fn steady_state_profit(instance: &Instance, strategy: &FixedStrategy) -> Result<f64> {
    Ok(steady_state(instance, strategy)?.profit)
}

/// One period of a simulated trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub t: usize,
    #[serde(rename = "bhat_H")]
    pub bhat_high: f64,
    #[serde(rename = "bhat_L")]
    pub bhat_low: f64,
    #[serde(rename = "a")]
    pub effort: f64,
    pub employed: bool,
    /// Employer payoff: expected, or realized in realization mode.
    pub profit: f64,
    /// Worker payoff net of actual theft and effort cost; `u` when the
    /// worker stays out.
    pub worker_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub strategy: FixedStrategy,
    pub rule: ForecastRule,
    pub seed: Option<u64>,
    pub records: Vec<PeriodRecord>,
    /// First period from which both forecasts stay within
    /// [`CONVERGENCE_TOL`] of the actual theft.
    pub periods_to_converge: Option<usize>,
    pub limit: SteadyState,
}

impl SimTrace {
    pub fn converged(&self) -> bool {
        self.periods_to_converge.is_some()
    }

    /// Mean profit over the last `n` periods (fewer if the trace is short).
    pub fn tail_mean_profit(&self, n: usize) -> f64 {
        let tail = &self.records[self.records.len().saturating_sub(n)..];
        tail.iter().map(|r| r.profit).sum::<f64>() / tail.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Expected-payoff simulation over `periods` periods.
pub fn simulate(
    instance: &Instance,
    strategy: &FixedStrategy,
    rule: &ForecastRule,
    periods: usize,
) -> Result<SimTrace> {
    run(instance, strategy, rule, periods, None)
}

/// Simulation with sampled outcomes and inspections. The worker only sees
/// the theft on the outcome that occurred.
pub fn simulate_realized(
    instance: &Instance,
    strategy: &FixedStrategy,
    rule: &ForecastRule,
    periods: usize,
    seed: u64,
) -> Result<SimTrace> {
    run(instance, strategy, rule, periods, Some(seed))
}

fn run(
    instance: &Instance,
    strategy: &FixedStrategy,
    rule: &ForecastRule,
    periods: usize,
    seed: Option<u64>,
) -> Result<SimTrace> {
    if periods == 0 {
        return Err(Error::InvalidStrategy(
            "simulation needs at least one period".into(),
        ));
    }
    rule.validate()?;
    let limit = steady_state(instance, strategy)?;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut high = rule.start();
    let mut low = rule.start();
    let mut records = Vec::with_capacity(periods);
    for t in 1..=periods {
        let (bhat_high, bhat_low) = (high.forecast(), low.forecast());
        let r = worker_response(
            instance,
            strategy.w_high - bhat_high,
            strategy.w_low - bhat_low,
        );
        let mut record = PeriodRecord {
            t,
            bhat_high,
            bhat_low,
            effort: r.effort,
            employed: r.accepted,
            profit: 0.0,
            worker_utility: instance.market.reservation_utility,
        };
        if r.accepted {
            let cost = instance.cost.eval_cost(r.effort);
            match rng.as_mut() {
                None => {
                    record.profit = employer_profit(instance, &strategy.contract(r.effort));
                    record.worker_utility = worker_utility_at(
                        &instance.cost,
                        strategy.w_high - strategy.b_high,
                        strategy.w_low - strategy.b_low,
                        r.effort,
                    );
                    high.observe(strategy.b_high);
                    low.observe(strategy.b_low);
                }
                Some(rng) => {
                    let success = rng.gen::<f64>() < r.effort;
                    let inspected = rng.gen::<f64>() < instance.gamma();
                    let (revenue, w, b) = if success {
                        (
                            instance.market.revenue_high(),
                            strategy.w_high,
                            strategy.b_high,
                        )
                    } else {
                        (
                            instance.market.revenue_low(),
                            strategy.w_low,
                            strategy.b_low,
                        )
                    };
                    let fine = if inspected {
                        instance.penalty.raw(b)
                    } else {
                        0.0
                    };
                    record.profit = revenue - w + b - fine;
                    record.worker_utility = w - b - cost;
                    if success {
                        high.observe(b);
                    } else {
                        low.observe(b);
                    }
                }
            }
        }
        records.push(record);
    }
    let mut periods_to_converge = None;
    for r in records.iter().rev() {
        let close = (r.bhat_high - strategy.b_high).abs() < CONVERGENCE_TOL
            && (r.bhat_low - strategy.b_low).abs() < CONVERGENCE_TOL;
        if !close {
            break;
        }
        periods_to_converge = Some(r.t);
    }
    Ok(SimTrace {
        strategy: *strategy,
        rule: *rule,
        seed,
        records,
        periods_to_converge,
        limit,
    })
}

/// A strategy against its honest twin in the limit game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub strategy: FixedStrategy,
    pub original: SteadyState,
    pub honest: SteadyState,
    /// `honest.profit - original.profit`.
    pub margin: f64,
    /// `a E(bH) + (1 - a) E(bL)` when accepted, else 0.
    pub expected_fines: f64,
    gamma: f64,
}

impl Dominance {
    pub fn strict_expected(&self) -> bool {
        self.original.accepted
            && self.original.effort > 0.0
            && self.strategy.steals()
            && self.gamma > 0.0
    }

    pub fn to_report(&self) -> Report {
        let scale = 1.0 + self.original.profit.abs().max(self.honest.profit.abs());
        let mut report = Report::default();
        report.push(Check::within(
            "honest twin weakly dominates",
            (-self.margin).max(0.0) / scale,
            1e-9,
        ));
        report.push(Check::within(
            "margin equals expected fines",
            (self.margin - self.expected_fines).abs(),
            1e-9,
        ));
        report.push(Check::new(
            "strict dominance under theft",
            !self.strict_expected() || self.margin > 0.0,
            self.margin,
        ));
        report
    }
}

pub fn check_dominance(instance: &Instance, strategy: &FixedStrategy) -> Result<Dominance> {
    let original = steady_state(instance, strategy)?;
    let honest = steady_state(instance, &strategy.honest_twin())?;
    let expected_fines = if original.accepted {
        let a = original.effort;
        a * instance.expected_penalty(strategy.b_high)
            + (1.0 - a) * instance.expected_penalty(strategy.b_low)
    } else {
        0.0
    };
    Ok(Dominance {
        strategy: *strategy,
        original,
        honest,
        margin: honest.profit - original.profit,
        expected_fines,
        gamma: instance.gamma(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalFixed {
    pub strategy: FixedStrategy,
    pub effort: f64,
    pub profit: f64,
}

/// The best fixed strategy of the limit game: the no-theft optimum.
pub fn optimal_fixed_strategy(instance: &Instance) -> Result<OptimalFixed> {
    instance.validate()?;
    if !solver::positive_effort_condition(&instance.market, &instance.cost)? {
        return Err(Error::NoPositiveEffort {
            marginal_cost_at_zero: instance.cost.coefficient,
            output_gain: instance.market.output_gain(),
        });
    }
    let honest = instance.honest();
    let solved = solver::solve(&honest)?;
    let c = solved.contract;
    let strategy = FixedStrategy::honest(c.w_high, c.w_low)?;
    let limit = steady_state(instance, &strategy)?;
    Ok(OptimalFixed {
        strategy,
        effort: limit.effort,
        profit: limit.profit,
    })
}

/// Random fixed strategy with wages in `[0, w_max]` and theft anywhere in
/// `[0, w]`. A quarter of draws are honest.
pub fn random_strategy<R: Rng>(rng: &mut R, w_max: f64) -> FixedStrategy {
    let w_high = rng.gen_range(0.0..=w_max);
    let w_low = rng.gen_range(0.0..=w_max);
    let (b_high, b_low) = if rng.gen_bool(0.25) {
        (0.0, 0.0)
    } else {
        (w_high * rng.gen::<f64>(), w_low * rng.gen::<f64>())
    };
    FixedStrategy {
        w_high,
        w_low,
        b_high,
        b_low,
    }
}

/// Sampled audit of the optimal fixed strategy and of twin dominance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub optimum: OptimalFixed,
    pub samples: usize,
    pub accepted: usize,
    pub best_sampled_profit: f64,
    /// Samples whose limit profit exceeds the optimum.
    pub beaten: usize,
    pub dominance: Report,
}

impl Audit {
    pub fn to_report(&self) -> Report {
        let s = self.optimum.strategy;
        let mut report = Report::default();
        report.push(Check::new(
            "optimal fixed strategy steals nothing",
            s.b_high == 0.0 && s.b_low == 0.0,
            s.b_high.max(s.b_low),
        ));
        report.push(Check::new(
            "optimal fixed effort in (0, 1)",
            self.optimum.effort > 0.0 && self.optimum.effort < 1.0,
            self.optimum.effort,
        ));
        report.push(Check::new(
            "optimal fixed strategy unbeaten by samples",
            self.beaten == 0,
            (self.best_sampled_profit - self.optimum.profit).max(0.0),
        ));
        report.extend(self.dominance.clone());
        report
    }
}

/// Draws `samples` strategies with wages up to 1.5 max(wH*, u) and checks
/// each against the optimum and its honest twin.
pub fn audit_fixed_strategies(instance: &Instance, samples: usize, seed: u64) -> Result<Audit> {
    let optimum = optimal_fixed_strategy(instance)?;
    let w_max = 1.5
        * optimum
            .strategy
            .w_high
            .max(instance.market.reservation_utility);
    let slack = 1e-9
        * optimum
            .profit
            .abs()
            .max(instance.market.reservation_utility)
            .max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0;
    let mut beaten = 0;
    let mut best = f64::NEG_INFINITY;
    let (mut weak_ok, mut weak_dev) = (true, 0.0f64);
    let (mut formula_ok, mut formula_dev) = (true, 0.0f64);
    let (mut strict_ok, mut strict_min) = (true, f64::INFINITY);
    for _ in 0..samples {
        let s = random_strategy(&mut rng, w_max);
        let d = check_dominance(instance, &s)?;
        if d.original.accepted {
            accepted += 1;
        }
        best = best.max(d.original.profit);
        if d.original.profit > optimum.profit + slack {
            beaten += 1;
        }
        let checks = d.to_report().checks;
        weak_ok &= checks[0].passed;
        weak_dev = weak_dev.max(checks[0].max_deviation);
        formula_ok &= checks[1].passed;
        formula_dev = formula_dev.max(checks[1].max_deviation);
        if d.strict_expected() {
            strict_ok &= checks[2].passed;
            strict_min = strict_min.min(d.margin);
        }
    }
    let mut dominance = Report::default();
    dominance.push(Check::new(
        "honest twin weakly dominates",
        weak_ok,
        weak_dev,
    ));
    dominance.push(Check::new(
        "margin equals expected fines",
        formula_ok,
        formula_dev,
    ));
    // Deviation here is the smallest margin among strategies that steal.
    dominance.push(Check::new(
        "strict dominance under theft",
        strict_ok,
        strict_min,
    ));
    Ok(Audit {
        optimum,
        samples,
        accepted,
        best_sampled_profit: best,
        beaten,
        dominance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostSpec, MarketParams, PenaltySpec};

    fn context() -> Instance {
        Instance::new(
            MarketParams::new(10.0, 50.0, 30.0, 200.0, 0.2).unwrap(),
            CostSpec::new(0.1, 3.0).unwrap(),
            PenaltySpec::new(1.0, 1.1).unwrap(),
        )
    }

    #[test]
    fn honest_optimum_is_stationary() {
        let i = context();
        let opt = optimal_fixed_strategy(&i).unwrap();
        assert!(opt.effort > 0.0 && opt.effort < 1.0);
        let trace = simulate(&i, &opt.strategy, &ForecastRule::last_observation(), 20).unwrap();
        assert!(trace
            .records
            .iter()
            .all(|r| r.employed && r.effort == opt.effort));
        assert_eq!(trace.periods_to_converge, Some(1));
        let solved = solver::solve(&i.honest()).unwrap();
        assert!((opt.profit - solved.profit).abs() < 1e-9);
    }

    #[test]
    fn last_observation_settles_at_second_period() {
        let i = context();
        let s = FixedStrategy::new(300.0, 250.0, 2.0, 2.0).unwrap();
        let trace = simulate(&i, &s, &ForecastRule::last_observation(), 10).unwrap();
        assert_eq!(trace.records[0].bhat_high, 0.0);
        for r in &trace.records[1..] {
            assert_eq!((r.bhat_high, r.bhat_low), (2.0, 2.0));
            assert_eq!(r.effort, trace.records[1].effort);
        }
        assert_eq!(trace.periods_to_converge, Some(2));
        assert!((trace.tail_mean_profit(5) - trace.limit.profit).abs() < 1e-9);
    }

    #[test]
    fn smoothing_converges_geometrically() {
        let i = context();
        let c = 3.0;
        let s = FixedStrategy::new(300.0, 250.0, c, c).unwrap();
        let rule = ForecastRule::exponential_smoothing(0.5).unwrap();
        let trace = simulate(&i, &s, &rule, 60).unwrap();
        for r in &trace.records {
            assert!((c - r.bhat_high - c * 0.5f64.powi(r.t as i32 - 1)).abs() < 1e-14);
        }
        let first = trace
            .records
            .iter()
            .find(|r| c - r.bhat_high < CONVERGENCE_TOL)
            .unwrap();
        assert_eq!(trace.periods_to_converge, Some(first.t));
        assert!((trace.tail_mean_profit(50) - trace.limit.profit).abs() < 1e-6);
    }

    #[test]
    fn steady_state_examples() {
        let i = context();
        let honest = FixedStrategy::honest(260.0, 230.0).unwrap();
        let ss = steady_state(&i, &honest).unwrap();
        let a = worker_best_response(&i.cost, 260.0, 230.0);
        let base = employer_profit(&i, &honest.contract(a));
        assert_eq!(ss.profit, base);

        let thief = FixedStrategy::new(265.0, 231.0, 5.0, 1.0).unwrap();
        let d = check_dominance(&i, &thief).unwrap();
        assert!(d.original.accepted);
        let fines = d.original.effort * i.expected_penalty(5.0)
            + (1.0 - d.original.effort) * i.expected_penalty(1.0);
        assert!((d.margin - fines).abs() < 1e-9);
        assert!(d.to_report().all_passed());

        let stingy = FixedStrategy::new(100.0, 100.0, 0.0, 0.0).unwrap();
        assert_eq!(steady_state_profit(&i, &stingy).unwrap(), 0.0);
    }

    #[test]
    fn dominance_equalities() {
        let i = context();
        let honest = FixedStrategy::honest(260.0, 230.0).unwrap();
        let d = check_dominance(&i, &honest).unwrap();
        assert_eq!(d.margin, 0.0);
        // Zero effort and no low-outcome theft: weak only.
        let flat = FixedStrategy::new(240.0, 240.0, 30.0, 0.0).unwrap();
        let d = check_dominance(&i, &flat).unwrap();
        assert_eq!(d.original.effort, 0.0);
        assert_eq!(d.margin, 0.0);
        assert!(d.to_report().all_passed());
    }

    #[test]
    fn rejection_freezes_forecasts() {
        let i = context();
        let s = FixedStrategy::new(300.0, 250.0, 2.0, 2.0).unwrap();
        let rule = ForecastRule::last_observation()
            .with_initial(100.0)
            .unwrap();
        let trace = simulate(&i, &s, &rule, 5).unwrap();
        assert!(trace
            .records
            .iter()
            .all(|r| !r.employed && r.profit == 0.0 && r.bhat_high == 100.0));
        assert!(!trace.converged());
    }

    #[test]
    fn realized_mode_is_seeded() {
        let i = context();
        let s = FixedStrategy::new(300.0, 250.0, 2.0, 2.0).unwrap();
        let rule = ForecastRule::running_mean();
        let a = simulate_realized(&i, &s, &rule, 50, 9).unwrap();
        let b = simulate_realized(&i, &s, &rule, 50, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, Some(9));
        assert!(a.converged());
    }

    #[test]
    fn optimal_fixed_requires_positive_effort() {
        let i = Instance::new(
            MarketParams::new(1.0, 5.0, 3.0, 1.0, 1.0).unwrap(),
            CostSpec::new(3.0, 1.0).unwrap(),
            PenaltySpec::new(1.0, 2.0).unwrap(),
        );
        assert!(matches!(
            optimal_fixed_strategy(&i),
            Err(Error::NoPositiveEffort { .. })
        ));
    }

    #[test]
    fn small_audit() {
        let audit = audit_fixed_strategies(&context(), 100, 3).unwrap();
        let report = audit.to_report();
        assert!(report.all_passed(), "{report}");
        assert!(audit.accepted > 0);
    }

    #[test]
    fn trace_csv_header() {
        let i = context();
        let s = FixedStrategy::new(300.0, 250.0, 2.0, 2.0).unwrap();
        let trace = simulate(&i, &s, &ForecastRule::last_observation(), 2).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,bhat_H,bhat_L,a,employed,profit,worker_utility"
        );
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn strategy_validation() {
        assert!(FixedStrategy::new(1.0, 1.0, 2.0, 0.0).is_err());
        assert!(FixedStrategy::new(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(FixedStrategy::new(1.0, 1.0, 0.0, f64::NAN).is_err());
    }
}
