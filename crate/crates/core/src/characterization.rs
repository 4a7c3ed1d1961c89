//! Closed-form optimal wages and theft for a given effort level, and the
//! reduced one-dimensional objective `g(a)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostSpec, IdealTheft, Instance, MarketParams, PenaltySpec, MAX_EFFORT};

/// Optimal contract terms and payoffs at a fixed effort level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub a: f64,
    #[serde(rename = "wL")]
    pub w_low: f64,
    #[serde(rename = "wH")]
    pub w_high: f64,
    #[serde(rename = "bL")]
    pub b_low: f64,
    #[serde(rename = "bH")]
    pub b_high: f64,
    /// Employer expected profit `g(a)`.
    #[serde(rename = "g")]
    pub profit: f64,
    #[serde(rename = "worker_u")]
    pub worker_utility: f64,
}

pub(crate) fn check_reduced_effort(a: f64) -> Result<()> {
    if (0.0..=MAX_EFFORT).contains(&a) {
        Ok(())
    } else {
        Err(Error::EffortOutOfDomain(a))
    }
}

/// `wL*(a) = max{0, u - a c'(a) + C(a)}`.
pub fn optimal_low_wage(market: &MarketParams, cost: &CostSpec, a: f64) -> Result<f64> {
    check_reduced_effort(a)?;
    Ok(eval_low_wage(market.reservation_utility, cost, a))
}

/// `wH*(a) = wL*(a) + c'(a)`.
pub fn optimal_high_wage(market: &MarketParams, cost: &CostSpec, a: f64) -> Result<f64> {
    check_reduced_effort(a)?;
    Ok(eval_low_wage(market.reservation_utility, cost, a) + cost.eval_marginal(a))
}

pub(crate) fn eval_low_wage(u: f64, cost: &CostSpec, a: f64) -> f64 {
    (u - cost.eval_rent(a)).max(0.0)
}

/// `b* = min{beta, w}`.
pub fn optimal_theft(beta: IdealTheft, w: f64) -> f64 {
    beta.cap(w)
}

/// Evaluates `g(a)` together with the wages and theft that attain it.
pub fn reduced_objective(instance: &Instance, a: f64) -> Result<ReducedPoint> {
    instance.validate()?;
    check_reduced_effort(a)?;
    Ok(eval_reduced(instance, instance.beta(), a))
}

pub(crate) fn eval_reduced(instance: &Instance, beta: IdealTheft, a: f64) -> ReducedPoint {
    let m = &instance.market;
    let cost = &instance.cost;
    let w_low = eval_low_wage(m.reservation_utility, cost, a);
    let w_high = w_low + cost.eval_marginal(a);
    let b_low = beta.cap(w_low);
    let b_high = beta.cap(w_high);
    let high = m.revenue_high() - w_high + b_high - instance.expected_penalty(b_high);
    let low = m.revenue_low() - w_low + b_low - instance.expected_penalty(b_low);
    ReducedPoint {
        a,
        w_low,
        w_high,
        b_low,
        b_high,
        profit: a * high + (1.0 - a) * low,
        worker_utility: a * w_high + (1.0 - a) * w_low - cost.eval_cost(a),
    }
}

/// Whether penalties alone force `beta = 0`: `gamma eta'(0) >= 1`.
///
/// For `eta(b) = sigma b^p` with `p > 1`, `eta'(0) = 0`, so this is false
/// for every finite `sigma` and every inspection rate.
pub fn theft_eliminated(penalty: &PenaltySpec, gamma: f64) -> bool {
    elimination_condition(penalty.raw_marginal(0.0), gamma)
}

/// The elimination test for an arbitrary marginal penalty at zero theft.
pub fn elimination_condition(marginal_penalty_at_zero: f64, gamma: f64) -> bool {
    gamma > 0.0 && gamma * marginal_penalty_at_zero >= 1.0
}

/// `a wH + (1 - a) wL - C(a)` at a reduced point.
pub fn worker_utility(_market: &MarketParams, cost: &CostSpec, point: &ReducedPoint) -> f64 {
    point.a * point.w_high + (1.0 - point.a) * point.w_low - cost.eval_cost(point.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::worker_best_response;

    fn illustrative() -> Instance {
        Instance::new(
            MarketParams::new(10.0, 5.0, 3.0, 1.0, 1.0).unwrap(),
            CostSpec::new(1.0, 1.0).unwrap(),
            PenaltySpec::new(1.0, 2.0).unwrap(),
        )
    }

    #[test]
    fn low_wage_examples() {
        let i = illustrative();
        let (m, c) = (&i.market, &i.cost);
        assert_eq!(optimal_low_wage(m, c, 0.0).unwrap(), 1.0);
        assert!(optimal_low_wage(m, c, 0.5).unwrap().abs() < 1e-12);
        assert!((optimal_low_wage(m, c, 0.25).unwrap() - 8.0 / 9.0).abs() < 1e-12);
        assert!(optimal_low_wage(m, c, 1.0).is_err());
    }

    #[test]
    fn high_wage_examples() {
        let i = illustrative();
        let (m, c) = (&i.market, &i.cost);
        assert_eq!(optimal_high_wage(m, c, 0.0).unwrap(), 2.0);
        assert!((optimal_high_wage(m, c, 0.5).unwrap() - 4.0).abs() < 1e-12);
        assert!((optimal_high_wage(m, c, 0.25).unwrap() - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn theft_rule_examples() {
        assert_eq!(optimal_theft(IdealTheft::Finite(0.5), 1.0), 0.5);
        assert_eq!(optimal_theft(IdealTheft::Unbounded, 3.0), 3.0);
        assert_eq!(optimal_theft(IdealTheft::Finite(0.0), 7.0), 0.0);
    }

    #[test]
    fn reduced_objective_at_zero_effort() {
        // beta = 0.5 <= u = 1, so g(0) = P yL - u + beta - E(beta).
        let i = illustrative();
        let p = reduced_objective(&i, 0.0).unwrap();
        let beta = 0.5;
        let expected = 30.0 - 1.0 + beta - beta * beta;
        assert!((p.profit - expected).abs() < 1e-12);

        let honest = i.honest();
        let p = reduced_objective(&honest, 0.0).unwrap();
        assert_eq!(p.profit, 30.0 - 1.0);
    }

    #[test]
    fn elimination_examples() {
        let pen = PenaltySpec::new(5.0, 1.1).unwrap();
        assert!(!theft_eliminated(&pen, 1.0));
        assert!(elimination_condition(2.0, 0.5));
        assert!(!elimination_condition(2.0, 0.49));
        assert!(!theft_eliminated(&pen, 0.0));
        assert!(!elimination_condition(1e9, 0.0));
    }

    #[test]
    fn worker_utility_examples() {
        let i = illustrative();
        let p = reduced_objective(&i, 0.25).unwrap();
        assert!((worker_utility(&i.market, &i.cost, &p) - 1.0).abs() < 1e-12);
        let p = reduced_objective(&i, 0.0).unwrap();
        assert_eq!(worker_utility(&i.market, &i.cost, &p), 1.0);
        let p = reduced_objective(&i, 0.75).unwrap();
        assert!((worker_utility(&i.market, &i.cost, &p) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn wage_gap_and_incentive_consistency() {
        let i = illustrative();
        for n in 1..99 {
            let a = n as f64 / 100.0;
            let p = reduced_objective(&i, a).unwrap();
            let gap = p.w_high - p.w_low;
            let c = i.cost.eval_marginal(a);
            assert!((gap - c).abs() <= 1e-12 * c.max(1.0), "a={a}");
            let back = worker_best_response(&i.cost, p.w_high, p.w_low);
            assert!((back - a).abs() < 1e-8, "a={a} back={back}");
            assert!(p.worker_utility >= 1.0 - 1e-9);
            if p.w_low > 0.0 {
                assert!((p.worker_utility - 1.0).abs() < 1e-9);
            }
        }
    }
}
