//! Model primitives: market environment, worker cost of effort, theft
//! penalty, and the contract decision vector.
//!
//! The cost family is `C(a) = k a / (1 - a)^q` and the raw penalty is
//! `eta(b) = sigma b^p`. The employer's objective charges the *expected*
//! penalty `gamma * eta(b)`, so the ideal theft solves `gamma eta'(beta) = 1`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_param, Error, Result};
use crate::numeric::bisect_increasing;

/// Largest effort at which the closed forms are evaluated. `C(a)` diverges at 1.
pub const MAX_EFFORT: f64 = 1.0 - 1e-9;

/// Price, output levels, outside option and inspection rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    #[serde(rename = "P")]
    pub price: f64,
    #[serde(rename = "yH")]
    pub y_high: f64,
    #[serde(rename = "yL")]
    pub y_low: f64,
    #[serde(rename = "u")]
    pub reservation_utility: f64,
    #[serde(rename = "gamma")]
    pub inspection_rate: f64,
}

impl MarketParams {
    pub fn new(price: f64, y_high: f64, y_low: f64, u: f64, gamma: f64) -> Result<Self> {
        let m = Self {
            price,
            y_high,
            y_low,
            reservation_utility: u,
            inspection_rate: gamma,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_param("P", self.price, self.price > 0.0, "price must be positive")?;
        check_param(
            "yL",
            self.y_low,
            self.y_low >= 0.0,
            "low output must be nonnegative",
        )?;
        check_param(
            "yH",
            self.y_high,
            self.y_high > self.y_low,
            "high output must exceed low output",
        )?;
        check_param(
            "u",
            self.reservation_utility,
            self.reservation_utility >= 0.0,
            "reservation utility must be nonnegative",
        )?;
        check_param(
            "P",
            self.price,
            (self.price * self.y_high).is_finite(),
            "revenue P * yH overflows",
        )?;
        check_param(
            "gamma",
            self.inspection_rate,
            (0.0..=1.0).contains(&self.inspection_rate),
            "inspection rate must lie in [0, 1]",
        )
    }

    /// Revenue `P * yH`.
    pub fn revenue_high(&self) -> f64 {
        self.price * self.y_high
    }

    /// Revenue `P * yL`.
    pub fn revenue_low(&self) -> f64 {
        self.price * self.y_low
    }

    /// `P (yH - yL)`, the expected revenue gain per unit of effort.
    pub fn output_gain(&self) -> f64 {
        self.price * (self.y_high - self.y_low)
    }
}

/// Worker cost of effort `C(a) = k a / (1 - a)^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    #[serde(rename = "k")]
    pub coefficient: f64,
    #[serde(rename = "q")]
    pub growth: f64,
}

fn check_effort(a: f64) -> Result<()> {
    if (0.0..1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::EffortOutOfDomain(a))
    }
}

impl CostSpec {
    pub fn new(k: f64, q: f64) -> Result<Self> {
        let c = Self {
            coefficient: k,
            growth: q,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_param(
            "k",
            self.coefficient,
            self.coefficient > 0.0,
            "cost coefficient must be positive",
        )?;
        check_param(
            "q",
            self.growth,
            self.growth > 0.0,
            "cost growth factor must be positive",
        )
    }

    pub fn cost(&self, a: f64) -> Result<f64> {
        check_effort(a)?;
        Ok(self.eval_cost(a))
    }

    /// `c'(a) = k (1 - a)^(-q-1) [(1 - a) + a q]`.
    pub fn marginal_cost(&self, a: f64) -> Result<f64> {
        check_effort(a)?;
        Ok(self.eval_marginal(a))
    }

    /// `c''(a) = k q (1 - a)^(-q-2) [2 + a (q - 1)]`.
    pub fn curvature(&self, a: f64) -> Result<f64> {
        check_effort(a)?;
        Ok(self.eval_curvature(a))
    }

    pub(crate) fn eval_cost(&self, a: f64) -> f64 {
        self.coefficient * a * (1.0 - a).powf(-self.growth)
    }

    pub(crate) fn eval_marginal(&self, a: f64) -> f64 {
        let q = self.growth;
        self.coefficient * (1.0 - a).powf(-q - 1.0) * ((1.0 - a) + a * q)
    }

    pub(crate) fn eval_curvature(&self, a: f64) -> f64 {
        let q = self.growth;
        self.coefficient * q * (1.0 - a).powf(-q - 2.0) * (2.0 + a * (q - 1.0))
    }

    /// `a c'(a) - C(a) = k q a^2 (1 - a)^(-q-1)`, non-decreasing in `a`.
    ///
    /// The wage floor `wL*(a)` hits zero where this equals `u`.
    pub(crate) fn eval_rent(&self, a: f64) -> f64 {
        self.coefficient * self.growth * a * a * (1.0 - a).powf(-self.growth - 1.0)
    }

    /// Effort `a` with `c'(a) = delta`; 0 when `delta <= c'(0) = k`.
    ///
    /// Efforts beyond [`MAX_EFFORT`] are clamped there.
    pub fn inverse_marginal_cost(&self, delta: f64) -> f64 {
        if delta.is_nan() || delta <= self.coefficient {
            return 0.0;
        }
        bisect_increasing(|a| self.eval_marginal(a), 0.0, MAX_EFFORT, delta)
    }
}

/// Raw penalty `eta(b) = sigma b^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub sigma: f64,
    #[serde(rename = "p")]
    pub growth: f64,
}

impl PenaltySpec {
    pub fn new(sigma: f64, p: f64) -> Result<Self> {
        let s = Self { sigma, growth: p };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_param(
            "sigma",
            self.sigma,
            self.sigma > 0.0,
            "penalty coefficient must be positive",
        )?;
        check_param(
            "p",
            self.growth,
            self.growth > 1.0,
            "penalty growth factor must exceed 1 (strictly convex penalty)",
        )
    }

    pub fn raw(&self, b: f64) -> f64 {
        self.sigma * b.powf(self.growth)
    }

    /// `eta'(b) = sigma p b^(p-1)`.
    pub fn raw_marginal(&self, b: f64) -> f64 {
        self.sigma * self.growth * b.powf(self.growth - 1.0)
    }

    /// Expected penalty `gamma * eta(b)`.
    pub fn expected_penalty(&self, gamma: f64, b: f64) -> Result<f64> {
        if b < 0.0 || b.is_nan() {
            return Err(Error::NegativeTheft(b));
        }
        Ok(gamma * self.raw(b))
    }

    pub(crate) fn eval_expected(&self, gamma: f64, b: f64) -> f64 {
        if gamma == 0.0 || b == 0.0 {
            0.0
        } else {
            gamma * self.raw(b)
        }
    }

    pub(crate) fn eval_expected_marginal(&self, gamma: f64, b: f64) -> f64 {
        if gamma == 0.0 {
            0.0
        } else {
            gamma * self.raw_marginal(b)
        }
    }

    /// Theft where the marginal expected penalty equals one:
    /// `beta = (p sigma gamma)^(1 / (1 - p))`, unbounded when `gamma = 0`.
    pub fn ideal_theft(&self, gamma: f64) -> Result<IdealTheft> {
        self.validate()?;
        check_param(
            "gamma",
            gamma,
            gamma >= 0.0,
            "inspection rate must be nonnegative",
        )?;
        if gamma == 0.0 {
            return Ok(IdealTheft::Unbounded);
        }
        let beta = (self.growth * self.sigma * gamma).powf(1.0 / (1.0 - self.growth));
        Ok(if beta.is_finite() {
            IdealTheft::Finite(beta)
        } else {
            IdealTheft::Unbounded
        })
    }
}

/// The employer's ideal theft level `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdealTheft {
    Finite(f64),
    /// No inspection: theft is only limited by the promised wage.
    Unbounded,
}

impl IdealTheft {
    pub fn value(self) -> f64 {
        match self {
            IdealTheft::Finite(b) => b,
            IdealTheft::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, IdealTheft::Finite(_))
    }

    /// `min(beta, w)`.
    pub fn cap(self, w: f64) -> f64 {
        match self {
            IdealTheft::Finite(b) => b.min(w),
            IdealTheft::Unbounded => w,
        }
    }
}

impl fmt::Display for IdealTheft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::numeric::fmt_num(self.value()))
    }
}

impl Serialize for IdealTheft {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            IdealTheft::Finite(b) => s.serialize_f64(*b),
            IdealTheft::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for IdealTheft {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) if b.is_finite() && b >= 0.0 => Ok(IdealTheft::Finite(b)),
            Raw::Num(b) => Err(serde::de::Error::custom(format!(
                "ideal theft must be a nonnegative number, got {b}"
            ))),
            Raw::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "unbounded" => Ok(IdealTheft::Unbounded),
                other => other
                    .parse::<f64>()
                    .ok()
                    .filter(|b| b.is_finite() && *b >= 0.0)
                    .map(IdealTheft::Finite)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad ideal theft `{t}`"))),
            },
        }
    }
}

/// Promised wages, theft amounts and induced effort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    #[serde(rename = "wH")]
    pub w_high: f64,
    #[serde(rename = "wL")]
    pub w_low: f64,
    #[serde(rename = "bH")]
    pub b_high: f64,
    #[serde(rename = "bL")]
    pub b_low: f64,
    #[serde(rename = "a")]
    pub effort: f64,
}

impl Contract {
    /// Wage bounds `0 <= b <= w` and `0 <= a < 1`.
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
        )?;
        check_effort(self.effort)
    }

    pub fn effective_high(&self) -> f64 {
        (self.w_high - self.b_high).max(0.0)
    }

    pub fn effective_low(&self) -> f64 {
        (self.w_low - self.b_low).max(0.0)
    }
}

/// A fully specified problem instance.
///
/// `theft_cap` is an optional hard ceiling on theft per outcome. A cap of
/// zero imposes the no-theft restriction; the employer then steals
/// `min(beta, cap, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(flatten)]
    pub market: MarketParams,
    #[serde(flatten)]
    pub cost: CostSpec,
    #[serde(flatten)]
    pub penalty: PenaltySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theft_cap: Option<f64>,
}

impl Instance {
    pub fn new(market: MarketParams, cost: CostSpec, penalty: PenaltySpec) -> Self {
        Self {
            market,
            cost,
            penalty,
            theft_cap: None,
        }
    }

    pub fn with_theft_cap(mut self, cap: f64) -> Self {
        self.theft_cap = Some(cap);
        self
    }

    /// The same instance with theft forbidden.
    pub fn honest(self) -> Self {
        self.with_theft_cap(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        self.cost.validate()?;
        self.penalty.validate()?;
        if let Some(cap) = self.theft_cap {
            check_param(
                "theft_cap",
                cap,
                cap >= 0.0,
                "theft cap must be nonnegative",
            )?;
        }
        Ok(())
    }

    /// Ideal theft from the penalty alone, ignoring any cap.
    pub fn natural_beta(&self) -> IdealTheft {
        self.penalty
            .ideal_theft(self.market.inspection_rate)
            .unwrap_or(IdealTheft::Unbounded)
    }

    /// Effective ideal theft `min(beta, cap)`.
    pub fn beta(&self) -> IdealTheft {
        let natural = self.natural_beta();
        match self.theft_cap {
            Some(cap) => IdealTheft::Finite(natural.cap(cap)),
            None => natural,
        }
    }

    /// Largest admissible theft from a wage `w`.
    pub fn max_theft(&self, w: f64) -> f64 {
        match self.theft_cap {
            Some(cap) => w.min(cap),
            None => w,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.market.inspection_rate
    }

    pub(crate) fn expected_penalty(&self, b: f64) -> f64 {
        self.penalty.eval_expected(self.gamma(), b)
    }
}

/// Effort maximising `a wH + (1 - a) wL - C(a)` over `[0, 1)`.
///
/// Returns 0 when the wage gap does not exceed `c'(0)`; the tie at
/// `wH - wL = c'(0)` resolves to the corner.
pub fn worker_best_response(cost: &CostSpec, w_high: f64, w_low: f64) -> f64 {
    cost.inverse_marginal_cost(w_high - w_low)
}

/// Worker expected utility `a wH + (1 - a) wL - C(a)`.
pub fn worker_utility_at(cost: &CostSpec, w_high: f64, w_low: f64, a: f64) -> f64 {
    a * w_high + (1.0 - a) * w_low - cost.eval_cost(a)
}

/// Employer expected profit of a contract, charging the expected penalty.
pub fn employer_profit(instance: &Instance, c: &Contract) -> f64 {
    let m = &instance.market;
    let high = m.revenue_high() - c.w_high + c.b_high - instance.expected_penalty(c.b_high);
    let low = m.revenue_low() - c.w_low + c.b_low - instance.expected_penalty(c.b_low);
    c.effort * high + (1.0 - c.effort) * low
}
