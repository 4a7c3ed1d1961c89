//! Worker forecasts of per-outcome theft.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a forecast is formed from past observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForecastKind {
    /// The most recent observation.
    LastObservation,
    /// Mean of every observation so far.
    RunningMean,
    /// Mean of the last `window` observations.
    MovingAverage { window: usize },
    /// `alpha * observed + (1 - alpha) * previous`.
    ExponentialSmoothing { alpha: f64 },
}

/// A forecast rule plus the forecast held before any observation.
///
/// The textual form is `last`, `mean`, `ma:<window>` or `es:<alpha>`,
/// optionally followed by `@<initial>`, e.g. `es:0.3@1.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ForecastRule {
    pub kind: ForecastKind,
    pub initial: f64,
}

impl ForecastRule {
    pub fn new(kind: ForecastKind, initial: f64) -> Result<Self> {
        let rule = Self { kind, initial };
        rule.validate()?;
        Ok(rule)
    }

    pub fn last_observation() -> Self {
        Self {
            kind: ForecastKind::LastObservation,
            initial: 0.0,
        }
    }

    pub fn running_mean() -> Self {
        Self {
            kind: ForecastKind::RunningMean,
            initial: 0.0,
        }
    }

    pub fn moving_average(window: usize) -> Result<Self> {
        Self::new(ForecastKind::MovingAverage { window }, 0.0)
    }

    pub fn exponential_smoothing(alpha: f64) -> Result<Self> {
        Self::new(ForecastKind::ExponentialSmoothing { alpha }, 0.0)
    }

    pub fn with_initial(mut self, initial: f64) -> Result<Self> {
        self.initial = initial;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial.is_finite() && self.initial >= 0.0) {
            return Err(Error::InvalidForecast(format!(
                "initial forecast {} must be finite and nonnegative",
                self.initial
            )));
        }
        match self.kind {
            ForecastKind::MovingAverage { window: 0 } => Err(Error::InvalidForecast(
                "moving-average window must be at least 1".into(),
            )),
            ForecastKind::ExponentialSmoothing { alpha } if !(alpha > 0.0 && alpha <= 1.0) => Err(
                Error::InvalidForecast(format!("smoothing weight {alpha} must lie in (0, 1]")),
            ),
            _ => Ok(()),
        }
    }

    /// Fresh forecasting state.
    pub fn start(&self) -> Forecaster {
        Forecaster {
            rule: *self,
            current: self.initial,
            seen: 0,
            sum: 0.0,
            window: VecDeque::new(),
        }
    }
}

impl fmt::Display for ForecastRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ForecastKind::LastObservation => write!(f, "last")?,
            ForecastKind::RunningMean => write!(f, "mean")?,
            ForecastKind::MovingAverage { window } => write!(f, "ma:{window}")?,
            ForecastKind::ExponentialSmoothing { alpha } => write!(f, "es:{alpha}")?,
        }
        if self.initial != 0.0 {
            write!(f, "@{}", self.initial)?;
        }
        Ok(())
    }
}

impl FromStr for ForecastRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidForecast(format!("`{s}`: {why}"));
        let (body, initial) = match s.trim().split_once('@') {
            Some((body, init)) => (
                body,
                init.trim()
                    .parse::<f64>()
                    .map_err(|_| bad("unparsable initial forecast"))?,
            ),
            None => (s.trim(), 0.0),
        };
        let (name, arg) = match body.split_once(':') {
            Some((name, arg)) => (name.trim(), Some(arg.trim())),
            None => (body.trim(), None),
        };
        let kind = match (name.to_ascii_lowercase().as_str(), arg) {
            ("last", None) => ForecastKind::LastObservation,
            ("mean", None) => ForecastKind::RunningMean,
            ("ma", Some(w)) => ForecastKind::MovingAverage {
                window: w
                    .parse()
                    .map_err(|_| bad("window must be a positive integer"))?,
            },
            ("es", Some(a)) => ForecastKind::ExponentialSmoothing {
                alpha: a.parse().map_err(|_| bad("unparsable smoothing weight"))?,
            },
            _ => return Err(bad("expected last, mean, ma:<window> or es:<alpha>")),
        };
        Self::new(kind, initial)
    }
}

impl TryFrom<String> for ForecastRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ForecastRule> for String {
    fn from(rule: ForecastRule) -> String {
        rule.to_string()
    }
}

/// Running forecast for one outcome.
#[derive(Debug, Clone)]
pub struct Forecaster {
    rule: ForecastRule,
    current: f64,
    seen: usize,
    sum: f64,
    window: VecDeque<f64>,
}

impl Forecaster {
    pub fn forecast(&self) -> f64 {
        self.current
    }

    pub fn observations(&self) -> usize {
        self.seen
    }

    pub fn observe(&mut self, b: f64) {
        self.seen += 1;
        self.current = match self.rule.kind {
            ForecastKind::LastObservation => b,
            ForecastKind::RunningMean => {
                self.sum += b;
                self.sum / self.seen as f64
            }
            ForecastKind::MovingAverage { window } => {
                self.window.push_back(b);
                if self.window.len() > window {
                    self.window.pop_front();
                }
                self.window.iter().sum::<f64>() / self.window.len() as f64
            }
            ForecastKind::ExponentialSmoothing { alpha } => {
                alpha * b + (1.0 - alpha) * self.current
            }
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(rule: ForecastRule, series: &[f64]) -> f64 {
        let mut f = rule.start();
        for &b in series {
            f.observe(b);
        }
        f.forecast()
    }

    #[test]
    fn parse_round_trip() {
        for text in ["last", "mean", "ma:5", "es:0.5", "es:0.25@2", "ma:1@0.5"] {
            let rule: ForecastRule = text.parse().unwrap();
            assert_eq!(rule.to_string(), text);
        }
        assert_eq!(
            "  MA : 3 ".parse::<ForecastRule>().unwrap().kind,
            ForecastKind::MovingAverage { window: 3 }
        );
    }

    #[test]
    fn parse_rejects() {
        for text in [
            "", "ma", "ma:0", "ma:-1", "es:0", "es:1.5", "es:nan", "last:3", "mean@-1", "x",
        ] {
            assert!(text.parse::<ForecastRule>().is_err(), "{text}");
        }
    }

    #[test]
    fn rules() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(run(ForecastRule::last_observation(), &s), 4.0);
        assert_eq!(run(ForecastRule::running_mean(), &s), 2.5);
        assert_eq!(run(ForecastRule::moving_average(2).unwrap(), &s), 3.5);
        assert_eq!(
            run(ForecastRule::exponential_smoothing(1.0).unwrap(), &s),
            4.0
        );
        assert_eq!(
            run(
                ForecastRule::exponential_smoothing(0.5).unwrap(),
                &[2.0, 2.0]
            ),
            1.5
        );
        assert_eq!(
            run(ForecastRule::running_mean().with_initial(9.0).unwrap(), &[]),
            9.0
        );
    }

    #[test]
    fn smoothing_is_geometric() {
        let c = 3.0;
        let mut f = ForecastRule::exponential_smoothing(0.5).unwrap().start();
        for t in 1..=30 {
            assert!((c - f.forecast() - c * 0.5f64.powi(t - 1)).abs() < 1e-15);
            f.observe(c);
        }
    }

    #[test]
    fn serde_as_string() {
        let rule = ForecastRule::moving_average(4).unwrap();
        let json = serde_json::to_string(&rule).unwrap();
        assert_eq!(json, "\"ma:4\"");
        assert_eq!(serde_json::from_str::<ForecastRule>(&json).unwrap(), rule);
        assert!(serde_json::from_str::<ForecastRule>("\"ma:0\"").is_err());
    }
}
