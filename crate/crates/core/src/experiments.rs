//! Parameter sweeps over the numerical-study grid.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostSpec, Instance, MarketParams, PenaltySpec};
use crate::report::{Check, Report};
use crate::solver;

/// Grid values of the numerical study.
pub mod table1 {
    pub const PRICE: [f64; 5] = [10.0, 15.0, 20.0, 30.0, 40.0];
    pub const Y_LOW: [f64; 2] = [30.0, 40.0];
    pub const Y_HIGH: [f64; 1] = [50.0];
    pub const SIGMA: [f64; 10] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 5.0];
    pub const P: [f64; 5] = [1.1, 1.2, 1.3, 1.4, 1.5];
    pub const GAMMA: [f64; 6] = [0.1, 0.2, 0.3, 0.4, 0.5, 1.0];
    pub const K: [f64; 3] = [0.1, 0.5, 1.0];
    pub const Q: [f64; 5] = [0.1, 0.5, 1.0, 3.0, 5.0];
    pub const U: [f64; 9] = [10.0, 25.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0];
}

/// A sweepable parameter, in CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "P")]
    Price,
    #[serde(rename = "yL")]
    YLow,
    #[serde(rename = "yH")]
    YHigh,
    #[serde(rename = "sigma")]
    Sigma,
    #[serde(rename = "p")]
    PenaltyGrowth,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "k")]
    CostCoefficient,
    #[serde(rename = "q")]
    CostGrowth,
    #[serde(rename = "u")]
    ReservationUtility,
}

impl Param {
    pub const ALL: [Param; 9] = [
        Param::Price,
        Param::YLow,
        Param::YHigh,
        Param::Sigma,
        Param::PenaltyGrowth,
        Param::Gamma,
        Param::CostCoefficient,
        Param::CostGrowth,
        Param::ReservationUtility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Price => "P",
            Param::YLow => "yL",
            Param::YHigh => "yH",
            Param::Sigma => "sigma",
            Param::PenaltyGrowth => "p",
            Param::Gamma => "gamma",
            Param::CostCoefficient => "k",
            Param::CostGrowth => "q",
            Param::ReservationUtility => "u",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    fn admissible(self, v: f64) -> bool {
        v.is_finite()
            && match self {
                Param::Price | Param::Sigma | Param::CostCoefficient | Param::CostGrowth => v > 0.0,
                Param::YLow | Param::YHigh | Param::ReservationUtility => v >= 0.0,
                Param::PenaltyGrowth => v > 1.0,
                Param::Gamma => (0.0..=1.0).contains(&v),
            }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidSweep(format!("unknown parameter `{s}`")))
    }
}

/// A cell drawn uniformly from the numerical-study grid.
pub fn random_cell<R: Rng>(rng: &mut R) -> Cell {
    let mut pick = |v: &[f64]| *v.choose(rng).expect("non-empty list");
    Cell([
        pick(&table1::PRICE),
        pick(&table1::Y_LOW),
        pick(&table1::Y_HIGH),
        pick(&table1::SIGMA),
        pick(&table1::P),
        pick(&table1::GAMMA),
        pick(&table1::K),
        pick(&table1::Q),
        pick(&table1::U),
    ])
}

/// One point of the parameter grid, values in [`Param::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell(pub [f64; 9]);

impl Cell {
    pub fn get(&self, p: Param) -> f64 {
        self.0[p.index()]
    }

    pub fn instance(&self) -> Result<Instance> {
        let v = |p| self.get(p);
        Ok(Instance::new(
            MarketParams::new(
                v(Param::Price),
                v(Param::YHigh),
                v(Param::YLow),
                v(Param::ReservationUtility),
                v(Param::Gamma),
            )?,
            CostSpec::new(v(Param::CostCoefficient), v(Param::CostGrowth))?,
            PenaltySpec::new(v(Param::Sigma), v(Param::PenaltyGrowth))?,
        ))
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

macro_rules! table_default {
    ($($f:ident => $c:ident),*) => {
        $(fn $f() -> Vec<f64> { table1::$c.to_vec() })*
    };
}
table_default!(d_price => PRICE, d_y_low => Y_LOW, d_y_high => Y_HIGH, d_sigma => SIGMA,
    d_p => P, d_gamma => GAMMA, d_k => K, d_q => Q, d_u => U);

/// Value lists per parameter; the sweep is their cartesian product.
///
/// In JSON each key takes a number or a list and falls back to the full
/// numerical-study list when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "P", default = "d_price", deserialize_with = "one_or_many")]
    pub price: Vec<f64>,
    #[serde(rename = "yL", default = "d_y_low", deserialize_with = "one_or_many")]
    pub y_low: Vec<f64>,
    #[serde(rename = "yH", default = "d_y_high", deserialize_with = "one_or_many")]
    pub y_high: Vec<f64>,
    #[serde(default = "d_sigma", deserialize_with = "one_or_many")]
    pub sigma: Vec<f64>,
    #[serde(default = "d_p", deserialize_with = "one_or_many")]
    pub p: Vec<f64>,
    #[serde(default = "d_gamma", deserialize_with = "one_or_many")]
    pub gamma: Vec<f64>,
    #[serde(default = "d_k", deserialize_with = "one_or_many")]
    pub k: Vec<f64>,
    #[serde(default = "d_q", deserialize_with = "one_or_many")]
    pub q: Vec<f64>,
    #[serde(default = "d_u", deserialize_with = "one_or_many")]
    pub u: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self::table1()
    }
}

/// Named contexts of the published sweeps: `<axis>-a` and `<axis>-b`.
pub const PRESETS: [&str; 10] = [
    "sigma-a", "sigma-b", "gamma-a", "gamma-b", "u-a", "u-b", "k-a", "k-b", "q-a", "q-b",
];

impl SweepSpec {
    /// Every cell of the numerical-study grid.
    pub fn table1() -> Self {
        Self {
            price: d_price(),
            y_low: d_y_low(),
            y_high: d_y_high(),
            sigma: d_sigma(),
            p: d_p(),
            gamma: d_gamma(),
            k: d_k(),
            q: d_q(),
            u: d_u(),
            axis: None,
            output: None,
        }
    }

    /// A single cell.
    pub fn single(cell: Cell) -> Self {
        let mut s = Self::table1();
        for p in Param::ALL {
            *s.values_mut(p) = vec![cell.get(p)];
        }
        s
    }

    /// One of [`PRESETS`]. Every preset fixes `P=10, yH=50, yL=30` and
    /// varies its axis over the full study list.
    pub fn preset(name: &str) -> Result<Self> {
        let (axis, fixed): (Param, &[(Param, f64)]) = match name {
            "sigma-a" | "sigma-b" => (
                Param::Sigma,
                &[
                    (Param::ReservationUtility, 200.0),
                    (Param::CostCoefficient, 0.1),
                    (Param::CostGrowth, 3.0),
                    (Param::PenaltyGrowth, 1.1),
                ],
            ),
            "gamma-a" | "gamma-b" => (
                Param::Gamma,
                &[
                    (Param::ReservationUtility, 200.0),
                    (Param::CostCoefficient, 0.1),
                    (Param::CostGrowth, 3.0),
                    (Param::PenaltyGrowth, 1.5),
                ],
            ),
            "u-a" | "u-b" => (
                Param::ReservationUtility,
                &[
                    (Param::Sigma, 1.0),
                    (Param::CostCoefficient, 0.1),
                    (Param::CostGrowth, 1.0),
                    (Param::PenaltyGrowth, 1.5),
                ],
            ),
            "k-a" | "k-b" => (
                Param::CostCoefficient,
                &[
                    (Param::Sigma, 1.0),
                    (Param::Gamma, 0.1),
                    (Param::ReservationUtility, 200.0),
                    (Param::PenaltyGrowth, 1.5),
                ],
            ),
            "q-a" | "q-b" => (
                Param::CostGrowth,
                &[
                    (Param::Sigma, 1.0),
                    (Param::Gamma, 0.1),
                    (Param::ReservationUtility, 200.0),
                    (Param::PenaltyGrowth, 1.5),
                ],
            ),
            _ => {
                return Err(Error::InvalidSweep(format!(
                    "unknown preset `{name}`; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        let second = name.ends_with("-b");
        let variant = match axis {
            Param::Sigma => (Param::Gamma, if second { 0.5 } else { 0.2 }),
            Param::Gamma => (Param::Sigma, if second { 1.0 } else { 0.5 }),
            Param::ReservationUtility => (Param::Gamma, if second { 0.3 } else { 0.1 }),
            Param::CostCoefficient => (Param::CostGrowth, if second { 3.0 } else { 1.0 }),
            _ => (Param::CostCoefficient, if second { 1.0 } else { 0.1 }),
        };
        let mut s = Self::table1();
        *s.values_mut(Param::Price) = vec![10.0];
        *s.values_mut(Param::YLow) = vec![30.0];
        for &(p, v) in fixed.iter().chain([&variant]) {
            *s.values_mut(p) = vec![v];
        }
        s.axis = Some(axis);
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidSweep(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn values(&self, p: Param) -> &[f64] {
        match p {
            Param::Price => &self.price,
            Param::YLow => &self.y_low,
            Param::YHigh => &self.y_high,
            Param::Sigma => &self.sigma,
            Param::PenaltyGrowth => &self.p,
            Param::Gamma => &self.gamma,
            Param::CostCoefficient => &self.k,
            Param::CostGrowth => &self.q,
            Param::ReservationUtility => &self.u,
        }
    }

    pub fn values_mut(&mut self, p: Param) -> &mut Vec<f64> {
        match p {
            Param::Price => &mut self.price,
            Param::YLow => &mut self.y_low,
            Param::YHigh => &mut self.y_high,
            Param::Sigma => &mut self.sigma,
            Param::PenaltyGrowth => &mut self.p,
            Param::Gamma => &mut self.gamma,
            Param::CostCoefficient => &mut self.k,
            Param::CostGrowth => &mut self.q,
            Param::ReservationUtility => &mut self.u,
        }
    }

    /// Nonempty lists of individually admissible values. Combinations
    /// (e.g. `yH <= yL`) are left to per-cell validation.
    pub fn validate(&self) -> Result<()> {
        for p in Param::ALL {
            let values = self.values(p);
            if values.is_empty() {
                return Err(Error::InvalidSweep(format!("`{p}` has no values")));
            }
            if let Some(v) = values.iter().find(|v| !p.admissible(**v)) {
                return Err(Error::InvalidSweep(format!("`{p}` = {v} is out of range")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        Param::ALL.iter().map(|p| self.values(*p).len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The sweep axis: the declared one, else the only parameter with more
    /// than one value.
    pub fn resolved_axis(&self) -> Option<Param> {
        self.axis.or_else(|| {
            let mut varying = Param::ALL.into_iter().filter(|p| self.values(*p).len() > 1);
            match (varying.next(), varying.next()) {
                (Some(p), None) => Some(p),
                _ => None,
            }
        })
    }

    /// Cells in lexicographic order of `(P, yL, yH, sigma, p, gamma, k, q, u)`.
    pub fn cells(&self) -> Vec<Cell> {
        let sorted: Vec<Vec<f64>> = Param::ALL
            .iter()
            .map(|p| {
                let mut v = self.values(*p).to_vec();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        let mut cells = Vec::with_capacity(self.len());
        let mut idx = [0usize; 9];
        if sorted.iter().any(|v| v.is_empty()) {
            return cells;
        }
        loop {
            cells.push(Cell(std::array::from_fn(|d| sorted[d][idx[d]])));
            let mut d = 9;
            loop {
                if d == 0 {
                    return cells;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < sorted[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
}

/// One solved cell. Solution columns are empty on error rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "P")]
    pub price: f64,
    #[serde(rename = "yL")]
    pub y_low: f64,
    #[serde(rename = "yH")]
    pub y_high: f64,
    pub sigma: f64,
    pub p: f64,
    pub gamma: f64,
    pub k: f64,
    pub q: f64,
    pub u: f64,
    pub beta: Option<f64>,
    pub a_star: Option<f64>,
    #[serde(rename = "wH")]
    pub w_high: Option<f64>,
    #[serde(rename = "wL")]
    pub w_low: Option<f64>,
    #[serde(rename = "bH")]
    pub b_high: Option<f64>,
    #[serde(rename = "bL")]
    pub b_low: Option<f64>,
    #[serde(rename = "effective_wH")]
    pub effective_high: Option<f64>,
    #[serde(rename = "effective_wL")]
    pub effective_low: Option<f64>,
    pub profit: Option<f64>,
    pub worker_utility: Option<f64>,
    #[serde(rename = "theft_share_H")]
    pub theft_share_high: Option<f64>,
    #[serde(rename = "theft_share_L")]
    pub theft_share_low: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn solve(cell: Cell) -> Self {
        let mut row = SweepRow {
            price: cell.get(Param::Price),
            y_low: cell.get(Param::YLow),
            y_high: cell.get(Param::YHigh),
            sigma: cell.get(Param::Sigma),
            p: cell.get(Param::PenaltyGrowth),
            gamma: cell.get(Param::Gamma),
            k: cell.get(Param::CostCoefficient),
            q: cell.get(Param::CostGrowth),
            u: cell.get(Param::ReservationUtility),
            beta: None,
            a_star: None,
            w_high: None,
            w_low: None,
            b_high: None,
            b_low: None,
            effective_high: None,
            effective_low: None,
            profit: None,
            worker_utility: None,
            theft_share_high: None,
            theft_share_low: None,
            error: None,
        };
        match cell.instance().and_then(|i| solver::solve(&i)) {
            Ok(r) => {
                let c = r.contract;
                let share = |b: f64, w: f64| (w > 0.0).then(|| b / w);
                row.beta = Some(r.beta.value());
                row.a_star = Some(c.effort);
                row.w_high = Some(c.w_high);
                row.w_low = Some(c.w_low);
                row.b_high = Some(c.b_high);
                row.b_low = Some(c.b_low);
                row.effective_high = Some(c.effective_high());
                row.effective_low = Some(c.effective_low());
                row.profit = Some(r.profit);
                row.worker_utility = Some(r.worker_u);
                row.theft_share_high = share(c.b_high, c.w_high);
                row.theft_share_low = share(c.b_low, c.w_low);
            }
            Err(e) => row.error = Some(e.code()),
        }
        row
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Price => self.price,
            Param::YLow => self.y_low,
            Param::YHigh => self.y_high,
            Param::Sigma => self.sigma,
            Param::PenaltyGrowth => self.p,
            Param::Gamma => self.gamma,
            Param::CostCoefficient => self.k,
            Param::CostGrowth => self.q,
            Param::ReservationUtility => self.u,
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// Solves every cell in parallel; rows come back in [`SweepSpec::cells`] order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec.cells().into_par_iter().map(SweepRow::solve).collect())
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Slack allowed on flat stretches of a monotone trend.
pub const TREND_SLACK: f64 = 1e-9;

/// Monotone trends expected along `axis`, checked within each group of rows
/// that agree on every other parameter.
///
/// | axis  | trend |
/// |-------|-------|
/// | sigma | bH non-increasing; bH at the top falls below 1% of bH at the bottom when the axis spans a factor of 20 |
/// | gamma | bH non-increasing |
/// | u     | wH and wL non-decreasing |
/// | k     | wH non-decreasing, a* non-increasing |
/// | q     | a* non-increasing |
pub fn qualitative_checks(rows: &[SweepRow], axis: Param) -> Result<Report> {
    type Pick = fn(&SweepRow) -> Option<f64>;
    let trends: &[(&str, Pick, bool)] = match axis {
        Param::Sigma | Param::Gamma => &[("bH non-increasing", |r| r.b_high, false)],
        Param::ReservationUtility => &[
            ("wH non-decreasing", |r| r.w_high, true),
            ("wL non-decreasing", |r| r.w_low, true),
        ],
        Param::CostCoefficient => &[
            ("wH non-decreasing", |r| r.w_high, true),
            ("a* non-increasing", |r| r.a_star, false),
        ],
        Param::CostGrowth => &[("a* non-increasing", |r| r.a_star, false)],
        other => {
            return Err(Error::InvalidSweep(format!(
                "no qualitative trends are defined along `{other}`"
            )))
        }
    };

    let solved: Vec<&SweepRow> = rows.iter().filter(|r| !r.is_error()).collect();
    let mut groups: Vec<Vec<&SweepRow>> = Vec::new();
    let mut index: HashMap<[u64; 9], usize> = HashMap::new();
    for r in &solved {
        let key = std::array::from_fn(|d| {
            let p = Param::ALL[d];
            if p == axis {
                0
            } else {
                r.get(p).to_bits()
            }
        });
        let slot = *index.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(r);
    }
    for g in &mut groups {
        g.sort_by(|a, b| a.get(axis).total_cmp(&b.get(axis)));
    }

    let mut report = Report::default();
    let failed = rows.len() - solved.len();
    report.push(Check::new("every cell solved", failed == 0, failed as f64));
    for &(name, pick, increasing) in trends {
        let mut worst: f64 = 0.0;
        for g in &groups {
            for w in g.windows(2) {
                let (Some(x), Some(y)) = (pick(w[0]), pick(w[1])) else {
                    continue;
                };
                let drop = if increasing { x - y } else { y - x };
                worst = worst.max(drop);
            }
        }
        report.push(Check::within(
            format!("{name} in {axis}"),
            worst,
            TREND_SLACK,
        ));
    }
    if axis == Param::Sigma {
        let mut worst: f64 = 0.0;
        let mut applies = false;
        for g in &groups {
            let (first, last) = (g[0], g[g.len() - 1]);
            if last.sigma < 20.0 * first.sigma {
                continue;
            }
            if let (Some(lo), Some(hi)) = (first.b_high, last.b_high) {
                applies = true;
                if lo > 0.0 {
                    worst = worst.max(hi / lo);
                }
            }
        }
        if applies {
            report.push(Check::new(
                "theft vanishes as sigma grows",
                worst < 1e-2,
                worst,
            ));
        }
    }
    Ok(report)
}
