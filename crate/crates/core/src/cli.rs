//! Command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiments::{self, SweepSpec};
use crate::model::{CostSpec, Instance, MarketParams, PenaltySpec};
use crate::numeric::fmt_num;
use crate::oracle::{self, GridSpec};
use crate::repeated::{self, FixedStrategy, ForecastRule};
use crate::report::Report;
use crate::solver::{self, SolveResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "wagetheft",
    version,
    about = "Optimal verbal contracts under wage theft"
)]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal contract.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Write the full result as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cross-check the solver against brute-force enumeration.
    OracleCheck {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Wage grid points per axis.
        #[arg(long, default_value_t = 400)]
        grid: usize,
        /// Write the report as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate the repeated game under a fixed strategy.
    Simulate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        strategy: StrategyArgs,
        /// last, mean, ma:<window> or es:<alpha>, optionally `@<initial>`.
        #[arg(long, default_value = "es:0.5")]
        rule: String,
        #[arg(long, default_value_t = 200)]
        periods: usize,
        /// Sample outcomes and inspections with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the trace as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a parameter sweep and write CSV.
    Sweep {
        /// Sweep specification (JSON).
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Named context, e.g. sigma-a or k-b.
        #[arg(long)]
        preset: Option<String>,
        /// CSV destination; overrides the spec's `output`. Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also verify the qualitative trends along the sweep axis.
        #[arg(long)]
        check: bool,
    },
    /// Audit the optimal fixed strategy and honest-twin dominance.
    DominanceAudit {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the audit as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Instance flags. Precedence: built-in default, then `--config`, then flags.
#[derive(Debug, Clone, Default, Args)]
pub struct InstanceArgs {
    /// JSON file with any of P, yH, yL, u, gamma, k, q, sigma, p, theft_cap.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub price: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub yh: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub yl: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Upper bound on theft per outcome; 0 forbids theft.
    #[arg(long, allow_negative_numbers = true)]
    pub theft_cap: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StrategyArgs {
    /// Promised high wage; the four strategy flags default to the one-shot optimum.
    #[arg(long, allow_negative_numbers = true)]
    pub wh: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub wl: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub bh: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub bl: Option<f64>,
}

/// `P=10, yH=50, yL=30, u=200, k=0.1, q=3, sigma=1, p=1.1, gamma=0.2`.
pub fn default_instance() -> Instance {
    Instance::new(
        MarketParams {
            price: 10.0,
            y_high: 50.0,
            y_low: 30.0,
            reservation_utility: 200.0,
            inspection_rate: 0.2,
        },
        CostSpec {
            coefficient: 0.1,
            growth: 3.0,
        },
        PenaltySpec {
            sigma: 1.0,
            growth: 1.1,
        },
    )
}

/// `u=1, C(a)=a/(1-a), P=10, yH=5, yL=3, gamma=1, sigma=1, p=2`.
pub fn illustrative_instance() -> Instance {
    Instance::new(
        MarketParams {
            price: 10.0,
            y_high: 5.0,
            y_low: 3.0,
            reservation_utility: 1.0,
            inspection_rate: 1.0,
        },
        CostSpec {
            coefficient: 1.0,
            growth: 1.0,
        },
        PenaltySpec {
            sigma: 1.0,
            growth: 2.0,
        },
    )
}

const INSTANCE_KEYS: [&str; 10] = [
    "P",
    "yH",
    "yL",
    "u",
    "gamma",
    "k",
    "q",
    "sigma",
    "p",
    "theft_cap",
];

/// Overlays a partial JSON object of instance parameters onto `base`.
pub fn instance_from_json(base: Instance, text: &str) -> Result<Instance> {
    let bad = |msg: String| Error::InvalidConfig(msg);
    let overlay: Map<String, Value> = match serde_json::from_str(text) {
        Ok(Value::Object(m)) => m,
        Ok(_) => return Err(bad("instance config must be a JSON object".into())),
        Err(e) => return Err(bad(e.to_string())),
    };
    let mut merged = match serde_json::to_value(base) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("instances serialize to objects"),
    };
    for (key, value) in overlay {
        if !INSTANCE_KEYS.contains(&key.as_str()) {
            return Err(bad(format!("unknown key `{key}`")));
        }
        if !value.is_number() && !(key == "theft_cap" && value.is_null()) {
            return Err(bad(format!("`{key}` must be a number")));
        }
        merged.insert(key, value);
    }
    let instance: Instance =
        serde_json::from_value(Value::Object(merged)).map_err(|e| bad(e.to_string()))?;
    instance.validate()?;
    Ok(instance)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl InstanceArgs {
    pub fn resolve(&self, base: Instance) -> Result<Instance> {
        let mut i = match &self.config {
            Some(path) => instance_from_json(base, &read(path)?)?,
            None => base,
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut i.market.price, self.price);
        set(&mut i.market.y_high, self.yh);
        set(&mut i.market.y_low, self.yl);
        set(&mut i.market.reservation_utility, self.u);
        set(&mut i.market.inspection_rate, self.gamma);
        set(&mut i.penalty.sigma, self.sigma);
        set(&mut i.penalty.growth, self.p);
        set(&mut i.cost.coefficient, self.k);
        set(&mut i.cost.growth, self.q);
        if self.theft_cap.is_some() {
            i.theft_cap = self.theft_cap;
        }
        i.validate()?;
        Ok(i)
    }
}

/// What `solve --output` writes: enough to re-check the answer later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: Instance,
    pub result: SolveResult,
}

impl SolveReport {
    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        r.instance.validate()?;
        Ok(r)
    }

    /// Re-runs the result invariants against the stored instance.
    pub fn recheck(&self) -> Report {
        solver::check_result(&self.instance, &self.result)
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
    bytes.push(b'\n');
    bytes
}

fn line(out: &mut dyn Write, key: &str, value: f64) -> io::Result<()> {
    writeln!(out, "{key:<9} {}", fmt_num(value))
}

fn print_instance(out: &mut dyn Write, i: &Instance) -> io::Result<()> {
    let m = &i.market;
    write!(
        out,
        "instance  P={} yH={} yL={} u={} gamma={} k={} q={} sigma={} p={}",
        fmt_num(m.price),
        fmt_num(m.y_high),
        fmt_num(m.y_low),
        fmt_num(m.reservation_utility),
        fmt_num(m.inspection_rate),
        fmt_num(i.cost.coefficient),
        fmt_num(i.cost.growth),
        fmt_num(i.penalty.sigma),
        fmt_num(i.penalty.growth),
    )?;
    if let Some(cap) = i.theft_cap {
        write!(out, " theft_cap={}", fmt_num(cap))?;
    }
    writeln!(out)
}

enum Outcome {
    Done,
    ChecksFailed,
}

fn print_report(out: &mut dyn Write, report: &Report) -> io::Result<Outcome> {
    write!(out, "{report}")?;
    let failed = report.failures().count();
    if failed == 0 {
        writeln!(out, "all {} checks passed", report.checks.len())?;
        Ok(Outcome::Done)
    } else {
        writeln!(out, "{failed} of {} checks failed", report.checks.len())?;
        Ok(Outcome::ChecksFailed)
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::Solve { instance, output } => {
            let instance = instance.resolve(default_instance())?;
            let result = solver::solve(&instance)?;
            let c = &result.contract;
            print_instance(out, &instance)?;
            line(out, "a*", c.effort)?;
            line(out, "wH", c.w_high)?;
            line(out, "wL", c.w_low)?;
            line(out, "bH", c.b_high)?;
            line(out, "bL", c.b_low)?;
            line(out, "beta", result.beta.value())?;
            line(out, "profit", result.profit)?;
            line(out, "worker_u", result.worker_u)?;
            if let Some(path) = output {
                write(&path, &to_json(&SolveReport { instance, result }))?;
            }
            Ok(Outcome::Done)
        }
        Command::OracleCheck {
            instance,
            grid,
            output,
        } => {
            let instance = instance.resolve(illustrative_instance())?;
            let report = oracle::verify_instance(&instance, &GridSpec::new(1.0, grid))?;
            print_instance(out, &instance)?;
            if let Some(path) = output {
                write(&path, &to_json(&report))?;
            }
            Ok(print_report(out, &report)?)
        }
        Command::Simulate {
            instance,
            strategy,
            rule,
            periods,
            seed,
            output,
        } => {
            let instance = instance.resolve(default_instance())?;
            let rule: ForecastRule = rule.parse()?;
            let base = solver::solve(&instance)?.contract;
            let strategy = FixedStrategy::new(
                strategy.wh.unwrap_or(base.w_high),
                strategy.wl.unwrap_or(base.w_low),
                strategy.bh.unwrap_or(base.b_high),
                strategy.bl.unwrap_or(base.b_low),
            )?;
            let trace = match seed {
                Some(s) => repeated::simulate_realized(&instance, &strategy, &rule, periods, s)?,
                None => repeated::simulate(&instance, &strategy, &rule, periods)?,
            };
            print_instance(out, &instance)?;
            writeln!(
                out,
                "strategy  wH={} wL={} bH={} bL={} rule={rule}",
                fmt_num(strategy.w_high),
                fmt_num(strategy.w_low),
                fmt_num(strategy.b_high),
                fmt_num(strategy.b_low),
            )?;
            match trace.periods_to_converge {
                Some(t) => writeln!(out, "converged at period {t}")?,
                None => writeln!(out, "not converged after {periods} periods")?,
            }
            let employed = trace.records.iter().filter(|r| r.employed).count();
            writeln!(out, "employed  {employed} of {periods} periods")?;
            line(out, "tail_mean", trace.tail_mean_profit(50))?;
            line(out, "limit", trace.limit.profit)?;
            if let Some(path) = output {
                let mut buf = Vec::new();
                trace.write_csv(&mut buf)?;
                write(&path, &buf)?;
            }
            Ok(Outcome::Done)
        }
        Command::Sweep {
            config,
            preset,
            output,
            check,
        } => {
            let spec = match (&config, &preset) {
                (Some(path), _) => SweepSpec::from_json(&read(path)?)?,
                (None, Some(name)) => SweepSpec::preset(name)?,
                (None, None) => SweepSpec::table1(),
            };
            log::info!("sweeping {} cells", spec.len());
            let rows = experiments::run_sweep(&spec)?;
            let errors = rows.iter().filter(|r| r.is_error()).count();
            match output.or(spec.output.clone()) {
                Some(path) => {
                    let mut buf = Vec::new();
                    experiments::write_csv(&rows, &mut buf)?;
                    write(&path, &buf)?;
                    writeln!(
                        err,
                        "wrote {} rows ({errors} errors) to {}",
                        rows.len(),
                        path.display()
                    )?;
                }
                None => experiments::write_csv(&rows, &mut *out)?,
            }
            if !check {
                return Ok(Outcome::Done);
            }
            let axis = spec.resolved_axis().ok_or_else(|| {
                Error::InvalidSweep(
                    "no sweep axis: set `axis` or vary exactly one parameter".into(),
                )
            })?;
            Ok(print_report(
                err,
                &experiments::qualitative_checks(&rows, axis)?,
            )?)
        }
        Command::DominanceAudit {
            instance,
            samples,
            seed,
            output,
        } => {
            let instance = instance.resolve(default_instance())?;
            let audit = repeated::audit_fixed_strategies(&instance, samples, seed)?;
            let s = audit.optimum.strategy;
            print_instance(out, &instance)?;
            writeln!(
                out,
                "optimal   wH={} wL={} a={}",
                fmt_num(s.w_high),
                fmt_num(s.w_low),
                fmt_num(audit.optimum.effort)
            )?;
            line(out, "profit", audit.optimum.profit)?;
            writeln!(
                out,
                "sampled   {} strategies, {} accepted",
                audit.samples, audit.accepted
            )?;
            if let Some(path) = output {
                write(&path, &to_json(&audit))?;
            }
            Ok(print_report(out, &audit.to_report())?)
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
            let _ = if code == EXIT_OK {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match dispatch(cli.command, out, err) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::ChecksFailed) => EXIT_CHECK_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
