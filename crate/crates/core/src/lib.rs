//! Optimal verbal contracts under wage theft.
//!
//! An employer promises output-contingent wages, may withhold part of them
//! after the work is done, and risks an inspection penalty. This crate
//! computes the optimal contract and effort, checks the closed-form
//! characterization against brute-force enumeration, simulates the repeated
//! game in which workers forecast theft, and runs parameter sweeps.

pub mod characterization;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod repeated;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Contract, CostSpec, IdealTheft, Instance, MarketParams, PenaltySpec};
pub use solver::{solve, SolveResult};
