//! Greedy design-space exploration of video coding tool profiles.
//!
//! A coding tool profile ([`Ctp`]) switches each tool of a [`ToolRegistry`]
//! on or off. Profiles are scored against an anchor by Bjøntegaard-Delta
//! rate ([`bd`]) and decoding energy, searched greedily ([`dse`]) and
//! filtered to a Pareto front ([`pareto`]). Measurements come from an
//! [`Evaluator`]: a cached CSV table, a synthetic model or an external command.

pub mod bd;
pub mod cli;
pub mod ctp;
pub mod curves;
pub mod dse;
pub mod eval;
pub mod fixtures;
pub mod pareto;
pub mod report;
pub mod stats;

pub use bd::{bd_report, BdReport, QualityAxis};
pub use ctp::{Ctp, ToolRegistry};
pub use curves::{RdeCurve, RdePoint};
pub use dse::{run_dse, DseConfig, DseError, DseResult, Strategy};
pub use eval::{
    CachedEvaluator, EvalError, EvaluationRequest, Evaluator, ExternalEvaluator, SyntheticEvaluator, SyntheticModel,
};
pub use pareto::{pareto_front, select_profiles, ProfilePoint, Selection, SelectionCriteria};
