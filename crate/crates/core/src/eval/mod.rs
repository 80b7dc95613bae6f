//! Evaluation backends: map a profile to per-sequence RD-E curves.
//!
//! * [`CachedEvaluator`] looks rows up in an ingested measurement table.
//! * [`SyntheticEvaluator`] computes curves from a deterministic model.
//! * [`ExternalEvaluator`] launches a command per `(sequence, qp)` and parses
//!   the result file it writes.

mod cached;
mod external;
mod synthetic;

use std::num::NonZeroUsize;

use thiserror::Error;

use crate::ctp::Ctp;
use crate::curves::{CurveError, RdeCurve};
use crate::stats::{CiOutcome, StatsError};

pub use cached::{
    ingest_measurements, ingest_measurements_with, CachedEvaluator, IngestDiagnostic, IngestError, MeasurementKey,
    MeasurementRow, MeasurementTable, MEASUREMENT_HEADER,
};
pub use external::{parse_result_file, ExternalEvaluator, RESULT_HEADER};
pub use synthetic::{BasePoint, Interaction, SyntheticEvaluator, SyntheticModel, ToolEffect};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation request: {0}")]
    InvalidRequest(String),
    #[error("measurement miss: no row for (ctp_id={ctp_id}, sequence={sequence}, qp={qp})")]
    MeasurementMiss { ctp_id: String, sequence: String, qp: i32 },
    #[error("synthetic model has no baseline for (sequence={sequence}, qp={qp})")]
    UnknownOperatingPoint { sequence: String, qp: i32 },
    #[error("synthetic model: {0}")]
    Model(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("command for (sequence={sequence}, qp={qp}) could not be started: {msg}")]
    Spawn { sequence: String, qp: i32, msg: String },
    #[error("command for (sequence={sequence}, qp={qp}) exited with {status}\n--- stdout ---\n{stdout}\n--- stderr ---\n{stderr}")]
    Process {
        sequence: String,
        qp: i32,
        status: String,
        stdout: String,
        stderr: String,
    },
    #[error("result file for (sequence={sequence}, qp={qp}): {msg}\n--- captured output ---\n{output}")]
    ResultParse {
        sequence: String,
        qp: i32,
        msg: String,
        output: String,
    },
    #[error("energy samples for (sequence={sequence}, qp={qp}) failed the confidence-interval test: {outcome:?}")]
    CiFailed {
        sequence: String,
        qp: i32,
        outcome: CiOutcome,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl EvalError {
    pub fn is_measurement_miss(&self) -> bool {
        matches!(self, EvalError::MeasurementMiss { .. })
    }
}

/// One profile evaluated on a set of sequences at a set of QPs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationRequest {
    pub ctp: Ctp,
    pub sequences: Vec<String>,
    pub qps: Vec<i32>,
}

impl EvaluationRequest {
    pub fn new(ctp: Ctp, sequences: Vec<String>, qps: Vec<i32>) -> Result<Self, EvalError> {
        if sequences.is_empty() {
            return Err(EvalError::InvalidRequest("no sequences".into()));
        }
        if qps.is_empty() {
            return Err(EvalError::InvalidRequest("no qps".into()));
        }
        if qps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EvalError::InvalidRequest(format!(
                "qps must be strictly increasing, got {qps:?}"
            )));
        }
        if let Some(s) = sequences.iter().find(|s| s.is_empty()) {
            return Err(EvalError::InvalidRequest(format!("empty sequence name {s:?}")));
        }
        Ok(Self { ctp, sequences, qps })
    }
}

/// How many evaluations a backend tolerates at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concurrency {
    Unbounded,
    Limited(NonZeroUsize),
}

impl Concurrency {
    pub fn serial() -> Self {
        Concurrency::Limited(NonZeroUsize::MIN)
    }
}

/// A backend that measures (or models) profiles.
pub trait Evaluator: Sync {
    /// One curve per requested sequence, in request order, with points at
    /// exactly the requested QPs.
    fn evaluate(&self, request: &EvaluationRequest) -> Result<Vec<RdeCurve>, EvalError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Unbounded
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, request: &EvaluationRequest) -> Result<Vec<RdeCurve>, EvalError> {
        (**self).evaluate(request)
    }

    fn concurrency(&self) -> Concurrency {
        (**self).concurrency()
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(&self, request: &EvaluationRequest) -> Result<Vec<RdeCurve>, EvalError> {
        (**self).evaluate(request)
    }

    fn concurrency(&self) -> Concurrency {
        (**self).concurrency()
    }
}
