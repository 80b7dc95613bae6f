//! Iterative greedy exploration of coding tool profiles.
//!
//! Each iteration takes a reference profile and evaluates every single-tool
//! flip of it. Every candidate is compared against the fixed anchor, scored,
//! and marked as improved when its score is strictly below the reference's.
//! The next reference is the current one with either all improving tools
//! flipped ([`FlipPolicy::All`]) or only the best one ([`FlipPolicy::One`],
//! ties to the lowest tool index). The search stops as soon as the next
//! reference equals any earlier reference, or at the iteration guard.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bd::{compare_curve_sets, BdError, BdReport, QualityAxis};
use crate::ctp::{Ctp, ToolRegistry};
use crate::curves::{RdeCurve, DEFAULT_QPS, MIN_POINTS};
use crate::eval::{Concurrency, EvalError, EvaluationRequest, Evaluator};

pub const DEFAULT_MAX_ITERATIONS: usize = 64;

/// Largest |score| accepted for the anchor compared with itself.
const ANCHOR_SELF_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Objective {
    /// BDDE on the chosen quality axis.
    Energy,
    /// BDDE + BDR on the chosen quality axis.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FlipPolicy {
    All,
    One,
}

/// The four named (objective, flip policy) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    EA,
    E1,
    CA,
    C1,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::EA, Strategy::E1, Strategy::CA, Strategy::C1];

    pub fn new(objective: Objective, flip_policy: FlipPolicy) -> Self {
        match (objective, flip_policy) {
            (Objective::Energy, FlipPolicy::All) => Strategy::EA,
            (Objective::Energy, FlipPolicy::One) => Strategy::E1,
            (Objective::Combined, FlipPolicy::All) => Strategy::CA,
            (Objective::Combined, FlipPolicy::One) => Strategy::C1,
        }
    }

    pub fn objective(self) -> Objective {
        match self {
            Strategy::EA | Strategy::E1 => Objective::Energy,
            Strategy::CA | Strategy::C1 => Objective::Combined,
        }
    }

    pub fn flip_policy(self) -> FlipPolicy {
        match self {
            Strategy::EA | Strategy::CA => FlipPolicy::All,
            Strategy::E1 | Strategy::C1 => FlipPolicy::One,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::EA => "EA",
            Strategy::E1 => "E1",
            Strategy::CA => "CA",
            Strategy::C1 => "C1",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ea" => Ok(Strategy::EA),
            "e1" => Ok(Strategy::E1),
            "ca" => Ok(Strategy::CA),
            "c1" => Ok(Strategy::C1),
            _ => Err(format!("unknown strategy `{s}` (expected ea, e1, ca or c1)")),
        }
    }
}

impl Serialize for Strategy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Scalar minimized by the search.
pub fn score(report: &BdReport, objective: Objective, axis: QualityAxis) -> f64 {
    match objective {
        Objective::Energy => report.bdde(axis),
        Objective::Combined => report.bdde(axis) + report.bdr(axis),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DseConfig {
    pub strategy: Strategy,
    pub objective: Objective,
    pub flip_policy: FlipPolicy,
    pub quality_axis: QualityAxis,
    pub sequences: Vec<String>,
    pub qps: Vec<i32>,
    pub max_iterations: usize,
    pub anchor: Ctp,
}

impl DseConfig {
    /// Config with the default QP set and iteration guard.
    pub fn new(strategy: Strategy, quality_axis: QualityAxis, sequences: Vec<String>, anchor: Ctp) -> Self {
        Self {
            strategy,
            objective: strategy.objective(),
            flip_policy: strategy.flip_policy(),
            quality_axis,
            sequences,
            qps: DEFAULT_QPS.to_vec(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            anchor,
        }
    }

    pub fn with_qps(mut self, qps: Vec<i32>) -> Self {
        self.qps = qps;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn validate(&self, registry: &ToolRegistry) -> Result<(), DseError> {
        let bad = |m: String| Err(DseError::Config(m));
        if Strategy::new(self.objective, self.flip_policy) != self.strategy {
            return bad(format!(
                "strategy {} disagrees with objective {:?} / flip policy {:?}",
                self.strategy, self.objective, self.flip_policy
            ));
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be >= 1".into());
        }
        if self.sequences.is_empty() {
            return bad("no sequences configured".into());
        }
        if self.qps.len() < MIN_POINTS {
            return bad(format!(
                "{} qps configured, at least {MIN_POINTS} required",
                self.qps.len()
            ));
        }
        if self.qps.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("qps must be strictly increasing, got {:?}", self.qps));
        }
        if registry.serialize_ctp(&self.anchor).is_err() {
            return bad("anchor profile does not belong to the tool registry".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub tool: usize,
    pub tool_name: String,
    pub ctp: Ctp,
    pub report: BdReport,
    pub score: f64,
    pub improved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationLog {
    pub index: usize,
    pub reference_ctp: Ctp,
    pub reference_score: f64,
    /// One entry per registry tool, in tool order.
    pub candidates: Vec<Candidate>,
    pub flipped_tools: Vec<usize>,
    pub next_reference: Ctp,
    /// Score of `next_reference`; filled in by [`run_dse`].
    pub next_score: Option<f64>,
    /// `next_score > reference_score`; possible only under the All policy.
    pub regressed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TerminationReason {
    RepeatedReference,
    MaxIterations,
}

#[derive(Debug, Clone, Serialize)]
pub struct DseResult {
    pub logs: Vec<IterationLog>,
    #[serde(serialize_with = "serialize_evaluated")]
    pub evaluated: BTreeMap<Ctp, BdReport>,
    pub terminal_reference: Ctp,
    pub termination_reason: TerminationReason,
}

impl DseResult {
    pub fn terminal_report(&self) -> &BdReport {
        &self.evaluated[&self.terminal_reference]
    }

    /// Sequence of reference scores, starting at the anchor.
    pub fn reference_scores(&self) -> Vec<f64> {
        self.logs.iter().map(|l| l.reference_score).collect()
    }
}

fn serialize_evaluated<S: Serializer>(map: &BTreeMap<Ctp, BdReport>, s: S) -> Result<S::Ok, S::Error> {
    let by_hex: BTreeMap<String, &BdReport> = map.iter().map(|(k, v)| (k.to_hex(), v)).collect();
    by_hex.serialize(s)
}

/// Everything computed before a failure.
#[derive(Debug, Clone, Default)]
pub struct PartialDse {
    pub logs: Vec<IterationLog>,
    pub evaluated: BTreeMap<Ctp, BdReport>,
}

#[derive(Debug, Error)]
pub enum DseError {
    #[error("invalid DSE configuration: {0}")]
    Config(String),
    #[error("evaluating profile {ctp}: {source}")]
    Evaluation {
        ctp: String,
        #[source]
        source: Box<EvalError>,
    },
    #[error("BD computation for profile {ctp}: {source}")]
    Bd {
        ctp: String,
        #[source]
        source: BdError,
    },
    #[error("evaluator returned {got} curves for profile {ctp}, expected one per sequence at the requested qps")]
    ShapeMismatch { ctp: String, got: usize },
    #[error("anchor compared with itself scores {0}, expected 0")]
    AnchorSelfScore(f64),
    #[error("{source} (stopped after {} iterations)", partial.logs.len())]
    Interrupted {
        #[source]
        source: Box<DseError>,
        partial: Box<PartialDse>,
    },
}

impl DseError {
    /// The underlying cause, looking through [`DseError::Interrupted`].
    pub fn root(&self) -> &DseError {
        match self {
            DseError::Interrupted { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn partial(&self) -> Option<&PartialDse> {
        match self {
            DseError::Interrupted { partial, .. } => Some(partial),
            _ => None,
        }
    }

    pub fn eval_error(&self) -> Option<&EvalError> {
        match self.root() {
            DseError::Evaluation { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Evaluated {
    report: BdReport,
    score: f64,
}

/// Memo of evaluated profiles plus the anchor curves all BD values refer to.
pub struct EvalCache {
    anchor_curves: Vec<RdeCurve>,
    entries: HashMap<Ctp, Evaluated>,
    evaluator_calls: usize,
}

impl EvalCache {
    /// Evaluates the anchor and checks that it scores zero against itself.
    pub fn new<E: Evaluator + ?Sized>(config: &DseConfig, evaluator: &E) -> Result<Self, DseError> {
        let anchor_curves = fetch_curves(config, evaluator, &config.anchor)?;
        let mut cache = Self {
            anchor_curves,
            entries: HashMap::new(),
            evaluator_calls: 1,
        };
        let own = cache.anchor_curves.clone();
        let entry = cache.assess(config, &config.anchor, &own)?;
        if entry.score.abs() > ANCHOR_SELF_TOLERANCE {
            return Err(DseError::AnchorSelfScore(entry.score));
        }
        cache.entries.insert(config.anchor.clone(), entry);
        Ok(cache)
    }

    pub fn anchor_curves(&self) -> &[RdeCurve] {
        &self.anchor_curves
    }

    pub fn contains(&self, ctp: &Ctp) -> bool {
        self.entries.contains_key(ctp)
    }

    pub fn report(&self, ctp: &Ctp) -> Option<&BdReport> {
        self.entries.get(ctp).map(|e| &e.report)
    }

    pub fn score(&self, ctp: &Ctp) -> Option<f64> {
        self.entries.get(ctp).map(|e| e.score)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of evaluator requests issued, anchor included.
    pub fn evaluator_calls(&self) -> usize {
        self.evaluator_calls
    }

    pub fn reports(&self) -> BTreeMap<Ctp, BdReport> {
        self.entries
            .iter()
            .map(|(k, v)| (k.clone(), v.report.clone()))
            .collect()
    }

    fn assess(&self, config: &DseConfig, ctp: &Ctp, curves: &[RdeCurve]) -> Result<Evaluated, DseError> {
        let (_, mean) = compare_curve_sets(&self.anchor_curves, curves).map_err(|source| DseError::Bd {
            ctp: ctp.to_hex(),
            source,
        })?;
        let score = score(&mean, config.objective, config.quality_axis);
        Ok(Evaluated { report: mean, score })
    }

    /// Evaluates every profile in `ctps` not yet cached, honouring the
    /// evaluator's concurrency limit. Results enter the cache in input order.
    pub fn ensure<E: Evaluator + ?Sized>(
        &mut self,
        config: &DseConfig,
        evaluator: &E,
        ctps: &[Ctp],
    ) -> Result<(), DseError> {
        let mut todo: Vec<&Ctp> = Vec::new();
        for c in ctps {
            if !self.entries.contains_key(c) && !todo.contains(&c) {
                todo.push(c);
            }
        }
        if todo.is_empty() {
            return Ok(());
        }
        let this = &*self;
        let work = |c: &&Ctp| -> Result<Evaluated, DseError> {
            let curves = fetch_curves(config, evaluator, c)?;
            this.assess(config, c, &curves)
        };
        let results: Vec<Result<Evaluated, DseError>> = match evaluator.concurrency() {
            Concurrency::Limited(n) if n.get() == 1 => todo.iter().map(work).collect(),
            Concurrency::Limited(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.get())
                .build()
                .map(|pool| pool.install(|| todo.par_iter().map(work).collect()))
                .unwrap_or_else(|_| todo.iter().map(work).collect()),
            Concurrency::Unbounded => todo.par_iter().map(work).collect(),
        };
        self.evaluator_calls += todo.len();
        for (c, r) in todo.into_iter().zip(results) {
            let entry = r?;
            self.entries.insert(c.clone(), entry);
        }
        Ok(())
    }
}

fn fetch_curves<E: Evaluator + ?Sized>(
    config: &DseConfig,
    evaluator: &E,
    ctp: &Ctp,
) -> Result<Vec<RdeCurve>, DseError> {
    let wrap = |source| DseError::Evaluation {
        ctp: ctp.to_hex(),
        source: Box::new(source),
    };
    let request = EvaluationRequest::new(ctp.clone(), config.sequences.clone(), config.qps.clone()).map_err(wrap)?;
    let curves = evaluator.evaluate(&request).map_err(wrap)?;
    let shape_ok = curves.len() == config.sequences.len()
        && curves
            .iter()
            .zip(&config.sequences)
            .all(|(c, s)| c.sequence() == s && c.qps() == config.qps);
    if !shape_ok {
        return Err(DseError::ShapeMismatch {
            ctp: ctp.to_hex(),
            got: curves.len(),
        });
    }
    Ok(curves)
}

/// One greedy step from `reference`, which must already be in `cache`.
pub fn run_iteration<E: Evaluator + ?Sized>(
    index: usize,
    reference: &Ctp,
    config: &DseConfig,
    registry: &ToolRegistry,
    evaluator: &E,
    cache: &mut EvalCache,
) -> Result<IterationLog, DseError> {
    cache.ensure(config, evaluator, std::slice::from_ref(reference))?;
    let reference_score = cache.score(reference).expect("reference evaluated");
    let flips: Vec<Ctp> = (0..registry.len())
        .map(|t| registry.flip_tool(reference, t))
        .collect::<Result<_, _>>()
        .map_err(|e| DseError::Config(e.to_string()))?;
    cache.ensure(config, evaluator, &flips)?;

    let candidates: Vec<Candidate> = flips
        .into_iter()
        .enumerate()
        .map(|(tool, ctp)| {
            let score = cache.score(&ctp).expect("candidate evaluated");
            Candidate {
                tool,
                tool_name: registry.tool(tool).expect("in range").name.clone(),
                report: cache.report(&ctp).expect("candidate evaluated").clone(),
                score,
                improved: score < reference_score,
                ctp,
            }
        })
        .collect();

    let flipped_tools: Vec<usize> = match config.flip_policy {
        FlipPolicy::All => candidates.iter().filter(|c| c.improved).map(|c| c.tool).collect(),
        FlipPolicy::One => candidates
            .iter()
            .filter(|c| c.improved)
            // Strict `<` keeps the first (lowest index) of equal scores.
            .fold(None::<&Candidate>, |best, c| match best {
                Some(b) if b.score <= c.score => Some(b),
                _ => Some(c),
            })
            .map(|c| vec![c.tool])
            .unwrap_or_default(),
    };

    let mut next_reference = reference.clone();
    for &t in &flipped_tools {
        next_reference = next_reference.flip(t).map_err(|e| DseError::Config(e.to_string()))?;
    }

    Ok(IterationLog {
        index,
        reference_ctp: reference.clone(),
        reference_score,
        candidates,
        flipped_tools,
        next_reference,
        next_score: None,
        regressed: false,
    })
}

/// Runs the search from `config.anchor` to a repeated reference or the guard.
pub fn run_dse<E: Evaluator + ?Sized>(
    config: &DseConfig,
    registry: &ToolRegistry,
    evaluator: &E,
) -> Result<DseResult, DseError> {
    config.validate(registry)?;
    let mut cache = EvalCache::new(config, evaluator)?;
    let mut logs: Vec<IterationLog> = Vec::new();
    let mut visited: Vec<Ctp> = Vec::new();
    let mut reference = config.anchor.clone();

    let interrupted = |source: DseError, logs: &[IterationLog], cache: &EvalCache| DseError::Interrupted {
        source: Box::new(source),
        partial: Box::new(PartialDse {
            logs: logs.to_vec(),
            evaluated: cache.reports(),
        }),
    };

    loop {
        visited.push(reference.clone());
        let mut log = match run_iteration(logs.len() + 1, &reference, config, registry, evaluator, &mut cache) {
            Ok(l) => l,
            Err(e) => return Err(interrupted(e, &logs, &cache)),
        };
        // Keeps every profile named in the logs present in `evaluated`.
        if let Err(e) = cache.ensure(config, evaluator, std::slice::from_ref(&log.next_reference)) {
            return Err(interrupted(e, &logs, &cache));
        }
        let next_score = cache.score(&log.next_reference).expect("next reference evaluated");
        log.next_score = Some(next_score);
        log.regressed = next_score > log.reference_score;
        let next = log.next_reference.clone();
        logs.push(log);

        let reason = if visited.contains(&next) {
            Some(TerminationReason::RepeatedReference)
        } else if logs.len() >= config.max_iterations {
            Some(TerminationReason::MaxIterations)
        } else {
            None
        };
        if let Some(termination_reason) = reason {
            return Ok(DseResult {
                logs,
                evaluated: cache.reports(),
                terminal_reference: next,
                termination_reason,
            });
        }
        reference = next;
    }
}
