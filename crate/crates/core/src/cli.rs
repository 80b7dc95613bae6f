//! The `ctpdse` command line.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 measurement
//! miss, 4 evaluator or process failure, 1 output I/O failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bd::{compare_curve_sets, BdReport, QualityAxis};
use crate::ctp::{Ctp, ToolRegistry};
use crate::curves::DEFAULT_QPS;
use crate::dse::{run_dse, DseConfig, DseError, Strategy, DEFAULT_MAX_ITERATIONS};
use crate::eval::{
    ingest_measurements_with, CachedEvaluator, EvalError, EvaluationRequest, Evaluator, ExternalEvaluator, IngestError,
    MeasurementTable, SyntheticEvaluator, SyntheticModel,
};
use crate::pareto::{pareto_front, select_profiles, ProfilePoint, SelectionCriteria, DEFAULT_LBE_THRESHOLD};
use crate::report::{
    self, fmt_pct, points_csv, report_pairs, selection_text, write_dse_outputs, write_file, write_point_outputs,
    ReportError, RunManifest, POINTS_FILE, SELECTION_FILE,
};
use crate::stats::{CiParams, Verdict, DEFAULT_CONFIDENCE, DEFAULT_REL_HALF_WIDTH};

const FORMATS_HELP: &str = "\
FILE FORMATS

Registry file: one tool per line, `name,category,default(0|1)`; category is one
of Intra, Inter, TransformQuant, InLoopFilter, Other; `#` starts a comment line.

Profiles (CTPs): a hex mask of ceil(N/4) digits whose bit i is registry tool i
(bit 0 = least significant bit of the last digit), or `off:NAME,NAME,...`
listing disabled tools.

Measurement CSV, exact header:
  ctp_id,sequence,qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples
ctp_id is the canonical hex mask; energy_samples is an optional `;`-separated
list of raw joule readings whose mean must equal energy_j (1e-6 relative).

External command template placeholders: {sequence} {qp} {ctp_mask} {out}.
The command writes one result row to {out} with header
  qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples

Result directory (dse): dse_result.json (manifest, config, iteration logs,
evaluated profiles keyed by hex mask, front), manifest.json, summary.txt,
plot_points.csv and plot_front.csv (two columns bdr,bdde), front.csv
(label,ctp_id,bdr,bdde). `pareto --points` accepts a result directory or a
label,ctp_id,bdr,bdde CSV.

Exit codes: 2 configuration error, 3 measurement miss, 4 evaluator/process
failure.";

#[derive(Debug, Parser)]
#[command(
    name = "ctpdse",
    version,
    about = "Greedy design-space exploration of coding tool profiles for decoder energy and rate-distortion efficiency",
    after_long_help = FORMATS_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the greedy search and write a result directory.
    Dse(DseArgs),
    /// BD-rate and BD-energy of test profiles against an anchor.
    Bd(BdArgs),
    /// Pareto front and EE / EBE / LBE selection.
    Pareto(ParetoArgs),
    /// Inspect profiles.
    Ctp(CtpArgs),
    /// Validate a measurement CSV and report confidence-interval verdicts.
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Backend {
    Cached,
    Synthetic,
    External,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Psnr,
    Vmaf,
}

impl From<AxisArg> for QualityAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Psnr => QualityAxis::Psnr,
            AxisArg::Vmaf => QualityAxis::Vmaf,
        }
    }
}

#[derive(Debug, Args)]
struct DseArgs {
    /// ea, e1, ca or c1
    #[arg(long)]
    strategy: Strategy,
    #[arg(long, value_enum, default_value = "vmaf")]
    axis: AxisArg,
    #[arg(long, value_enum)]
    backend: Backend,
    /// Measurement CSV (cached backend).
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// Tool registry file; the built-in 30-tool registry otherwise.
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    /// Seed of the random synthetic model (ignored with --model).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Synthetic model as JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    /// External command template.
    #[arg(long)]
    command: Option<String>,
    #[arg(long, default_value_t = NonZeroUsize::MIN)]
    max_parallel_jobs: NonZeroUsize,
    /// Directory for external result files.
    #[arg(long)]
    workdir: Option<PathBuf>,
    /// Comma-separated sequence names.
    #[arg(long, value_delimiter = ',')]
    sequences: Vec<String>,
    /// Comma-separated QPs.
    #[arg(long, value_delimiter = ',')]
    qps: Vec<i32>,
    /// Anchor profile; the registry defaults otherwise.
    #[arg(long)]
    anchor: Option<String>,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    #[arg(long, default_value_t = DEFAULT_REL_HALF_WIDTH)]
    rel_half_width: f64,
}

#[derive(Debug, Args)]
struct BdArgs {
    /// Anchor profile; the registry defaults otherwise.
    #[arg(long)]
    anchor: Option<String>,
    /// Test profile(s).
    #[arg(long, required = true, num_args = 1..)]
    test: Vec<String>,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Restrict columns to one quality axis.
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    /// Comma-separated sequences; all anchor sequences otherwise.
    #[arg(long, value_delimiter = ',')]
    sequences: Vec<String>,
    /// Also write the table and manifest into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParetoArgs {
    /// Points CSV or dse result directory; repeat to merge.
    #[arg(long, required = true, num_args = 1..)]
    points: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LBE_THRESHOLD)]
    lbe_threshold: f64,
    /// Quality axis for result directories; the run's axis otherwise.
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CtpArgs {
    #[command(subcommand)]
    action: CtpAction,
}

#[derive(Debug, Subcommand)]
enum CtpAction {
    /// Print a profile as hex mask, `off:` list and per-tool table.
    Show {
        /// Hex mask or off: list.
        profile: Option<String>,
        /// Show the registry's default (anchor) profile.
        #[arg(long)]
        default: bool,
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Print the registry in canonical form.
    Registry {
        #[arg(long)]
        registry: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    #[arg(long, default_value_t = DEFAULT_REL_HALF_WIDTH)]
    rel_half_width: f64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn output(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::MeasurementMiss { .. } => 3,
            EvalError::InvalidRequest(_) | EvalError::Model(_) => 2,
            _ => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<DseError> for CliError {
    fn from(e: DseError) -> Self {
        let code = match (e.root(), e.eval_error()) {
            (DseError::Config(_), _) => 2,
            (_, Some(EvalError::MeasurementMiss { .. })) => 3,
            (_, Some(EvalError::InvalidRequest(_) | EvalError::Model(_))) => 2,
            _ => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } => Self::output(e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Dse(a) => cmd_dse(a, stdout, stderr),
        Command::Bd(a) => cmd_bd(a, stdout, stderr),
        Command::Pareto(a) => cmd_pareto(a, stdout),
        Command::Ctp(a) => cmd_ctp(a, stdout),
        Command::Ingest(a) => cmd_ingest(a, stdout, stderr),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn load_registry(path: Option<&Path>) -> Result<ToolRegistry, CliError> {
    match path {
        Some(p) => ToolRegistry::load(p).map_err(|e| CliError::config(e.to_string())),
        None => Ok(ToolRegistry::vvc_default()),
    }
}

fn parse_profile(registry: &ToolRegistry, text: Option<&str>) -> Result<Ctp, CliError> {
    match text {
        Some(t) => registry
            .parse_ctp(t)
            .map_err(|e| CliError::config(format!("profile `{t}`: {e}"))),
        None => Ok(registry.default_ctp()),
    }
}

fn ci_params(confidence: f64, rel_half_width: f64) -> Result<CiParams, CliError> {
    let p = CiParams {
        confidence,
        rel_half_width,
    };
    p.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(p)
}

fn load_table(path: &Path, ci: CiParams, stderr: &mut dyn Write) -> Result<MeasurementTable, CliError> {
    let table = ingest_measurements_with(path, ci)?;
    for d in table.diagnostics() {
        if d.outcome.verdict != Verdict::Pass {
            let _ = writeln!(
                stderr,
                "warning: line {}: (ctp_id={}, sequence={}, qp={}) energy samples {:?}: mean {} half-width {}",
                d.line, d.key.ctp_id, d.key.sequence, d.key.qp, d.outcome.verdict, d.outcome.mean, d.outcome.half_width
            );
        }
    }
    Ok(table)
}

fn cmd_dse(a: DseArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let registry = load_registry(a.registry.as_deref())?;
    let anchor = parse_profile(&registry, a.anchor.as_deref())?;
    let ci = ci_params(a.confidence, a.rel_half_width)?;
    let mut inputs: Vec<(&str, &Path)> = Vec::new();
    if let Some(p) = &a.registry {
        inputs.push(("registry", p));
    }

    let mut echo = json!({
        "strategy": a.strategy.to_string(),
        "axis": QualityAxis::from(a.axis).as_str(),
        "max_iterations": a.max_iter,
        "anchor": anchor.to_hex(),
    });

    let (evaluator, sequences, qps): (Box<dyn Evaluator>, Vec<String>, Vec<i32>) = match a.backend {
        Backend::Cached => {
            let path = a
                .measurements
                .as_deref()
                .ok_or_else(|| CliError::config("--backend cached requires --measurements"))?;
            inputs.push(("measurements", path));
            let table = load_table(path, ci, stderr)?;
            let sequences = if a.sequences.is_empty() {
                table.sequences_for(&anchor.to_hex())
            } else {
                a.sequences.clone()
            };
            if sequences.is_empty() {
                return Err(CliError::config(format!(
                    "no measurements for anchor {} and no --sequences given",
                    anchor.to_hex()
                )));
            }
            let qps = if a.qps.is_empty() {
                table.qps_for(&anchor.to_hex(), &sequences[0])
            } else {
                a.qps.clone()
            };
            echo["backend"] = json!("cached");
            echo["confidence"] = json!(ci.confidence);
            echo["rel_half_width"] = json!(ci.rel_half_width);
            (Box::new(CachedEvaluator::new(table)), sequences, qps)
        }
        Backend::Synthetic => {
            let model = match &a.model {
                Some(p) => {
                    inputs.push(("model", p));
                    let text = fs::read_to_string(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                    serde_json::from_str::<SyntheticModel>(&text)
                        .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
                }
                None => {
                    let seqs: Vec<String> = if a.sequences.is_empty() {
                        vec!["synthetic_a".into(), "synthetic_b".into()]
                    } else {
                        a.sequences.clone()
                    };
                    let refs: Vec<&str> = seqs.iter().map(String::as_str).collect();
                    let qps = if a.qps.is_empty() {
                        DEFAULT_QPS.to_vec()
                    } else {
                        a.qps.clone()
                    };
                    echo["seed"] = json!(a.seed);
                    SyntheticModel::random(registry.len(), a.seed, &refs, &qps)
                }
            };
            let sequences = if a.sequences.is_empty() {
                model.baselines.keys().cloned().collect()
            } else {
                a.sequences.clone()
            };
            let qps = if a.qps.is_empty() {
                model
                    .baselines
                    .values()
                    .next()
                    .map(|t| t.iter().map(|b| b.qp).collect())
                    .unwrap_or_default()
            } else {
                a.qps.clone()
            };
            echo["backend"] = json!("synthetic");
            (Box::new(SyntheticEvaluator::new(model)?), sequences, qps)
        }
        Backend::External => {
            let template = a
                .command
                .clone()
                .ok_or_else(|| CliError::config("--backend external requires --command"))?;
            if a.sequences.is_empty() {
                return Err(CliError::config("--backend external requires --sequences"));
            }
            let qps = if a.qps.is_empty() {
                DEFAULT_QPS.to_vec()
            } else {
                a.qps.clone()
            };
            let mut ev = ExternalEvaluator::new(template.clone())?
                .with_parallel_jobs(a.max_parallel_jobs)
                .with_ci(ci);
            if let Some(w) = &a.workdir {
                ev = ev.with_workdir(w);
            }
            echo["backend"] = json!("external");
            echo["command"] = json!(template);
            echo["max_parallel_jobs"] = json!(a.max_parallel_jobs.get());
            echo["confidence"] = json!(ci.confidence);
            echo["rel_half_width"] = json!(ci.rel_half_width);
            (Box::new(ev), a.sequences.clone(), qps)
        }
    };
    echo["sequences"] = json!(sequences);
    echo["qps"] = json!(qps);

    let config = DseConfig::new(a.strategy, a.axis.into(), sequences, anchor)
        .with_qps(qps)
        .with_max_iterations(a.max_iter);
    config.validate(&registry)?;

    let mut manifest = RunManifest::new("dse", echo, &registry);
    for (role, path) in inputs {
        manifest.add_input(role, path)?;
    }

    let result = match run_dse(&config, &registry, &evaluator) {
        Ok(r) => r,
        Err(e) => {
            if let Some(partial) = e.partial() {
                report::ensure_dir(&a.out)?;
                let doc = json!({
                    "manifest": &manifest,
                    "error": e.to_string(),
                    "logs": &partial.logs,
                    "evaluated": partial.evaluated.iter().map(|(k, v)| (k.to_hex(), v)).collect::<std::collections::BTreeMap<_, _>>(),
                });
                write_file(
                    &a.out.join("partial_result.json"),
                    serde_json::to_string_pretty(&doc).expect("serializes") + "\n",
                )?;
            }
            return Err(e.into());
        }
    };
    write_dse_outputs(&a.out, &manifest, &config, &registry, &result)?;
    let _ = writeln!(
        stdout,
        "{}: {} iteration(s), {:?}, terminal {} ({})",
        config.strategy,
        result.logs.len(),
        result.termination_reason,
        result.terminal_reference,
        report_pairs(result.terminal_report(), Some(config.quality_axis))
    );
    Ok(())
}

fn cmd_bd(a: BdArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let registry = load_registry(a.registry.as_deref())?;
    let anchor = parse_profile(&registry, a.anchor.as_deref())?;
    let tests: Vec<Ctp> = a
        .test
        .iter()
        .map(|t| parse_profile(&registry, Some(t)))
        .collect::<Result<_, _>>()?;
    let table = load_table(&a.measurements, CiParams::default(), stderr)?;
    let sequences = if a.sequences.is_empty() {
        table.sequences_for(&anchor.to_hex())
    } else {
        a.sequences.clone()
    };
    if sequences.is_empty() {
        return Err(CliError::config(format!(
            "no measurements for anchor {}",
            anchor.to_hex()
        )));
    }
    let qps = table.qps_for(&anchor.to_hex(), &sequences[0]);
    let evaluator = CachedEvaluator::new(table);
    let fetch = |ctp: &Ctp| -> Result<_, CliError> {
        let req = EvaluationRequest::new(ctp.clone(), sequences.clone(), qps.clone())?;
        Ok(evaluator.evaluate(&req)?)
    };
    let anchor_curves = fetch(&anchor)?;
    let axis = a.axis.map(QualityAxis::from);
    let width = sequences.iter().map(String::len).max().unwrap_or(4).max(4);

    let mut out = String::new();
    out.push_str(&format!("# anchor {}\n", anchor.to_hex()));
    let mut row = |ctp: &Ctp, seq: &str, r: &BdReport| {
        out.push_str(&format!(
            "{}  {:<width$}  {}\n",
            ctp.to_hex(),
            seq,
            report_pairs(r, axis)
        ));
    };
    for test in &tests {
        let curves = fetch(test)?;
        let (per_seq, mean) = compare_curve_sets(&anchor_curves, &curves).map_err(|e| CliError {
            code: 4,
            message: e.to_string(),
        })?;
        for (seq, r) in &per_seq {
            row(test, seq, r);
        }
        row(test, "MEAN", &mean);
        for w in &mean.warnings {
            let _ = writeln!(stderr, "warning: {w}");
        }
    }
    let _ = write!(stdout, "{out}");
    if let Some(dir) = &a.out {
        report::ensure_dir(dir)?;
        let echo = json!({
            "anchor": anchor.to_hex(),
            "tests": tests.iter().map(Ctp::to_hex).collect::<Vec<_>>(),
            "sequences": sequences,
            "qps": qps,
            "axis": axis.map(QualityAxis::as_str),
        });
        let mut manifest = RunManifest::new("bd", echo, &registry);
        manifest.add_input("measurements", &a.measurements)?;
        if let Some(p) = &a.registry {
            manifest.add_input("registry", p)?;
        }
        manifest.write(dir)?;
        write_file(&dir.join("bd_table.txt"), &out)?;
    }
    Ok(())
}

fn cmd_pareto(a: ParetoArgs, stdout: &mut dyn Write) -> CliResult {
    let registry = load_registry(a.registry.as_deref())?;
    let axis = a.axis.map(QualityAxis::from);
    let mut points: Vec<ProfilePoint> = Vec::new();
    for p in &a.points {
        points.extend(report::load_points(p, &registry, axis)?);
    }
    let criteria = SelectionCriteria {
        lbe_bdr_threshold: a.lbe_threshold,
    };
    let front = pareto_front(&points).map_err(|e| CliError::config(e.to_string()))?;
    let selection = select_profiles(&points, criteria).map_err(|e| CliError::config(e.to_string()))?;
    let text = selection_text(&selection, &front, a.lbe_threshold);
    let _ = write!(stdout, "{text}");
    if let Some(dir) = &a.out {
        report::ensure_dir(dir)?;
        let echo = json!({
            "lbe_threshold": a.lbe_threshold,
            "axis": axis.map(QualityAxis::as_str),
            "point_sets": a.points.len(),
        });
        let mut manifest = RunManifest::new("pareto", echo, &registry);
        for (i, p) in a.points.iter().enumerate() {
            let file = if p.is_dir() {
                p.join(report::RESULT_FILE)
            } else {
                p.clone()
            };
            manifest.add_input(&format!("points_{i}"), &file)?;
        }
        manifest.write(dir)?;
        write_point_outputs(dir, &points, &front)?;
        write_file(&dir.join(POINTS_FILE), points_csv(&points))?;
        write_file(&dir.join(SELECTION_FILE), &text)?;
    }
    Ok(())
}

fn cmd_ctp(a: CtpArgs, stdout: &mut dyn Write) -> CliResult {
    match a.action {
        CtpAction::Show {
            profile,
            default,
            registry,
        } => {
            let registry = load_registry(registry.as_deref())?;
            let ctp = match (profile, default) {
                (Some(_), true) => return Err(CliError::config("give either a profile or --default, not both")),
                (Some(p), false) => parse_profile(&registry, Some(&p))?,
                (None, _) => registry.default_ctp(),
            };
            let mut s = format!("{}\n", ctp.to_hex());
            s.push_str(&registry.describe_off(&ctp).expect("same registry"));
            s.push('\n');
            for (i, t) in registry.tools().iter().enumerate() {
                s.push_str(&format!(
                    "{:>2}  {:<8} {:<15} {}\n",
                    i,
                    t.name,
                    t.category,
                    if ctp.is_enabled(i) { "on" } else { "off" }
                ));
            }
            let _ = write!(stdout, "{s}");
        }
        CtpAction::Registry { registry } => {
            let registry = load_registry(registry.as_deref())?;
            let _ = write!(stdout, "{}", registry.to_canonical_string());
        }
    }
    Ok(())
}

fn cmd_ingest(a: IngestArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let ci = ci_params(a.confidence, a.rel_half_width)?;
    let table = load_table(&a.measurements, ci, stderr)?;
    let mut s = format!("{} rows\n", table.len());
    for id in table.ctp_ids() {
        for seq in table.sequences_for(&id) {
            let qps = table.qps_for(&id, &seq);
            let status = match table.curve(&id, &seq) {
                Ok(_) => "ok".to_string(),
                Err(e) => format!("invalid: {e}"),
            };
            s.push_str(&format!("{id}  {seq}  qps {qps:?}  {status}\n"));
        }
    }
    let verdicts = table.diagnostics();
    let passed = verdicts.iter().filter(|d| d.outcome.verdict == Verdict::Pass).count();
    s.push_str(&format!(
        "energy samples: {} series, {} pass (confidence {}, relative half-width {})\n",
        verdicts.len(),
        passed,
        ci.confidence,
        fmt_pct(100.0 * ci.rel_half_width)
    ));
    let _ = write!(stdout, "{s}");
    Ok(())
}
