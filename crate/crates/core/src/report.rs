//! Output files: run manifest, result document, point tables, summaries.
//!
//! Nothing here reads the clock or the environment, so equal inputs give
//! byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bd::{BdReport, QualityAxis};
use crate::ctp::{hex_digest, ToolRegistry};
use crate::dse::{DseConfig, DseResult};
use crate::pareto::{pareto_front, write_plot_csv, ParetoError, ProfilePoint, Selection};

pub const RESULT_FILE: &str = "dse_result.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLOT_POINTS_FILE: &str = "plot_points.csv";
pub const PLOT_FRONT_FILE: &str = "plot_front.csv";
pub const FRONT_FILE: &str = "front.csv";
pub const POINTS_FILE: &str = "points.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SELECTION_FILE: &str = "selection.txt";
pub const RESULT_FORMAT: &str = "ctp-dse.result/1";

pub const POINTS_HEADER: &str = "label,ctp_id,bdr,bdde";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error(transparent)]
    Pareto(#[from] ParetoError),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ReportError {
    ReportError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

/// Percent with two decimals and ASCII minus; negative zero prints as `0.00`.
pub fn fmt_pct(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    /// Input role to SHA-256 of the file contents.
    pub inputs: BTreeMap<String, String>,
    pub registry_digest: String,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, registry: &ToolRegistry) -> Self {
        Self {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            registry_digest: registry.digest(),
        }
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<(), ReportError> {
        let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
        self.inputs.insert(role.to_string(), hex_digest(&bytes));
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn digest(&self) -> String {
        hex_digest(self.to_json().as_bytes())
    }

    pub fn write(&self, dir: &Path) -> Result<(), ReportError> {
        write_file(&dir.join(MANIFEST_FILE), self.to_json())
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), ReportError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct DseDocument<'a> {
    format: &'static str,
    manifest: &'a RunManifest,
    config: &'a DseConfig,
    result: &'a DseResult,
    front: &'a [ProfilePoint],
}

/// Profile points of every evaluated profile on one axis.
pub fn result_points(result: &DseResult, axis: QualityAxis) -> Vec<ProfilePoint> {
    result
        .evaluated
        .iter()
        .map(|(ctp, r)| ProfilePoint::from_report(ctp.clone(), r, axis))
        .collect()
}

pub fn dse_document_json(manifest: &RunManifest, config: &DseConfig, result: &DseResult) -> String {
    let points = result_points(result, config.quality_axis);
    let front = pareto_front(&points).unwrap_or_default();
    let doc = DseDocument {
        format: RESULT_FORMAT,
        manifest,
        config,
        result,
        front: &front,
    };
    serde_json::to_string_pretty(&doc).expect("result serializes") + "\n"
}

/// Writes the result document, manifest, plot data and summary into `dir`.
pub fn write_dse_outputs(
    dir: &Path,
    manifest: &RunManifest,
    config: &DseConfig,
    registry: &ToolRegistry,
    result: &DseResult,
) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    manifest.write(dir)?;
    write_file(&dir.join(RESULT_FILE), dse_document_json(manifest, config, result))?;
    let points = result_points(result, config.quality_axis);
    let front = pareto_front(&points)?;
    write_point_outputs(dir, &points, &front)?;
    write_file(&dir.join(SUMMARY_FILE), dse_summary(manifest, config, registry, result))
}

/// Plot CSVs plus the labeled front table.
pub fn write_point_outputs(dir: &Path, points: &[ProfilePoint], front: &[ProfilePoint]) -> Result<(), ReportError> {
    let mut buf = Vec::new();
    write_plot_csv(points, &mut buf).expect("write to vec");
    write_file(&dir.join(PLOT_POINTS_FILE), &buf)?;
    buf.clear();
    write_plot_csv(front, &mut buf).expect("write to vec");
    write_file(&dir.join(PLOT_FRONT_FILE), &buf)?;
    write_file(&dir.join(FRONT_FILE), points_csv(front))
}

pub fn dse_summary(manifest: &RunManifest, config: &DseConfig, registry: &ToolRegistry, result: &DseResult) -> String {
    let axis = config.quality_axis;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "strategy {} (objective {:?}, flip policy {:?}), quality axis {}",
        config.strategy,
        config.objective,
        config.flip_policy,
        axis.as_str()
    );
    let _ = writeln!(s, "manifest sha256 {}", manifest.digest());
    let _ = writeln!(s, "sequences {}  qps {:?}", config.sequences.join(","), config.qps);
    let _ = writeln!(s, "anchor {}", config.anchor);
    let _ = writeln!(s);
    let _ = writeln!(s, "iter  reference  score     next_score  flipped");
    for log in &result.logs {
        let flipped: Vec<&str> = log
            .flipped_tools
            .iter()
            .map(|&t| registry.tool(t).map_or("?", |d| d.name.as_str()))
            .collect();
        let _ = writeln!(
            s,
            "{:<5} {}   {:<9} {:<11} {}{}",
            log.index,
            log.reference_ctp,
            fmt_pct(log.reference_score),
            log.next_score.map_or("-".to_string(), fmt_pct),
            if flipped.is_empty() {
                "-".to_string()
            } else {
                flipped.join(",")
            },
            if log.regressed { "  (regressed)" } else { "" }
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "terminated: {:?} after {} iteration(s); {} profiles evaluated",
        result.termination_reason,
        result.logs.len(),
        result.evaluated.len()
    );
    let t = result.terminal_report();
    let _ = writeln!(
        s,
        "terminal {}  {}",
        result.terminal_reference,
        registry.describe_off(&result.terminal_reference).unwrap_or_default()
    );
    let _ = writeln!(s, "  {}", report_pairs(t, None));
    s
}

/// `VMAF 27.00 / -45.31  PSNR 27.13 / -44.50` style BDR / BDDE pairs.
pub fn report_pairs(r: &BdReport, axis: Option<QualityAxis>) -> String {
    let pair = |a: QualityAxis| {
        format!(
            "{} {} / {}",
            a.as_str().to_uppercase(),
            fmt_pct(r.bdr(a)),
            fmt_pct(r.bdde(a))
        )
    };
    match axis {
        Some(a) => pair(a),
        None => format!("{}  {}", pair(QualityAxis::Vmaf), pair(QualityAxis::Psnr)),
    }
}

/// Labeled point table: `label,ctp_id,bdr,bdde`.
pub fn points_csv(points: &[ProfilePoint]) -> String {
    let mut s = String::from(POINTS_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            p.label.as_deref().unwrap_or(""),
            p.ctp.as_ref().map(|c| c.to_hex()).unwrap_or_default(),
            p.bdr,
            p.bdde
        );
    }
    s
}

pub fn parse_points_csv(text: &str, registry: &ToolRegistry, path: &Path) -> Result<Vec<ProfilePoint>, ReportError> {
    let fmt = |line: usize, msg: String| ReportError::Format {
        path: path.display().to_string(),
        msg: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == POINTS_HEADER => {}
        _ => return Err(fmt(1, format!("header must be `{POINTS_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(fmt(line_no, format!("expected 4 fields, found {}", f.len())));
        }
        let ctp = if f[1].is_empty() {
            None
        } else {
            Some(registry.parse_ctp(f[1]).map_err(|e| fmt(line_no, e.to_string()))?)
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| fmt(line_no, format!("`{s}` is not a number")))
        };
        let label = (!f[0].is_empty()).then(|| f[0].to_string());
        out.push(ProfilePoint::new(ctp, num(f[2])?, num(f[3])?, label));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct DocConfigIn {
    quality_axis: QualityAxis,
}

#[derive(Deserialize)]
struct DocResultIn {
    evaluated: BTreeMap<String, BdReport>,
}

#[derive(Deserialize)]
struct DocIn {
    format: String,
    config: DocConfigIn,
    result: DocResultIn,
}

/// Points of a result document; `axis` overrides the run's quality axis.
pub fn load_result_points(
    path: &Path,
    registry: &ToolRegistry,
    axis: Option<QualityAxis>,
) -> Result<Vec<ProfilePoint>, ReportError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let bad = |msg: String| ReportError::Format {
        path: path.display().to_string(),
        msg,
    };
    let doc: DocIn = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if doc.format != RESULT_FORMAT {
        return Err(bad(format!("unsupported format `{}`", doc.format)));
    }
    let axis = axis.unwrap_or(doc.config.quality_axis);
    doc.result
        .evaluated
        .iter()
        .map(|(hex, r)| {
            let ctp = registry.parse_ctp(hex).map_err(|e| bad(e.to_string()))?;
            Ok(ProfilePoint::from_report(ctp, r, axis))
        })
        .collect()
}

/// Points from a labeled CSV file or a result directory.
pub fn load_points(
    path: &Path,
    registry: &ToolRegistry,
    axis: Option<QualityAxis>,
) -> Result<Vec<ProfilePoint>, ReportError> {
    if path.is_dir() {
        return load_result_points(&path.join(RESULT_FILE), registry, axis);
    }
    if path.extension().is_some_and(|e| e == "json") {
        return load_result_points(path, registry, axis);
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_points_csv(&text, registry, path)
}

pub fn selection_text(selection: &Selection, front: &[ProfilePoint], threshold: f64) -> String {
    let line = |p: &ProfilePoint| {
        let name = match (&p.label, &p.ctp) {
            (Some(l), Some(c)) => format!("{l} ({c})"),
            _ => p.name(),
        };
        format!("{}  bdr {}  bdde {}", name, fmt_pct(p.bdr), fmt_pct(p.bdde))
    };
    let mut s = String::new();
    let _ = writeln!(s, "front ({} points):", front.len());
    for p in front {
        let _ = writeln!(s, "  {}", line(p));
    }
    let _ = writeln!(s, "EE   {}", line(&selection.ee));
    let _ = writeln!(s, "EBE  {}", line(&selection.ebe));
    let _ = writeln!(s, "LBE (bdr < {}%):", fmt_pct(threshold));
    for (i, p) in selection.lbe.iter().enumerate() {
        let _ = writeln!(s, "  LBE {}  {}", i + 1, line(p));
    }
    s
}

pub fn ensure_dir(dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}
