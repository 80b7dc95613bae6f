//! Orchestrates an external encode/decode/measure command per operating point.
//!
//! The command template is expanded with `{sequence}`, `{qp}`, `{ctp_mask}`
//! and `{out}` and run through `sh -c`. The command must write a result file
//! to `{out}`: a header line `qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples`
//! followed by exactly one data row.

use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::cached::parse_samples;
use super::{Concurrency, EvalError, EvaluationRequest, Evaluator};
use crate::curves::{RdeCurve, RdePoint};
use crate::stats::{ci_check, CiParams, Verdict};

pub const RESULT_HEADER: [&str; 6] = ["qp", "bitrate_kbps", "psnr_db", "vmaf", "energy_j", "energy_samples"];

const PLACEHOLDERS: [&str; 4] = ["{sequence}", "{qp}", "{ctp_mask}", "{out}"];

#[derive(Debug, Clone)]
pub struct ExternalEvaluator {
    template: String,
    max_parallel_jobs: NonZeroUsize,
    ci: CiParams,
    workdir: Option<PathBuf>,
}

impl ExternalEvaluator {
    /// Energy jobs run one at a time unless [`Self::with_parallel_jobs`] says otherwise.
    pub fn new(template: impl Into<String>) -> Result<Self, EvalError> {
        let template = template.into();
        let missing: Vec<&str> = PLACEHOLDERS.iter().copied().filter(|p| !template.contains(p)).collect();
        if !missing.is_empty() {
            return Err(EvalError::InvalidRequest(format!(
                "command template lacks placeholder(s) {}",
                missing.join(" ")
            )));
        }
        Ok(Self {
            template,
            max_parallel_jobs: NonZeroUsize::MIN,
            ci: CiParams::default(),
            workdir: None,
        })
    }

    pub fn with_parallel_jobs(mut self, jobs: NonZeroUsize) -> Self {
        self.max_parallel_jobs = jobs;
        self
    }

    pub fn with_ci(mut self, ci: CiParams) -> Self {
        self.ci = ci;
        self
    }

    /// Directory for result files; a fresh temporary directory otherwise.
    pub fn with_workdir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.workdir = Some(dir.into());
        self
    }

    pub fn expand(&self, sequence: &str, qp: i32, ctp_mask: &str, out: &Path) -> String {
        self.template
            .replace("{sequence}", sequence)
            .replace("{qp}", &qp.to_string())
            .replace("{ctp_mask}", ctp_mask)
            .replace("{out}", &out.display().to_string())
    }

    fn run_job(&self, dir: &Path, sequence: &str, qp: i32, mask: &str) -> Result<RdePoint, EvalError> {
        let out = dir.join(format!("{sequence}_{qp}_{mask}.csv"));
        let cmd = self.expand(sequence, qp, mask, &out);
        let output = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| EvalError::Spawn {
                sequence: sequence.to_string(),
                qp,
                msg: e.to_string(),
            })?;
        let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
        let stderr = String::from_utf8_lossy(&output.stderr).into_owned();
        if !output.status.success() {
            return Err(EvalError::Process {
                sequence: sequence.to_string(),
                qp,
                status: output.status.to_string(),
                stdout,
                stderr,
            });
        }
        let parse_err = |msg: String| EvalError::ResultParse {
            sequence: sequence.to_string(),
            qp,
            msg,
            output: format!("{stdout}{stderr}"),
        };
        let text = fs::read_to_string(&out).map_err(|e| parse_err(format!("{}: {e}", out.display())))?;
        let (point, samples) = parse_result_file(&text).map_err(&parse_err)?;
        if point.qp != qp {
            return Err(parse_err(format!("result reports qp {}, expected {qp}", point.qp)));
        }
        if let Some(samples) = samples {
            let outcome = ci_check(&samples, self.ci.confidence, self.ci.rel_half_width)?;
            if outcome.verdict != Verdict::Pass {
                return Err(EvalError::CiFailed {
                    sequence: sequence.to_string(),
                    qp,
                    outcome,
                });
            }
        }
        Ok(point)
    }
}

/// Parses a one-row result file into the point and its raw energy samples.
pub fn parse_result_file(text: &str) -> Result<(RdePoint, Option<Vec<f64>>), String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or("result file is empty")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != RESULT_HEADER {
        return Err(format!(
            "header must be `{}`, found `{header}`",
            RESULT_HEADER.join(",")
        ));
    }
    let row = lines.next().ok_or("result file has no data row")?;
    if lines.next().is_some() {
        return Err("result file has more than one data row".into());
    }
    let fields: Vec<&str> = row.split(',').map(str::trim).collect();
    if fields.len() != RESULT_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            RESULT_HEADER.len(),
            fields.len()
        ));
    }
    let qp: i32 = fields[0]
        .parse()
        .map_err(|_| format!("qp `{}` is not an integer", fields[0]))?;
    let num = |i: usize| -> Result<f64, String> {
        fields[i]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("{} `{}` is not a number", RESULT_HEADER[i], fields[i]))
    };
    let (bitrate, psnr, vmaf, energy) = (num(1)?, num(2)?, num(3)?, num(4)?);
    if bitrate <= 0.0 || energy <= 0.0 {
        return Err("bitrate_kbps and energy_j must be > 0".into());
    }
    let samples = parse_samples(fields[5])?;
    if let Some(s) = &samples {
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        if ((energy - mean) / mean).abs() > 1e-6 {
            return Err(format!("energy_j {energy} differs from the sample mean {mean}"));
        }
    }
    Ok((RdePoint::new(qp, bitrate, psnr, vmaf, energy), samples))
}

fn safe_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(&self, request: &EvaluationRequest) -> Result<Vec<RdeCurve>, EvalError> {
        if let Some(s) = request.sequences.iter().find(|s| !safe_name(s)) {
            return Err(EvalError::InvalidRequest(format!(
                "sequence name `{s}` may only contain letters, digits, `_`, `-` and `.`"
            )));
        }
        let tmp;
        let dir = match &self.workdir {
            Some(d) => {
                fs::create_dir_all(d).map_err(|e| EvalError::InvalidRequest(format!("{}: {e}", d.display())))?;
                d.as_path()
            }
            None => {
                tmp = tempfile::tempdir().map_err(|e| EvalError::InvalidRequest(e.to_string()))?;
                tmp.path()
            }
        };
        let mask = request.ctp.to_hex();
        let jobs: Vec<(&str, i32)> = request
            .sequences
            .iter()
            .flat_map(|s| request.qps.iter().map(move |&qp| (s.as_str(), qp)))
            .collect();
        let mut points = Vec::with_capacity(jobs.len());
        for chunk in jobs.chunks(self.max_parallel_jobs.get()) {
            let results: Vec<Result<RdePoint, EvalError>> = if chunk.len() == 1 {
                vec![self.run_job(dir, chunk[0].0, chunk[0].1, &mask)]
            } else {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = chunk
                        .iter()
                        .map(|&(s, qp)| {
                            let mask = &mask;
                            scope.spawn(move || self.run_job(dir, s, qp, mask))
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("job thread panicked"))
                        .collect()
                })
            };
            for r in results {
                points.push(r?);
            }
        }
        let per_seq = request.qps.len();
        request
            .sequences
            .iter()
            .zip(points.chunks(per_seq))
            .map(|(seq, pts)| Ok(RdeCurve::new(seq.clone(), mask.clone(), pts.to_vec())?))
            .collect()
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Limited(self.max_parallel_jobs)
    }
}
