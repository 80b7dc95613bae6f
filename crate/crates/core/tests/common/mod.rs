#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ctp_dse::bd::{compare_curve_sets, BdReport};
use ctp_dse::ctp::{ToolCategory, ToolDescriptor};
use ctp_dse::curves::DEFAULT_QPS;
use ctp_dse::eval::SyntheticModel;
use ctp_dse::{Ctp, EvaluationRequest, Evaluator, SyntheticEvaluator, ToolRegistry};

/// Registry of `n` default-enabled tools named `T0..`.
pub fn small_registry(n: usize) -> ToolRegistry {
    ToolRegistry::new(
        (0..n)
            .map(|i| ToolDescriptor::new(format!("T{i}"), ToolCategory::Other, true))
            .collect(),
    )
    .unwrap()
}

/// Every profile of the registry, in integer order of the mask.
pub fn all_ctps(registry: &ToolRegistry) -> Vec<Ctp> {
    let n = registry.len();
    (0u64..1 << n)
        .map(|v| {
            let bits: Vec<bool> = (0..n).map(|i| v >> i & 1 == 1).collect();
            registry.ctp_from_bits(&bits).unwrap()
        })
        .collect()
}

pub fn seqs(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// BD report of `test` against `anchor`, computed straight from the evaluator.
pub fn direct_report<E: Evaluator>(ev: &E, anchor: &Ctp, test: &Ctp, sequences: &[String], qps: &[i32]) -> BdReport {
    let a = ev
        .evaluate(&EvaluationRequest::new(anchor.clone(), sequences.to_vec(), qps.to_vec()).unwrap())
        .unwrap();
    let t = ev
        .evaluate(&EvaluationRequest::new(test.clone(), sequences.to_vec(), qps.to_vec()).unwrap())
        .unwrap();
    compare_curve_sets(&a, &t).unwrap().1
}

/// Measurement CSV holding every given profile under a synthetic model.
pub fn measurement_csv(model: &SyntheticModel, ctps: &[Ctp]) -> String {
    let ev = SyntheticEvaluator::new(model.clone()).unwrap();
    let sequences: Vec<String> = model.baselines.keys().cloned().collect();
    let qps: Vec<i32> = model.baselines.values().next().unwrap().iter().map(|b| b.qp).collect();
    let mut s = String::from("ctp_id,sequence,qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples\n");
    for ctp in ctps {
        let curves = ev
            .evaluate(&EvaluationRequest::new(ctp.clone(), sequences.clone(), qps.clone()).unwrap())
            .unwrap();
        for c in &curves {
            for p in c.points() {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},",
                    ctp.to_hex(),
                    c.sequence(),
                    p.qp,
                    p.bitrate,
                    p.psnr,
                    p.vmaf,
                    p.energy
                )
                .unwrap();
            }
        }
    }
    s
}

pub fn random_model(tools: usize, seed: u64) -> SyntheticModel {
    SyntheticModel::random(tools, seed, &["seq_a", "seq_b"], &DEFAULT_QPS)
}

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ctpdse").chain(args.iter().copied());
    let code = ctp_dse::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// File name to contents for every regular file in `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}
