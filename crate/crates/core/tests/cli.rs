mod common;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use common::*;
use ctp_dse::curves::DEFAULT_QPS;
use ctp_dse::eval::{SyntheticModel, ToolEffect};

const HEADER: &str = "ctp_id,sequence,qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples\n";

/// Rows for one profile on one sequence with rate and energy scaled.
fn rows(ctp: &str, seq: &str, rate_scale: f64, energy_scale: f64) -> String {
    let mut s = String::new();
    for (i, qp) in DEFAULT_QPS.iter().enumerate() {
        let k = i as f64;
        writeln!(
            s,
            "{ctp},{seq},{qp},{},{},{},{},",
            8000.0 * 0.55f64.powf(k) * rate_scale,
            40.0 - 2.1 * k,
            92.0 - 8.0 * k,
            40.0 * 0.87f64.powf(k) * energy_scale
        )
        .unwrap();
    }
    s
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bd_anchor_against_itself_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = format!("{HEADER}{}", rows("3FFFFFFF", "BQTerrace", 1.0, 1.0));
    let m = write(tmp.path(), "m.csv", &csv);
    let (code, out, err) = run_cli(&["bd", "--measurements", &m, "--test", "3FFFFFFF"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("BQTerrace  VMAF 0.00 / 0.00  PSNR 0.00 / 0.00"), "{out}");
    assert!(out.contains("MEAN"), "{out}");
}

#[test]
fn bd_reports_two_decimal_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = format!(
        "{HEADER}{}{}",
        rows("3FFFFFFF", "BQTerrace", 1.0, 1.0),
        rows("3419DC68", "BQTerrace", 1.27, 0.5469)
    );
    let m = write(tmp.path(), "m.csv", &csv);
    let (code, out, err) = run_cli(&["bd", "--measurements", &m, "--test", "3419DC68"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("VMAF 27.00 / -45.31  PSNR 27.00 / -45.31"), "{out}");

    let (code, out, _) = run_cli(&["bd", "--measurements", &m, "--test", "3419DC68", "--axis", "psnr"]);
    assert_eq!(code, 0);
    assert!(out.contains("PSNR 27.00 / -45.31"), "{out}");
    assert!(!out.contains("VMAF"), "{out}");
}

#[test]
fn bd_missing_profile_is_a_measurement_miss() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = format!("{HEADER}{}", rows("3FFFFFFF", "BQTerrace", 1.0, 1.0));
    let m = write(tmp.path(), "m.csv", &csv);
    let (code, _, err) = run_cli(&["bd", "--measurements", &m, "--test", "off:ALF"]);
    assert_eq!(code, 3);
    assert!(err.contains("ctp_id=3FDFFFFF"), "{err}");
}

fn dse_cached_fixture(dir: &Path, drop_row: Option<&str>) -> (String, String) {
    let reg = small_registry(3);
    let reg_path = dir.join("tools.txt");
    reg.save(&reg_path).unwrap();
    let mut model = SyntheticModel::neutral(3, &["seq_a", "seq_b"], &DEFAULT_QPS);
    model.tools[1] = ToolEffect::energy(1.10);
    let csv: String = measurement_csv(&model, &all_ctps(&reg))
        .lines()
        .filter(|l| drop_row.is_none_or(|d| !l.starts_with(d)))
        .map(|l| format!("{l}\n"))
        .collect();
    let m = write(dir, "m.csv", &csv);
    (m, reg_path.to_str().unwrap().to_string())
}

#[test]
fn dse_unique_improver_takes_two_iterations() {
    let tmp = tempfile::tempdir().unwrap();
    let (m, reg) = dse_cached_fixture(tmp.path(), None);
    let out = tmp.path().join("run");
    let (code, stdout, err) = run_cli(&[
        "dse",
        "--strategy",
        "ea",
        "--backend",
        "cached",
        "--measurements",
        &m,
        "--registry",
        &reg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("2 iteration(s)"), "{stdout}");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("dse_result.json")).unwrap()).unwrap();
    let logs = doc["result"]["logs"].as_array().unwrap();
    assert_eq!(logs.len(), 2);
    assert_eq!(logs[0]["flipped_tools"], serde_json::json!([1]));
    assert_eq!(doc["result"]["terminal_reference"], "5");
    for f in [
        "manifest.json",
        "summary.txt",
        "plot_points.csv",
        "plot_front.csv",
        "front.csv",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn dse_missing_row_exits_3_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let (m, reg) = dse_cached_fixture(tmp.path(), Some("3,seq_b,32,"));
    let out = tmp.path().join("run");
    let (code, _, err) = run_cli(&[
        "dse",
        "--strategy",
        "e1",
        "--backend",
        "cached",
        "--measurements",
        &m,
        "--registry",
        &reg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("ctp_id=3, sequence=seq_b, qp=32"), "{err}");
    assert!(out.join("partial_result.json").is_file());
}

#[test]
fn dse_result_directory_feeds_pareto() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let (code, _, err) = run_cli(&[
        "dse",
        "--strategy",
        "c1",
        "--backend",
        "synthetic",
        "--seed",
        "4",
        "--axis",
        "psnr",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let sel = tmp.path().join("sel");
    let (code, stdout, err) = run_cli(&[
        "pareto",
        "--points",
        out.to_str().unwrap(),
        "--out",
        sel.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("EE ") && stdout.contains("EBE "), "{stdout}");
    assert_eq!(
        fs::read_to_string(sel.join("plot_front.csv")).unwrap(),
        fs::read_to_string(out.join("plot_front.csv")).unwrap()
    );
}

#[test]
fn pareto_single_point_and_empty_input() {
    let tmp = tempfile::tempdir().unwrap();
    let one = write(tmp.path(), "one.csv", "label,ctp_id,bdr,bdde\nonly,,1.5,-20\n");
    let (code, out, err) = run_cli(&["pareto", "--points", &one]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("front (1 points)"), "{out}");
    assert!(out.contains("EE   only"), "{out}");
    assert!(out.contains("LBE 1  only"), "{out}");

    let empty = write(tmp.path(), "empty.csv", "label,ctp_id,bdr,bdde\n");
    let (code, _, err) = run_cli(&["pareto", "--points", &empty]);
    assert_eq!(code, 2);
    assert!(err.contains("empty"), "{err}");
}

#[test]
fn pareto_merges_point_sets() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "a.csv", "label,ctp_id,bdr,bdde\np,,10,-40\nq,,2,-5\n");
    let b = write(tmp.path(), "b.csv", "label,ctp_id,bdr,bdde\nr,,9,-42\n");
    let out = tmp.path().join("o");
    let (code, stdout, err) = run_cli(&["pareto", "--points", &a, &b, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("front (2 points)"), "{stdout}");
    assert_eq!(
        fs::read_to_string(out.join("front.csv")).unwrap(),
        "label,ctp_id,bdr,bdde\nq,,2,-5\nr,,9,-42\n"
    );
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = out.to_str().unwrap();
    for args in [
        vec!["dse", "--strategy", "e2", "--backend", "synthetic", "--out", o],
        vec!["dse", "--strategy", "e1", "--backend", "cached", "--out", o],
        vec![
            "dse",
            "--strategy",
            "e1",
            "--backend",
            "external",
            "--out",
            o,
            "--sequences",
            "a",
        ],
        vec![
            "dse",
            "--strategy",
            "e1",
            "--backend",
            "synthetic",
            "--out",
            o,
            "--max-iter",
            "0",
        ],
        vec![
            "dse",
            "--strategy",
            "e1",
            "--backend",
            "synthetic",
            "--out",
            o,
            "--anchor",
            "ZZ",
        ],
        vec!["ctp", "show", "GGGGGGGG"],
        vec!["nonsense"],
    ] {
        let (code, _, err) = run_cli(&args);
        assert_eq!(code, 2, "{args:?}: {err}");
    }
}

#[test]
fn ctp_show_default_and_off_form() {
    let (code, out, _) = run_cli(&["ctp", "show", "--default"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("3FFFFFFF"));
    assert_eq!(lines.next(), Some("off:"));

    let (code, out, _) = run_cli(&["ctp", "show", "off:ALF,DBF"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("3F5FFFFF"));
    assert!(out.contains("off:ALF,DBF"), "{out}");
}

#[test]
fn ingest_summarizes_and_rejects_duplicates() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = format!("{HEADER}{}", rows("3FFFFFFF", "s", 1.0, 1.0));
    csv.push_str("3FFFFFFF,t,22,100,40,90,4,4;4;4;4;4\n");
    let m = write(tmp.path(), "m.csv", &csv);
    let (code, out, err) = run_cli(&["ingest", "--measurements", &m]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("5 rows"), "{out}");
    assert!(out.contains("1 series, 1 pass"), "{out}");

    csv.push_str("3FFFFFFF,t,22,100,40,90,4,\n");
    let m = write(tmp.path(), "dup.csv", &csv);
    let (code, _, err) = run_cli(&["ingest", "--measurements", &m]);
    assert_eq!(code, 2);
    assert!(err.contains("line 7"), "{err}");
}

#[test]
fn help_documents_formats() {
    let (code, out, _) = run_cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("ctp_id,sequence,qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples"));
    assert!(out.contains("{ctp_mask}"));
}

#[test]
fn external_backend_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let reg = small_registry(3);
    let reg_path = tmp.path().join("tools.txt");
    reg.save(&reg_path).unwrap();
    // Energy grows with the mask value, so the search should switch tools off.
    let cmd = ": {sequence}; m=$((0x{ctp_mask})); printf 'qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples\\n{qp},%s,%s,%s,%s,\\n' \
               $((200000/{qp})) $((80-{qp})) $((100-{qp})) $((2000-{qp}*10+m*100)) > {out}";
    let out = tmp.path().join("run");
    let (code, stdout, err) = run_cli(&[
        "dse",
        "--strategy",
        "e1",
        "--backend",
        "external",
        "--command",
        cmd,
        "--sequences",
        "clip",
        "--registry",
        reg_path.to_str().unwrap(),
        "--max-parallel-jobs",
        "2",
        "--workdir",
        tmp.path().join("work").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("terminal 0"), "{stdout}");

    let (code, _, err) = run_cli(&[
        "dse",
        "--strategy",
        "e1",
        "--backend",
        "external",
        "--command",
        "echo boom >&2; exit 7 # {sequence} {qp} {ctp_mask} {out}",
        "--sequences",
        "clip",
        "--registry",
        reg_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
    assert!(err.contains("sequence=clip, qp=22") && err.contains("boom"), "{err}");
}
