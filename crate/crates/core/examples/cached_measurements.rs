//! Search over a measurement table: ingest a CSV, run E1, report a miss.
//!
//! The table is generated from a synthetic model for a 4-tool registry so the
//! example is self-contained; real tables come from encoder and power-meter runs.

use std::io::Cursor;

use ctp_dse::bd::QualityAxis;
use ctp_dse::ctp::{ToolCategory, ToolDescriptor};
use ctp_dse::curves::DEFAULT_QPS;
use ctp_dse::eval::MeasurementTable;
use ctp_dse::stats::CiParams;
use ctp_dse::{run_dse, CachedEvaluator, DseConfig, EvaluationRequest, Evaluator, Strategy};
use ctp_dse::{SyntheticEvaluator, SyntheticModel, ToolRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reg = ToolRegistry::new(
        ["DBF", "SAO", "ALF", "AFFINE"]
            .iter()
            .map(|n| ToolDescriptor::new(*n, ToolCategory::Other, true))
            .collect(),
    )?;
    let sequences = vec!["crowd".to_string(), "park".to_string()];
    let model = SyntheticModel::random(reg.len(), 7, &["crowd", "park"], &DEFAULT_QPS);
    let synthetic = SyntheticEvaluator::new(model)?;

    let mut csv = String::from("ctp_id,sequence,qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples\n");
    for v in 0u32..16 {
        if v == 0 {
            continue; // leave one profile unmeasured
        }
        let bits: Vec<bool> = (0..4).map(|i| v >> i & 1 == 1).collect();
        let ctp = reg.ctp_from_bits(&bits)?;
        let req = EvaluationRequest::new(ctp.clone(), sequences.clone(), DEFAULT_QPS.to_vec())?;
        for curve in synthetic.evaluate(&req)? {
            for p in curve.points() {
                let samples: Vec<String> = [0.99, 1.0, 1.01].iter().map(|k| (p.energy * k).to_string()).collect();
                csv.push_str(&format!(
                    "{ctp},{},{},{},{},{},{},{}\n",
                    curve.sequence(),
                    p.qp,
                    p.bitrate,
                    p.psnr,
                    p.vmaf,
                    p.energy,
                    samples.join(";")
                ));
            }
        }
    }

    let table = MeasurementTable::from_reader(Cursor::new(csv), CiParams::default())?;
    println!(
        "{} rows, {} sample series checked",
        table.len(),
        table.diagnostics().len()
    );
    let evaluator = CachedEvaluator::new(table);

    let config = DseConfig::new(Strategy::E1, QualityAxis::Psnr, sequences.clone(), reg.default_ctp());
    match run_dse(&config, &reg, &evaluator) {
        Ok(r) => println!("E1 terminal {} after {} iterations", r.terminal_reference, r.logs.len()),
        Err(e) => {
            println!("search stopped: {e}");
            let partial = e.partial().expect("partial result");
            println!(
                "{} iteration(s) and {} profiles kept",
                partial.logs.len(),
                partial.evaluated.len()
            );
        }
    }
    Ok(())
}
