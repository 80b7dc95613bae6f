//! Measuring profiles through an external command.
//!
//! The command here is a shell stand-in for an encode / decode / power-meter
//! pipeline: energy grows with the number of enabled tools.

use std::num::NonZeroUsize;

use ctp_dse::bd::QualityAxis;
use ctp_dse::ctp::{ToolCategory, ToolDescriptor};
use ctp_dse::{run_dse, DseConfig, ExternalEvaluator, Strategy, ToolRegistry};

const TEMPLATE: &str = r#": {sequence}; m=$((0x{ctp_mask})); n=0; while [ $m -gt 0 ]; do n=$((n + m % 2)); m=$((m / 2)); done; e=$((3000 - {qp} * 40 + n * 150)); printf 'qp,bitrate_kbps,psnr_db,vmaf,energy_j,energy_samples\n{qp},%s,%s,%s,%s,%s;%s;%s\n' $((400000 / {qp} - n * 300)) $((80 - {qp})) $((100 - {qp})) $e $e $e $e > {out}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reg = ToolRegistry::new(
        ["DBF", "SAO", "ALF", "AFFINE", "MIP"]
            .iter()
            .map(|n| ToolDescriptor::new(*n, ToolCategory::Other, true))
            .collect(),
    )?;
    let evaluator = ExternalEvaluator::new(TEMPLATE)?.with_parallel_jobs(NonZeroUsize::new(4).unwrap());
    println!("{}", evaluator.expand("park", 22, "1F", "/tmp/park_22_1F.csv".as_ref()));

    let config = DseConfig::new(Strategy::CA, QualityAxis::Vmaf, vec!["park".into()], reg.default_ctp());
    let result = run_dse(&config, &reg, &evaluator)?;
    for log in &result.logs {
        println!(
            "iteration {}: {} -> {} (score {:.2})",
            log.index,
            log.reference_ctp,
            log.next_reference,
            log.next_score.unwrap_or(f64::NAN)
        );
    }
    println!(
        "{:?}, {} profiles measured",
        result.termination_reason,
        result.evaluated.len()
    );
    Ok(())
}
