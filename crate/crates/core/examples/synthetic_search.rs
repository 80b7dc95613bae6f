//! All four greedy strategies on a seeded synthetic model of the 30-tool registry.

use ctp_dse::bd::QualityAxis;
use ctp_dse::curves::DEFAULT_QPS;
use ctp_dse::report::{report_pairs, result_points};
use ctp_dse::{pareto_front, run_dse, select_profiles, DseConfig, SelectionCriteria, Strategy};
use ctp_dse::{SyntheticEvaluator, SyntheticModel, ToolRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(1), |s| s.parse())?;
    let reg = ToolRegistry::vvc_default();
    let model = SyntheticModel::random(reg.len(), seed, &["crowd", "park", "tango"], &DEFAULT_QPS);
    let evaluator = SyntheticEvaluator::new(model)?;
    let sequences: Vec<String> = ["crowd", "park", "tango"].map(String::from).to_vec();

    let mut points = Vec::new();
    for strategy in Strategy::ALL {
        let config = DseConfig::new(strategy, QualityAxis::Vmaf, sequences.clone(), reg.default_ctp());
        let result = run_dse(&config, &reg, &evaluator)?;
        println!(
            "{strategy}: {:>2} iterations, {:>3} profiles, terminal {}  {}",
            result.logs.len(),
            result.evaluated.len(),
            result.terminal_reference,
            report_pairs(result.terminal_report(), None)
        );
        points.extend(result_points(&result, QualityAxis::Vmaf));
    }

    let front = pareto_front(&points)?;
    let s = select_profiles(&points, SelectionCriteria::default())?;
    println!("merged front: {} of {} points", front.len(), points.len());
    println!("EE  {}  bdr {:.2}  bdde {:.2}", s.ee.name(), s.ee.bdr, s.ee.bdde);
    println!("EBE {}  bdr {:.2}  bdde {:.2}", s.ebe.name(), s.ebe.bdr, s.ebe.bdde);
    println!("{} LBE profiles under 5% BD-rate", s.lbe.len());
    Ok(())
}
