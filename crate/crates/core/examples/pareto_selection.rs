//! Pareto front and EE / EBE / LBE selection over published validation rows.

use ctp_dse::bd::QualityAxis;
use ctp_dse::fixtures::{profile_points, JVET_ROWS};
use ctp_dse::report::selection_text;
use ctp_dse::{pareto_front, select_profiles, SelectionCriteria, ToolRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reg = ToolRegistry::vvc_default();
    let points = profile_points(&JVET_ROWS, &reg, QualityAxis::Vmaf);
    let criteria = SelectionCriteria::default();
    let front = pareto_front(&points)?;
    let selection = select_profiles(&points, criteria)?;
    print!("{}", selection_text(&selection, &front, criteria.lbe_bdr_threshold));

    let dropped: Vec<String> = points.iter().filter(|p| !front.contains(p)).map(|p| p.name()).collect();
    println!("dominated: {}", dropped.join(", "));
    Ok(())
}
