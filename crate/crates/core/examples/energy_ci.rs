//! Confidence-interval check on repeated decoding-energy readings.

use ctp_dse::stats::{ci_check, t_quantile, DEFAULT_CONFIDENCE, DEFAULT_REL_HALF_WIDTH};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "t quantile, 99% two-sided, 9 dof: {:.4}",
        t_quantile(DEFAULT_CONFIDENCE, 9)
    );
    let series: [(&str, Vec<f64>); 4] = [
        (
            "stable",
            vec![31.2, 31.4, 31.1, 31.3, 31.2, 31.3, 31.2, 31.4, 31.1, 31.3],
        ),
        ("noisy", vec![9.0, 11.0, 9.0, 11.0, 9.0, 11.0, 9.0, 11.0, 9.0, 11.0]),
        ("constant", vec![12.5; 5]),
        ("single", vec![12.5]),
    ];
    for (name, samples) in &series {
        let o = ci_check(samples, DEFAULT_CONFIDENCE, DEFAULT_REL_HALF_WIDTH)?;
        println!(
            "{name:<9} n={:<2} mean {:>7.3}  half-width {:>7.4}  {:?}",
            samples.len(),
            o.mean,
            o.half_width,
            o.verdict
        );
    }
    Ok(())
}
