//! Bjøntegaard-Delta rate and energy between two rate-distortion-energy curves.

use ctp_dse::bd::{bd_delta_detailed, bd_report};
use ctp_dse::curves::{RdeCurve, RdePoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // qp, bitrate kbps, PSNR dB, VMAF, decoding energy J
    let anchor = RdeCurve::new(
        "BQTerrace",
        "3FFFFFFF",
        vec![
            RdePoint::new(22, 8120.0, 40.1, 93.2, 41.5),
            RdePoint::new(27, 4410.0, 38.2, 88.0, 35.9),
            RdePoint::new(32, 2380.0, 36.1, 79.4, 31.2),
            RdePoint::new(37, 1290.0, 33.9, 68.1, 27.4),
        ],
    )?;
    let test = RdeCurve::new(
        "BQTerrace",
        "3419DC68",
        vec![
            RdePoint::new(22, 10350.0, 40.0, 93.0, 22.9),
            RdePoint::new(27, 5630.0, 38.1, 87.6, 19.6),
            RdePoint::new(32, 3040.0, 36.0, 79.1, 17.0),
            RdePoint::new(37, 1650.0, 33.8, 67.7, 14.9),
        ],
    )?;

    let r = bd_report(&anchor, &test)?;
    println!("BD-rate   PSNR {:7.2}%  VMAF {:7.2}%", r.bdr_psnr, r.bdr_vmaf);
    println!("BD-energy PSNR {:7.2}%  VMAF {:7.2}%", r.bdde_psnr, r.bdde_vmaf);

    // The same number from raw (cost, quality) pairs, with the overlap used.
    let pairs = |c: &RdeCurve| c.points().iter().map(|p| (p.energy, p.vmaf)).collect::<Vec<_>>();
    let d = bd_delta_detailed(&pairs(&anchor), &pairs(&test))?;
    println!(
        "energy/VMAF: {:.4}% over VMAF [{:.2}, {:.2}] ({:.0}% of the anchor span)",
        d.percent,
        d.overlap_lo,
        d.overlap_hi,
        100.0 * d.overlap_fraction
    );
    Ok(())
}
