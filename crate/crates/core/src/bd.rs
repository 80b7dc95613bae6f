//! Bjøntegaard-Delta metrics on the rate and decoding-energy cost axes.
//!
//! The cost (bit rate or energy) is interpolated as `log10(cost)` over
//! quality with a monotonicity-preserving piecewise cubic Hermite
//! interpolant (Fritsch-Carlson slopes with the usual three-point end
//! conditions). Both interpolants are integrated in closed form over the
//! common quality range; the mean log difference `Δ` is reported as
//! `100 * (10^Δ - 1)` percent. Negative values are savings.
//!
//! The older third-order polynomial fit is not provided.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{RdeCurve, MIN_POINTS};

/// An overlap narrower than this fraction of the anchor's quality span is
/// flagged on the report.
pub const NARROW_OVERLAP_FRACTION: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BdError {
    #[error("{got} points given, at least {MIN_POINTS} required")]
    TooFewPoints { got: usize },
    #[error("cost must be > 0, got {0}")]
    NonPositiveCost(f64),
    #[error("non-finite cost or quality value")]
    NonFinite,
    #[error("quality is not strictly increasing with cost")]
    NonMonotoneQuality,
    #[error("quality ranges do not overlap (lower {lo}, upper {hi})")]
    EmptyOverlap { lo: f64, hi: f64 },
    #[error("cannot compare sequence `{test}` against anchor sequence `{anchor}`")]
    SequenceMismatch { anchor: String, test: String },
    #[error("no anchor curve for sequence `{0}`")]
    MissingSequence(String),
    #[error("cannot aggregate an empty list of reports")]
    EmptyAggregate,
    #[error("{metric}: {source}")]
    Metric {
        metric: &'static str,
        #[source]
        source: Box<BdError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityAxis {
    Psnr,
    Vmaf,
}

impl QualityAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            QualityAxis::Psnr => "psnr",
            QualityAxis::Vmaf => "vmaf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostAxis {
    Rate,
    Energy,
}

/// Monotone piecewise cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two nodes.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        assert!(x.windows(2).all(|w| w[1] > w[0]), "x must be strictly increasing");
        let slopes = pchip_slopes(&x, &y);
        Self { x, y, slopes }
    }

    pub fn lower(&self) -> f64 {
        self.x[0]
    }

    pub fn upper(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn segment(&self, x: f64) -> usize {
        let k = self.x.partition_point(|&n| n <= x);
        k.saturating_sub(1).min(self.x.len() - 2)
    }

    fn coeffs(&self, k: usize) -> (f64, f64, f64, f64, f64) {
        let h = self.x[k + 1] - self.x[k];
        let delta = (self.y[k + 1] - self.y[k]) / h;
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        let c2 = (3.0 * delta - 2.0 * d0 - d1) / h;
        let c3 = (d0 + d1 - 2.0 * delta) / (h * h);
        (self.y[k], d0, c2, c3, h)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let (y0, d0, c2, c3, _) = self.coeffs(k);
        let t = x - self.x[k];
        y0 + t * (d0 + t * (c2 + t * c3))
    }

    /// Exact integral over `[a, b]`, both inside the node range.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integral(b, a);
        }
        let mut total = 0.0;
        for k in 0..self.x.len() - 1 {
            let lo = a.max(self.x[k]);
            let hi = b.min(self.x[k + 1]);
            if hi <= lo {
                continue;
            }
            let (y0, d0, c2, c3, _) = self.coeffs(k);
            let prim = |t: f64| t * (y0 + t * (d0 / 2.0 + t * (c2 / 3.0 + t * c3 / 4.0)));
            total += prim(hi - self.x[k]) - prim(lo - self.x[k]);
        }
        total
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let m: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![m[0], m[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (m0, m1) = (m[k - 1], m[k]);
        if m0 == 0.0 || m1 == 0.0 || m0.signum() != m1.signum() {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / m0 + w2 / m1);
    }
    d[0] = end_slope(h[0], h[1], m[0], m[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Result of one BD comparison with the integration range it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdDelta {
    pub percent: f64,
    pub overlap_lo: f64,
    pub overlap_hi: f64,
    /// Overlap width over the anchor's quality span.
    pub overlap_fraction: f64,
}

impl BdDelta {
    pub fn is_narrow(&self) -> bool {
        self.overlap_fraction < NARROW_OVERLAP_FRACTION
    }
}

/// Builds the `log10(cost)`-over-quality interpolant for one curve.
pub fn log_cost_interpolant(points: &[(f64, f64)]) -> Result<Pchip, BdError> {
    if points.len() < MIN_POINTS {
        return Err(BdError::TooFewPoints { got: points.len() });
    }
    for &(c, q) in points {
        if !c.is_finite() || !q.is_finite() {
            return Err(BdError::NonFinite);
        }
        if c <= 0.0 {
            return Err(BdError::NonPositiveCost(c));
        }
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.windows(2).any(|w| w[1].1 <= w[0].1 || w[1].0 == w[0].0) {
        return Err(BdError::NonMonotoneQuality);
    }
    let (x, y) = sorted.iter().map(|&(c, q)| (q, c.log10())).unzip();
    Ok(Pchip::new(x, y))
}

/// Average cost difference of `test` relative to `anchor` at equal quality,
/// in percent. Each point is `(cost, quality)`.
pub fn bd_delta(anchor: &[(f64, f64)], test: &[(f64, f64)]) -> Result<f64, BdError> {
    bd_delta_detailed(anchor, test).map(|d| d.percent)
}

pub fn bd_delta_detailed(anchor: &[(f64, f64)], test: &[(f64, f64)]) -> Result<BdDelta, BdError> {
    let a = log_cost_interpolant(anchor)?;
    let t = log_cost_interpolant(test)?;
    let lo = a.lower().max(t.lower());
    let hi = a.upper().min(t.upper());
    if hi <= lo {
        return Err(BdError::EmptyOverlap { lo, hi });
    }
    let mean_log_diff = (t.integral(lo, hi) - a.integral(lo, hi)) / (hi - lo);
    Ok(BdDelta {
        percent: 100.0 * (10f64.powf(mean_log_diff) - 1.0),
        overlap_lo: lo,
        overlap_hi: hi,
        overlap_fraction: (hi - lo) / (a.upper() - a.lower()),
    })
}

/// The four BD values of a test profile against the anchor, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdReport {
    pub bdr_psnr: f64,
    pub bdr_vmaf: f64,
    pub bdde_psnr: f64,
    pub bdde_vmaf: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BdReport {
    pub fn new(bdr_psnr: f64, bdr_vmaf: f64, bdde_psnr: f64, bdde_vmaf: f64) -> Self {
        Self {
            bdr_psnr,
            bdr_vmaf,
            bdde_psnr,
            bdde_vmaf,
            warnings: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn bdr(&self, axis: QualityAxis) -> f64 {
        match axis {
            QualityAxis::Psnr => self.bdr_psnr,
            QualityAxis::Vmaf => self.bdr_vmaf,
        }
    }

    pub fn bdde(&self, axis: QualityAxis) -> f64 {
        match axis {
            QualityAxis::Psnr => self.bdde_psnr,
            QualityAxis::Vmaf => self.bdde_vmaf,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.bdr_psnr, self.bdr_vmaf, self.bdde_psnr, self.bdde_vmaf]
            .iter()
            .all(|v| v.is_finite())
    }
}

fn pairs(curve: &RdeCurve, cost: CostAxis, quality: QualityAxis) -> Vec<(f64, f64)> {
    curve
        .points()
        .iter()
        .map(|p| {
            let c = match cost {
                CostAxis::Rate => p.bitrate,
                CostAxis::Energy => p.energy,
            };
            let q = match quality {
                QualityAxis::Psnr => p.psnr,
                QualityAxis::Vmaf => p.vmaf,
            };
            (c, q)
        })
        .collect()
}

/// All four BD values of `test` against `anchor` for one sequence.
pub fn bd_report(anchor: &RdeCurve, test: &RdeCurve) -> Result<BdReport, BdError> {
    if anchor.sequence() != test.sequence() {
        return Err(BdError::SequenceMismatch {
            anchor: anchor.sequence().to_string(),
            test: test.sequence().to_string(),
        });
    }
    let mut values = [0.0; 4];
    let mut warnings = Vec::new();
    let metrics = [
        ("BDR-PSNR", CostAxis::Rate, QualityAxis::Psnr),
        ("BDR-VMAF", CostAxis::Rate, QualityAxis::Vmaf),
        ("BDDE-PSNR", CostAxis::Energy, QualityAxis::Psnr),
        ("BDDE-VMAF", CostAxis::Energy, QualityAxis::Vmaf),
    ];
    for (slot, (metric, cost, quality)) in values.iter_mut().zip(metrics) {
        let d = bd_delta_detailed(&pairs(anchor, cost, quality), &pairs(test, cost, quality)).map_err(|e| {
            BdError::Metric {
                metric,
                source: Box::new(e),
            }
        })?;
        if d.is_narrow() {
            warnings.push(format!(
                "{}: {metric} overlap covers {:.1}% of the anchor quality range",
                test.sequence(),
                100.0 * d.overlap_fraction
            ));
        }
        *slot = d.percent;
    }
    let mut report = BdReport::new(values[0], values[1], values[2], values[3]);
    report.warnings = warnings;
    Ok(report)
}

/// Field-wise arithmetic mean.
pub fn aggregate_reports(reports: &[BdReport]) -> Result<BdReport, BdError> {
    if reports.is_empty() {
        return Err(BdError::EmptyAggregate);
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&BdReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let mut out = BdReport::new(
        mean(|r| r.bdr_psnr),
        mean(|r| r.bdr_vmaf),
        mean(|r| r.bdde_psnr),
        mean(|r| r.bdde_vmaf),
    );
    for r in reports {
        for w in &r.warnings {
            if !out.warnings.contains(w) {
                out.warnings.push(w.clone());
            }
        }
    }
    Ok(out)
}

/// Per-sequence reports for `tests` (matched to `anchors` by sequence name,
/// in the order of `tests`) and their mean.
pub fn compare_curve_sets(
    anchors: &[RdeCurve],
    tests: &[RdeCurve],
) -> Result<(Vec<(String, BdReport)>, BdReport), BdError> {
    let mut per_sequence = Vec::with_capacity(tests.len());
    for test in tests {
        let anchor = anchors
            .iter()
            .find(|a| a.sequence() == test.sequence())
            .ok_or_else(|| BdError::MissingSequence(test.sequence().to_string()))?;
        per_sequence.push((test.sequence().to_string(), bd_report(anchor, test)?));
    }
    let reports: Vec<BdReport> = per_sequence.iter().map(|(_, r)| r.clone()).collect();
    let mean = aggregate_reports(&reports)?;
    Ok((per_sequence, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::RdePoint;

    fn anchor() -> Vec<(f64, f64)> {
        vec![(1000.0, 34.0), (2000.0, 36.5), (4000.0, 38.6), (8000.0, 40.1)]
    }

    #[test]
    fn identical_is_exactly_zero() {
        assert_eq!(bd_delta(&anchor(), &anchor()).unwrap(), 0.0);
    }

    #[test]
    fn doubled_cost_is_plus_hundred() {
        let test: Vec<_> = anchor().iter().map(|&(c, q)| (2.0 * c, q)).collect();
        let d = bd_delta(&anchor(), &test).unwrap();
        assert!((d - 100.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn node_recovery() {
        let p = log_cost_interpolant(&anchor()).unwrap();
        for (c, q) in anchor() {
            assert!((p.eval(q) - c.log10()).abs() < 1e-14);
        }
    }

    #[test]
    fn integral_of_linear_data_is_trapezoid() {
        // Collinear nodes give zero curvature, so the interpolant is the line.
        let p = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 3.0, 5.0, 7.0]);
        assert!((p.integral(0.0, 3.0) - 12.0).abs() < 1e-12);
        assert!((p.integral(0.5, 2.5) - 8.0).abs() < 1e-12);
        assert!((p.eval(1.5) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn preserves_monotonicity_between_nodes() {
        let p = Pchip::new(vec![0.0, 1.0, 1.1, 4.0], vec![0.0, 0.1, 3.0, 3.05]);
        let mut prev = p.eval(0.0);
        for i in 1..=4000 {
            let v = p.eval(i as f64 * 1e-3);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn errors() {
        let short = &anchor()[..3];
        assert_eq!(
            bd_delta(short, &anchor()).unwrap_err(),
            BdError::TooFewPoints { got: 3 }
        );
        let mut bad = anchor();
        bad[2].1 = 30.0;
        assert_eq!(bd_delta(&anchor(), &bad).unwrap_err(), BdError::NonMonotoneQuality);
        let far: Vec<_> = anchor().iter().map(|&(c, q)| (c, q + 20.0)).collect();
        assert!(matches!(
            bd_delta(&anchor(), &far).unwrap_err(),
            BdError::EmptyOverlap { .. }
        ));
        let mut zero = anchor();
        zero[0].0 = 0.0;
        assert_eq!(bd_delta(&zero, &anchor()).unwrap_err(), BdError::NonPositiveCost(0.0));
    }

    #[test]
    fn narrow_overlap_is_flagged() {
        let shifted: Vec<_> = anchor().iter().map(|&(c, q)| (c, q + 5.8)).collect();
        let d = bd_delta_detailed(&anchor(), &shifted).unwrap();
        assert!(d.is_narrow());
    }

    fn curve(seq: &str, scale_rate: f64, scale_energy: f64) -> RdeCurve {
        let base = [
            (22, 8000.0, 40.1, 95.0, 20.0),
            (27, 4000.0, 38.6, 90.0, 15.0),
            (32, 2000.0, 36.5, 82.0, 11.0),
            (37, 1000.0, 34.0, 70.0, 8.0),
        ];
        let pts = base
            .iter()
            .map(|&(qp, r, p, v, e)| RdePoint::new(qp, r * scale_rate, p, v, e * scale_energy))
            .collect();
        RdeCurve::new(seq, "X", pts).unwrap()
    }

    #[test]
    fn report_energy_halved() {
        let r = bd_report(&curve("a", 1.0, 1.0), &curve("a", 1.0, 0.5)).unwrap();
        assert!((r.bdde_psnr + 50.0).abs() < 1e-9);
        assert!((r.bdde_vmaf + 50.0).abs() < 1e-9);
        assert_eq!(r.bdr_psnr, 0.0);
        assert_eq!(r.bdr_vmaf, 0.0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn report_self_is_zero() {
        let c = curve("a", 1.0, 1.0);
        assert_eq!(bd_report(&c, &c).unwrap(), BdReport::zero());
    }

    #[test]
    fn report_rejects_other_sequence() {
        assert!(matches!(
            bd_report(&curve("a", 1.0, 1.0), &curve("b", 1.0, 1.0)),
            Err(BdError::SequenceMismatch { .. })
        ));
    }

    #[test]
    fn aggregate_mean() {
        let a = BdReport::new(-10.0, 1.0, 2.0, 3.0);
        let b = BdReport::new(-20.0, 3.0, 4.0, 5.0);
        assert_eq!(aggregate_reports(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(
            aggregate_reports(&[a.clone(), b]).unwrap(),
            BdReport::new(-15.0, 2.0, 3.0, 4.0)
        );
        assert_eq!(aggregate_reports(&vec![a.clone(); 7]).unwrap(), a);
        assert_eq!(aggregate_reports(&[]).unwrap_err(), BdError::EmptyAggregate);
    }

    #[test]
    fn curve_sets_pair_by_sequence() {
        let anchors = vec![curve("a", 1.0, 1.0), curve("b", 1.0, 1.0)];
        let tests = vec![curve("b", 2.0, 1.0), curve("a", 1.0, 0.5)];
        let (per, mean) = compare_curve_sets(&anchors, &tests).unwrap();
        assert_eq!(per[0].0, "b");
        assert!((per[0].1.bdr_vmaf - 100.0).abs() < 1e-9);
        assert!((mean.bdr_vmaf - 50.0).abs() < 1e-9);
        assert!((mean.bdde_vmaf + 25.0).abs() < 1e-9);
        assert!(matches!(
            compare_curve_sets(&anchors[..1], &tests),
            Err(BdError::MissingSequence(_))
        ));
    }
}
