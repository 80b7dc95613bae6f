//! Rate-distortion-energy measurements over a QP sweep.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of operating points for a BD computation.
pub const MIN_POINTS: usize = 4;

/// The common-test-condition QP set used when nothing else is configured.
pub const DEFAULT_QPS: [i32; 4] = [22, 27, 32, 37];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve `{sequence}` has {got} points, at least {MIN_POINTS} required")]
    TooFewPoints { sequence: String, got: usize },
    #[error("curve `{sequence}` repeats qp {qp}")]
    DuplicateQp { sequence: String, qp: i32 },
    #[error("curve `{sequence}` qp {qp}: {field} must be > 0, got {value}")]
    NonPositive {
        sequence: String,
        qp: i32,
        field: &'static str,
        value: f64,
    },
    #[error("curve `{sequence}` qp {qp}: {field} is not finite")]
    NonFinite {
        sequence: String,
        qp: i32,
        field: &'static str,
    },
    #[error("curve `{sequence}` qp {qp}: vmaf {value} outside [0, 100]")]
    VmafOutOfRange { sequence: String, qp: i32, value: f64 },
    #[error("curve `{sequence}`: {field} not strictly decreasing with qp at qp {qp}")]
    NotDecreasing {
        sequence: String,
        qp: i32,
        field: &'static str,
    },
}

/// One operating point: bit rate (kbps), PSNR (dB), VMAF, decoding energy (J).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdePoint {
    pub qp: i32,
    pub bitrate: f64,
    pub psnr: f64,
    pub vmaf: f64,
    pub energy: f64,
}

impl RdePoint {
    pub fn new(qp: i32, bitrate: f64, psnr: f64, vmaf: f64, energy: f64) -> Self {
        Self {
            qp,
            bitrate,
            psnr,
            vmaf,
            energy,
        }
    }

    fn validate(&self, sequence: &str) -> Result<(), CurveError> {
        for (field, v) in [
            ("bitrate", self.bitrate),
            ("psnr", self.psnr),
            ("vmaf", self.vmaf),
            ("energy", self.energy),
        ] {
            if !v.is_finite() {
                return Err(CurveError::NonFinite {
                    sequence: sequence.to_string(),
                    qp: self.qp,
                    field,
                });
            }
        }
        for (field, v) in [("bitrate", self.bitrate), ("energy", self.energy)] {
            if v <= 0.0 {
                return Err(CurveError::NonPositive {
                    sequence: sequence.to_string(),
                    qp: self.qp,
                    field,
                    value: v,
                });
            }
        }
        if !(0.0..=100.0).contains(&self.vmaf) {
            return Err(CurveError::VmafOutOfRange {
                sequence: sequence.to_string(),
                qp: self.qp,
                value: self.vmaf,
            });
        }
        Ok(())
    }
}

/// All operating points of one sequence encoded with one profile.
///
/// Points are kept sorted by QP. Bit rate and energy must fall strictly as
/// QP rises.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdeCurve {
    sequence: String,
    ctp: String,
    points: Vec<RdePoint>,
}

impl RdeCurve {
    pub fn new(
        sequence: impl Into<String>,
        ctp: impl Into<String>,
        mut points: Vec<RdePoint>,
    ) -> Result<Self, CurveError> {
        let sequence = sequence.into();
        if points.len() < MIN_POINTS {
            return Err(CurveError::TooFewPoints {
                sequence,
                got: points.len(),
            });
        }
        for p in &points {
            p.validate(&sequence)?;
        }
        points.sort_by_key(|p| p.qp);
        for w in points.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            if lo.qp == hi.qp {
                return Err(CurveError::DuplicateQp { sequence, qp: hi.qp });
            }
            if hi.bitrate >= lo.bitrate {
                return Err(CurveError::NotDecreasing {
                    sequence,
                    qp: hi.qp,
                    field: "bitrate",
                });
            }
            if hi.energy >= lo.energy {
                return Err(CurveError::NotDecreasing {
                    sequence,
                    qp: hi.qp,
                    field: "energy",
                });
            }
        }
        Ok(Self {
            sequence,
            ctp: ctp.into(),
            points,
        })
    }

    pub fn sequence(&self) -> &str {
        &self.sequence
    }

    /// Identifier (hex mask) of the profile that produced the curve.
    pub fn ctp(&self) -> &str {
        &self.ctp
    }

    pub fn points(&self) -> &[RdePoint] {
        &self.points
    }

    pub fn qps(&self) -> Vec<i32> {
        self.points.iter().map(|p| p.qp).collect()
    }
}
