//! Confidence-interval gate for repeated energy measurements.
//!
//! A series passes when the two-sided Student-t interval around the sample
//! mean is narrower than a fraction of the mean:
//! `t(1 - (1 - confidence)/2, n - 1) * s / sqrt(n) <= rel_half_width * mean`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_REL_HALF_WIDTH: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("energy sample {index} is {value}, samples must be > 0")]
    NonPositiveSample { index: usize, value: f64 },
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("relative half-width must be > 0, got {0}")]
    BadHalfWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Insufficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiParams {
    pub confidence: f64,
    pub rel_half_width: f64,
}

impl Default for CiParams {
    fn default() -> Self {
        Self {
            confidence: DEFAULT_CONFIDENCE,
            rel_half_width: DEFAULT_REL_HALF_WIDTH,
        }
    }
}

impl CiParams {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.confidence.is_nan() || self.confidence <= 0.0 || self.confidence >= 1.0 {
            return Err(StatsError::BadConfidence(self.confidence));
        }
        if !self.rel_half_width.is_finite() || self.rel_half_width <= 0.0 {
            return Err(StatsError::BadHalfWidth(self.rel_half_width));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiOutcome {
    pub verdict: Verdict,
    pub mean: f64,
    pub half_width: f64,
}

/// Repeated readings of one decode job together with their verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub samples: Vec<f64>,
    pub params: CiParams,
    pub outcome: CiOutcome,
}

impl MeasurementSeries {
    pub fn new(samples: Vec<f64>, params: CiParams) -> Result<Self, StatsError> {
        let outcome = ci_check(&samples, params.confidence, params.rel_half_width)?;
        Ok(Self {
            samples,
            params,
            outcome,
        })
    }
}

/// Two-sided Student-t quantile for `confidence` with `dof` degrees of freedom.
pub fn t_quantile(confidence: f64, dof: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("dof >= 1");
    dist.inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

pub fn ci_check(samples: &[f64], confidence: f64, rel_half_width: f64) -> Result<CiOutcome, StatsError> {
    CiParams {
        confidence,
        rel_half_width,
    }
    .validate()?;
    if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
        return Err(StatsError::NonPositiveSample { index, value });
    }
    let n = samples.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        samples.iter().sum::<f64>() / n as f64
    };
    if n < 2 {
        return Ok(CiOutcome {
            verdict: Verdict::Insufficient,
            mean,
            half_width: f64::NAN,
        });
    }
    // Identical readings give an exact zero; the summed mean may differ from them by an ulp.
    let var = if samples.iter().all(|&s| s == samples[0]) {
        0.0
    } else {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    };
    let half_width = t_quantile(confidence, n - 1) * var.sqrt() / (n as f64).sqrt();
    let verdict = if half_width <= rel_half_width * mean {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CiOutcome {
        verdict,
        mean,
        half_width,
    })
}
