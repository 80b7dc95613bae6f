//! Deterministic stand-in for real encodes.
//!
//! For a profile with enabled tool set `S`:
//!
//! ```text
//! rate(qp)   = base_rate(qp)   * Π_{j∈S} rate_mult_j
//! energy(qp) = base_energy(qp) * Π_{j∈S} energy_mult_j * Π_{(j,k)⊆S} interaction_jk
//! psnr(qp)   = base_psnr(qp)   + Σ_{j∈S} dq_psnr_j
//! vmaf(qp)   = clamp(base_vmaf(qp) + Σ_{j∈S} dq_vmaf_j, 0, 100)
//! ```
//!
//! The baseline is the all-disabled profile.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Concurrency, EvalError, EvaluationRequest, Evaluator};
use crate::curves::{RdeCurve, RdePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    pub qp: i32,
    pub bitrate: f64,
    pub psnr: f64,
    pub vmaf: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolEffect {
    pub rate_mult: f64,
    pub energy_mult: f64,
    pub dq_psnr: f64,
    pub dq_vmaf: f64,
}

impl ToolEffect {
    pub const NEUTRAL: ToolEffect = ToolEffect {
        rate_mult: 1.0,
        energy_mult: 1.0,
        dq_psnr: 0.0,
        dq_vmaf: 0.0,
    };

    pub fn energy(energy_mult: f64) -> Self {
        Self {
            energy_mult,
            ..Self::NEUTRAL
        }
    }

    pub fn rate_energy(rate_mult: f64, energy_mult: f64) -> Self {
        Self {
            rate_mult,
            energy_mult,
            ..Self::NEUTRAL
        }
    }
}

/// Extra energy multiplier applied when both tools are enabled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub a: usize,
    pub b: usize,
    pub energy_mult: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub seed: u64,
    /// Baseline table per sequence, sorted by qp.
    pub baselines: BTreeMap<String, Vec<BasePoint>>,
    /// One entry per registry tool, in bit order.
    pub tools: Vec<ToolEffect>,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
}

/// Baseline table with a realistic shape: rate halves every 6 QP steps,
/// quality falls linearly, energy falls geometrically.
fn baseline_table(qps: &[i32], rate0: f64, psnr0: f64, vmaf0: f64, energy0: f64) -> Vec<BasePoint> {
    qps.iter()
        .map(|&qp| {
            let dq = f64::from(qp - qps[0]);
            BasePoint {
                qp,
                bitrate: rate0 * 2f64.powf(-dq / 6.0),
                psnr: psnr0 - 0.45 * dq,
                vmaf: vmaf0 - 1.8 * dq,
                energy: energy0 * 0.96f64.powf(dq),
            }
        })
        .collect()
}

impl SyntheticModel {
    /// Model in which every tool is neutral; tests overwrite single effects.
    pub fn neutral(tool_count: usize, sequences: &[&str], qps: &[i32]) -> Self {
        let baselines = sequences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let k = i as f64;
                (
                    s.to_string(),
                    baseline_table(qps, 6000.0 + 1500.0 * k, 41.0 - 0.5 * k, 88.0 - 2.0 * k, 30.0 + 4.0 * k),
                )
            })
            .collect();
        Self {
            seed: 0,
            baselines,
            tools: vec![ToolEffect::NEUTRAL; tool_count],
            interactions: Vec::new(),
        }
    }

    /// Random admissible model. Identical arguments give an identical model.
    pub fn random(tool_count: usize, seed: u64, sequences: &[&str], qps: &[i32]) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Keeps the summed quality deltas inside the VMAF range for large registries.
        let dq_scale = (30.0 / tool_count.max(1) as f64).min(1.0);
        let baselines = sequences
            .iter()
            .map(|s| {
                let table = baseline_table(
                    qps,
                    rng.random_range(2000.0..12000.0),
                    rng.random_range(38.0..43.0),
                    rng.random_range(80.0..88.0),
                    rng.random_range(10.0..60.0),
                );
                (s.to_string(), table)
            })
            .collect();
        let tools = (0..tool_count)
            .map(|_| ToolEffect {
                rate_mult: rng.random_range(0.95..1.02),
                energy_mult: rng.random_range(0.96..1.10),
                dq_psnr: dq_scale * rng.random_range(-0.05..0.15),
                dq_vmaf: dq_scale * rng.random_range(-0.2..0.3),
            })
            .collect();
        let mut interactions = Vec::new();
        if tool_count >= 2 {
            for _ in 0..tool_count / 2 {
                let a = rng.random_range(0..tool_count);
                let b = rng.random_range(0..tool_count);
                if a == b
                    || interactions
                        .iter()
                        .any(|i: &Interaction| (i.a, i.b) == (a.min(b), a.max(b)))
                {
                    continue;
                }
                interactions.push(Interaction {
                    a: a.min(b),
                    b: a.max(b),
                    energy_mult: rng.random_range(0.94..1.08),
                });
            }
        }
        Self {
            seed,
            baselines,
            tools,
            interactions,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |msg: String| Err(EvalError::Model(msg));
        if self.tools.is_empty() {
            return bad("no tools".into());
        }
        for (j, t) in self.tools.iter().enumerate() {
            if !(t.rate_mult > 0.0 && t.energy_mult > 0.0) || !t.dq_psnr.is_finite() || !t.dq_vmaf.is_finite() {
                return bad(format!("tool {j}: multipliers must be > 0 and deltas finite"));
            }
        }
        for i in &self.interactions {
            if i.a >= self.tools.len() || i.b >= self.tools.len() || i.a == i.b {
                return bad(format!("interaction ({}, {}) names an invalid tool pair", i.a, i.b));
            }
            if i.energy_mult.is_nan() || i.energy_mult <= 0.0 {
                return bad(format!("interaction ({}, {}) multiplier must be > 0", i.a, i.b));
            }
        }
        for (seq, table) in &self.baselines {
            if table
                .windows(2)
                .any(|w| w[1].qp <= w[0].qp || w[1].bitrate >= w[0].bitrate || w[1].energy >= w[0].energy)
            {
                return bad(format!("baseline for `{seq}` is not monotone in qp"));
            }
        }
        Ok(())
    }

    /// Point for one enabled-tool set at one baseline entry.
    pub fn point(&self, enabled: &[bool], base: &BasePoint) -> RdePoint {
        let mut rate = base.bitrate;
        let mut energy = base.energy;
        let mut psnr = base.psnr;
        let mut vmaf = base.vmaf;
        for (effect, _) in self.tools.iter().zip(enabled).filter(|(_, on)| **on) {
            rate *= effect.rate_mult;
            energy *= effect.energy_mult;
            psnr += effect.dq_psnr;
            vmaf += effect.dq_vmaf;
        }
        for i in &self.interactions {
            if enabled.get(i.a) == Some(&true) && enabled.get(i.b) == Some(&true) {
                energy *= i.energy_mult;
            }
        }
        RdePoint::new(base.qp, rate, psnr, vmaf.clamp(0.0, 100.0), energy)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticEvaluator {
    model: SyntheticModel,
}

impl SyntheticEvaluator {
    pub fn new(model: SyntheticModel) -> Result<Self, EvalError> {
        model.validate()?;
        Ok(Self { model })
    }

    pub fn model(&self) -> &SyntheticModel {
        &self.model
    }
}

impl Evaluator for SyntheticEvaluator {
    fn evaluate(&self, request: &EvaluationRequest) -> Result<Vec<RdeCurve>, EvalError> {
        let bits = request.ctp.bits();
        if bits.len() != self.model.tools.len() {
            return Err(EvalError::InvalidRequest(format!(
                "profile has {} tools, model has {}",
                bits.len(),
                self.model.tools.len()
            )));
        }
        let id = request.ctp.to_hex();
        request
            .sequences
            .iter()
            .map(|seq| {
                let table = self.model.baselines.get(seq);
                let points = request
                    .qps
                    .iter()
                    .map(|&qp| {
                        table
                            .and_then(|t| t.iter().find(|b| b.qp == qp))
                            .map(|base| self.model.point(bits, base))
                            .ok_or_else(|| EvalError::UnknownOperatingPoint {
                                sequence: seq.clone(),
                                qp,
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(RdeCurve::new(seq.clone(), id.clone(), points)?)
            })
            .collect()
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Unbounded
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctp::{ToolCategory, ToolDescriptor, ToolRegistry};
    use crate::curves::DEFAULT_QPS;

    fn registry(n: usize) -> ToolRegistry {
        ToolRegistry::new(
            (0..n)
                .map(|i| ToolDescriptor::new(format!("T{i}"), ToolCategory::Other, true))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn all_disabled_gives_baseline() {
        let model = SyntheticModel::random(5, 3, &["s"], &DEFAULT_QPS);
        let reg = registry(5);
        let off = reg.ctp_from_bits(&[false; 5]).unwrap();
        let ev = SyntheticEvaluator::new(model.clone()).unwrap();
        let req = EvaluationRequest::new(off, vec!["s".into()], DEFAULT_QPS.to_vec()).unwrap();
        let curve = &ev.evaluate(&req).unwrap()[0];
        for (p, b) in curve.points().iter().zip(&model.baselines["s"]) {
            assert_eq!(
                (p.bitrate, p.psnr, p.vmaf, p.energy),
                (b.bitrate, b.psnr, b.vmaf, b.energy)
            );
        }
    }

    #[test]
    fn interaction_energy_is_product() {
        let mut model = SyntheticModel::neutral(3, &["s"], &DEFAULT_QPS);
        model.tools[0] = ToolEffect::energy(1.2);
        model.tools[2] = ToolEffect::energy(0.9);
        model.interactions.push(Interaction {
            a: 0,
            b: 2,
            energy_mult: 1.05,
        });
        let reg = registry(3);
        let ctp = reg.ctp_from_bits(&[true, false, true]).unwrap();
        let ev = SyntheticEvaluator::new(model.clone()).unwrap();
        let req = EvaluationRequest::new(ctp, vec!["s".into()], DEFAULT_QPS.to_vec()).unwrap();
        let curve = &ev.evaluate(&req).unwrap()[0];
        for (p, b) in curve.points().iter().zip(&model.baselines["s"]) {
            assert_eq!(p.energy, b.energy * 1.2 * 0.9 * 1.05);
            assert_eq!(p.bitrate, b.bitrate);
        }
    }

    #[test]
    fn unknown_qp_is_reported() {
        let model = SyntheticModel::neutral(2, &["s"], &DEFAULT_QPS);
        let ev = SyntheticEvaluator::new(model).unwrap();
        let req =
            EvaluationRequest::new(registry(2).default_ctp(), vec!["s".into()], vec![22, 27, 32, 37, 42]).unwrap();
        assert!(matches!(
            ev.evaluate(&req).unwrap_err(),
            EvalError::UnknownOperatingPoint { qp: 42, .. }
        ));
    }

    #[test]
    fn rejects_bad_params() {
        let mut model = SyntheticModel::neutral(2, &["s"], &DEFAULT_QPS);
        model.tools[1].energy_mult = 0.0;
        assert!(SyntheticEvaluator::new(model).is_err());
        let mut model = SyntheticModel::neutral(2, &["s"], &DEFAULT_QPS);
        model.interactions.push(Interaction {
            a: 1,
            b: 1,
            energy_mult: 1.0,
        });
        assert!(SyntheticEvaluator::new(model).is_err());
    }

    #[test]
    fn random_is_reproducible() {
        let a = SyntheticModel::random(30, 7, &["x", "y"], &DEFAULT_QPS);
        let b = SyntheticModel::random(30, 7, &["x", "y"], &DEFAULT_QPS);
        assert_eq!(a, b);
        assert_ne!(a, SyntheticModel::random(30, 8, &["x", "y"], &DEFAULT_QPS));
    }
}
