mod common;

use proptest::prelude::*;

use common::small_registry;
use ctp_dse::bd::bd_delta;
use ctp_dse::pareto::{pareto_front, select_profiles, ProfilePoint, SelectionCriteria};
use ctp_dse::stats::{ci_check, Verdict};
use ctp_dse::ToolRegistry;

fn bits(n: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), n)
}

/// Four `(cost, quality)` points with both coordinates increasing.
fn curve() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (
        30.0..36.0f64,
        prop::collection::vec(0.5..3.0f64, 3),
        100.0..1000.0f64,
        prop::collection::vec(1.2..2.5f64, 3),
    )
        .prop_map(|(q0, dq, c0, dc)| {
            let mut out = vec![(c0, q0)];
            for i in 0..3 {
                let (c, q) = out[i];
                out.push((c * dc[i], q + dq[i]));
            }
            out
        })
}

fn shifted(base: Vec<(f64, f64)>, factor: f64, jitter: Vec<f64>) -> Vec<(f64, f64)> {
    base.into_iter()
        .zip(jitter)
        .map(|((c, q), j)| (c * factor * (1.0 + j), q + 5.0 * j))
        .collect()
}

fn points() -> impl Strategy<Value = Vec<ProfilePoint>> {
    prop::collection::vec((-10i32..40, -60i32..5), 1..40).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (r, e))| ProfilePoint::labeled(&format!("p{i:02}"), f64::from(r) * 0.5, f64::from(e) * 0.5))
            .collect()
    })
}

fn coords(v: &[ProfilePoint]) -> Vec<(f64, f64)> {
    v.iter().map(|p| (p.bdr, p.bdde)).collect()
}

proptest! {
    #[test]
    fn flip_is_an_involution(b in bits(30), tool in 0usize..30) {
        let reg = ToolRegistry::vvc_default();
        let c = reg.ctp_from_bits(&b).unwrap();
        let f = reg.flip_tool(&c, tool).unwrap();
        prop_assert_eq!(c.hamming(&f), 1);
        prop_assert_eq!(reg.flip_tool(&f, tool).unwrap(), c);
    }

    #[test]
    fn masks_round_trip(n in 1usize..40, seed in any::<u64>()) {
        let reg = small_registry(n);
        let b: Vec<bool> = (0..n).map(|i| seed.rotate_left(i as u32) & 1 == 1).collect();
        let c = reg.ctp_from_bits(&b).unwrap();
        let hex = reg.serialize_ctp(&c).unwrap();
        prop_assert_eq!(hex.len(), n.div_ceil(4));
        prop_assert_eq!(&reg.parse_ctp(&hex).unwrap(), &c);
        prop_assert_eq!(&reg.parse_ctp(&hex.to_lowercase()).unwrap(), &c);
        let off = reg.describe_off(&c).unwrap();
        prop_assert_eq!(reg.parse_ctp(&off).unwrap(), c);
    }

    #[test]
    fn bd_is_antisymmetric(a in curve(), f in 0.5..2.0f64, j in prop::collection::vec(-0.03..0.03f64, 4)) {
        let t = shifted(a.clone(), f, j);
        let fwd = bd_delta(&a, &t).unwrap();
        let back = bd_delta(&t, &a).unwrap();
        let product = (1.0 + fwd / 100.0) * (1.0 + back / 100.0);
        prop_assert!((product - 1.0).abs() < 1e-9, "{fwd} {back}");
    }

    #[test]
    fn bd_ignores_common_cost_scale_and_point_order(
        a in curve(),
        f in 0.5..2.0f64,
        j in prop::collection::vec(-0.03..0.03f64, 4),
        k in 0.01..100.0f64,
        rot in 0usize..4,
    ) {
        let t = shifted(a.clone(), f, j);
        let base = bd_delta(&a, &t).unwrap();
        let scale = |v: &[(f64, f64)]| v.iter().map(|&(c, q)| (c * k, q)).collect::<Vec<_>>();
        let scaled = bd_delta(&scale(&a), &scale(&t)).unwrap();
        prop_assert!((scaled - base).abs() <= 1e-9 * base.abs().max(1.0));
        let mut shuffled = t.clone();
        shuffled.rotate_left(rot);
        shuffled.reverse();
        prop_assert_eq!(bd_delta(&a, &shuffled).unwrap(), base);
    }

    #[test]
    fn bd_of_uniform_cost_scale_is_exact(a in curve(), f in 0.3..3.0f64) {
        let t: Vec<_> = a.iter().map(|&(c, q)| (c * f, q)).collect();
        let d = bd_delta(&a, &t).unwrap();
        prop_assert!((d - 100.0 * (f - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn front_is_complete_and_idempotent(pts in points()) {
        let front = pareto_front(&pts).unwrap();
        for p in &front {
            prop_assert!(!pts.iter().any(|q| q.dominates(p)));
        }
        for p in &pts {
            let on_front = front.iter().any(|f| f.bdr == p.bdr && f.bdde == p.bdde);
            prop_assert!(on_front || front.iter().any(|f| f.dominates(p)));
        }
        prop_assert!(front.windows(2).all(|w| w[0].bdr < w[1].bdr && w[0].bdde > w[1].bdde));
        prop_assert_eq!(pareto_front(&front).unwrap(), front);
    }

    #[test]
    fn front_merge_is_associative(a in points(), b in points(), c in points()) {
        let join = |x: &[ProfilePoint], y: &[ProfilePoint]| -> Vec<ProfilePoint> {
            pareto_front(&[x, y].concat()).unwrap()
        };
        let left = join(&join(&a, &b), &c);
        let right = join(&a, &join(&b, &c));
        let all = pareto_front(&[a, b, c].concat()).unwrap();
        prop_assert_eq!(coords(&left), coords(&all));
        prop_assert_eq!(coords(&right), coords(&all));
    }

    #[test]
    fn selection_is_consistent(pts in points(), threshold in 0.5..20.0f64) {
        let s = select_profiles(&pts, SelectionCriteria { lbe_bdr_threshold: threshold }).unwrap();
        let min_bdde = pts.iter().map(|p| p.bdde).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(s.ee.bdde, min_bdde);
        let min_sum = pts.iter().map(|p| p.bdde + p.bdr).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(s.ebe.bdde + s.ebe.bdr, min_sum);
        let front = pareto_front(&pts).unwrap();
        let expect: Vec<_> = front.iter().filter(|p| p.bdr < threshold).cloned().collect();
        prop_assert_eq!(s.lbe, expect);
    }

    #[test]
    fn ci_verdict_is_scale_free(s in prop::collection::vec(50.0..150.0f64, 2..30), k in 0.01..100.0f64) {
        let a = ci_check(&s, 0.99, 0.02).unwrap();
        let scaled: Vec<f64> = s.iter().map(|v| v * k).collect();
        let b = ci_check(&scaled, 0.99, 0.02).unwrap();
        prop_assert!((b.half_width - k * a.half_width).abs() <= 1e-9 * b.half_width.max(1.0));
        let margin = (a.half_width - 0.02 * a.mean).abs() / a.mean;
        if margin > 1e-9 {
            prop_assert_eq!(a.verdict, b.verdict);
        }
        prop_assert!(a.verdict != Verdict::Insufficient);
    }
}
