//! Pareto front over (BDR, BDDE) and EE / EBE / LBE profile selection.
//!
//! Both coordinates are minimized. `p` dominates `q` when `p.bdr <= q.bdr`
//! and `p.bdde <= q.bdde` with at least one strict inequality.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::bd::{BdReport, QualityAxis};
use crate::ctp::Ctp;

pub const DEFAULT_LBE_THRESHOLD: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("point set is empty")]
    Empty,
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(String),
    #[error("LBE threshold must be > 0, got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub ctp: Option<Ctp>,
    pub bdr: f64,
    pub bdde: f64,
    pub label: Option<String>,
}

impl ProfilePoint {
    pub fn new(ctp: Option<Ctp>, bdr: f64, bdde: f64, label: Option<String>) -> Self {
        Self { ctp, bdr, bdde, label }
    }

    pub fn labeled(label: &str, bdr: f64, bdde: f64) -> Self {
        Self::new(None, bdr, bdde, Some(label.to_string()))
    }

    pub fn from_report(ctp: Ctp, report: &BdReport, axis: QualityAxis) -> Self {
        Self::new(Some(ctp), report.bdr(axis), report.bdde(axis), None)
    }

    pub fn dominates(&self, other: &ProfilePoint) -> bool {
        self.bdr <= other.bdr && self.bdde <= other.bdde && (self.bdr < other.bdr || self.bdde < other.bdde)
    }

    /// Label if present, else the hex mask, else the coordinates.
    pub fn name(&self) -> String {
        match (&self.label, &self.ctp) {
            (Some(l), _) => l.clone(),
            (None, Some(c)) => c.to_hex(),
            (None, None) => format!("({}, {})", self.bdr, self.bdde),
        }
    }
}

fn check(points: &[ProfilePoint]) -> Result<(), ParetoError> {
    if points.is_empty() {
        return Err(ParetoError::Empty);
    }
    if let Some(p) = points.iter().find(|p| !p.bdr.is_finite() || !p.bdde.is_finite()) {
        return Err(ParetoError::NonFinite(p.name()));
    }
    Ok(())
}

/// Non-dominated subset sorted by ascending BDR. Exact duplicates collapse to
/// the representative whose label sorts first.
pub fn pareto_front(points: &[ProfilePoint]) -> Result<Vec<ProfilePoint>, ParetoError> {
    check(points)?;
    let mut order: Vec<&ProfilePoint> = points.iter().collect();
    order.sort_by(|a, b| {
        a.bdr
            .total_cmp(&b.bdr)
            .then(a.bdde.total_cmp(&b.bdde))
            .then_with(|| a.label.cmp(&b.label))
    });
    let mut front: Vec<ProfilePoint> = Vec::new();
    let mut best_bdde = f64::INFINITY;
    for p in order {
        if p.bdde < best_bdde {
            best_bdde = p.bdde;
            front.push(p.clone());
        }
    }
    Ok(front)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionCriteria {
    pub lbe_bdr_threshold: f64,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        Self {
            lbe_bdr_threshold: DEFAULT_LBE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// Minimum BDDE.
    pub ee: ProfilePoint,
    /// Minimum BDDE + BDR.
    pub ebe: ProfilePoint,
    /// Front members with BDR below the threshold, ascending BDR.
    pub lbe: Vec<ProfilePoint>,
}

fn argmin_by(points: &[ProfilePoint], key: impl Fn(&ProfilePoint) -> f64) -> &ProfilePoint {
    points
        .iter()
        .min_by(|a, b| match key(a).total_cmp(&key(b)) {
            Ordering::Equal => a.bdr.total_cmp(&b.bdr),
            o => o,
        })
        .expect("non-empty")
}

pub fn select_profiles(points: &[ProfilePoint], criteria: SelectionCriteria) -> Result<Selection, ParetoError> {
    check(points)?;
    if criteria.lbe_bdr_threshold.is_nan() || criteria.lbe_bdr_threshold <= 0.0 {
        return Err(ParetoError::BadThreshold(criteria.lbe_bdr_threshold));
    }
    let ee = argmin_by(points, |p| p.bdde).clone();
    let ebe = argmin_by(points, |p| p.bdde + p.bdr).clone();
    let lbe = pareto_front(points)?
        .into_iter()
        .filter(|p| p.bdr < criteria.lbe_bdr_threshold)
        .collect();
    Ok(Selection { ee, ebe, lbe })
}

/// Two-column plot data: `bdr,bdde` header then one row per point.
pub fn write_plot_csv<W: Write>(points: &[ProfilePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "bdr,bdde")?;
    for p in points {
        writeln!(out, "{},{}", p.bdr, p.bdde)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(bdr: f64, bdde: f64) -> ProfilePoint {
        ProfilePoint::new(None, bdr, bdde, None)
    }

    fn coords(v: &[ProfilePoint]) -> Vec<(f64, f64)> {
        v.iter().map(|p| (p.bdr, p.bdde)).collect()
    }

    #[test]
    fn single_point() {
        assert_eq!(coords(&pareto_front(&[pt(0.0, 0.0)]).unwrap()), vec![(0.0, 0.0)]);
    }

    #[test]
    fn doubly_dominated_point_dropped() {
        let f = pareto_front(&[pt(10.0, -40.0), pt(5.0, -40.0), pt(10.0, -45.0)]).unwrap();
        assert_eq!(coords(&f), vec![(5.0, -40.0), (10.0, -45.0)]);
    }

    #[test]
    fn duplicates_collapse_to_first_label() {
        let a = ProfilePoint::labeled("b", 1.0, -1.0);
        let b = ProfilePoint::labeled("a", 1.0, -1.0);
        let f = pareto_front(&[a, b]).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].label.as_deref(), Some("a"));
    }

    #[test]
    fn empty_and_non_finite() {
        assert_eq!(pareto_front(&[]).unwrap_err(), ParetoError::Empty);
        assert!(matches!(
            pareto_front(&[pt(f64::NAN, 0.0)]).unwrap_err(),
            ParetoError::NonFinite(_)
        ));
        assert_eq!(
            select_profiles(&[], SelectionCriteria::default()).unwrap_err(),
            ParetoError::Empty
        );
    }

    #[test]
    fn selection_ties_prefer_lower_bdr() {
        let pts = [pt(3.0, -10.0), pt(2.0, -10.0), pt(0.0, -8.0), pt(-1.0, -7.0)];
        let s = select_profiles(&pts, SelectionCriteria::default()).unwrap();
        assert_eq!((s.ee.bdr, s.ee.bdde), (2.0, -10.0));
        // Sums: -7, -8, -8, -8 -> lowest bdr among ties.
        assert_eq!((s.ebe.bdr, s.ebe.bdde), (-1.0, -7.0));
        assert_eq!(coords(&s.lbe), vec![(-1.0, -7.0), (0.0, -8.0), (2.0, -10.0)]);
    }

    #[test]
    fn single_point_selection() {
        let s = select_profiles(&[pt(1.0, -2.0)], SelectionCriteria::default()).unwrap();
        assert_eq!(s.ee, s.ebe);
        assert_eq!(s.lbe.len(), 1);
        assert!(select_profiles(&[pt(1.0, -2.0)], SelectionCriteria { lbe_bdr_threshold: 0.0 }).is_err());
    }

    #[test]
    fn plot_csv() {
        let mut buf = Vec::new();
        write_plot_csv(&[pt(1.5, -2.25)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bdr,bdde\n1.5,-2.25\n");
    }
}
