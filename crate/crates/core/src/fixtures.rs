//! Published validation results used as reference data in tests and examples.
//!
//! Each row holds the BD values (percent, against the `slower` preset) of a
//! profile on the JVET or UVG sequence set, and the profile's hex mask under
//! the default 30-tool registry when its tool usage is known.

use crate::bd::QualityAxis;
use crate::ctp::ToolRegistry;
use crate::pareto::ProfilePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Encoder preset.
    Preset,
    /// Profile from earlier work on the same search.
    Prior,
    /// Strategy result (EE / EBE).
    Strategy,
    /// Low-bit-rate energy-efficient profile.
    Lbe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationRow {
    pub label: &'static str,
    pub kind: RowKind,
    pub mask: Option<&'static str>,
    pub bdr_vmaf: f64,
    pub bdde_vmaf: f64,
    pub bdr_psnr: f64,
    pub bdde_psnr: f64,
}

const fn row(label: &'static str, kind: RowKind, mask: Option<&'static str>, v: [f64; 4]) -> ValidationRow {
    ValidationRow {
        label,
        kind,
        mask,
        bdr_vmaf: v[0],
        bdde_vmaf: v[1],
        bdr_psnr: v[2],
        bdde_psnr: v[3],
    }
}

use RowKind::*;

pub const MASK_PRIOR_EE: &str = "3E118C28";
pub const MASK_PRIOR_EBE: &str = "3E318C68";
pub const MASK_EA_EE: &str = "3059D420";
pub const MASK_EA_EBE: &str = "3047ECE8";
pub const MASK_E1_EE: &str = "3419DC68";
pub const MASK_E1_EBE: &str = "345FDCEF";
pub const MASK_CA_EE: &str = "200FAC68";
pub const MASK_CA_EBE: &str = "200FACB8";
pub const MASK_C1_EE: &str = "341FEC7E";
pub const MASK_C1_EBE: &str = "303FEC7E";
pub const MASK_LBE1: &str = "37FFFFFF";
pub const MASK_LBE2: &str = "373FFFFF";
pub const MASK_LBE3: &str = "367FFFFF";
pub const MASK_LBE4: &str = "343FECFE";

/// JVET common-test-condition sequence set.
pub const JVET_ROWS: [ValidationRow; 16] = [
    row("Slow", Preset, None, [5.31, -1.31, 6.03, -1.15]),
    row("Medium", Preset, None, [10.89, -0.97, 11.97, -0.78]),
    row("prior EE", Prior, Some(MASK_PRIOR_EE), [30.17, -37.66, 27.62, -36.69]),
    row("prior EBE", Prior, Some(MASK_PRIOR_EBE), [15.37, -28.28, 20.33, -26.79]),
    row("E1 EE", Strategy, Some(MASK_E1_EE), [27.00, -45.31, 27.13, -44.50]),
    row("EA EE", Strategy, Some(MASK_EA_EE), [28.62, -44.84, 29.27, -44.01]),
    row("CA EE", Strategy, Some(MASK_CA_EE), [22.19, -43.77, 24.21, -42.66]),
    row("C1 EE", Strategy, Some(MASK_C1_EE), [19.66, -41.34, 18.19, -40.48]),
    row("EA EBE", Strategy, Some(MASK_EA_EBE), [10.30, -40.37, 20.47, -38.29]),
    row("CA EBE", Strategy, Some(MASK_CA_EBE), [9.42, -38.51, 18.85, -36.48]),
    row("E1 EBE", Strategy, Some(MASK_E1_EBE), [9.28, -37.65, 15.83, -36.02]),
    row("C1 EBE", Strategy, Some(MASK_C1_EBE), [7.33, -30.19, 11.37, -29.02]),
    row("LBE 4", Lbe, Some(MASK_LBE4), [4.88, -25.54, 10.06, -24.48]),
    row("LBE 3", Lbe, Some(MASK_LBE3), [2.54, -17.55, 2.85, -17.30]),
    row("LBE 2", Lbe, Some(MASK_LBE2), [1.45, -11.41, 3.59, -11.30]),
    row("LBE 1", Lbe, Some(MASK_LBE1), [-0.25, -4.86, -0.19, -4.81]),
];

/// UVG sequence set.
pub const UVG_ROWS: [ValidationRow; 16] = [
    row("Slow", Preset, None, [3.45, -0.68, 3.86, -0.94]),
    row("Medium", Preset, None, [7.88, -0.69, 8.44, -0.96]),
    row("prior EE", Prior, Some(MASK_PRIOR_EE), [23.55, -39.37, 22.86, -38.38]),
    row("prior EBE", Prior, Some(MASK_PRIOR_EBE), [11.48, -27.50, 15.92, -26.89]),
    row("E1 EE", Strategy, Some(MASK_E1_EE), [21.29, -47.12, 23.12, -46.84]),
    row("EA EE", Strategy, Some(MASK_EA_EE), [20.62, -46.68, 23.81, -46.37]),
    row("CA EE", Strategy, Some(MASK_CA_EE), [15.62, -44.77, 20.28, -44.34]),
    row("C1 EE", Strategy, Some(MASK_C1_EE), [15.46, -44.14, 16.85, -43.68]),
    row("EA EBE", Strategy, Some(MASK_EA_EBE), [7.87, -37.83, 17.65, -37.11]),
    row("CA EBE", Strategy, Some(MASK_CA_EBE), [8.19, -36.24, 19.51, -35.16]),
    row("E1 EBE", Strategy, Some(MASK_E1_EBE), [6.14, -35.15, 11.34, -34.76]),
    row("C1 EBE", Strategy, Some(MASK_C1_EBE), [6.10, -28.64, 10.14, -28.21]),
    row("LBE 4", Lbe, Some(MASK_LBE4), [3.74, -19.94, 9.63, -19.52]),
    row("LBE 3", Lbe, Some(MASK_LBE3), [2.60, -16.40, 1.61, -16.34]),
    row("LBE 2", Lbe, Some(MASK_LBE2), [2.47, -11.78, 4.11, -11.71]),
    row("LBE 1", Lbe, Some(MASK_LBE1), [-0.12, -4.65, -0.11, -4.55]),
];

impl ValidationRow {
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
}

/// Rows as labeled profile points on one quality axis.
pub fn profile_points(rows: &[ValidationRow], registry: &ToolRegistry, axis: QualityAxis) -> Vec<ProfilePoint> {
    rows.iter()
        .map(|r| {
            let ctp = r.mask.map(|m| registry.parse_ctp(m).expect("fixture masks are valid"));
            ProfilePoint::new(ctp, r.bdr(axis), r.bdde(axis), Some(r.label.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_parse_under_default_registry() {
        let reg = ToolRegistry::vvc_default();
        for r in JVET_ROWS.iter().chain(&UVG_ROWS) {
            if let Some(m) = r.mask {
                assert_eq!(reg.serialize_ctp(&reg.parse_ctp(m).unwrap()).unwrap(), m);
            }
        }
    }

    #[test]
    fn e1_ee_drops_all_in_loop_filters() {
        let reg = ToolRegistry::vvc_default();
        let c = reg.parse_ctp(MASK_E1_EE).unwrap();
        for name in ["ALF", "CCALF", "DBF", "LMCS", "SAO", "DMVR", "BDOF"] {
            assert!(!c.is_enabled(reg.index_of(name).unwrap()), "{name}");
        }
        let c1 = reg.parse_ctp(MASK_C1_EBE).unwrap();
        for name in ["ALF", "AFFINE", "MIP", "LFNST"] {
            assert!(c1.is_enabled(reg.index_of(name).unwrap()), "{name}");
        }
    }
}
