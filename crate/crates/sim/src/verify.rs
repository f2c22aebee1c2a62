//! Pass/fail table of the numerical oracles.

use std::fmt;

use delaydisp_core::verify::{
    clamped_eigen_reference, dense_cross_check, dirichlet_d2_eigen, mms_convergence,
    zero_history_max, ManufacturedCase, RefinementStudy,
};
use delaydisp_core::{
    sample_profile, BdfOrder, DampingFamily, DampingProfile, ModelParams, Operators, SpatialGrid,
};

use crate::error::SimResult;

const ORDER_TOL: f64 = 0.3;
const DENSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub name: String,
    pub observed: f64,
    pub expected: String,
    pub pass: bool,
    /// Raw numbers behind the observation.
    pub detail: String,
}

impl fmt::Display for VerifyRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<34} {:>12.5e}  expected {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.expected
        )
    }
}

fn order_row(name: &str, study: &RefinementStudy, target: f64) -> VerifyRow {
    let observed = study.observed_order();
    VerifyRow {
        name: name.into(),
        observed,
        expected: format!("{target} +/- {ORDER_TOL}"),
        pass: study.monotone() && (observed - target).abs() <= ORDER_TOL,
        detail: study.table(),
    }
}

/// Manufactured case used by the refinement studies.
pub fn manufactured_case() -> SimResult<ManufacturedCase> {
    let params = ModelParams::new(0.01, 0.001, 0.4, 1.0)?;
    let profile = DampingProfile::new(DampingFamily::Affine { b0: 1.0, c1: 1.0 }, 1.0)?;
    Ok(ManufacturedCase::new(params, profile))
}

pub const MMS_T_END: f64 = 1.0;
pub const MMS_GRID_SIZES: [usize; 3] = [19, 39, 79];
pub const MMS_SPATIAL_DT: f64 = 1e-4;
pub const MMS_DT_VALUES: [f64; 3] = [0.04, 0.02, 0.01];
/// BDF2 temporal errors drop below the spatial floor unless the grid is this fine.
pub const MMS_BDF2_N: usize = 1599;
pub const MMS_BDF1_N: usize = 799;

/// Spatial and BDF1/BDF2 temporal orders of the manufactured solution.
pub fn mms_rows() -> SimResult<Vec<VerifyRow>> {
    let case = manufactured_case()?;
    let bdf2 = mms_convergence(
        &case,
        &MMS_GRID_SIZES,
        MMS_SPATIAL_DT,
        MMS_BDF2_N,
        &MMS_DT_VALUES,
        MMS_T_END,
        BdfOrder::Two,
    )?;
    let bdf1_errors = MMS_DT_VALUES
        .iter()
        .map(|&dt| case.error(MMS_BDF1_N, dt, MMS_T_END, BdfOrder::One))
        .collect::<Result<Vec<_>, _>>()?;
    let bdf1 = RefinementStudy::from_errors(MMS_DT_VALUES.to_vec(), bdf1_errors);
    Ok(vec![
        order_row("mms spatial order", &bdf2.spatial, 2.0),
        order_row("mms temporal order bdf1", &bdf1, 1.0),
        order_row("mms temporal order bdf2", &bdf2.temporal, 2.0),
    ])
}

/// Largest banded/dense discrepancy over a fixed family of step systems at `n = 32`.
pub fn dense_row() -> SimResult<VerifyRow> {
    let n = 32;
    let grid = SpatialGrid::new(1.0, n)?;
    let ops = Operators::assemble(&grid);
    let params = ModelParams::new(0.01, 0.001, 0.0, 1.0)?;
    let profile = DampingProfile::new(
        DampingFamily::Combined {
            b0: 1.0,
            c1: 2.0,
            c2: 1.0,
            k: 2.0,
        },
        1.0,
    )?;
    let a = sample_profile(&profile, &grid);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let s = case as f64;
        let c: Vec<f64> = (0..n).map(|i| (1.7 * i as f64 + s).sin()).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (0.3 * i as f64 * (s + 1.0)).cos()).collect();
        for alpha in [1e3, 1.5e3, 1e6] {
            worst = worst.max(dense_cross_check(&ops, &params, &a, alpha, &c, &rhs)?);
        }
    }
    Ok(VerifyRow {
        name: "dense cross-check n=32".into(),
        observed: worst,
        expected: format!("< {DENSE_TOL:e}"),
        pass: worst < DENSE_TOL,
        detail: String::new(),
    })
}

/// Clamped eigenvalue error ratio between `n = 100` and `n = 200`.
pub fn eigen_row() -> SimResult<VerifyRow> {
    let levels = clamped_eigen_reference(&[50, 100, 200, 400], 1.0)?;
    let ratio = levels[1].error / levels[2].error;
    let detail = levels
        .iter()
        .map(|l| format!("n={:<4} lambda={:.8e} error={:.4e}", l.n, l.lambda, l.error))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(VerifyRow {
        name: "clamped eigen error ratio".into(),
        observed: ratio,
        expected: "4.0 +/- 0.5".into(),
        pass: (ratio - 4.0).abs() <= 0.5,
        detail,
    })
}

pub fn d2_row() -> SimResult<VerifyRow> {
    let (computed, exact) = dirichlet_d2_eigen(100, 1.0)?;
    let err = (computed - exact).abs() / exact;
    Ok(VerifyRow {
        name: "dirichlet d2 eigenvalue".into(),
        observed: err,
        expected: "< 1e-12 relative".into(),
        pass: err < 1e-12,
        detail: format!("computed {computed:.15e} exact {exact:.15e}"),
    })
}

pub fn zero_history_row() -> SimResult<VerifyRow> {
    let m = zero_history_max(49, 1e-3, 1.0, 0.5)?;
    Ok(VerifyRow {
        name: "zero history stays zero".into(),
        observed: m,
        expected: "0".into(),
        pass: m == 0.0,
        detail: String::new(),
    })
}

/// Runs every oracle.
pub fn verify_table() -> SimResult<Vec<VerifyRow>> {
    let mut rows = mms_rows()?;
    rows.push(dense_row()?);
    rows.push(eigen_row()?);
    rows.push(d2_row()?);
    rows.push(zero_history_row()?);
    Ok(rows)
}
