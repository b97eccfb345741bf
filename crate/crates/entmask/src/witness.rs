//! End-to-end witness evaluation and parameter scans.
//!
//! An evaluation builds the exact joint outcome matrices for offset-zero
//! d-slit masks in both detection planes, sums the identity pairing in
//! the image plane and the reflected pairing in the far field, and
//! compares `I_d = C_xx + C_pp` against the separability bound. A
//! positive margin over the bound's reported value certifies
//! entanglement.

use crate::bound::{bound_bracket, BoundResult, DEFAULT_N_MAX, DEFAULT_TARGET_WIDTH};
use crate::correlate::{
    identity_pairing, mirror_pairing, mutual_predictability, WitnessStatistics,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::jointdist::{mask_joint_matrix_with_exec, DEFAULT_SUPPORT_SIGMAS};
use crate::masks::MaskSpec;
use crate::model::{DetectionModel, Domain};
use serde::{Deserialize, Serialize};

/// Outcome of a witness evaluation against the separability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessResult {
    /// Predictabilities and their standard errors (zero for quadrature
    /// evaluations, Poisson estimates for counted data).
    pub stats: WitnessStatistics,
    /// The separability bound with its certified bracket.
    pub bound: BoundResult,
    /// `stats.i_d - bound.value`.
    pub margin: f64,
    /// True when the margin is strictly positive.
    pub detected: bool,
    /// Margin in units of its standard error; ±infinity when the
    /// statistics are exact (zero error).
    pub significance: f64,
}

impl WitnessResult {
    pub(crate) fn from_parts(stats: WitnessStatistics, bound: BoundResult) -> WitnessResult {
        let margin = stats.i_d - bound.value;
        let significance = if stats.sigma_i > 0.0 {
            margin / stats.sigma_i
        } else if margin > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        WitnessResult {
            stats,
            bound,
            margin,
            detected: margin > 0.0,
            significance,
        }
    }
}

/// One row of a parameter scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub d: usize,
    pub tx_mm: f64,
    pub tp_mm: f64,
    pub c_xx: f64,
    pub c_pp: f64,
    pub i_d: f64,
    /// Reported separability bound (certified upper edge, three
    /// decimals).
    pub q_d: f64,
    pub margin: f64,
    pub detected: bool,
}

/// Scan results in lexicographic `(d, Tx, Tp)` order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
}

/// Evaluate the witness for d-outcome masks of period `tx` (image
/// plane) and `tp` (far field), both offset-aligned at zero, with
/// per-entry quadrature tolerance `tol`.
pub fn evaluate_witness(
    model: &DetectionModel,
    d: usize,
    tx: f64,
    tp: f64,
    tol: f64,
) -> Result<WitnessResult> {
    evaluate_witness_with_exec(model, d, tx, tp, tol, Exec::Auto)
}

/// [`evaluate_witness`] with an explicit execution policy.
pub fn evaluate_witness_with_exec(
    model: &DetectionModel,
    d: usize,
    tx: f64,
    tp: f64,
    tol: f64,
    exec: Exec,
) -> Result<WitnessResult> {
    let spec_x = MaskSpec::new(d, tx)?;
    let spec_p = MaskSpec::new(d, tp)?;
    let j_xx = mask_joint_matrix_with_exec(
        model,
        Domain::Ip,
        &spec_x,
        &spec_x,
        tol,
        DEFAULT_SUPPORT_SIGMAS,
        exec,
    )?;
    let j_pp = mask_joint_matrix_with_exec(
        model,
        Domain::Ff,
        &spec_p,
        &spec_p,
        tol,
        DEFAULT_SUPPORT_SIGMAS,
        exec,
    )?;
    let c_xx = mutual_predictability(&j_xx, &identity_pairing(d))?;
    let c_pp = mutual_predictability(&j_pp, &mirror_pairing(d))?;
    let stats = WitnessStatistics {
        c_xx,
        c_pp,
        i_d: c_xx + c_pp,
        sigma_c_xx: 0.0,
        sigma_c_pp: 0.0,
        sigma_i: 0.0,
    };
    let bound = bound_bracket(d, tx, tp, model.c, DEFAULT_TARGET_WIDTH, DEFAULT_N_MAX)?;
    Ok(WitnessResult::from_parts(stats, bound))
}

fn sorted_unique_d(d_list: &[usize]) -> Result<Vec<usize>> {
    if d_list.is_empty() {
        return Err(Error::Parameter("scan needs at least one outcome count".into()));
    }
    let mut ds = d_list.to_vec();
    ds.sort_unstable();
    ds.dedup();
    Ok(ds)
}

fn sorted_unique_t(t_list: &[f64], name: &str) -> Result<Vec<f64>> {
    if t_list.is_empty() {
        return Err(Error::Parameter(format!("scan needs at least one {name} period")));
    }
    for &t in t_list {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Parameter(format!(
                "scan {name} periods must be positive and finite, got {t}"
            )));
        }
    }
    let mut ts = t_list.to_vec();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    Ok(ts)
}

/// Evaluate the witness over the full `d × Tx × Tp` grid, rows in
/// lexicographic `(d, Tx, Tp)` order.
pub fn scan_grid(
    model: &DetectionModel,
    d_list: &[usize],
    tx_list: &[f64],
    tp_list: &[f64],
    tol: f64,
) -> Result<ScanTable> {
    scan_grid_with_exec(model, d_list, tx_list, tp_list, tol, Exec::Auto)
}

/// [`scan_grid`] with an explicit execution policy.
pub fn scan_grid_with_exec(
    model: &DetectionModel,
    d_list: &[usize],
    tx_list: &[f64],
    tp_list: &[f64],
    tol: f64,
    exec: Exec,
) -> Result<ScanTable> {
    let ds = sorted_unique_d(d_list)?;
    let txs = sorted_unique_t(tx_list, "Tx")?;
    let tps = sorted_unique_t(tp_list, "Tp")?;
    let mut points = Vec::with_capacity(ds.len() * txs.len() * tps.len());
    for &d in &ds {
        for &tx in &txs {
            for &tp in &tps {
                points.push((d, tx, tp));
            }
        }
    }
    scan_points(model, &points, tol, exec)
}

/// Equal-period scan `Tx = Tp = T` over `d_list × t_list`, rows in
/// lexicographic `(d, T)` order.
pub fn scan_equal_periods(
    model: &DetectionModel,
    d_list: &[usize],
    t_list: &[f64],
    tol: f64,
) -> Result<ScanTable> {
    scan_equal_periods_with_exec(model, d_list, t_list, tol, Exec::Auto)
}

/// [`scan_equal_periods`] with an explicit execution policy.
pub fn scan_equal_periods_with_exec(
    model: &DetectionModel,
    d_list: &[usize],
    t_list: &[f64],
    tol: f64,
    exec: Exec,
) -> Result<ScanTable> {
    let ds = sorted_unique_d(d_list)?;
    let ts = sorted_unique_t(t_list, "mask")?;
    let mut points = Vec::with_capacity(ds.len() * ts.len());
    for &d in &ds {
        for &t in &ts {
            points.push((d, t, t));
        }
    }
    scan_points(model, &points, tol, exec)
}

fn scan_points(
    model: &DetectionModel,
    points: &[(usize, f64, f64)],
    tol: f64,
    exec: Exec,
) -> Result<ScanTable> {
    let mut rows = Vec::with_capacity(points.len());
    for &(d, tx, tp) in points {
        let r = evaluate_witness_with_exec(model, d, tx, tp, tol, exec)?;
        rows.push(ScanRow {
            d,
            tx_mm: tx,
            tp_mm: tp,
            c_xx: r.stats.c_xx,
            c_pp: r.stats.c_pp,
            i_d: r.stats.i_d,
            q_d: r.bound.value,
            margin: r.margin,
            detected: r.detected,
        });
    }
    Ok(ScanTable { rows })
}

/// One row of the reference measurement grid: mask periods, measured
/// witness value with its standard error, and the published bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub d: usize,
    pub tx_mm: f64,
    pub tp_mm: f64,
    pub i_measured: f64,
    pub i_error: f64,
    pub q_published: f64,
}

/// The reference measurement grid: eleven (d, Tx, Tp) tuples with the
/// measured witness values and published bounds.
pub const REFERENCE_ROWS: [ReferenceRow; 11] = [
    ReferenceRow { d: 2, tx_mm: 3.36, tp_mm: 1.20, i_measured: 1.73, i_error: 0.01, q_published: 1.570 },
    ReferenceRow { d: 3, tx_mm: 3.36, tp_mm: 2.16, i_measured: 1.69, i_error: 0.02, q_published: 1.525 },
    ReferenceRow { d: 4, tx_mm: 7.44, tp_mm: 2.16, i_measured: 1.72, i_error: 0.02, q_published: 1.557 },
    ReferenceRow { d: 5, tx_mm: 6.00, tp_mm: 2.64, i_measured: 1.66, i_error: 0.02, q_published: 1.488 },
    ReferenceRow { d: 6, tx_mm: 7.92, tp_mm: 4.08, i_measured: 1.68, i_error: 0.02, q_published: 1.546 },
    ReferenceRow { d: 8, tx_mm: 7.92, tp_mm: 5.76, i_measured: 1.61, i_error: 0.04, q_published: 1.517 },
    ReferenceRow { d: 9, tx_mm: 8.64, tp_mm: 5.76, i_measured: 1.56, i_error: 0.05, q_published: 1.491 },
    ReferenceRow { d: 10, tx_mm: 7.20, tp_mm: 5.04, i_measured: 1.47, i_error: 0.05, q_published: 1.438 },
    ReferenceRow { d: 12, tx_mm: 7.20, tp_mm: 8.64, i_measured: 1.49, i_error: 0.06, q_published: 1.454 },
    ReferenceRow { d: 15, tx_mm: 8.64, tp_mm: 7.92, i_measured: 1.31, i_error: 0.11, q_published: 1.434 },
    ReferenceRow { d: 20, tx_mm: 8.64, tp_mm: 8.64, i_measured: 1.16, i_error: 0.14, q_published: 1.386 },
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_detection_model, OpticalSetup, SincTreatment, SourceParams};
    use approx::assert_abs_diff_eq;

    fn reference_model() -> DetectionModel {
        build_detection_model(
            &SourceParams::reference(),
            &OpticalSetup::reference(),
            SincTreatment::GaussianVarianceMatch,
        )
        .unwrap()
    }

    #[test]
    fn reference_two_outcome_point_is_detected() {
        let m = reference_model();
        let r = evaluate_witness(&m, 2, 3.36, 1.20, 1e-9).unwrap();
        assert_abs_diff_eq!(r.stats.c_xx, 0.967590340, epsilon = 1e-7);
        assert_abs_diff_eq!(r.stats.c_pp, 0.950635066, epsilon = 1e-7);
        assert_abs_diff_eq!(r.stats.i_d, 1.918225406, epsilon = 2e-7);
        assert_eq!(r.bound.value, 1.569);
        assert!(r.margin >= 0.14, "margin {}", r.margin);
        assert!(r.detected);
        assert!(r.significance.is_infinite() && r.significance > 0.0);
    }

    #[test]
    fn narrow_periods_are_not_detected() {
        let m = reference_model();
        let r = evaluate_witness(&m, 2, 0.24, 0.24, 1e-9).unwrap();
        assert_abs_diff_eq!(r.stats.c_xx, 0.582207798, epsilon = 1e-7);
        assert_abs_diff_eq!(r.stats.c_pp, 0.753378354, epsilon = 1e-7);
        assert_abs_diff_eq!(r.margin, -0.29441, epsilon = 1e-4);
        assert!(!r.detected);
        assert!(r.significance.is_infinite() && r.significance < 0.0);
    }

    #[test]
    fn equal_period_scan_row_matches_frozen_values() {
        let m = reference_model();
        let table = scan_equal_periods(&m, &[3], &[2.40], 1e-9).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert_abs_diff_eq!(row.c_xx, 0.931950792, epsilon = 1e-7);
        assert_abs_diff_eq!(row.c_pp, 0.962975960, epsilon = 1e-7);
        assert_abs_diff_eq!(row.i_d, row.c_xx + row.c_pp, epsilon = 1e-15);
        assert_abs_diff_eq!(row.margin, row.i_d - row.q_d, epsilon = 1e-15);
    }

    #[test]
    fn scan_rows_are_lexicographically_ordered() {
        let m = reference_model();
        let table = scan_grid(&m, &[3, 2], &[0.48, 0.24], &[0.36], 1e-6).unwrap();
        let order: Vec<(usize, f64, f64)> =
            table.rows.iter().map(|r| (r.d, r.tx_mm, r.tp_mm)).collect();
        assert_eq!(
            order,
            vec![
                (2, 0.24, 0.36),
                (2, 0.48, 0.36),
                (3, 0.24, 0.36),
                (3, 0.48, 0.36),
            ]
        );
    }

    #[test]
    fn scan_input_validation() {
        let m = reference_model();
        assert!(scan_grid(&m, &[], &[0.24], &[0.24], 1e-6).is_err());
        assert!(scan_grid(&m, &[2], &[], &[0.24], 1e-6).is_err());
        assert!(scan_grid(&m, &[2], &[0.24], &[-0.1], 1e-6).is_err());
        assert!(scan_equal_periods(&m, &[2], &[f64::NAN], 1e-6).is_err());
        assert!(evaluate_witness(&m, 1, 1.0, 1.0, 1e-6).is_err());
    }

    #[test]
    fn sequential_and_auto_policies_agree_bitwise() {
        let m = reference_model();
        let auto = evaluate_witness_with_exec(&m, 3, 1.2, 0.96, 1e-9, Exec::Auto).unwrap();
        let seq = evaluate_witness_with_exec(&m, 3, 1.2, 0.96, 1e-9, Exec::Sequential).unwrap();
        assert_eq!(auto.stats.c_xx.to_bits(), seq.stats.c_xx.to_bits());
        assert_eq!(auto.stats.c_pp.to_bits(), seq.stats.c_pp.to_bits());
        assert_eq!(auto.margin.to_bits(), seq.margin.to_bits());
    }
}
