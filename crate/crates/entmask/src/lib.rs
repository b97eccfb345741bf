//! Entanglement certification for photon pairs behind periodic slit
//! masks.
//!
//! The library models a two-photon source whose joint transverse
//! densities at the image plane (IP) and far field (FF) are
//! double-Gaussian, computes the d-outcome statistics produced by
//! periodic d-slit masks on each arm, and evaluates the witness
//! `I_d = C_xx + C_pp` against a rigorously bracketed separability bound
//! `Q_d(Tx, Tp)`. A margin `I_d - Q_d > 0` certifies entanglement.
//!
//! Module map: [`model`] builds the physical parameters, [`masks`] the
//! slit geometry, [`jointdist`] integrates outcome probabilities,
//! [`bound`] brackets the separability bound, [`correlate`] and
//! [`witness`] turn either into witness values and period scans,
//! [`montecarlo`] simulates counts, [`io`] reads and writes the file
//! formats, and [`exec`] picks the execution policy ([`numeric`] holds
//! the shared quadrature and special-function kernels).

// Validation guards are written `!(x > 0.0)` rather than `x <= 0.0`
// throughout: the negated form also rejects NaN, which must never pass.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod correlate;
pub mod error;
pub mod exec;
pub mod io;
pub mod jointdist;
pub mod masks;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod witness;

pub use bound::{
    b_function, bound_bracket, bound_series, gamma_parameter, BoundResult, DEFAULT_N_MAX,
    DEFAULT_TARGET_WIDTH,
};
pub use correlate::{
    best_permutation, identity_pairing, mirror_pairing, mutual_predictability, poisson_errors,
    witness_value, CountMatrix, WitnessStatistics,
};
pub use error::{Error, Result};
pub use exec::{configure_threads, Exec};
pub use io::{
    read_config, read_count_matrix, read_fine_histogram, read_joint_matrix, read_scan_table,
    rebin_histogram, render_count_matrix, render_joint_matrix, render_scan_table,
    tabulate_histogram, write_count_matrix, write_fine_histogram, write_joint_matrix,
    write_scan_table, FineHistogram,
};
pub use jointdist::{
    mask_joint_matrix, mask_joint_matrix_with_exec, rectangle_probability, JointMatrix, Rect,
    DEFAULT_SUPPORT_SIGMAS,
};
pub use masks::{fourier_coefficient, mask_index, mask_value, slit_segments, MaskSpec};
pub use model::{
    build_detection_model, DetectionModel, Domain, OpticalSetup, SincTreatment, SourceParams,
};
pub use montecarlo::{
    displacement_expectation, displacement_scan, sample_pairs, simulate_counts,
    simulate_counts_with_exec, DisplacementCurve, SimConfig, GENERATOR_ID,
};
pub use witness::{
    evaluate_witness, evaluate_witness_with_exec, scan_equal_periods,
    scan_equal_periods_with_exec, scan_grid, scan_grid_with_exec, ReferenceRow, ScanRow,
    ScanTable, WitnessResult, REFERENCE_ROWS,
};
