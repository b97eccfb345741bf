//! Exact joint outcome statistics for masked coincidence detection.
//!
//! A d-slit mask on each arm partitions the detection plane into d
//! periodic outcome classes. This module integrates the joint density
//! over products of slit segments to produce the d×d outcome matrix.
//!
//! The two-dimensional integral over a rectangle reduces to one
//! dimension in the rotated coordinates: for fixed difference
//! `u = xA - xB`, the sum coordinate `v = xA + xB` is confined to
//! `[max(2a1-u, 2a2+u), min(2b1-u, 2b2+u)]` for the rectangle
//! `[a1,b1] x [a2,b2]`, whose Gaussian mass has a closed form. Only the
//! outer `u` integral runs on adaptive quadrature, split at the kinks of
//! the window bounds (and at sinc nodes for the numeric treatment) so
//! every panel sees a smooth integrand.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::masks::{slit_segments, MaskSpec};
use crate::model::{DetectionModel, Domain};
use crate::numeric::{gauss_interval_mass, integrate_panels};

/// Default half-width of the integration support, in units of the
/// single-detector marginal width.
pub const DEFAULT_SUPPORT_SIGMAS: f64 = 6.0;

/// One-sided Gaussian windows wider than this carry mass below 4e-18,
/// negligible against any tolerance the quadrature can certify.
const GAUSS_WINDOW_SIGMAS: f64 = 8.6;

/// Refusal threshold for the number of sinc-node panels in a single
/// rectangle integral; beyond this the numeric treatment cannot reach
/// the requested tolerance at acceptable cost.
const MAX_SINC_NODES: usize = 4096;

/// Initial uniform panels for each smooth piece of the reduced 1D
/// integrand. Pieces are kink-free and node-free by construction, so a
/// coarse start suffices; refinement handles the rest.
const PIECE_INITIAL_PANELS: usize = 4;

/// Axis-aligned coincidence rectangle: arm-A interval × arm-B interval,
/// in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
}

impl Rect {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Rect {
        Rect {
            a_lo: a.0,
            a_hi: a.1,
            b_lo: b.0,
            b_hi: b.1,
        }
    }

    fn is_empty(&self) -> bool {
        self.a_hi <= self.a_lo || self.b_hi <= self.b_lo
    }

    fn is_finite(&self) -> bool {
        [self.a_lo, self.a_hi, self.b_lo, self.b_hi]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Joint probability that photon A lands in `[rect.a_lo, rect.a_hi]` and
/// photon B in `[rect.b_lo, rect.b_hi]`, to absolute tolerance `tol`.
pub fn rectangle_probability(
    model: &DetectionModel,
    domain: Domain,
    rect: &Rect,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!(
            "rectangle tolerance must be positive, got {tol}"
        )));
    }
    if !rect.is_finite() {
        return Err(Error::Parameter(
            "rectangle bounds must be finite".into(),
        ));
    }
    if rect.is_empty() {
        return Ok(0.0);
    }
    rectangle_probability_impl(model, domain, rect, tol)
}

/// Half-width of the difference-coordinate window outside which the
/// remaining mass is negligible against `tol`. Gaussian marginals use a
/// fixed multiple of sigma; the algebraic sinc² tail needs a
/// tolerance-dependent cutoff (one-sided tail beyond the returned `u`
/// stays below `5e-4 * tol`).
fn minus_window(model: &DetectionModel, domain: Domain, tol: f64) -> f64 {
    if model.uses_sinc_marginal(domain) {
        let z_q = 4.0 * std::f64::consts::PI.sqrt() / (3.0 * model.beta.sqrt());
        let q_cubed = 2000.0 / (3.0 * z_q * model.beta.powi(2) * tol);
        model.alpha * q_cubed.cbrt()
    } else {
        GAUSS_WINDOW_SIGMAS * model.sigma_minus(domain)
    }
}

fn rectangle_probability_impl(
    model: &DetectionModel,
    domain: Domain,
    rect: &Rect,
    tol: f64,
) -> Result<f64> {
    let sigma_plus = model.sigma_plus(domain);
    let v_cap = GAUSS_WINDOW_SIGMAS * sigma_plus;

    // Reachable sum-coordinate range; if it clears the Gaussian window
    // the rectangle holds negligible mass.
    let v_min = rect.a_lo + rect.b_lo;
    let v_max = rect.a_hi + rect.b_hi;
    if v_min >= v_cap || v_max <= -v_cap {
        return Ok(0.0);
    }

    let u_cap = minus_window(model, domain, tol);
    let u_lo = (rect.a_lo - rect.b_hi).max(-u_cap);
    let u_hi = (rect.a_hi - rect.b_lo).min(u_cap);
    if u_hi <= u_lo {
        return Ok(0.0);
    }

    if model.uses_sinc_marginal(domain) {
        // Refuse rather than silently under-resolve: panel count scales
        // with the number of sinc oscillations across the window.
        let q_edge = (u_lo.abs().max(u_hi.abs())) / model.alpha;
        let k_max = (model.beta * q_edge * q_edge / std::f64::consts::PI).floor();
        if k_max > MAX_SINC_NODES as f64 {
            return Err(Error::Parameter(format!(
                "rectangle spans {k_max:.0} sinc nodes; the numeric treatment cannot \
                 certify tolerance {tol:e} over so wide a window"
            )));
        }
    }

    // Split points: kinks of the v-window bounds, entries/exits of the
    // v-cap, and sinc nodes. Each resulting piece is smooth.
    let mut edges = vec![u_lo, u_hi];
    let candidates = [
        rect.a_lo - rect.b_lo,
        rect.a_hi - rect.b_hi,
        2.0 * rect.a_lo - v_cap,
        -2.0 * rect.b_lo + v_cap,
        2.0 * rect.a_hi + v_cap,
        -2.0 * rect.b_hi - v_cap,
    ];
    let span = u_hi - u_lo;
    for cand in candidates {
        if cand > u_lo + 1e-12 * span && cand < u_hi - 1e-12 * span {
            edges.push(cand);
        }
    }
    edges.extend(model.minus_nodes(domain, u_lo, u_hi));
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span);

    let integrand = |u: f64| {
        let v_lo = (2.0 * rect.a_lo - u).max(2.0 * rect.b_lo + u);
        let v_hi = (2.0 * rect.a_hi - u).min(2.0 * rect.b_hi + u);
        model.minus_density(domain, u) * gauss_interval_mass(v_lo, v_hi, sigma_plus)
    };

    let piece_tol = tol / (edges.len() - 1) as f64;
    let mut total = 0.0;
    for pair in edges.windows(2) {
        total += integrate_panels(&integrand, pair[0], pair[1], piece_tol, PIECE_INITIAL_PANELS)?;
    }
    Ok(total)
}

/// Joint d-outcome matrix for masked detection.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMatrix {
    /// Number of outcomes per arm.
    pub d: usize,
    /// Detection plane the masks act in.
    pub domain: Domain,
    /// Row-major d×d probabilities: `entries[k*d + l]` is the
    /// probability of outcome `k` on arm A and `l` on arm B. Raw masses
    /// over the finite support; not normalized.
    pub entries: Vec<f64>,
    /// Sum of all entries; the fraction of the joint density captured by
    /// the mask support.
    pub captured_mass: f64,
    /// Per-entry absolute quadrature tolerance the entries were computed
    /// to.
    pub quad_tolerance: f64,
}

impl JointMatrix {
    pub fn entry(&self, k: usize, l: usize) -> f64 {
        self.entries[k * self.d + l]
    }

    /// Scale the entries to sum to exactly 1.
    pub fn normalized(&self) -> Result<JointMatrix> {
        if !(self.captured_mass > 0.0) {
            return Err(Error::Parameter(
                "cannot normalize a joint matrix with no captured mass".into(),
            ));
        }
        let mut out = self.clone();
        for e in &mut out.entries {
            *e /= self.captured_mass;
        }
        out.captured_mass = 1.0;
        Ok(out)
    }
}

/// Joint outcome matrix for a d-slit mask on each arm, computed by
/// quadrature to per-entry absolute tolerance `tol` over a support of
/// `support_sigmas` single-detector marginal widths.
pub fn mask_joint_matrix(
    model: &DetectionModel,
    domain: Domain,
    spec_a: &MaskSpec,
    spec_b: &MaskSpec,
    tol: f64,
    support_sigmas: f64,
) -> Result<JointMatrix> {
    mask_joint_matrix_with_exec(model, domain, spec_a, spec_b, tol, support_sigmas, Exec::Auto)
}

/// [`mask_joint_matrix`] with an explicit execution policy.
pub fn mask_joint_matrix_with_exec(
    model: &DetectionModel,
    domain: Domain,
    spec_a: &MaskSpec,
    spec_b: &MaskSpec,
    tol: f64,
    support_sigmas: f64,
    exec: Exec,
) -> Result<JointMatrix> {
    if spec_a.d != spec_b.d {
        return Err(Error::Parameter(format!(
            "both arms need the same outcome count, got {} and {}",
            spec_a.d, spec_b.d
        )));
    }
    if !(tol > 0.0) || !(support_sigmas > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance and support width must be positive, got tol={tol}, \
             support_sigmas={support_sigmas}"
        )));
    }
    let d = spec_a.d;
    let half_support = support_sigmas * model.marginal_width(domain);
    let support = (-half_support, half_support);
    let segs_a: Vec<_> = (0..d)
        .map(|k| slit_segments(spec_a, k, support))
        .collect::<Result<_>>()?;
    let segs_b: Vec<_> = (0..d)
        .map(|l| slit_segments(spec_b, l, support))
        .collect::<Result<_>>()?;

    if model.is_separable() {
        return Ok(separable_matrix(model, domain, d, &segs_a, &segs_b, tol));
    }

    // The joint density is exchange symmetric, so identical mask specs
    // give a symmetric matrix; compute only the upper triangle then.
    let symmetric = spec_a == spec_b;
    let jobs: Vec<(usize, usize)> = if symmetric {
        (0..d).flat_map(|k| (k..d).map(move |l| (k, l))).collect()
    } else {
        (0..d).flat_map(|k| (0..d).map(move |l| (k, l))).collect()
    };

    let u_cap = minus_window(model, domain, tol);
    let v_cap = GAUSS_WINDOW_SIGMAS * model.sigma_plus(domain);
    let results = map_indexed(exec, jobs.len(), |j| {
        let (k, l) = jobs[j];
        entry_mass(model, domain, &segs_a[k], &segs_b[l], tol, u_cap, v_cap)
    });

    let mut entries = vec![0.0; d * d];
    for (&(k, l), value) in jobs.iter().zip(results) {
        let value = value?;
        entries[k * d + l] = value;
        if symmetric {
            entries[l * d + k] = value;
        }
    }
    let captured_mass = entries.iter().sum();
    Ok(JointMatrix {
        d,
        domain,
        entries,
        captured_mass,
        quad_tolerance: tol,
    })
}

/// One matrix entry: total mass of all surviving segment-pair
/// rectangles, with the entry tolerance split across them.
fn entry_mass(
    model: &DetectionModel,
    domain: Domain,
    segs_a: &[(f64, f64)],
    segs_b: &[(f64, f64)],
    tol: f64,
    u_cap: f64,
    v_cap: f64,
) -> Result<f64> {
    let mut rects = Vec::new();
    for &(a_lo, a_hi) in segs_a {
        for &(b_lo, b_hi) in segs_b {
            // Windows the density cannot reach contribute below 4e-18
            // per pair; skipping them keeps the pair count linear in the
            // number of slit copies.
            if a_lo - b_hi >= u_cap || a_hi - b_lo <= -u_cap {
                continue;
            }
            if a_lo + b_lo >= v_cap || a_hi + b_hi <= -v_cap {
                continue;
            }
            rects.push(Rect {
                a_lo,
                a_hi,
                b_lo,
                b_hi,
            });
        }
    }
    if rects.is_empty() {
        return Ok(0.0);
    }
    let rect_tol = tol / rects.len() as f64;
    let mut total = 0.0;
    for rect in &rects {
        total += rectangle_probability_impl(model, domain, rect, rect_tol)?;
    }
    Ok(total)
}

/// Product fast path: a separable model factorizes every entry into
/// per-arm slit masses of independent Gaussians with std `sigma/sqrt(2)`.
fn separable_matrix(
    model: &DetectionModel,
    domain: Domain,
    d: usize,
    segs_a: &[Vec<(f64, f64)>],
    segs_b: &[Vec<(f64, f64)>],
    tol: f64,
) -> JointMatrix {
    let arm_sigma = model.sigma_minus(domain) / std::f64::consts::SQRT_2;
    let arm_mass = |segs: &[(f64, f64)]| -> f64 {
        segs.iter()
            .map(|&(lo, hi)| gauss_interval_mass(lo, hi, arm_sigma))
            .sum()
    };
    let p_a: Vec<f64> = segs_a.iter().map(|s| arm_mass(s)).collect();
    let p_b: Vec<f64> = segs_b.iter().map(|s| arm_mass(s)).collect();
    let mut entries = vec![0.0; d * d];
    for k in 0..d {
        for l in 0..d {
            entries[k * d + l] = p_a[k] * p_b[l];
        }
    }
    let captured_mass = entries.iter().sum();
    JointMatrix {
        d,
        domain,
        entries,
        captured_mass,
        quad_tolerance: tol,
    }
}
