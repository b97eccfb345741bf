//! Mutual predictability, optimal outcome pairings, and count-based
//! witness statistics.
//!
//! The witness sums, over both detection planes, the probability that a
//! fixed pairing `g` predicts arm B's outcome from arm A's:
//! `C = sum_k P(k, g(k))`. Periodic masks pair identically in the image
//! plane and in reflected order in the far field; [`best_permutation`]
//! finds the optimal pairing when it is not known in advance.

use crate::error::{Error, Result};
use crate::jointdist::JointMatrix;
use crate::model::Domain;
use serde::{Deserialize, Serialize};

/// Coincidence counts for one d-outcome setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMatrix {
    /// Detection plane the masks acted in.
    pub domain: Domain,
    /// Number of outcomes per arm.
    pub d: usize,
    /// Row-major d×d counts: `counts[k*d + l]` coincidences with outcome
    /// `k` on arm A and `l` on arm B.
    pub counts: Vec<u64>,
    /// Mask period in mm (metadata carried through files).
    pub period_mm: f64,
    /// Acquisition time per setting in seconds (metadata).
    pub dwell_s: f64,
}

impl CountMatrix {
    pub fn new(domain: Domain, d: usize, period_mm: f64) -> Result<CountMatrix> {
        if d < 2 {
            return Err(Error::Parameter(format!(
                "count matrix needs at least two outcomes, got {d}"
            )));
        }
        if !(period_mm > 0.0) || !period_mm.is_finite() {
            return Err(Error::Parameter(format!(
                "count matrix period must be positive, got {period_mm}"
            )));
        }
        Ok(CountMatrix {
            domain,
            d,
            counts: vec![0; d * d],
            period_mm,
            dwell_s: 1.0,
        })
    }

    pub fn entry(&self, k: usize, l: usize) -> u64 {
        self.counts[k * self.d + l]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Witness statistics estimated from coincidence counts, with Poisson
/// standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessStatistics {
    /// Image-plane mutual predictability estimate.
    pub c_xx: f64,
    /// Far-field mutual predictability estimate.
    pub c_pp: f64,
    /// Witness value `c_xx + c_pp`.
    pub i_d: f64,
    pub sigma_c_xx: f64,
    pub sigma_c_pp: f64,
    /// Standard error of `i_d` (the two planes are measured
    /// independently, so errors add in quadrature).
    pub sigma_i: f64,
}

/// The identity pairing `k -> k` (image-plane correlations).
pub fn identity_pairing(d: usize) -> Vec<usize> {
    (0..d).collect()
}

/// The reflected pairing `k -> d-1-k` (far-field anti-correlations of
/// masks sharing one offset convention).
pub fn mirror_pairing(d: usize) -> Vec<usize> {
    (0..d).rev().collect()
}

fn check_pairing(d: usize, g: &[usize]) -> Result<()> {
    if g.len() != d {
        return Err(Error::Parameter(format!(
            "pairing length {} does not match outcome count {d}",
            g.len()
        )));
    }
    let mut seen = vec![false; d];
    for &l in g {
        if l >= d || seen[l] {
            return Err(Error::Parameter(format!(
                "pairing {g:?} is not a permutation of 0..{d}"
            )));
        }
        seen[l] = true;
    }
    Ok(())
}

/// Probability that pairing `g` predicts arm B from arm A:
/// `sum_k J[k, g(k)]`. Requires a normalized matrix (entries summing to
/// 1 within 1e-6); quadrature matrices over a finite support satisfy
/// this without rescaling.
pub fn mutual_predictability(j: &JointMatrix, g: &[usize]) -> Result<f64> {
    check_pairing(j.d, g)?;
    let total: f64 = j.entries.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Parameter(format!(
            "joint matrix entries sum to {total}, not 1; normalize before \
             computing predictability"
        )));
    }
    Ok(direct_sum(j, g))
}

/// Canonical assignment value: entries summed in ascending row order.
fn direct_sum(j: &JointMatrix, g: &[usize]) -> f64 {
    (0..j.d).map(|k| j.entry(k, g[k])).sum()
}

/// Pairing maximizing the predictability sum, with its value in the
/// matrix's own scale. Ties resolve to the lexicographically smallest
/// pairing. Exhaustive search up to d = 8; an O(d³) optimal assignment
/// algorithm with lexicographic prefix fixing beyond.
pub fn best_permutation(j: &JointMatrix) -> Result<(Vec<usize>, f64)> {
    let d = j.d;
    if d * d != j.entries.len() {
        return Err(Error::Parameter(format!(
            "joint matrix claims d={d} but holds {} entries",
            j.entries.len()
        )));
    }
    let g = if d <= 8 {
        exhaustive_best(j)
    } else {
        assignment_best_lex(j)
    };
    let value = direct_sum(j, &g);
    Ok((g, value))
}

/// Depth-first enumeration in lexicographic order; strict improvement
/// keeps the first (smallest) maximizer.
fn exhaustive_best(j: &JointMatrix) -> Vec<usize> {
    let d = j.d;
    let mut used = vec![false; d];
    let mut current = vec![0usize; d];
    let mut best = vec![0usize; d];
    let mut best_value = f64::NEG_INFINITY;
    fn dfs(
        j: &JointMatrix,
        k: usize,
        partial: f64,
        used: &mut [bool],
        current: &mut [usize],
        best: &mut [usize],
        best_value: &mut f64,
    ) {
        let d = j.d;
        if k == d {
            if partial > *best_value {
                *best_value = partial;
                best.copy_from_slice(current);
            }
            return;
        }
        for l in 0..d {
            if !used[l] {
                used[l] = true;
                current[k] = l;
                dfs(j, k + 1, partial + j.entry(k, l), used, current, best, best_value);
                used[l] = false;
            }
        }
    }
    dfs(j, 0, 0.0, &mut used, &mut current, &mut best, &mut best_value);
    best
}

/// Maximum-value assignment via the shortest-augmenting-path algorithm
/// on negated entries, then a lexicographic canonicalization pass: fix
/// each position to the smallest column that still completes to the
/// optimal value (values compared as canonical direct sums).
fn assignment_best_lex(j: &JointMatrix) -> Vec<usize> {
    let d = j.d;
    let full: Vec<Vec<f64>> = (0..d)
        .map(|k| (0..d).map(|l| -j.entry(k, l)).collect())
        .collect();
    let mut best = hungarian_min(&full);
    let mut best_value = direct_sum(j, &best);

    // Canonicalize position by position: adopt any column smaller than
    // the incumbent's whose optimal completion still reaches the best
    // value.
    let mut used = vec![false; d];
    for k in 0..d {
        for l in 0..best[k] {
            if used[l] {
                continue;
            }
            let cols: Vec<usize> = (0..d).filter(|&c| !used[c] && c != l).collect();
            let sub: Vec<Vec<f64>> = (k + 1..d)
                .map(|r| cols.iter().map(|&c| -j.entry(r, c)).collect())
                .collect();
            let completion = if sub.is_empty() {
                Vec::new()
            } else {
                hungarian_min(&sub)
            };
            let mut candidate: Vec<usize> = best[..k].to_vec();
            candidate.push(l);
            candidate.extend(completion.iter().map(|&ci| cols[ci]));
            let value = direct_sum(j, &candidate);
            if value >= best_value {
                best_value = value;
                best = candidate;
                break;
            }
        }
        used[best[k]] = true;
    }
    best
}

/// Minimum-cost perfect assignment (rows to columns) for a square or
/// wide cost matrix; returns the column chosen for each row.
fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(m >= n);
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    // p[j] = row matched to column j (1-based columns; 0 is a virtual
    // staging column), n is a sentinel for "unmatched".
    let mut p = vec![n; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 0..n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    if p[j] != n {
                        u[p[j]] += delta;
                    }
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == n {
                break;
            }
        }
        // Augment along the alternating path.
        while j0 != 0 {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if p[j] != n {
            assignment[p[j]] = j - 1;
        }
    }
    assignment
}

/// Witness value `I_d = C_xx + C_pp` from two normalized joint matrices
/// and their pairings.
pub fn witness_value(
    j_xx: &JointMatrix,
    j_pp: &JointMatrix,
    g_x: &[usize],
    g_p: &[usize],
) -> Result<f64> {
    if j_xx.d != j_pp.d {
        return Err(Error::Parameter(format!(
            "witness needs equal outcome counts, got {} and {}",
            j_xx.d, j_pp.d
        )));
    }
    Ok(mutual_predictability(j_xx, g_x)? + mutual_predictability(j_pp, g_p)?)
}

/// Witness statistics from coincidence counts, with Poisson standard
/// errors. With `S` counts on the pairing out of `T` total, the
/// predictability estimate is `S/T` and (independent Poisson cells,
/// delta method) its standard error is `sqrt(S(T-S)) / T^1.5`.
pub fn poisson_errors(
    n_xx: &CountMatrix,
    n_pp: &CountMatrix,
    g_x: &[usize],
    g_p: &[usize],
) -> Result<WitnessStatistics> {
    if n_xx.d != n_pp.d {
        return Err(Error::Parameter(format!(
            "witness needs equal outcome counts, got {} and {}",
            n_xx.d, n_pp.d
        )));
    }
    let (c_xx, sigma_c_xx) = counted_predictability(n_xx, g_x)?;
    let (c_pp, sigma_c_pp) = counted_predictability(n_pp, g_p)?;
    let i_d = c_xx + c_pp;
    let sigma_i = (sigma_c_xx.powi(2) + sigma_c_pp.powi(2)).sqrt();
    Ok(WitnessStatistics {
        c_xx,
        c_pp,
        i_d,
        sigma_c_xx,
        sigma_c_pp,
        sigma_i,
    })
}

fn counted_predictability(n: &CountMatrix, g: &[usize]) -> Result<(f64, f64)> {
    check_pairing(n.d, g)?;
    let total = n.total();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    let on_pairing: u64 = (0..n.d).map(|k| n.entry(k, g[k])).sum();
    let s = on_pairing as f64;
    let t = total as f64;
    let c = s / t;
    let sigma = (s * (t - s)).sqrt() / t.powf(1.5);
    Ok((c, sigma))
}
