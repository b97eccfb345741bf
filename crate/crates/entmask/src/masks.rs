//! Periodic d-outcome slit masks: indicator values, slit enumeration over
//! a finite support, and Fourier coefficients of the basic mask.
//!
//! A mask family is a period-`T` slit array cut into `d` slits of width
//! `s = T/d`; mask `k` transmits every point whose position inside the
//! period falls in slit `k`. The `d` masks partition the line, so they
//! realize a `d`-outcome measurement of the coarse-grained coordinate.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One family of `d` orthogonal periodic masks.
///
/// `offset` translates the whole family; with `offset = 0` the left edge
/// of slit 0 sits on the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    /// Number of outcomes (slits per period), at least 2.
    pub d: usize,
    /// Spatial period `T` in mm.
    pub period: f64,
    /// Global translation of the family in mm.
    pub offset: f64,
}

impl MaskSpec {
    /// Mask family with the default placement (`offset = 0`).
    pub fn new(d: usize, period: f64) -> Result<Self> {
        Self::with_offset(d, period, 0.0)
    }

    /// Mask family translated by `offset` mm.
    pub fn with_offset(d: usize, period: f64, offset: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Parameter(format!("mask dimension must be >= 2, got {d}")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Parameter(format!(
                "mask period must be positive and finite, got {period}"
            )));
        }
        if !offset.is_finite() {
            return Err(Error::Parameter(format!("mask offset must be finite, got {offset}")));
        }
        Ok(MaskSpec { d, period, offset })
    }

    /// Slit width `s = T/d`; derived, never stored.
    pub fn slit_width(&self) -> f64 {
        self.period / self.d as f64
    }
}

/// Indicator of mask `k` at position `z` (mm): true iff
/// `k*s <= (z - offset) mod T < (k+1)*s`.
pub fn mask_value(spec: &MaskSpec, k: usize, z: f64) -> Result<bool> {
    if k >= spec.d {
        return Err(Error::Index { index: k, d: spec.d });
    }
    let r = (z - spec.offset).rem_euclid(spec.period);
    let s = spec.slit_width();
    Ok(k as f64 * s <= r && r < (k + 1) as f64 * s)
}

/// Index of the unique mask transmitting position `z`.
pub fn mask_index(spec: &MaskSpec, z: f64) -> usize {
    let r = (z - spec.offset).rem_euclid(spec.period);
    let s = spec.slit_width();
    // Resolve by the same comparisons as `mask_value` so the two functions
    // can never disagree at a floating-point slit boundary.
    for k in 0..spec.d {
        if r < (k + 1) as f64 * s {
            return k;
        }
    }
    spec.d - 1
}

/// A complex value; minimal carrier for Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(&self) -> Complex {
        Complex { re: self.re, im: -self.im }
    }
}

/// Fourier coefficient `f_N` of the basic mask indicator (slit 0, unit
/// period): `f_N = (1 - e^{-2 pi i N / d}) / (2 pi i N)`, with the limit
/// value `f_0 = 1/d`.
pub fn fourier_coefficient(d: usize, n: i64) -> Complex {
    if n == 0 {
        return Complex { re: 1.0 / d as f64, im: 0.0 };
    }
    let phi = 2.0 * std::f64::consts::PI * n as f64 / d as f64;
    let denom = 2.0 * std::f64::consts::PI * n as f64;
    // (1 - e^{-i phi}) / (i denom) = (sin phi - i (1 - cos phi)) / denom
    Complex {
        re: phi.sin() / denom,
        im: -(1.0 - phi.cos()) / denom,
    }
}

/// `|f_N|^2 = (1 - cos(2 pi N / d)) / (2 pi^2 N^2)` for `N != 0`,
/// `1/d^2` for `N = 0`. Evaluated directly from the cosine form, which is
/// exact at multiples of `d` (where the coefficient vanishes).
pub fn fourier_weight(d: usize, n: i64) -> f64 {
    if n == 0 {
        return 1.0 / (d as f64 * d as f64);
    }
    let nf = n as f64;
    let phi = 2.0 * std::f64::consts::PI * nf / d as f64;
    (1.0 - phi.cos()) / (2.0 * std::f64::consts::PI * std::f64::consts::PI * nf * nf)
}

/// All maximal sub-intervals of `support = [lo, hi)` where mask `k`
/// transmits, sorted and disjoint. An empty or inverted support yields an
/// empty list.
pub fn slit_segments(spec: &MaskSpec, k: usize, support: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    if k >= spec.d {
        return Err(Error::Index { index: k, d: spec.d });
    }
    let (lo, hi) = support;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Ok(Vec::new());
    }
    let t = spec.period;
    let s = spec.slit_width();
    // Slit k of period copy m spans [offset + m T + k s, offset + m T + (k+1) s).
    let m_lo = ((lo - spec.offset - (k + 1) as f64 * s) / t).floor() as i64;
    let m_hi = ((hi - spec.offset - k as f64 * s) / t).ceil() as i64;
    let mut out = Vec::new();
    for m in m_lo..=m_hi {
        let a = spec.offset + m as f64 * t + k as f64 * s;
        let b = spec.offset + m as f64 * t + (k + 1) as f64 * s;
        let (ca, cb) = (a.max(lo), b.min(hi));
        if cb > ca {
            out.push((ca, cb));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn construction_guards() {
        assert!(MaskSpec::new(1, 1.0).is_err());
        assert!(MaskSpec::new(2, 0.0).is_err());
        assert!(MaskSpec::new(2, -1.0).is_err());
        assert!(MaskSpec::with_offset(2, 1.0, f64::NAN).is_err());
        assert!(MaskSpec::new(2, 1.0).is_ok());
    }

    #[test]
    fn two_slit_values() {
        let spec = MaskSpec::new(2, 2.0).unwrap();
        assert!(mask_value(&spec, 0, 0.5).unwrap());
        assert!(!mask_value(&spec, 0, 1.5).unwrap());
        assert!(mask_value(&spec, 1, 1.5).unwrap());
        assert!(matches!(
            mask_value(&spec, 2, 0.0),
            Err(Error::Index { index: 2, d: 2 })
        ));
    }

    #[test]
    fn translation_identity() {
        // mask_value(k, z - n*s) == mask_value((k+n) mod d, z)
        let spec = MaskSpec::new(5, 1.7).unwrap();
        let s = spec.slit_width();
        for &z in &[0.01, 0.3, 0.77, 1.2, 1.69, -0.4, 123.456] {
            for k in 0..5 {
                for n in 0..5 {
                    let lhs = mask_value(&spec, k, z - n as f64 * s).unwrap();
                    let rhs = mask_value(&spec, (k + n) % 5, z).unwrap();
                    assert_eq!(lhs, rhs, "k={k} n={n} z={z}");
                }
            }
        }
    }

    #[test]
    fn segments_two_slit_example() {
        let spec = MaskSpec::new(2, 2.0).unwrap();
        let segs = slit_segments(&spec, 0, (0.0, 4.0)).unwrap();
        assert_eq!(segs, vec![(0.0, 1.0), (2.0, 3.0)]);
        let segs1 = slit_segments(&spec, 1, (0.0, 4.0)).unwrap();
        assert_eq!(segs1, vec![(1.0, 2.0), (3.0, 4.0)]);
    }

    #[test]
    fn segments_clip_to_short_support() {
        let spec = MaskSpec::new(4, 4.0).unwrap();
        // Support shorter than one slit: at most one clipped segment.
        let segs = slit_segments(&spec, 1, (1.2, 1.5)).unwrap();
        assert_eq!(segs, vec![(1.2, 1.5)]);
        let none = slit_segments(&spec, 3, (1.2, 1.5)).unwrap();
        assert!(none.is_empty());
        assert!(slit_segments(&spec, 0, (2.0, 2.0)).unwrap().is_empty());
    }

    #[test]
    fn fourier_coefficient_values() {
        let f0 = fourier_coefficient(3, 0);
        assert_eq!(f0.re, 1.0 / 3.0);
        assert_eq!(f0.im, 0.0);
        // d=2, N=1: |f_1|^2 = 1/pi^2
        let f1 = fourier_coefficient(2, 1);
        assert_abs_diff_eq!(
            f1.norm_sqr(),
            1.0 / (std::f64::consts::PI * std::f64::consts::PI),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(fourier_weight(2, 1), f1.norm_sqr(), epsilon = 1e-16);
        // Coefficients vanish at nonzero multiples of d.
        assert_eq!(fourier_weight(4, 8), 0.0);
        assert!(fourier_coefficient(4, 8).norm_sqr() < 1e-30);
    }

    #[test]
    fn fourier_conjugate_symmetry() {
        for d in [2usize, 3, 7] {
            for n in 1..40i64 {
                let f = fourier_coefficient(d, n);
                let fm = fourier_coefficient(d, -n);
                assert_abs_diff_eq!(f.conj().re, fm.re, epsilon = 1e-16);
                assert_abs_diff_eq!(f.conj().im, fm.im, epsilon = 1e-16);
            }
        }
    }

    #[test]
    fn fourier_weights_sum_to_inverse_d() {
        // sum_{|N| <= N0} |f_N|^2 -> 1/d; the tail scales like 1/N0.
        let d = 2usize;
        let n0 = 1_000_000i64;
        let mut sum = fourier_weight(d, 0);
        for n in 1..=n0 {
            sum += 2.0 * fourier_weight(d, n);
        }
        assert!((sum - 0.5).abs() < 1e-6, "sum = {sum}");
    }

    proptest! {
        #[test]
        fn exactly_one_mask_transmits(
            d in 2usize..12,
            period in 0.01f64..50.0,
            offset in -10.0f64..10.0,
            z in -100.0f64..100.0,
        ) {
            let spec = MaskSpec::with_offset(d, period, offset).unwrap();
            let hits: usize = (0..d)
                .filter(|&k| mask_value(&spec, k, z).unwrap())
                .count();
            prop_assert_eq!(hits, 1);
            let idx = mask_index(&spec, z);
            prop_assert!(mask_value(&spec, idx, z).unwrap());
        }

        #[test]
        fn segments_partition_support(
            d in 2usize..9,
            period in 0.1f64..10.0,
            offset in -5.0f64..5.0,
            lo in -20.0f64..20.0,
            len in 0.01f64..30.0,
        ) {
            let spec = MaskSpec::with_offset(d, period, offset).unwrap();
            let hi = lo + len;
            let mut all: Vec<(f64, f64)> = Vec::new();
            for k in 0..d {
                all.extend(slit_segments(&spec, k, (lo, hi)).unwrap());
            }
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            // Disjoint, inside support, each at most one slit wide.
            let s = spec.slit_width();
            for w in all.windows(2) {
                prop_assert!(w[0].1 <= w[1].0 + 1e-12);
            }
            let mut total = 0.0;
            for &(a, b) in &all {
                prop_assert!(a >= lo - 1e-12 && b <= hi + 1e-12);
                prop_assert!(b - a <= s + 1e-9);
                total += b - a;
            }
            // Union over k covers the support exactly.
            prop_assert!((total - len).abs() < 1e-9 * (1.0 + len));
            // Per-mask share is within one slit of len/d.
            let segs0: f64 = slit_segments(&spec, 0, (lo, hi))
                .unwrap()
                .iter()
                .map(|&(a, b)| b - a)
                .sum();
            prop_assert!((segs0 - len / d as f64).abs() <= s + 1e-9);
        }
    }
}
