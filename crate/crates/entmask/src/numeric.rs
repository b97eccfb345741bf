//! Scalar numeric kernels: stable normal CDF differences, `sinc`, and
//! adaptive Simpson quadrature with an absolute-error budget.

use crate::error::{Error, Result};

/// Standard normal cumulative distribution function.
///
/// Uses the complementary error function so both tails keep full relative
/// accuracy (`Phi(-40)` is still representable).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Probability that a zero-mean normal with standard deviation `sigma`
/// falls in `[a, b]`. Evaluated tail-first so nearly cancelling CDF
/// differences far from the origin keep their relative accuracy.
pub fn gauss_interval_mass(a: f64, b: f64, sigma: f64) -> f64 {
    if !(sigma > 0.0) || b <= a {
        return 0.0;
    }
    let (za, zb) = (a / sigma, b / sigma);
    // Work on the side where erfc is small and positive.
    let mass = if za + zb >= 0.0 {
        0.5 * (libm::erfc(za / std::f64::consts::SQRT_2)
            - libm::erfc(zb / std::f64::consts::SQRT_2))
    } else {
        0.5 * (libm::erfc(-zb / std::f64::consts::SQRT_2)
            - libm::erfc(-za / std::f64::consts::SQRT_2))
    };
    mass.max(0.0)
}

/// `sin(t)/t` with the removable singularity filled in.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-6 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

/// Round to three decimal places (half away from zero), the reporting
/// precision used for the separability bound.
pub fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

const SIMPSON_MAX_DEPTH: u32 = 40;
/// Initial uniform panels before adaptive refinement; protects against
/// a narrow feature hiding between the first probe points.
const SIMPSON_INITIAL_PANELS: usize = 16;
/// Bisections each initial panel must survive before its Richardson
/// estimate is trusted; guards the termination test against aliasing on
/// structure near the panel scale.
const SIMPSON_MIN_DEPTH: u32 = 2;

/// Adaptive Simpson integration of `f` over `[a, b]` with absolute error
/// target `tol`. Returns the integral; fails with a convergence error
/// carrying the achieved error estimate if the refinement depth limit is
/// hit before the budget is met.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_panels(f, a, b, tol, SIMPSON_INITIAL_PANELS)
}

/// [`integrate`] with a caller-chosen initial panel count. Callers that
/// integrate piecewise-smooth single-feature integrands (already split
/// at their kinks) can start coarser than the general entry point.
pub(crate) fn integrate_panels<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    initial_panels: usize,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    if !(b > a) {
        return Ok(0.0);
    }
    let h = (b - a) / initial_panels as f64;
    let panel_tol = tol / initial_panels as f64;
    let mut total = 0.0;
    let mut err_total = 0.0;
    for i in 0..initial_panels {
        let x0 = a + i as f64 * h;
        let x1 = if i + 1 == initial_panels {
            b
        } else {
            a + (i + 1) as f64 * h
        };
        let fm = f(0.5 * (x0 + x1));
        let (v, e) = adaptive_panel(f, x0, x1, f(x0), fm, f(x1), panel_tol, 0);
        total += v;
        err_total += e;
    }
    if err_total > tol {
        return Err(Error::Convergence {
            achieved: err_total,
            required: tol,
        });
    }
    Ok(total)
}

/// One adaptive panel: Simpson on `[a,b]` vs. the two-half composite,
/// Richardson error estimate `|S2 - S1|/15`.
// The argument list mirrors the recursion state (endpoint samples are
// reused, never recomputed); bundling it into a struct would only add
// noise.
#[allow(clippy::too_many_arguments)]
fn adaptive_panel<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let h = b - a;
    let s1 = h / 6.0 * (fa + 4.0 * fm + fb);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let sl = h / 12.0 * (fa + 4.0 * flm + fm);
    let sr = h / 12.0 * (fm + 4.0 * frm + fb);
    let s2 = sl + sr;
    let err = (s2 - s1).abs() / 15.0;
    if (err <= tol && depth >= SIMPSON_MIN_DEPTH) || depth >= SIMPSON_MAX_DEPTH {
        // Richardson extrapolation; err is the residual estimate.
        (s2 + (s2 - s1) / 15.0, err)
    } else {
        let (vl, el) = adaptive_panel(f, a, m, fa, flm, fm, 0.5 * tol, depth + 1);
        let (vr, er) = adaptive_panel(f, m, b, fm, frm, fb, 0.5 * tol, depth + 1);
        (vl + vr, el + er)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_cdf_reference_points() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(1.0), 0.8413447460685429, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_cdf(-1.0), 1.0 - 0.8413447460685429, epsilon = 1e-12);
        // Deep tail keeps relative accuracy.
        let deep = normal_cdf(-10.0);
        assert!((deep - 7.619853024160527e-24).abs() / 7.62e-24 < 1e-9);
    }

    #[test]
    fn interval_mass_matches_cdf_difference_and_is_stable() {
        let m = gauss_interval_mass(-1.0, 2.0, 1.5);
        let direct = normal_cdf(2.0 / 1.5) - normal_cdf(-1.0 / 1.5);
        assert_abs_diff_eq!(m, direct, epsilon = 1e-15);
        // Far tail interval: relative accuracy survives the subtraction.
        let far = gauss_interval_mass(8.0, 9.0, 1.0);
        let expected = 6.219_831_985_865_83e-16; // erfc-based high-precision value
        assert!((far - expected).abs() / expected < 1e-9);
        // Mirror symmetry.
        assert_eq!(far, gauss_interval_mass(-9.0, -8.0, 1.0));
        // Degenerate interval.
        assert_eq!(gauss_interval_mass(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn sinc_limit_and_value() {
        assert_eq!(sinc(0.0), 1.0);
        assert_abs_diff_eq!(sinc(1e-8), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sinc(std::f64::consts::PI), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sinc(1.0), 1.0_f64.sin(), epsilon = 1e-15);
    }

    #[test]
    fn round3_half_cases() {
        assert_eq!(round3(1.5695), 1.57);
        assert_eq!(round3(1.5694999), 1.569);
        assert_eq!(round3(2.0), 2.0);
        assert_eq!(round3(-1.2345), -1.235);
    }

    #[test]
    fn integrate_gaussian_mass() {
        let sigma = 0.3_f64;
        let f = |x: f64| (-0.5 * (x / sigma).powi(2)).exp()
            / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let v = integrate(&f, -3.0, 3.0, 1e-10).unwrap();
        let expected = gauss_interval_mass(-3.0, 3.0, sigma);
        assert_abs_diff_eq!(v, expected, epsilon = 1e-9);
    }

    #[test]
    fn integrate_oscillatory() {
        // \int_0^{2pi} sin^2 = pi
        let v = integrate(&|x: f64| x.sin().powi(2), 0.0, 2.0 * std::f64::consts::PI, 1e-11)
            .unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn integrate_rejects_bad_tolerance() {
        assert!(matches!(
            integrate(&|x: f64| x, 0.0, 1.0, 0.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn integrate_empty_interval_is_zero() {
        assert_eq!(integrate(&|x: f64| x, 1.0, 1.0, 1e-6).unwrap(), 0.0);
        assert_eq!(integrate(&|x: f64| x, 2.0, 1.0, 1e-6).unwrap(), 0.0);
    }
}
