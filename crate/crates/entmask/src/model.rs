//! Source and optics parameters, and the derived two-photon detection
//! model: normalized double-Gaussian joint densities at the image plane
//! (IP) and far field (FF).
//!
//! The transverse two-photon state factorizes in the rotated coordinates
//! `u = xA - xB`, `v = xA + xB`; each detection plane is therefore
//! described by two widths, one per rotated coordinate. Only the
//! horizontal coordinate is modeled. All lengths are in mm, areas in mm².

use crate::error::{Error, Result};
use crate::numeric::{normal_pdf, sinc};
use serde::{Deserialize, Serialize};

/// Detection plane selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    /// Image plane: source transverse position magnified by `M`.
    Ip,
    /// Far field: source transverse momentum mapped to position via
    /// `x = alpha * q`.
    Ff,
}

impl Domain {
    pub fn label(&self) -> &'static str {
        match self {
            Domain::Ip => "IP",
            Domain::Ff => "FF",
        }
    }

    pub fn parse(s: &str) -> Result<Domain> {
        match s.trim().to_ascii_uppercase().as_str() {
            "IP" => Ok(Domain::Ip),
            "FF" => Ok(Domain::Ff),
            other => Err(Error::Parameter(format!(
                "unknown domain {other:?}; expected IP or FF"
            ))),
        }
    }
}

/// Physical constants of the photon-pair source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Pump wavelength in nm.
    pub pump_wavelength_nm: f64,
    /// Down-converted photon wavelength in nm (frequency-degenerate
    /// default: exactly twice the pump wavelength).
    pub photon_wavelength_nm: f64,
    /// Nonlinear crystal length in mm.
    pub crystal_length_mm: f64,
    /// Pump beam waist in mm.
    pub pump_waist_mm: f64,
}

impl SourceParams {
    /// Validated constructor; `photon_wavelength_nm = None` selects the
    /// frequency-degenerate default `2 * pump_wavelength_nm`.
    pub fn new(
        pump_wavelength_nm: f64,
        photon_wavelength_nm: Option<f64>,
        crystal_length_mm: f64,
        pump_waist_mm: f64,
    ) -> Result<Self> {
        let photon = photon_wavelength_nm.unwrap_or(2.0 * pump_wavelength_nm);
        let p = SourceParams {
            pump_wavelength_nm,
            photon_wavelength_nm: photon,
            crystal_length_mm,
            pump_waist_mm,
        };
        for (name, v) in [
            ("pump_wavelength_nm", p.pump_wavelength_nm),
            ("photon_wavelength_nm", p.photon_wavelength_nm),
            ("crystal_length_mm", p.crystal_length_mm),
            ("pump_waist_mm", p.pump_waist_mm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "source parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(p)
    }

    /// Reference configuration: 325 nm pump, 2 mm crystal, 0.464 mm
    /// waist, frequency-degenerate photons at 650 nm.
    pub fn reference() -> Self {
        SourceParams::new(325.0, None, 2.0, 0.464).expect("reference source values are valid")
    }
}

/// Imaging and Fourier-transform optics between source and detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalSetup {
    /// Image-plane optical magnification `M`.
    pub magnification: f64,
    /// Effective focal length `f_e` of the Fourier system, in mm.
    pub effective_focal_length_mm: f64,
}

impl OpticalSetup {
    pub fn new(magnification: f64, effective_focal_length_mm: f64) -> Result<Self> {
        for (name, v) in [
            ("magnification", magnification),
            ("effective_focal_length_mm", effective_focal_length_mm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "optics parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(OpticalSetup {
            magnification,
            effective_focal_length_mm,
        })
    }

    /// Reference configuration: `M = 5`, `f_e = 333 mm`.
    pub fn reference() -> Self {
        OpticalSetup::new(5.0, 333.0).expect("reference optics values are valid")
    }
}

/// Treatment of the sinc² phase-matching factor in the momentum
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SincTreatment {
    /// Replace the sinc² intensity by a Gaussian of identical variance.
    /// Every downstream mask integral then reduces to error-function
    /// forms.
    GaussianVarianceMatch,
    /// Keep the true sinc² marginal in the far field; downstream
    /// integrals run on full numeric quadrature. The sinc² tails fall
    /// off only algebraically, so finite supports capture mass more
    /// slowly than in the Gaussian treatment.
    Numeric,
}

/// Derived joint densities at the two detection planes.
///
/// In each domain the joint density is
/// `P(xA, xB) = 2 * rho_minus(xA - xB) * rho_plus(xA + xB)` with
/// normalized 1D factor densities (the factor 2 is the Jacobian of the
/// coordinate rotation), so it integrates to 1 over the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    /// Far-field momentum-to-position scale `alpha = lambda f_e / 2 pi`
    /// (mm²).
    pub alpha: f64,
    /// Rescaled commutator constant `c = M * alpha` (mm²).
    pub c: f64,
    /// Std of `xA - xB` at the image plane (mm).
    pub sigma_minus_ip: f64,
    /// Std of `xA + xB` at the image plane (mm).
    pub sigma_plus_ip: f64,
    /// Std of `xA + xB` in the far field (mm).
    pub sigma_plus_ff: f64,
    /// Std of `xA - xB` in the far field (mm).
    pub sigma_minus_ff: f64,
    /// How the sinc² phase-matching intensity is represented.
    pub sinc_treatment: SincTreatment,
    /// Phase-matching curvature `beta = L * lambda_p / (8 pi)` (mm²);
    /// the far-field momentum-difference intensity is `sinc²(beta q²)`.
    /// Used only by the `Numeric` treatment.
    pub beta: f64,
}

/// Build the detection model from source and optics parameters.
///
/// The image-plane difference width uses the closed form
/// `M * sqrt(9 L lambda_p / 10 pi)`; the far-field sum width is
/// `alpha / (2 w_p)`. The image-plane sum width is the magnified pump
/// envelope `M * w_p`, and the far-field difference width follows from
/// the chosen sinc treatment: the Gaussian match pairs it with the
/// image-plane width as a minimum-uncertainty transform pair
/// (`sigma_ff = alpha * M / (2 sigma_ip)`), while the numeric treatment
/// uses the exact sinc² second moment `alpha * sqrt(3 / (4 beta))`.
pub fn build_detection_model(
    source: &SourceParams,
    optics: &OpticalSetup,
    sinc_treatment: SincTreatment,
) -> Result<DetectionModel> {
    let lambda_mm = source.photon_wavelength_nm * 1e-6;
    let lambda_pump_mm = source.pump_wavelength_nm * 1e-6;
    let m = optics.magnification;
    let alpha = lambda_mm * optics.effective_focal_length_mm / (2.0 * std::f64::consts::PI);
    let c = m * alpha;
    let beta = source.crystal_length_mm * lambda_pump_mm / (8.0 * std::f64::consts::PI);

    let sigma_minus_ip =
        m * (9.0 * source.crystal_length_mm * lambda_pump_mm / (10.0 * std::f64::consts::PI))
            .sqrt();
    let sigma_plus_ip = m * source.pump_waist_mm;
    let sigma_plus_ff = alpha / (2.0 * source.pump_waist_mm);
    let sigma_minus_ff = match sinc_treatment {
        SincTreatment::GaussianVarianceMatch => alpha * m / (2.0 * sigma_minus_ip),
        SincTreatment::Numeric => alpha * (3.0 / (4.0 * beta)).sqrt(),
    };

    let model = DetectionModel {
        alpha,
        c,
        sigma_minus_ip,
        sigma_plus_ip,
        sigma_plus_ff,
        sigma_minus_ff,
        sinc_treatment,
        beta,
    };
    model.validate()?;
    Ok(model)
}

impl DetectionModel {
    /// Explicitly separable (product-Gaussian) model: within each domain
    /// the difference and sum coordinates share one width, so the two
    /// detector coordinates are statistically independent.
    pub fn separable(alpha: f64, c: f64, sigma_ip: f64, sigma_ff: f64) -> Result<Self> {
        let model = DetectionModel {
            alpha,
            c,
            sigma_minus_ip: sigma_ip,
            sigma_plus_ip: sigma_ip,
            sigma_plus_ff: sigma_ff,
            sigma_minus_ff: sigma_ff,
            sinc_treatment: SincTreatment::GaussianVarianceMatch,
            beta: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("c", self.c),
            ("sigma_minus_ip", self.sigma_minus_ip),
            ("sigma_plus_ip", self.sigma_plus_ip),
            ("sigma_plus_ff", self.sigma_plus_ff),
            ("sigma_minus_ff", self.sigma_minus_ff),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "model field {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.sinc_treatment == SincTreatment::Numeric && !(self.beta > 0.0) {
            return Err(Error::Parameter(
                "numeric sinc treatment requires a positive phase-matching curvature".into(),
            ));
        }
        Ok(())
    }

    /// Width of the difference coordinate `xA - xB` in `domain`.
    pub fn sigma_minus(&self, domain: Domain) -> f64 {
        match domain {
            Domain::Ip => self.sigma_minus_ip,
            Domain::Ff => self.sigma_minus_ff,
        }
    }

    /// Width of the sum coordinate `xA + xB` in `domain`.
    pub fn sigma_plus(&self, domain: Domain) -> f64 {
        match domain {
            Domain::Ip => self.sigma_plus_ip,
            Domain::Ff => self.sigma_plus_ff,
        }
    }

    /// Standard deviation of a single detector coordinate in `domain`
    /// (`Var(xA) = (sigma_plus² + sigma_minus²)/4`).
    pub fn marginal_width(&self, domain: Domain) -> f64 {
        0.5 * (self.sigma_plus(domain).powi(2) + self.sigma_minus(domain).powi(2)).sqrt()
    }

    /// True when the difference and sum widths coincide in both domains,
    /// i.e. the detector coordinates are independent (product form).
    pub fn is_separable(&self) -> bool {
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.max(b);
        rel(self.sigma_minus_ip, self.sigma_plus_ip) && rel(self.sigma_minus_ff, self.sigma_plus_ff)
    }

    /// Whether the difference coordinate of `domain` carries the true
    /// sinc² intensity rather than a Gaussian.
    pub fn uses_sinc_marginal(&self, domain: Domain) -> bool {
        domain == Domain::Ff && self.sinc_treatment == SincTreatment::Numeric
    }

    /// Normalized density of the difference coordinate `u = xA - xB`.
    pub fn minus_density(&self, domain: Domain, u: f64) -> f64 {
        if self.uses_sinc_marginal(domain) {
            // sinc²(beta q²) over momentum q = u/alpha, normalized by the
            // closed form  ∫ sinc²(beta q²) dq = 4 sqrt(pi) / (3 sqrt(beta)).
            let q = u / self.alpha;
            let norm_q = 4.0 * std::f64::consts::PI.sqrt() / (3.0 * self.beta.sqrt());
            let s = sinc(self.beta * q * q);
            s * s / (self.alpha * norm_q)
        } else {
            let sigma = self.sigma_minus(domain);
            normal_pdf(u / sigma) / sigma
        }
    }

    /// Normalized density of the sum coordinate `v = xA + xB`.
    pub fn plus_density(&self, domain: Domain, v: f64) -> f64 {
        let sigma = self.sigma_plus(domain);
        normal_pdf(v / sigma) / sigma
    }

    /// Interior zeros of the difference-coordinate density in `(lo, hi)`,
    /// ascending. Empty unless this domain carries the sinc² marginal,
    /// whose zeros sit at `u = ±alpha * sqrt(k pi / beta)`. Quadrature
    /// over the minus coordinate must break panels at these nodes: the
    /// oscillation defeats error estimation on panels spanning many of
    /// them.
    pub fn minus_nodes(&self, domain: Domain, lo: f64, hi: f64) -> Vec<f64> {
        let mut nodes = Vec::new();
        if !self.uses_sinc_marginal(domain) || !(hi > lo) {
            return nodes;
        }
        let node_index = |u: f64| (self.beta * (u / self.alpha).powi(2) / std::f64::consts::PI)
            .floor() as i64;
        let max_k = node_index(lo.abs().max(hi.abs()));
        for k in 1..=max_k {
            let u = self.alpha * (k as f64 * std::f64::consts::PI / self.beta).sqrt();
            for cand in [-u, u] {
                if cand > lo && cand < hi {
                    nodes.push(cand);
                }
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes
    }

    /// Probability that the difference coordinate falls in `[a, b]`.
    /// Closed form for Gaussian marginals; node-split adaptive
    /// quadrature for the sinc² marginal.
    pub fn minus_interval_mass(&self, domain: Domain, a: f64, b: f64, tol: f64) -> Result<f64> {
        if !(b > a) {
            return Ok(0.0);
        }
        if !self.uses_sinc_marginal(domain) {
            return Ok(crate::numeric::gauss_interval_mass(
                a,
                b,
                self.sigma_minus(domain),
            ));
        }
        let mut edges = vec![a];
        edges.extend(self.minus_nodes(domain, a, b));
        edges.push(b);
        let piece_tol = tol / edges.len() as f64;
        let mut total = 0.0;
        for pair in edges.windows(2) {
            total += crate::numeric::integrate(
                &|u: f64| self.minus_density(domain, u),
                pair[0],
                pair[1],
                piece_tol,
            )?;
        }
        Ok(total)
    }

    /// Joint detection density at `(xA, xB)` in mm⁻²; integrates to 1
    /// over the plane. The peak value at the origin is
    /// `1 / (pi sigma_plus sigma_minus)` for the Gaussian treatment (the
    /// rotation `u = xA - xB`, `v = xA + xB` has Jacobian 1/2, which
    /// doubles the factorized density).
    pub fn joint_pdf(&self, domain: Domain, x_a: f64, x_b: f64) -> f64 {
        2.0 * self.minus_density(domain, x_a - x_b) * self.plus_density(domain, x_a + x_b)
    }
}
