//! Pair sampling and coincidence-count simulation.
//!
//! Positions are drawn in the rotated coordinates — difference from the
//! difference-coordinate density (Gaussian, or sinc² by rejection when
//! the model carries the numeric treatment), sum from its Gaussian — and
//! rotated back to detector coordinates. Counting mimics the
//! experimental procedure: every (k, l) mask setting is an independent
//! acquisition of `pairs_per_setting` pairs, counted when photon A
//! falls in outcome class k, photon B in class l, and both arms pass
//! their efficiency draw.
//!
//! Reproducibility: every acquisition derives its own stream from the
//! base seed through SplitMix64 (a bijection, so distinct purpose tags
//! can never collide), feeding a ChaCha8 generator. Results are
//! identical across thread counts and platforms.

use crate::correlate::CountMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::jointdist::{mask_joint_matrix_with_exec, JointMatrix};
use crate::masks::{mask_value, MaskSpec};
use crate::model::{DetectionModel, Domain};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Identifier of the stream discipline, recorded in output metadata so
/// files state how to reproduce them.
pub const GENERATOR_ID: &str = "chacha8/splitmix-substreams";

/// Simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Photon pairs generated for each mask setting.
    pub pairs_per_setting: u64,
    /// Base seed; all acquisition streams derive from it.
    pub seed: u64,
    /// Detection efficiency of arm A, in (0, 1].
    pub efficiency_a: f64,
    /// Detection efficiency of arm B, in (0, 1].
    pub efficiency_b: f64,
}

impl SimConfig {
    pub fn new(pairs_per_setting: u64, seed: u64) -> SimConfig {
        SimConfig {
            pairs_per_setting,
            seed,
            efficiency_a: 1.0,
            efficiency_b: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.pairs_per_setting == 0 {
            return Err(Error::Parameter(
                "simulation needs at least one pair per setting".into(),
            ));
        }
        for (name, e) in [("A", self.efficiency_a), ("B", self.efficiency_b)] {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Parameter(format!(
                    "arm {name} efficiency must lie in (0, 1], got {e}"
                )));
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the stream for a tagged purpose from the base seed. SplitMix64
/// is a bijection, so distinct tags yield distinct stream seeds.
fn stream_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed).wrapping_add(tag)))
}

/// Draw one difference-coordinate value.
fn draw_minus<R: Rng>(model: &DetectionModel, domain: Domain, rng: &mut R) -> f64 {
    if model.uses_sinc_marginal(domain) {
        model.alpha * draw_sinc_momentum(model.beta, rng)
    } else {
        let n = Normal::new(0.0, model.sigma_minus(domain)).expect("validated sigma");
        n.sample(rng)
    }
}

/// Rejection sampler for the momentum density proportional to
/// `sinc²(beta q²)`.
///
/// Envelope: constant 1 on `|q| <= q0 = 1/sqrt(beta)` (3/4 of envelope
/// mass) and the power tail `(q0/|q|)^4` beyond (1/4 of mass, sampled
/// by inverting its CDF). The acceptance ratios are `sinc²(beta q²)`
/// against 1 inside and `sin²(beta q²)` against the tail envelope, both
/// bounded by 1; overall acceptance is `sqrt(pi)/2 ≈ 0.886`.
fn draw_sinc_momentum<R: Rng>(beta: f64, rng: &mut R) -> f64 {
    let q0 = 1.0 / beta.sqrt();
    loop {
        let branch: f64 = rng.random();
        let (q, ratio) = if branch < 0.75 {
            let q = q0 * (2.0 * rng.random::<f64>() - 1.0);
            let s = crate::numeric::sinc(beta * q * q);
            (q, s * s)
        } else {
            let u: f64 = rng.random();
            let magnitude = q0 * (1.0 - u).powf(-1.0 / 3.0);
            let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            let s = (beta * magnitude * magnitude).sin();
            (sign * magnitude, s * s)
        };
        if rng.random::<f64>() < ratio {
            return q;
        }
    }
}

/// Draw `n` coincidence positions `(xA, xB)` in `domain` from a single
/// stream seeded with `seed`.
pub fn sample_pairs(
    model: &DetectionModel,
    domain: Domain,
    n: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plus = Normal::new(0.0, model.sigma_plus(domain)).expect("validated sigma");
    (0..n)
        .map(|_| {
            let u = draw_minus(model, domain, &mut rng);
            let v = plus.sample(&mut rng);
            (0.5 * (v + u), 0.5 * (v - u))
        })
        .collect()
}

/// One acquisition: count pairs landing in outcome class `k` on arm A
/// and `l` on arm B, thinned by the arm efficiencies.
fn acquire_setting(
    model: &DetectionModel,
    domain: Domain,
    spec: &MaskSpec,
    k: usize,
    l: usize,
    sim: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<u64> {
    let plus = Normal::new(0.0, model.sigma_plus(domain)).expect("validated sigma");
    let thinning = sim.efficiency_a < 1.0 || sim.efficiency_b < 1.0;
    let mut hits = 0u64;
    for _ in 0..sim.pairs_per_setting {
        let u = draw_minus(model, domain, rng);
        let v = plus.sample(rng);
        let x_a = 0.5 * (v + u);
        let x_b = 0.5 * (v - u);
        if thinning {
            let keep_a = rng.random::<f64>() < sim.efficiency_a;
            let keep_b = rng.random::<f64>() < sim.efficiency_b;
            if !(keep_a && keep_b) {
                continue;
            }
        }
        if mask_value(spec, k, x_a)? && mask_value(spec, l, x_b)? {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Simulate the full witness measurement: one acquisition per (k, l)
/// setting in each detection plane, masks of period `tx` (image plane)
/// and `tp` (far field), offset-aligned at zero. Returns the image-plane
/// and far-field count matrices.
pub fn simulate_counts(
    model: &DetectionModel,
    d: usize,
    tx: f64,
    tp: f64,
    sim: &SimConfig,
) -> Result<(CountMatrix, CountMatrix)> {
    simulate_counts_with_exec(model, d, tx, tp, sim, Exec::Auto)
}

/// [`simulate_counts`] with an explicit execution policy.
pub fn simulate_counts_with_exec(
    model: &DetectionModel,
    d: usize,
    tx: f64,
    tp: f64,
    sim: &SimConfig,
    exec: Exec,
) -> Result<(CountMatrix, CountMatrix)> {
    sim.validate()?;
    let mut out = Vec::with_capacity(2);
    for (domain_index, (domain, period)) in
        [(Domain::Ip, tx), (Domain::Ff, tp)].into_iter().enumerate()
    {
        let spec = MaskSpec::new(d, period)?;
        let counts_res = map_indexed(exec, d * d, |setting| {
            let k = setting / d;
            let l = setting % d;
            let tag = (domain_index * d * d + setting) as u64;
            let mut rng = stream_for(sim.seed, tag);
            acquire_setting(model, domain, &spec, k, l, sim, &mut rng)
        });
        let mut matrix = CountMatrix::new(domain, d, period)?;
        for (i, c) in counts_res.into_iter().enumerate() {
            matrix.counts[i] = c?;
        }
        out.push(matrix);
    }
    let ff = out.pop().expect("two domains");
    let ip = out.pop().expect("two domains");
    Ok((ip, ff))
}

/// Coincidence rate between outcome class 0 on both arms as the arm-B
/// mask is displaced across one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCurve {
    pub domain: Domain,
    pub d: usize,
    pub period_mm: f64,
    /// Arm-B mask displacements, `steps` uniform values in [0, T).
    pub offsets_mm: Vec<f64>,
    /// Raw coincidence counts per displacement.
    pub counts: Vec<u64>,
    /// Counts divided by pairs per setting (not efficiency-corrected).
    pub rates: Vec<f64>,
    pub pairs_per_offset: u64,
}

/// Purpose tag namespace separating displacement acquisitions from
/// count-matrix acquisitions on the same base seed.
const DISPLACEMENT_TAG: u64 = 0x4449_5350;

/// Simulate the displacement curve: arm A keeps outcome class 0 of the
/// zero-offset mask; arm B's mask is displaced by `j * T / steps` for
/// `j = 0..steps` and its class 0 counted in coincidence.
pub fn displacement_scan(
    model: &DetectionModel,
    domain: Domain,
    d: usize,
    period: f64,
    steps: usize,
    sim: &SimConfig,
) -> Result<DisplacementCurve> {
    sim.validate()?;
    if steps < 2 {
        return Err(Error::Parameter(format!(
            "displacement scan needs at least two steps, got {steps}"
        )));
    }
    let spec_a = MaskSpec::new(d, period)?;
    let mut offsets = Vec::with_capacity(steps);
    let mut counts = Vec::with_capacity(steps);
    let mut rates = Vec::with_capacity(steps);
    for j in 0..steps {
        let delta = j as f64 * period / steps as f64;
        let spec_b = MaskSpec::with_offset(d, period, delta)?;
        let mut rng = stream_for(sim.seed, DISPLACEMENT_TAG.wrapping_add(j as u64));
        let plus = Normal::new(0.0, model.sigma_plus(domain)).expect("validated sigma");
        let thinning = sim.efficiency_a < 1.0 || sim.efficiency_b < 1.0;
        let mut hits = 0u64;
        for _ in 0..sim.pairs_per_setting {
            let u = draw_minus(model, domain, &mut rng);
            let v = plus.sample(&mut rng);
            let x_a = 0.5 * (v + u);
            let x_b = 0.5 * (v - u);
            if thinning {
                let keep_a = rng.random::<f64>() < sim.efficiency_a;
                let keep_b = rng.random::<f64>() < sim.efficiency_b;
                if !(keep_a && keep_b) {
                    continue;
                }
            }
            if mask_value(&spec_a, 0, x_a)? && mask_value(&spec_b, 0, x_b)? {
                hits += 1;
            }
        }
        offsets.push(delta);
        counts.push(hits);
        rates.push(hits as f64 / sim.pairs_per_setting as f64);
    }
    Ok(DisplacementCurve {
        domain,
        d,
        period_mm: period,
        offsets_mm: offsets,
        counts,
        rates,
        pairs_per_offset: sim.pairs_per_setting,
    })
}

/// Exact displacement-curve reference, computed by quadrature: entry
/// (0, 0) of the joint matrix with arm B's mask displaced.
pub fn displacement_expectation(
    model: &DetectionModel,
    domain: Domain,
    d: usize,
    period: f64,
    steps: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let spec_a = MaskSpec::new(d, period)?;
    let mut expect = Vec::with_capacity(steps);
    for j in 0..steps {
        let delta = j as f64 * period / steps as f64;
        let spec_b = MaskSpec::with_offset(d, period, delta)?;
        let matrix: JointMatrix = mask_joint_matrix_with_exec(
            model,
            domain,
            &spec_a,
            &spec_b,
            tol,
            crate::jointdist::DEFAULT_SUPPORT_SIGMAS,
            Exec::Auto,
        )?;
        expect.push(matrix.entry(0, 0));
    }
    Ok(expect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_detection_model, OpticalSetup, SincTreatment, SourceParams};

    fn reference_model() -> DetectionModel {
        build_detection_model(
            &SourceParams::reference(),
            &OpticalSetup::reference(),
            SincTreatment::GaussianVarianceMatch,
        )
        .unwrap()
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = reference_model();
        let a = sample_pairs(&m, Domain::Ip, 64, 7);
        let b = sample_pairs(&m, Domain::Ip, 64, 7);
        let c = sample_pairs(&m, Domain::Ip, 64, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_moments_match_model_widths() {
        let m = reference_model();
        let n = 200_000;
        let pairs = sample_pairs(&m, Domain::Ip, n, 42);
        let mean_a: f64 = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let var_u: f64 = pairs
            .iter()
            .map(|p| (p.0 - p.1).powi(2))
            .sum::<f64>()
            / n as f64;
        let var_v: f64 = pairs
            .iter()
            .map(|p| (p.0 + p.1).powi(2))
            .sum::<f64>()
            / n as f64;
        // 5-sigma statistical windows at n = 2e5.
        assert!(mean_a.abs() < 5.0 * m.marginal_width(Domain::Ip) / (n as f64).sqrt());
        let rel = |est: f64, truth: f64| (est / truth - 1.0).abs();
        assert!(rel(var_u, m.sigma_minus_ip.powi(2)) < 0.016, "var_u {var_u}");
        assert!(rel(var_v, m.sigma_plus_ip.powi(2)) < 0.016, "var_v {var_v}");
    }

    #[test]
    fn sinc_sampler_fractions_match_quadrature() {
        let m = build_detection_model(
            &SourceParams::reference(),
            &OpticalSetup::reference(),
            SincTreatment::Numeric,
        )
        .unwrap();
        let n = 200_000;
        let pairs = sample_pairs(&m, Domain::Ff, n, 1234);
        for half_width in [2.0f64, 8.0, 20.0] {
            let observed = pairs
                .iter()
                .filter(|p| (p.0 - p.1).abs() <= half_width)
                .count() as f64
                / n as f64;
            let expected = m
                .minus_interval_mass(Domain::Ff, -half_width, half_width, 1e-9)
                .unwrap();
            let se = (expected * (1.0 - expected) / n as f64).sqrt();
            assert!(
                (observed - expected).abs() < 4.0 * se + 1e-9,
                "width {half_width}: observed {observed}, expected {expected}"
            );
        }
    }

    #[test]
    fn simulated_counts_are_deterministic_and_complete() {
        let m = reference_model();
        let sim = SimConfig::new(2000, 99);
        let (ip1, ff1) = simulate_counts(&m, 2, 3.36, 1.20, &sim).unwrap();
        let (ip2, ff2) =
            simulate_counts_with_exec(&m, 2, 3.36, 1.20, &sim, Exec::Sequential).unwrap();
        assert_eq!(ip1, ip2, "thread count must not change counts");
        assert_eq!(ff1, ff2);
        // Every pair lands in exactly one class per arm, so with unit
        // efficiency each setting records a binomial share and the total
        // over settings is d² * pairs * (average probability) — bounded
        // by d² * pairs.
        assert!(ip1.total() <= 4 * 2000);
        assert!(ip1.total() > 0);
        assert_eq!(ip1.domain, Domain::Ip);
        assert_eq!(ff1.domain, Domain::Ff);
        assert_eq!(ip1.period_mm, 3.36);
        assert_eq!(ff1.period_mm, 1.20);
    }

    #[test]
    fn simulated_counts_match_quadrature_expectations() {
        let m = reference_model();
        let d = 2;
        let sim = SimConfig::new(100_000, 2024);
        let (ip, ff) = simulate_counts(&m, d, 3.36, 1.20, &sim).unwrap();
        for (domain, t, counts) in [(Domain::Ip, 3.36, &ip), (Domain::Ff, 1.20, &ff)] {
            let spec = MaskSpec::new(d, t).unwrap();
            let j = crate::jointdist::mask_joint_matrix(&m, domain, &spec, &spec, 1e-10, 12.5)
                .unwrap();
            for k in 0..d {
                for l in 0..d {
                    let p = j.entry(k, l);
                    let n = sim.pairs_per_setting as f64;
                    let est = counts.entry(k, l) as f64 / n;
                    let se = (p * (1.0 - p) / n).sqrt();
                    assert!(
                        (est - p).abs() < 4.0 * se,
                        "{domain:?} ({k},{l}): {est} vs {p}"
                    );
                }
            }
        }
    }

    #[test]
    fn efficiency_thins_coincidences_quadratically() {
        let m = reference_model();
        let full = SimConfig::new(50_000, 5);
        let half = SimConfig {
            efficiency_a: 0.5,
            efficiency_b: 0.5,
            ..full
        };
        let (ip_full, _) = simulate_counts(&m, 2, 3.36, 1.20, &full).unwrap();
        let (ip_half, _) = simulate_counts(&m, 2, 3.36, 1.20, &half).unwrap();
        let ratio = ip_half.total() as f64 / ip_full.total() as f64;
        // Expect 0.25; the binomial spread at these totals is ~0.4%.
        assert!((ratio - 0.25).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn config_validation() {
        let m = reference_model();
        let mut sim = SimConfig::new(0, 1);
        assert!(simulate_counts(&m, 2, 1.0, 1.0, &sim).is_err());
        sim.pairs_per_setting = 10;
        sim.efficiency_a = 0.0;
        assert!(simulate_counts(&m, 2, 1.0, 1.0, &sim).is_err());
        sim.efficiency_a = 1.1;
        assert!(simulate_counts(&m, 2, 1.0, 1.0, &sim).is_err());
        sim.efficiency_a = 1.0;
        assert!(displacement_scan(&m, Domain::Ip, 2, 1.0, 1, &sim).is_err());
    }

    #[test]
    fn displacement_curve_tracks_quadrature_and_peaks_at_alignment() {
        let m = reference_model();
        let d = 4;
        let t = 3.12;
        let steps = 8;
        let sim = SimConfig::new(100_000, 77);
        let curve = displacement_scan(&m, Domain::Ip, d, t, steps, &sim).unwrap();
        let expect = displacement_expectation(&m, Domain::Ip, d, t, steps, 1e-9).unwrap();
        assert_eq!(curve.offsets_mm.len(), steps);
        for (j, (&rate, &p)) in curve.rates.iter().zip(&expect).enumerate() {
            let se = (p * (1.0 - p) / sim.pairs_per_setting as f64).sqrt();
            assert!((rate - p).abs() < 4.0 * se + 1e-9, "step {j}: {rate} vs {p}");
        }
        // Aligned masks maximize the coincidence rate.
        let max = curve.rates.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(curve.rates[0], max);
        // Pearson correlation between simulation and quadrature curve.
        let n = steps as f64;
        let mean_r: f64 = curve.rates.iter().sum::<f64>() / n;
        let mean_e: f64 = expect.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut var_r = 0.0;
        let mut var_e = 0.0;
        for (r, e) in curve.rates.iter().zip(&expect) {
            num += (r - mean_r) * (e - mean_e);
            var_r += (r - mean_r).powi(2);
            var_e += (e - mean_e).powi(2);
        }
        let corr = num / (var_r * var_e).sqrt();
        assert!(corr > 0.99, "corr {corr}");
    }
}
