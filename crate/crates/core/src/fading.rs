//! Random part of the channel: cluster delays and powers, truncated-Gaussian
//! arrival angles and the i.i.d. ray phases.
//!
//! All draws come from a caller-provided generator. Ensemble members use
//! [`member_rng`], a ChaCha8 stream per member index, so a member can be
//! regenerated on any worker without replaying the others.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::error::{invalid, Result};

/// Truncated-Gaussian law of the scatterer arrival angles, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleLaw {
    pub mean: f64,
    pub std_dev: f64,
    pub low: f64,
    pub high: f64,
}

impl AngleLaw {
    pub fn validate(&self) -> Result<()> {
        if !(self.std_dev > 0.0) || !self.std_dev.is_finite() {
            return Err(invalid("angle.std_dev", "must be positive and finite"));
        }
        if !(self.low < self.high) {
            return Err(invalid("angle.low", "lower bound must be below the upper bound"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        sample_truncated_gaussian(self.mean, self.std_dev, self.low, self.high, rng)
    }
}

/// Statistics of the scattering clusters around the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub count: usize,
    pub rays: usize,
    /// Delay scaling r_τ.
    pub delay_scaling: f64,
    /// Delay spread σ_τ, seconds.
    pub delay_spread: f64,
    /// Standard deviation ζ of the per-cluster shadowing term, dB.
    pub shadowing_db: f64,
    pub angle: AngleLaw,
    /// Initial scatterer range ε^{S,R}(0), shared by all rays, meters.
    pub initial_range: f64,
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(invalid("clusters.count", "need at least one cluster"));
        }
        if self.rays == 0 {
            return Err(invalid("clusters.rays", "need at least one ray per cluster"));
        }
        if !(self.delay_scaling > 1.0) {
            return Err(invalid("clusters.delay_scaling", "must exceed 1"));
        }
        if !(self.delay_spread > 0.0) {
            return Err(invalid("clusters.delay_spread", "must be positive"));
        }
        if !(self.shadowing_db >= 0.0) {
            return Err(invalid("clusters.shadowing_db", "must be non-negative"));
        }
        if !(self.initial_range > 0.0) {
            return Err(invalid("clusters.initial_range", "must be positive"));
        }
        self.angle.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    /// Initial arrival azimuth α_R^{ℓ,S}(0).
    pub azimuth: f64,
    /// Initial arrival elevation β_R^{ℓ,S}(0).
    pub elevation: f64,
    /// Random phase φ_{ℓ,m} in `[0, 2π)`.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Excess delay τ_ℓ, seconds.
    pub delay: f64,
    /// Normalized power P_ℓ.
    pub power: f64,
    pub rays: Vec<Ray>,
}

/// One draw of all clusters and rays.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRealization {
    pub clusters: Vec<Cluster>,
}

impl ClusterRealization {
    pub fn total_power(&self) -> f64 {
        self.clusters.iter().map(|c| c.power).sum()
    }
}

/// Generator for ensemble member `index` under `seed`.
pub fn member_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on `[0, 2π)`.
pub fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let x = rng.random::<f64>() * TAU;
    if x < TAU {
        x
    } else {
        0.0
    }
}

/// Inverse-CDF sample of a Gaussian truncated to `[low, up]`.
///
/// Draws exactly one uniform variate. The lower tail is used for the
/// inversion so that intervals deep in the upper tail keep their precision.
pub fn sample_truncated_gaussian<R: Rng + ?Sized>(
    mean: f64,
    std_dev: f64,
    low: f64,
    up: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(std_dev > 0.0) || !std_dev.is_finite() {
        return Err(invalid("std_dev", "must be positive and finite"));
    }
    if !(low < up) {
        return Err(invalid("low", "lower bound must be below the upper bound"));
    }
    let std = StdNormal::standard();
    let a = (low - mean) / std_dev;
    let b = (up - mean) / std_dev;
    let u: f64 = rng.random();
    // reflect upper-tail intervals
    let (lo, hi, sign) = if a > 0.0 { (-b, -a, -1.0) } else { (a, b, 1.0) };
    let (cl, ch) = (std.cdf(lo), std.cdf(hi));
    let z = if ch > cl {
        std.inverse_cdf(cl + u * (ch - cl))
    } else {
        // interval too far in the tail to resolve; collapse onto it uniformly
        lo + u * (hi - lo)
    };
    let x = mean + std_dev * sign * z;
    Ok(x.clamp(low, up))
}

/// Excess delays: `−r_τ σ_τ ln u`, shifted so the first is zero, ascending.
pub fn sample_cluster_delays<R: Rng + ?Sized>(params: &ClusterParams, rng: &mut R) -> Vec<f64> {
    let scale = params.delay_scaling * params.delay_spread;
    let mut delays: Vec<f64> = (0..params.count)
        .map(|_| {
            // (0, 1]: avoid ln 0
            let u = 1.0 - rng.random::<f64>();
            -scale * u.ln()
        })
        .collect();
    delays.sort_by(f64::total_cmp);
    let first = delays[0];
    for d in &mut delays {
        *d -= first;
    }
    delays
}

/// Normalized cluster powers for the given excess delays.
pub fn cluster_powers<R: Rng + ?Sized>(
    delays: &[f64],
    params: &ClusterParams,
    rng: &mut R,
) -> Vec<f64> {
    let decay = (params.delay_scaling - 1.0) / (params.delay_scaling * params.delay_spread);
    let shadowing = Normal::new(0.0, params.shadowing_db).expect("validated shadowing std");
    let raw: Vec<f64> = delays
        .iter()
        .map(|tau| {
            let z: f64 = shadowing.sample(rng);
            (-tau * decay).exp() * 10f64.powf(-z / 10.0)
        })
        .collect();
    normalize(raw)
}

/// Scales to unit sum; the last entry is then `1 − (in-order sum of the
/// rest)`, which makes the in-order sum exactly 1.
fn normalize(mut powers: Vec<f64>) -> Vec<f64> {
    let total: f64 = powers.iter().sum();
    for p in &mut powers {
        *p /= total;
    }
    if let Some((last, rest)) = powers.split_last_mut() {
        let closing = 1.0 - rest.iter().sum::<f64>();
        if closing > 0.0 {
            *last = closing;
        }
    }
    powers
}

/// Draws delays, powers, then per ray azimuth, elevation and phase.
pub fn generate_realization<R: Rng + ?Sized>(
    params: &ClusterParams,
    rng: &mut R,
) -> Result<ClusterRealization> {
    params.validate()?;
    let delays = sample_cluster_delays(params, rng);
    let powers = cluster_powers(&delays, params, rng);
    let mut clusters = Vec::with_capacity(params.count);
    for (delay, power) in delays.into_iter().zip(powers) {
        let mut rays = Vec::with_capacity(params.rays);
        for _ in 0..params.rays {
            let azimuth = params.angle.sample(rng)?;
            let elevation = params.angle.sample(rng)?;
            let phase = uniform_phase(rng);
            rays.push(Ray {
                azimuth,
                elevation,
                phase,
            });
        }
        clusters.push(Cluster { delay, power, rays });
    }
    Ok(ClusterRealization { clusters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn params() -> ClusterParams {
        ClusterParams {
            count: 16,
            rays: 20,
            delay_scaling: 2.3,
            delay_spread: 363e-9,
            shadowing_db: 4.0,
            angle: AngleLaw {
                mean: PI / 6.0,
                std_dev: PI / 18.0,
                low: PI / 12.0,
                high: PI / 3.0,
            },
            initial_range: 60.0,
        }
    }

    #[test]
    fn truncated_samples_respect_support() {
        let mut rng = member_rng(1, 0);
        let (lo, hi) = (PI / 12.0, PI / 3.0);
        for _ in 0..100_000 {
            let x = sample_truncated_gaussian(PI / 6.0, PI / 18.0, lo, hi, &mut rng).unwrap();
            assert!((lo..=hi).contains(&x));
        }
    }

    #[test]
    fn wide_bounds_recover_the_mean() {
        let mut rng = member_rng(2, 0);
        let n = 100_000;
        let (mu, sigma) = (0.3, 0.2);
        let mean = (0..n)
            .map(|_| sample_truncated_gaussian(mu, sigma, -1e3, 1e3, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - mu).abs() < 3.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn far_tail_interval_stays_inside() {
        let mut rng = member_rng(3, 0);
        for _ in 0..1000 {
            let x = sample_truncated_gaussian(0.0, 1.0, 40.0, 41.0, &mut rng).unwrap();
            assert!((40.0..=41.0).contains(&x));
        }
    }

    #[test]
    fn invalid_bounds_are_rejected() {
        let mut rng = member_rng(0, 0);
        assert!(sample_truncated_gaussian(0.0, 1.0, 1.0, 1.0, &mut rng).is_err());
        assert!(sample_truncated_gaussian(0.0, 0.0, 0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn delays_start_at_zero_and_ascend() {
        let mut rng = member_rng(4, 0);
        let d = sample_cluster_delays(&params(), &mut rng);
        assert_eq!(d[0], 0.0);
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn powers_are_normalized() {
        let p = params();
        for i in 0..200 {
            let mut rng = member_rng(5, i);
            let r = generate_realization(&p, &mut rng).unwrap();
            assert!((r.total_power() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_shadowing_equal_delays_split_evenly() {
        let mut p = params();
        p.shadowing_db = 0.0;
        p.count = 4;
        let mut rng = member_rng(6, 0);
        let powers = cluster_powers(&[0.0; 4], &p, &mut rng);
        for x in powers {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_exponent_power_split() {
        let mut p = params();
        p.shadowing_db = 0.0;
        p.count = 2;
        let tau = p.delay_scaling * p.delay_spread / (p.delay_scaling - 1.0);
        let mut rng = member_rng(7, 0);
        let powers = cluster_powers(&[0.0, tau], &p, &mut rng);
        assert!((powers[0] - E / (1.0 + E)).abs() < 1e-14);
        assert!((powers[1] - 1.0 / (1.0 + E)).abs() < 1e-14);
    }

    #[test]
    fn single_cluster_has_unit_power() {
        let mut p = params();
        p.count = 1;
        let r = generate_realization(&p, &mut member_rng(8, 0)).unwrap();
        assert_eq!(r.clusters[0].power, 1.0);
        assert_eq!(r.clusters[0].delay, 0.0);
    }

    #[test]
    fn realization_is_reproducible() {
        let p = params();
        let a = generate_realization(&p, &mut member_rng(9, 3)).unwrap();
        let b = generate_realization(&p, &mut member_rng(9, 3)).unwrap();
        assert_eq!(a, b);
        let c = generate_realization(&p, &mut member_rng(9, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn phases_lie_in_half_open_circle() {
        let r = generate_realization(&params(), &mut member_rng(10, 0)).unwrap();
        for c in &r.clusters {
            for ray in &c.rays {
                assert!((0.0..TAU).contains(&ray.phase));
            }
        }
    }
}
