use std::f64::consts::PI;

use airs_channel::config::default_scenario;
use airs_channel::fading::{
    cluster_powers, generate_realization, member_rng, sample_cluster_delays,
    sample_truncated_gaussian, uniform_phase, ClusterParams,
};
use proptest::prelude::*;

/// CDF of the truncated Gaussian by composite Simpson integration of the
/// density on a fine grid, then linear interpolation.
struct IntegratedCdf {
    low: f64,
    step: f64,
    values: Vec<f64>,
}

impl IntegratedCdf {
    fn new(mean: f64, sd: f64, low: f64, up: f64) -> Self {
        let n = 20_000;
        let step = (up - low) / n as f64;
        let pdf = |x: f64| (-0.5 * ((x - mean) / sd).powi(2)).exp();
        let mut values = vec![0.0; n + 1];
        for i in 0..n {
            let a = low + i as f64 * step;
            let area = step / 6.0 * (pdf(a) + 4.0 * pdf(a + 0.5 * step) + pdf(a + step));
            values[i + 1] = values[i] + area;
        }
        let total = values[n];
        for v in &mut values {
            *v /= total;
        }
        Self { low, step, values }
    }

    fn at(&self, x: f64) -> f64 {
        let s = ((x - self.low) / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let f = s - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

fn ks_statistic(mut samples: Vec<f64>, cdf: &IntegratedCdf) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf.at(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn truncated_gaussian_passes_ks_against_integrated_cdf() {
    let n = 20_000;
    // critical value at significance 0.001
    let critical = 1.95 / (n as f64).sqrt();
    let cases = [
        (PI / 6.0, PI / 18.0, PI / 12.0, PI / 3.0),
        (0.0, 1.0, -0.3, 2.5),
        (0.0, 1.0, 2.0, 4.0),
        (0.0, 1.0, -4.0, -2.5),
    ];
    for (k, (mean, sd, low, up)) in cases.into_iter().enumerate() {
        let mut rng = member_rng(11, k as u64);
        let samples: Vec<f64> = (0..n)
            .map(|_| sample_truncated_gaussian(mean, sd, low, up, &mut rng).unwrap())
            .collect();
        assert!(samples.iter().all(|x| (low..=up).contains(x)));
        let d = ks_statistic(samples, &IntegratedCdf::new(mean, sd, low, up));
        assert!(d < critical, "case {k}: KS statistic {d} >= {critical}");
    }
}

#[test]
fn reference_angle_law_mean_is_pulled_inside_the_bounds() {
    let law = default_scenario().clusters.angle;
    let cdf = IntegratedCdf::new(law.mean, law.std_dev, law.low, law.high);
    // mean from the integrated CDF: low + ∫(1 − F)
    let m = 2000;
    let h = (law.high - law.low) / m as f64;
    let oracle_mean = law.low
        + (0..m)
            .map(|i| h * (1.0 - cdf.at(law.low + (i as f64 + 0.5) * h)))
            .sum::<f64>();
    let mut rng = member_rng(5, 0);
    let n = 50_000;
    let mean = (0..n).map(|_| law.sample(&mut rng).unwrap()).sum::<f64>() / n as f64;
    assert!((mean - oracle_mean).abs() < 4.0 * law.std_dev / (n as f64).sqrt());
}

fn params() -> ClusterParams {
    default_scenario().clusters
}

proptest! {
    #[test]
    fn delays_are_sorted_and_start_at_zero(seed in any::<u64>(), count in 1usize..40) {
        let mut p = params();
        p.count = count;
        let d = sample_cluster_delays(&p, &mut member_rng(seed, 0));
        prop_assert_eq!(d.len(), count);
        prop_assert_eq!(d[0], 0.0);
        prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(d.iter().all(|x| x.is_finite() && *x >= 0.0));
    }

    #[test]
    fn powers_sum_to_one(seed in any::<u64>(), count in 1usize..40, zeta in 0.0f64..8.0) {
        let mut p = params();
        p.count = count;
        p.shadowing_db = zeta;
        let mut rng = member_rng(seed, 1);
        let d = sample_cluster_delays(&p, &mut rng);
        let pw = cluster_powers(&d, &p, &mut rng);
        prop_assert_eq!(pw.iter().sum::<f64>(), 1.0);
        prop_assert!(pw.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn phases_are_in_range(seed in any::<u64>()) {
        let mut rng = member_rng(seed, 3);
        for _ in 0..100 {
            let phi = uniform_phase(&mut rng);
            prop_assert!((0.0..2.0 * PI).contains(&phi));
        }
    }
}

#[test]
fn powers_without_shadowing_follow_exponential_profile() {
    let mut p = params();
    p.shadowing_db = 0.0;
    let delays = [0.0, 100e-9, 400e-9];
    let pw = cluster_powers(&delays, &p, &mut member_rng(0, 0));
    let decay = (p.delay_scaling - 1.0) / (p.delay_scaling * p.delay_spread);
    for (i, d) in delays.iter().enumerate() {
        assert!((pw[i] / pw[0] - (-d * decay).exp()).abs() < 1e-12);
    }
}

#[test]
fn excess_delay_mean_matches_exponential_law() {
    // with two clusters the shifted second delay is |E1 − E2| for i.i.d.
    // exponentials, which is again exponential with the same scale
    let mut p = params();
    p.count = 2;
    let scale = p.delay_scaling * p.delay_spread;
    let n = 40_000;
    let mut rng = member_rng(9, 0);
    let mean = (0..n)
        .map(|_| sample_cluster_delays(&p, &mut rng)[1])
        .sum::<f64>()
        / n as f64;
    assert!((mean / scale - 1.0).abs() < 4.0 / (n as f64).sqrt());
}

#[test]
fn realizations_are_reproducible_per_member() {
    let p = params();
    let a = generate_realization(&p, &mut member_rng(42, 3)).unwrap();
    let b = generate_realization(&p, &mut member_rng(42, 3)).unwrap();
    let c = generate_realization(&p, &mut member_rng(42, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.clusters.len(), 16);
    assert!(a.clusters.iter().all(|c| c.rays.len() == 20));
}
