mod common;

use airs_channel::channel::{cir, h_airs, h_irs, ChannelModel};
use airs_channel::config::default_scenario;
use airs_channel::geometry::PanelKind;
use airs_channel::phase::{PhaseDesign, PhaseMethod};
use airs_channel::stats::CompensatedSum;
use num_complex::Complex64;
use proptest::prelude::*;

use common::{close, close_c};

fn design(method: PhaseMethod) -> PhaseDesign {
    PhaseDesign { method, target: 0.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_quantity_matches_the_global_frame_oracle(seed in any::<u64>()) {
        let bad = common::oracle_mismatches(seed, 1e-9);
        prop_assert!(bad.is_empty(), "{}", bad.join("\n"));
    }

    #[test]
    fn doppler_rates_match_finite_differences(seed in any::<u64>(), t in 0.05f64..3.0) {
        let m = ChannelModel::new(common::random_scenario(seed)).unwrap();
        let h = 1e-6;
        for kind in [PanelKind::Airs, PanelKind::Irs] {
            let now = m.doppler_terms(kind, t).unwrap();
            let up = m.doppler_terms(kind, t + h).unwrap();
            let down = m.doppler_terms(kind, t - h).unwrap();
            for (k, term) in now.iter().enumerate() {
                let fd = (up[k].phase - down[k].phase) / (2.0 * h);
                prop_assert!(close(term.rate, fd, 1e-3, 1.0), "{kind:?} term {k}: {} vs {fd}", term.rate);
            }
        }
    }
}

#[test]
fn reflected_doppler_matches_oracle_exponent() {
    let c = default_scenario();
    let m = ChannelModel::new(c).unwrap();
    for t in [0.0, 0.25, 1.0, 2.0] {
        for kind in [PanelKind::Airs, PanelKind::Irs] {
            let lib = m.reflected_doppler_phase(kind, t).unwrap();
            assert!(close(lib, common::reflected_doppler(&c, kind, t), 1e-12, 1.0));
        }
    }
}

#[test]
fn doppler_terms_vanish_at_time_zero() {
    let m = ChannelModel::new(default_scenario()).unwrap();
    for kind in [PanelKind::Airs, PanelKind::Irs] {
        assert!(m.doppler_terms(kind, 0.0).unwrap().iter().all(|d| d.phase == 0.0));
    }
    assert_eq!(m.doppler_terms(PanelKind::Airs, 1.0).unwrap().len(), 3);
    assert_eq!(m.doppler_terms(PanelKind::Irs, 1.0).unwrap().len(), 1);
}

#[test]
fn co_aligned_design_reaches_coherent_gain() {
    let c = default_scenario();
    let m = ChannelModel::new(c).unwrap();
    let s = m.schedules(&design(PhaseMethod::CoAligned), None).unwrap();
    let kr = c.k_rice();
    let n_airs = m.units(PanelKind::Airs).len() as f64;
    let n_irs = m.units(PanelKind::Irs).len() as f64;
    for t in [0.0, 0.3, 0.77, 1.5, 2.0] {
        let a = h_airs(1, 1, t, &m, &s.airs).unwrap();
        let i = h_irs(1, 1, t, &m, &s.irs).unwrap();
        assert!((a.gain.norm() - (n_airs * c.k_airs / (kr + 1.0)).sqrt()).abs() < 1e-9);
        assert!((i.gain.norm() - (n_irs * c.k_irs / (kr + 1.0)).sqrt()).abs() < 1e-9);
    }
}

#[test]
fn co_aligned_phase_matches_oracle_target() {
    let c = default_scenario();
    let m = ChannelModel::new(c).unwrap();
    let target = 1.1;
    let s = m
        .schedules(&PhaseDesign { method: PhaseMethod::CoAligned, target }, None)
        .unwrap();
    for kind in [PanelKind::Airs, PanelKind::Irs] {
        let lib = s.get(kind).phases_at(0.4).unwrap();
        let ora = common::aligned_phases(&c, kind, 0.4, target);
        for (a, b) in lib.iter().zip(&ora) {
            assert!(airs_channel::phase::circular_distance(*a, *b) < 1e-9);
        }
    }
}

#[test]
fn reflected_gains_scale_with_square_root_of_k() {
    let mut c = default_scenario();
    let base = ChannelModel::new(c).unwrap();
    c.k_airs *= 4.0;
    let scaled = ChannelModel::new(c).unwrap();
    let ratio = ((c.k_airs / (c.k_rice() + 1.0)) / (0.25 * c.k_airs / (base.config().k_rice() + 1.0))).sqrt();
    let s = base.schedules(&design(PhaseMethod::Zero), None).unwrap();
    let a = h_airs(2, 1, 0.5, &base, &s.airs).unwrap().gain;
    let b = h_airs(2, 1, 0.5, &scaled, &s.airs).unwrap().gain;
    assert!(close_c(b, a * ratio, 1e-12, 1e-12));
}

#[test]
fn excluding_the_surface_paths_removes_only_reflections() {
    let mut c = default_scenario();
    c.phase = design(PhaseMethod::Zero);
    let on = ChannelModel::new(c).unwrap();
    c.exclude_irs_path = true;
    let off = ChannelModel::new(c).unwrap();
    let r = on.realization(8, 2).unwrap();
    let s = on.schedules(&c.phase, Some(&r)).unwrap();
    let a = cir(1, 2, 0.4, &on, &r.clusters, &s).unwrap();
    let b = cir(1, 2, 0.4, &off, &r.clusters, &s).unwrap();
    assert!(a[0].gain.norm() > 0.0 && a[1].gain.norm() > 0.0);
    assert_eq!(b[0].gain, Complex64::new(0.0, 0.0));
    assert_eq!(b[1].gain, Complex64::new(0.0, 0.0));
    assert_eq!(&a[2..], &b[2..]);
}

#[test]
fn random_design_power_budget_is_unity() {
    let c = default_scenario();
    let m = ChannelModel::new(c).unwrap();
    let d = design(PhaseMethod::Random);
    let n = 2000;
    let total: CompensatedSum = (0..n)
        .map(|i| {
            let r = m.realization(21, i).unwrap();
            let s = m.schedules(&d, Some(&r)).unwrap();
            cir(1, 1, 0.2, &m, &r.clusters, &s)
                .unwrap()
                .iter()
                .map(|t| t.gain.norm_sqr())
                .sum::<f64>()
        })
        .collect();
    let mean = total.value() / n as f64;
    assert!((mean - 1.0).abs() < 0.05, "mean path power {mean}");
}

#[test]
fn scattered_power_alone_is_its_share() {
    let mut c = default_scenario();
    c.phase = design(PhaseMethod::Zero);
    c.exclude_irs_path = true;
    let m = ChannelModel::new(c).unwrap();
    let n = 2000;
    let total: CompensatedSum = (0..n)
        .map(|i| {
            let r = m.realization(3, i).unwrap();
            let s = m.schedules(&c.phase, Some(&r)).unwrap();
            cir(2, 2, 0.0, &m, &r.clusters, &s)
                .unwrap()
                .iter()
                .map(|t| t.gain.norm_sqr())
                .sum::<f64>()
        })
        .collect();
    let share = 1.0 / (c.k_rice() + 1.0);
    assert!((total.value() / n as f64 / share - 1.0).abs() < 0.05);
}

#[test]
fn cluster_draw_is_independent_of_design() {
    let m = ChannelModel::new(default_scenario()).unwrap();
    let r = m.realization(5, 9).unwrap();
    for method in [PhaseMethod::Zero, PhaseMethod::Random, PhaseMethod::Quantized { bits: 3 }] {
        let s = m.schedules(&design(method), Some(&r)).unwrap();
        let a = cir(1, 1, 0.1, &m, &r.clusters, &s).unwrap();
        assert_eq!(a.len(), 18);
    }
    assert_eq!(m.realization(5, 9).unwrap(), r);
}
