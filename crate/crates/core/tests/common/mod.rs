//! Independent global-frame oracle.
//!
//! Every quantity is rebuilt from absolute coordinates with plain `[f64; 3]`
//! arithmetic: positions of antennas, units and scatterers are placed in one
//! frame and subtracted. Nothing here calls the library's geometry code.

#![allow(dead_code)]

use std::f64::consts::PI;

use airs_channel::channel::ScenarioConfig;
use airs_channel::config::default_scenario;
use airs_channel::fading::ClusterRealization;
use airs_channel::geometry::{PanelKind, SurfacePanel, UlaSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const C: f64 = 299_792_458.0;

pub type V3 = [f64; 3];

pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn norm(a: V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn matmul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

pub fn apply(m: [[f64; 3]; 3], v: V3) -> V3 {
    let mut r = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            r[i] += m[i][k] * v[k];
        }
    }
    r
}

/// Elementary rotations about z (pitch), y (yaw), x (roll), composed
/// z·y·x.
pub fn rotation(pitch: f64, yaw: f64, roll: f64) -> [[f64; 3]; 3] {
    let rz = [
        [pitch.cos(), -pitch.sin(), 0.0],
        [pitch.sin(), pitch.cos(), 0.0],
        [0.0, 0.0, 1.0],
    ];
    let ry = [
        [yaw.cos(), 0.0, yaw.sin()],
        [0.0, 1.0, 0.0],
        [-yaw.sin(), 0.0, yaw.cos()],
    ];
    let rx = [
        [1.0, 0.0, 0.0],
        [0.0, roll.cos(), -roll.sin()],
        [0.0, roll.sin(), roll.cos()],
    ];
    matmul(matmul(rz, ry), rx)
}

pub fn tx_position(c: &ScenarioConfig) -> V3 {
    [0.0, 0.0, c.geometry.tx_height]
}

pub fn rx_position(c: &ScenarioConfig, t: f64) -> V3 {
    let m = c.geometry.rx_motion;
    [
        c.geometry.distance + m.speed * t * m.azimuth.cos(),
        m.speed * t * m.azimuth.sin(),
        0.0,
    ]
}

pub fn panel(c: &ScenarioConfig, kind: PanelKind) -> &SurfacePanel {
    match kind {
        PanelKind::Airs => &c.geometry.airs,
        PanelKind::Irs => &c.geometry.irs,
    }
}

/// Panel center; only the AIRS moves.
pub fn panel_center(c: &ScenarioConfig, kind: PanelKind, t: f64) -> V3 {
    let p = panel(c, kind);
    let a = [p.anchor.x, p.anchor.y, p.anchor.z];
    match kind {
        PanelKind::Irs => a,
        PanelKind::Airs => {
            let m = p.motion;
            let dir = [
                m.elevation.sin() * m.azimuth.cos(),
                m.elevation.sin() * m.azimuth.sin(),
                m.elevation.cos(),
            ];
            add(a, scale(dir, m.speed * t))
        }
    }
}

/// Global position of unit `(h, v)`, 1-based.
pub fn unit_position(c: &ScenarioConfig, kind: PanelKind, h: usize, v: usize, t: f64) -> V3 {
    let p = panel(c, kind);
    let kh = (2.0 * h as f64 - p.units_h as f64 - 1.0) / 2.0;
    let kv = (2.0 * v as f64 - p.units_v as f64 - 1.0) / 2.0;
    let r = rotation(p.rotation.pitch, p.rotation.yaw, p.rotation.roll);
    add(
        panel_center(c, kind, t),
        apply(r, [kh * p.unit_width, kv * p.unit_height, 0.0]),
    )
}

/// Unit positions in storage order: `h` outer, `v` inner.
pub fn unit_positions(c: &ScenarioConfig, kind: PanelKind, t: f64) -> Vec<V3> {
    let p = panel(c, kind);
    let mut out = Vec::new();
    for h in 1..=p.units_h {
        for v in 1..=p.units_v {
            out.push(unit_position(c, kind, h, v, t));
        }
    }
    out
}

pub fn element_offset(u: &UlaSpec, p: usize) -> V3 {
    let (a, b) = (u.azimuth, u.elevation);
    scale(
        [-b.cos() * a.cos(), b.sin() * a.sin(), b.sin()],
        (p as f64 - 1.0) * u.spacing,
    )
}

pub fn tx_element(c: &ScenarioConfig, p: usize) -> V3 {
    add(tx_position(c), element_offset(&c.geometry.tx, p))
}

pub fn rx_element(c: &ScenarioConfig, q: usize, t: f64) -> V3 {
    add(rx_position(c, t), element_offset(&c.geometry.rx, q))
}

/// `(Tx element p → unit, unit → Rx element q)` for every unit.
pub fn unit_distances(c: &ScenarioConfig, kind: PanelKind, p: usize, q: usize, t: f64) -> Vec<(f64, f64)> {
    let a = tx_element(c, p);
    let b = rx_element(c, q, t);
    unit_positions(c, kind, t)
        .into_iter()
        .map(|u| (norm(sub(u, a)), norm(sub(b, u))))
        .collect()
}

/// Elevation and two-argument azimuth of a direction.
pub fn angles_of(v: V3) -> (f64, f64) {
    ((v[2] / norm(v)).asin(), v[1].atan2(v[0]))
}

/// AIRS angles `(dep az, dep el, arr el, arr az)`; arrival points from
/// the receiver to the panel.
pub fn airs_angles(c: &ScenarioConfig, t: f64) -> (f64, f64, f64, f64) {
    let center = panel_center(c, PanelKind::Airs, t);
    let (de, da) = angles_of(sub(center, tx_position(c)));
    let (ae, aa) = angles_of(sub(center, rx_position(c, t)));
    (da, de, ae, aa)
}

pub fn irs_angles(c: &ScenarioConfig, t: f64) -> (f64, f64) {
    let (e, a) = angles_of(sub(panel_center(c, PanelKind::Irs, t), rx_position(c, t)));
    (e, a)
}

fn panel_projection(az: f64, el: f64, c: &ScenarioConfig) -> f64 {
    let m = c.geometry.airs.motion;
    el.cos() * m.elevation.cos() * (az - m.azimuth).cos() + el.sin() * m.elevation.sin()
}

/// Total Doppler exponent of a reflected path.
pub fn reflected_doppler(c: &ScenarioConfig, kind: PanelKind, t: f64) -> f64 {
    let k = 2.0 * PI * c.carrier_hz / C;
    let rx = c.geometry.rx_motion;
    match kind {
        PanelKind::Airs => {
            let (da, de, ae, aa) = airs_angles(c, t);
            let va = c.geometry.airs.motion.speed;
            k * va * t * panel_projection(da, de, c) - k * va * t * panel_projection(aa, ae, c)
                + k * rx.speed * t * (aa - rx.azimuth).cos() * ae.cos()
        }
        PanelKind::Irs => {
            let (e, a) = irs_angles(c, t);
            k * rx.speed * t * (a - rx.azimuth).cos() * e.cos()
        }
    }
}

/// Reflected tap `(gain, delay)` for pair `(p, q)` and explicit unit
/// phases.
pub fn reflected_tap(
    c: &ScenarioConfig,
    kind: PanelKind,
    p: usize,
    q: usize,
    t: f64,
    phases: &[f64],
) -> (Complex64, f64) {
    let k = 2.0 * PI * c.carrier_hz / C;
    let kr = c.k_airs + c.k_irs;
    let kk = match kind {
        PanelKind::Airs => c.k_airs,
        PanelKind::Irs => c.k_irs,
    };
    let d = unit_distances(c, kind, p, q, t);
    let n = d.len() as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for ((dt, dr), phi) in d.iter().zip(phases) {
        sum += Complex64::cis(phi - k * (dt + dr));
    }
    let w = (kk / (kr + 1.0)).sqrt() / n.sqrt();
    let center = panel_center(c, kind, t);
    let delay = (norm(sub(center, tx_position(c))) + norm(sub(rx_position(c, t), center))) / C;
    (sum * Complex64::cis(reflected_doppler(c, kind, t)) * w, delay)
}

/// Co-aligned phases for pair (1, 1).
pub fn aligned_phases(c: &ScenarioConfig, kind: PanelKind, t: f64, target: f64) -> Vec<f64> {
    let k = 2.0 * PI * c.carrier_hz / C;
    unit_distances(c, kind, 1, 1, t)
        .iter()
        .map(|(a, b)| (target + k * (a + b)).rem_euclid(2.0 * PI))
        .collect()
}

/// Scatterer of a ray: range `r` from the initial receiver position, seen
/// from the receiver at the ray's azimuth and elevation with the
/// horizontal components mirrored toward the transmitter.
pub fn scatterer(c: &ScenarioConfig, azimuth: f64, elevation: f64) -> V3 {
    let r = c.clusters.initial_range;
    [
        c.geometry.distance - r * elevation.cos() * azimuth.cos(),
        -r * elevation.cos() * azimuth.sin(),
        r * elevation.sin(),
    ]
}

/// Receiver-side range and arrival angles `(range, az, el)` of a scatterer
/// at time `t`.
pub fn scatterer_view(c: &ScenarioConfig, s: V3, t: f64) -> (f64, f64, f64) {
    let d = sub(rx_position(c, t), s);
    let range = norm(d);
    (range, d[1].atan2(d[0]), (s[2] / range).asin())
}

/// One `(gain, delay)` per cluster for pair `(p, q)`.
pub fn sbr_taps(c: &ScenarioConfig, r: &ClusterRealization, p: usize, q: usize, t: f64) -> Vec<(Complex64, f64)> {
    let k = 2.0 * PI * c.carrier_hz / C;
    let kr = c.k_airs + c.k_irs;
    let rx = c.geometry.rx_motion;
    let a = tx_element(c, p);
    let b = rx_element(c, q, t);
    r.clusters
        .iter()
        .map(|cl| {
            let m = cl.rays.len() as f64;
            let amp = (1.0 / (kr + 1.0)).sqrt() * (cl.power / m).sqrt();
            let mut sum = Complex64::new(0.0, 0.0);
            for ray in &cl.rays {
                let s = scatterer(c, ray.azimuth, ray.elevation);
                let (_, az, el) = scatterer_view(c, s, t);
                let doppler = k * rx.speed * t * (az - rx.azimuth).cos() * el.cos();
                let d = norm(sub(s, a)) + norm(sub(b, s));
                sum += Complex64::cis(ray.phase - k * d + doppler);
            }
            let s1 = scatterer(c, cl.rays[0].azimuth, cl.rays[0].elevation);
            let delay = (norm(sub(s1, tx_position(c))) + norm(sub(rx_position(c, t), s1))) / C + cl.delay;
            (sum * amp, delay)
        })
        .collect()
}

/// Relative agreement: `|a − b| ≤ tol · max(|b|, floor)`.
pub fn close(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(floor)
}

pub fn close_c(a: Complex64, b: Complex64, tol: f64, floor: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(floor)
}

/// A random desk-scale scenario: panels up to 3×3, up to two clusters of
/// up to four rays, 2×2 arrays. Geometry stays away from degenerate
/// placements.
pub fn random_scenario(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = default_scenario();
    let lambda = c.wavelength();
    let mut u = |a: f64, b: f64| a + (b - a) * rng.random::<f64>();
    c.k_airs = 10f64.powf(u(-5.0, 5.0) / 10.0);
    c.k_irs = 10f64.powf(u(-5.0, 5.0) / 10.0);
    c.geometry.distance = u(80.0, 300.0);
    c.geometry.tx_height = u(10.0, 40.0);
    for ula in [&mut c.geometry.tx, &mut c.geometry.rx] {
        ula.count = 2;
        ula.spacing = u(0.2, 1.0) * lambda;
        ula.azimuth = u(-PI, PI);
        ula.elevation = u(-1.4, 1.4);
    }
    c.geometry.irs.anchor = [u(20.0, 200.0), u(20.0, 100.0), u(3.0, 30.0)].into();
    c.geometry.airs.anchor = [u(20.0, 150.0), u(20.0, 150.0), u(45.0, 100.0)].into();
    for p in [&mut c.geometry.irs, &mut c.geometry.airs] {
        p.units_h = 1 + (u(0.0, 3.0) as usize).min(2);
        p.units_v = 1 + (u(0.0, 3.0) as usize).min(2);
        p.unit_width = u(0.1, 0.5) * lambda;
        p.unit_height = u(0.1, 0.5) * lambda;
        p.rotation.pitch = u(-PI, PI);
        p.rotation.yaw = u(-PI, PI);
    }
    c.geometry.airs.rotation.roll = u(-PI, PI);
    c.geometry.airs.motion.speed = u(0.0, 10.0);
    c.geometry.airs.motion.azimuth = u(-PI, PI);
    c.geometry.airs.motion.elevation = u(0.2, 1.2);
    c.geometry.rx_motion.speed = u(0.0, 40.0);
    c.geometry.rx_motion.azimuth = u(-PI, PI);
    c.clusters.count = 1 + (u(0.0, 2.0) as usize).min(1);
    c.clusters.rays = 1 + (u(0.0, 4.0) as usize).min(3);
    c.clusters.initial_range = u(20.0, 80.0);
    c
}

/// Compares every gain, delay, distance and angle of one random scenario
/// against the oracle; returns a description of each mismatch.
pub fn oracle_mismatches(seed: u64, tol: f64) -> Vec<String> {
    use airs_channel::channel::{h_airs, h_irs, h_sbr, ChannelModel};
    use airs_channel::phase::{PhaseDesign, PhaseMethod};

    let c = random_scenario(seed);
    let mut bad = Vec::new();
    let mut check = |what: String, a: f64, b: f64, floor: f64| {
        if !close(a, b, tol, floor) {
            bad.push(format!("seed {seed}: {what}: {a} vs {b}"));
        }
    };
    let model = match ChannelModel::new(c) {
        Ok(m) => m,
        Err(e) => return vec![format!("seed {seed}: model rejected: {e}")],
    };
    let g = model.geometry();
    let r = model.realization(seed, 0).expect("realization");
    let t = 0.37;

    let a = g.airs_angles(t).expect("airs angles");
    let (da, de, ae, aa) = airs_angles(&c, t);
    check("airs departure azimuth".into(), a.departure_azimuth, da, 1.0);
    check("airs departure elevation".into(), a.departure_elevation, de, 1.0);
    check("airs arrival elevation".into(), a.arrival_elevation, ae, 1.0);
    check("airs arrival azimuth".into(), a.arrival_azimuth, aa, 1.0);
    let i = g.irs_arrival_angles(t).expect("irs angles");
    let (ie, ia) = irs_angles(&c, t);
    check("irs arrival elevation".into(), i.arrival_elevation, ie, 1.0);
    check("irs arrival azimuth".into(), i.arrival_azimuth, ia, 1.0);

    for kind in [PanelKind::Airs, PanelKind::Irs] {
        for p in 1..=2 {
            for q in 1..=2 {
                let tx = airs_channel::geometry::ula_offset(p, &g.tx).unwrap();
                let rx = airs_channel::geometry::ula_offset(q, &g.rx).unwrap();
                let lib = g.unit_distances(kind, &g.unit_offsets(kind), t, &tx, &rx).unwrap();
                let ora = unit_distances(&c, kind, p, q, t);
                for (u, ((l1, l2), (o1, o2))) in lib.iter().zip(&ora).enumerate() {
                    check(format!("{kind:?} unit {u} tx distance ({p},{q})"), *l1, *o1, 1.0);
                    check(format!("{kind:?} unit {u} rx distance ({p},{q})"), *l2, *o2, 1.0);
                }
            }
        }
    }

    let scale = (1.0 / (c.k_airs + c.k_irs + 1.0)).sqrt();
    for method in [PhaseMethod::Zero, PhaseMethod::Random, PhaseMethod::CoAligned] {
        let design = PhaseDesign { method, target: 0.4 };
        let s = model.schedules(&design, Some(&r)).unwrap();
        for p in 1..=2 {
            for q in 1..=2 {
                for (kind, tap) in [
                    (PanelKind::Airs, h_airs(p, q, t, &model, &s.airs).unwrap()),
                    (PanelKind::Irs, h_irs(p, q, t, &model, &s.irs).unwrap()),
                ] {
                    let phases = s.get(kind).phases_at(t).unwrap();
                    let (gain, delay) = reflected_tap(&c, kind, p, q, t, &phases);
                    let what = format!("{kind:?} {method:?} ({p},{q})");
                    check(format!("{what} gain re"), tap.gain.re, gain.re, scale);
                    check(format!("{what} gain im"), tap.gain.im, gain.im, scale);
                    check(format!("{what} delay"), tap.delay, delay, 0.0);
                }
            }
        }
    }

    for p in 1..=2 {
        for q in 1..=2 {
            let lib = h_sbr(p, q, t, &model, &r.clusters).unwrap();
            let ora = sbr_taps(&c, &r.clusters, p, q, t);
            for (l, (tap, (gain, delay))) in lib.iter().zip(&ora).enumerate() {
                let what = format!("cluster {l} ({p},{q})");
                check(format!("{what} gain re"), tap.gain.re, gain.re, scale);
                check(format!("{what} gain im"), tap.gain.im, gain.im, scale);
                check(format!("{what} delay"), tap.delay, *delay, 0.0);
            }
        }
    }
    bad
}
