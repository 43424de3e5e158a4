//! Time-variant channel impulse response: AIRS path, IRS path and the
//! single-bounce scattering clusters around the receiver.
//!
//! Each antenna pair sees `2 + L` taps at time `t`: the AIRS tap, the IRS
//! tap and one tap per cluster. Tap gains follow the spherical-wave model
//! (every unit and every ray keeps its exact distance to every element);
//! tap delays use center-to-center distances.
//!
//! Doppler signs: the Tx→AIRS term is positive, the AIRS→Rx term negative
//! and the receiver term positive. They are applied on top of the
//! time-varying distances.
//!
//! Batch evaluation ([`ReflectedBasis`], [`ScatterBasis`], [`TapField`]) is
//! what the estimators use; the per-pair functions ([`h_airs`], [`h_irs`],
//! [`h_sbr`], [`cir`]) are thin wrappers over it.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fading::{generate_realization, member_rng, uniform_phase, ClusterParams, ClusterRealization};
use crate::geometry::{
    direction_rates, scatterer_position, scatterer_track, ula_offset, AzimuthForm,
    PanelKind, ScattererState, SceneGeometry, Vec3,
};
use crate::phase::{schedule_for, PhaseDesign, PhaseMethod, PhaseSchedule};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Every physical parameter of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub carrier_hz: f64,
    /// Linear AIRS Ricean weight.
    pub k_airs: f64,
    /// Linear IRS Ricean weight.
    pub k_irs: f64,
    pub geometry: SceneGeometry,
    pub clusters: ClusterParams,
    pub phase: PhaseDesign,
    /// With the zero-phase design, drop both reflected paths entirely.
    pub exclude_irs_path: bool,
}

impl ScenarioConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength()
    }

    /// `K_AIRS + K_IRS`.
    pub fn k_rice(&self) -> f64 {
        self.k_airs + self.k_irs
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(invalid("radio.carrier_hz", "must be positive"));
        }
        if !(self.k_airs >= 0.0) || !self.k_airs.is_finite() {
            return Err(invalid("radio.k_airs_db", "linear weight must be finite and non-negative"));
        }
        if !(self.k_irs >= 0.0) || !self.k_irs.is_finite() {
            return Err(invalid("radio.k_irs_db", "linear weight must be finite and non-negative"));
        }
        if !(g.distance > 0.0) {
            return Err(invalid("rx.distance", "must be positive"));
        }
        for (name, ula) in [("tx", &g.tx), ("rx", &g.rx)] {
            if ula.count == 0 {
                return Err(invalid(leak(name, "antennas"), "need at least one antenna"));
            }
            if !(ula.spacing > 0.0) {
                return Err(invalid(leak(name, "spacing"), "must be positive"));
            }
        }
        for (name, panel) in [("irs", &g.irs), ("airs", &g.airs)] {
            if panel.units_h == 0 || panel.units_v == 0 {
                return Err(invalid(leak(name, "units"), "need at least one unit per direction"));
            }
            if !(panel.unit_width > 0.0) {
                return Err(invalid(leak(name, "unit_width"), "must be positive"));
            }
            if !(panel.unit_height > 0.0) {
                return Err(invalid(leak(name, "unit_height"), "must be positive"));
            }
            if !(panel.motion.speed >= 0.0) {
                return Err(invalid(leak(name, "speed"), "must be non-negative"));
            }
        }
        if !(g.rx_motion.speed >= 0.0) {
            return Err(invalid("rx.speed", "must be non-negative"));
        }
        self.clusters.validate()?;
        self.phase.method.validate()
    }
}

fn leak(section: &str, key: &str) -> &'static str {
    match (section, key) {
        ("tx", "antennas") => "tx.antennas",
        ("tx", "spacing") => "tx.spacing_wavelengths",
        ("rx", "antennas") => "rx.antennas",
        ("rx", "spacing") => "rx.spacing_wavelengths",
        ("irs", "units") => "irs.units",
        ("irs", "unit_width") => "irs.unit_width_wavelengths",
        ("irs", "unit_height") => "irs.unit_height_wavelengths",
        ("irs", "speed") => "irs.speed",
        ("airs", "units") => "airs.units",
        ("airs", "unit_width") => "airs.unit_width_wavelengths",
        ("airs", "unit_height") => "airs.unit_height_wavelengths",
        ("airs", "speed") => "airs.speed",
        _ => "scenario",
    }
}

/// Which propagation path a tap belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathClass {
    Airs,
    Irs,
    /// Cluster index, 0-based.
    Sbr(usize),
}

/// One resolvable path at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathTap {
    pub class: PathClass,
    pub gain: Complex64,
    /// Absolute delay, seconds.
    pub delay: f64,
}

/// Tap delays of every path at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDelays {
    pub airs: f64,
    pub irs: f64,
    pub clusters: Vec<f64>,
}

/// Random state of one ensemble member: cluster draw plus the frozen
/// random unit phases used by the random design.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub clusters: ClusterRealization,
    pub airs_phases: Vec<f64>,
    pub irs_phases: Vec<f64>,
}

/// Phase schedules of both panels.
#[derive(Debug, Clone)]
pub struct Schedules {
    pub airs: PhaseSchedule,
    pub irs: PhaseSchedule,
}

impl Schedules {
    pub fn get(&self, kind: PanelKind) -> &PhaseSchedule {
        match kind {
            PanelKind::Airs => &self.airs,
            PanelKind::Irs => &self.irs,
        }
    }
}

/// Element offsets at both ends used by a batch evaluation. Offsets need not
/// coincide with physical elements, which lets correlation estimators place
/// virtual antennas at arbitrary spacings.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayPoints {
    pub tx: Vec<Vec3>,
    pub rx: Vec<Vec3>,
}

impl ArrayPoints {
    /// All physical elements, in index order.
    pub fn full(geometry: &SceneGeometry) -> Self {
        Self {
            tx: (0..geometry.tx.count)
                .map(|i| geometry.tx.offset_at(i as f64))
                .collect(),
            rx: (0..geometry.rx.count)
                .map(|i| geometry.rx.offset_at(i as f64))
                .collect(),
        }
    }

    /// Single Tx element `p` and Rx element `q`, 1-based.
    pub fn pair(geometry: &SceneGeometry, p: usize, q: usize) -> Result<Self> {
        Ok(Self {
            tx: vec![ula_offset(p, &geometry.tx)?],
            rx: vec![ula_offset(q, &geometry.rx)?],
        })
    }
}

/// Scenario plus cached unit offsets; the entry point for evaluation.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    config: ScenarioConfig,
    airs_units: Vec<Vec3>,
    irs_units: Vec<Vec3>,
}

impl ChannelModel {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            airs_units: config.geometry.unit_offsets(PanelKind::Airs),
            irs_units: config.geometry.unit_offsets(PanelKind::Irs),
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn geometry(&self) -> &SceneGeometry {
        &self.config.geometry
    }

    pub fn units(&self, kind: PanelKind) -> &[Vec3] {
        match kind {
            PanelKind::Airs => &self.airs_units,
            PanelKind::Irs => &self.irs_units,
        }
    }

    /// Draws ensemble member `index`: clusters first, then the AIRS and IRS
    /// random phases. The cluster draw does not depend on the phase design.
    pub fn realization(&self, seed: u64, index: u64) -> Result<Realization> {
        let mut rng = member_rng(seed, index);
        let clusters = generate_realization(&self.config.clusters, &mut rng)?;
        let airs_phases = (0..self.airs_units.len())
            .map(|_| uniform_phase(&mut rng))
            .collect();
        let irs_phases = (0..self.irs_units.len())
            .map(|_| uniform_phase(&mut rng))
            .collect();
        Ok(Realization {
            clusters,
            airs_phases,
            irs_phases,
        })
    }

    /// Schedules for `design`; random phases come from `realization`.
    pub fn schedules(&self, design: &PhaseDesign, realization: Option<&Realization>) -> Result<Schedules> {
        let g = self.geometry();
        let lambda = self.config.wavelength();
        Ok(Schedules {
            airs: schedule_for(
                design,
                g,
                PanelKind::Airs,
                lambda,
                realization.map(|r| r.airs_phases.as_slice()),
            )?,
            irs: schedule_for(
                design,
                g,
                PanelKind::Irs,
                lambda,
                realization.map(|r| r.irs_phases.as_slice()),
            )?,
        })
    }

    fn reflected_weight(&self, kind: PanelKind) -> f64 {
        let c = &self.config;
        if c.exclude_irs_path && c.phase.method == PhaseMethod::Zero {
            return 0.0;
        }
        let k = match kind {
            PanelKind::Airs => c.k_airs,
            PanelKind::Irs => c.k_irs,
        };
        (k / (c.k_rice() + 1.0)).sqrt()
    }

    fn scatter_weight(&self) -> f64 {
        (1.0 / (self.config.k_rice() + 1.0)).sqrt()
    }

    /// Sum of the Doppler exponents of a reflected path at time `t`, radians.
    pub fn reflected_doppler_phase(&self, kind: PanelKind, t: f64) -> Result<f64> {
        Ok(self.doppler_terms(kind, t)?.iter().map(|d| d.phase).sum())
    }

    /// Each Doppler exponent of a reflected path with its analytic
    /// instantaneous frequency. AIRS: Tx→AIRS, AIRS→Rx, Rx motion; IRS: Rx
    /// motion only.
    pub fn doppler_terms(&self, kind: PanelKind, t: f64) -> Result<Vec<DopplerTerm>> {
        doppler::terms(self, kind, t)
    }

    /// Delay of a reflected path: center distances over c.
    pub fn reflected_delay(&self, kind: PanelKind, t: f64) -> f64 {
        let g = self.geometry();
        let center = g.panel_center(kind, t);
        ((center - g.tx_position()).norm() + (g.rx_position(t) - center).norm()) / SPEED_OF_LIGHT
    }

    /// Per-unit phasors of a reflected path at time `t` for every element
    /// offset in `points`.
    pub fn reflected_basis(&self, kind: PanelKind, t: f64, points: &ArrayPoints) -> Result<ReflectedBasis> {
        let g = self.geometry();
        let k0 = self.config.wavenumber();
        let units = self.units(kind);
        let n = units.len();
        let center = g.panel_center(kind, t);
        let to_tx = g.tx_position() - center;
        let to_rx = g.rx_position(t) - center;
        let mut tx = Vec::with_capacity(n * points.tx.len());
        let mut rx = Vec::with_capacity(n * points.rx.len());
        for u in units {
            for a in &points.tx {
                let d = crate::geometry::per_unit_distance(&to_tx, a, u)?;
                tx.push(Complex64::cis(-k0 * d));
            }
            for b in &points.rx {
                let d = crate::geometry::per_unit_distance(&to_rx, b, u)?;
                rx.push(Complex64::cis(-k0 * d));
            }
        }
        let weight = self.reflected_weight(kind) / (n as f64).sqrt();
        let doppler = self.reflected_doppler_phase(kind, t)?;
        Ok(ReflectedBasis {
            n_tx: points.tx.len(),
            n_rx: points.rx.len(),
            units: n,
            tx,
            rx,
            prefactor: Complex64::from_polar(weight, doppler),
            delay: self.reflected_delay(kind, t),
        })
    }

    /// Tx-side part of the scattered paths of one realization.
    pub fn scatter_basis(&self, clusters: &ClusterRealization, tx_points: &[Vec3]) -> Result<ScatterBasis> {
        ScatterBasis::new(self, clusters, tx_points)
    }

    /// All taps for every element pair in `points`.
    pub fn tap_field(
        &self,
        t: f64,
        points: &ArrayPoints,
        clusters: &ClusterRealization,
        schedules: &Schedules,
    ) -> Result<TapField> {
        let airs = self
            .reflected_basis(PanelKind::Airs, t, points)?
            .field(&schedules.airs.phases_at(t)?)?;
        let irs = self
            .reflected_basis(PanelKind::Irs, t, points)?
            .field(&schedules.irs.phases_at(t)?)?;
        let scatter = self.scatter_basis(clusters, &points.tx)?.field(t, &points.rx)?;
        Ok(TapField::assemble(points.tx.len(), points.rx.len(), &airs, &irs, &scatter))
    }

    pub fn path_delays(&self, t: f64, clusters: &ClusterRealization) -> Result<PathDelays> {
        let basis = ScatterBasis::new(self, clusters, &[])?;
        Ok(PathDelays {
            airs: self.reflected_delay(PanelKind::Airs, t),
            irs: self.reflected_delay(PanelKind::Irs, t),
            clusters: basis.delays(t)?,
        })
    }
}

/// Doppler exponent of one reflected-path term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerTerm {
    /// Phase at time `t`, radians.
    pub phase: f64,
    /// Analytic time derivative of `phase`, rad/s.
    pub rate: f64,
}

mod doppler {
    use super::*;

    /// `g(t) = cosβ cosχ⊥ cos(α − χ∥) + sinβ sinχ⊥` and its derivative.
    fn panel_projection(az: f64, el: f64, az_dot: f64, el_dot: f64, chi_az: f64, chi_el: f64) -> (f64, f64) {
        let (sb, cb) = el.sin_cos();
        let (sd, cd) = (az - chi_az).sin_cos();
        let (se, ce) = chi_el.sin_cos();
        let g = cb * ce * cd + sb * se;
        let dg = -ce * (sb * el_dot * cd + cb * sd * az_dot) + cb * el_dot * se;
        (g, dg)
    }

    /// `g(t) = cos(α − χ) cosβ` and its derivative.
    fn ground_projection(az: f64, el: f64, az_dot: f64, el_dot: f64, chi: f64) -> (f64, f64) {
        let (sb, cb) = el.sin_cos();
        let (sd, cd) = (az - chi).sin_cos();
        (cd * cb, -sd * cb * az_dot - cd * sb * el_dot)
    }

    /// Azimuth rate for the configured form. `departure` selects the
    /// `atan(x/y)` variant of the folded form, otherwise `asin(y/ρ)`.
    fn azimuth_rate(form: AzimuthForm, v: &Vec3, two_arg_rate: f64, departure: bool) -> f64 {
        match form {
            AzimuthForm::TwoArgument => two_arg_rate,
            AzimuthForm::Folded if departure => -two_arg_rate,
            AzimuthForm::Folded => two_arg_rate * v.x.signum(),
        }
    }

    fn term(sign: f64, k0: f64, speed: f64, t: f64, g: f64, dg: f64) -> DopplerTerm {
        DopplerTerm {
            phase: sign * k0 * speed * t * g,
            rate: sign * k0 * speed * (g + t * dg),
        }
    }

    pub(super) fn terms(model: &ChannelModel, kind: PanelKind, t: f64) -> Result<Vec<DopplerTerm>> {
        let cfg = model.config();
        let g = &cfg.geometry;
        let k0 = cfg.wavenumber();
        let rx_motion = g.rx_motion;
        let rx_vel = rx_motion.velocity();
        match kind {
            PanelKind::Airs => {
                let ang = g.airs_angles(t)?;
                let links = g.link_vectors(t);
                let airs_vel = g.airs.motion.velocity();
                let dep = links.tx_airs;
                let arr = -links.airs_rx;
                let arr_dot = airs_vel - rx_vel;
                let (dep_az_dot, dep_el_dot) = direction_rates(&dep, &airs_vel);
                let (arr_az_dot, arr_el_dot) = direction_rates(&arr, &arr_dot);
                let dep_az_dot = azimuth_rate(g.azimuth_form, &dep, dep_az_dot, true);
                let arr_az_dot = azimuth_rate(g.azimuth_form, &arr, arr_az_dot, false);
                let m = g.airs.motion;
                let (g1, dg1) = panel_projection(
                    ang.departure_azimuth,
                    ang.departure_elevation,
                    dep_az_dot,
                    dep_el_dot,
                    m.azimuth,
                    m.elevation,
                );
                let (g2, dg2) = panel_projection(
                    ang.arrival_azimuth,
                    ang.arrival_elevation,
                    arr_az_dot,
                    arr_el_dot,
                    m.azimuth,
                    m.elevation,
                );
                let (g3, dg3) = ground_projection(
                    ang.arrival_azimuth,
                    ang.arrival_elevation,
                    arr_az_dot,
                    arr_el_dot,
                    rx_motion.azimuth,
                );
                Ok(vec![
                    term(1.0, k0, m.speed, t, g1, dg1),
                    term(-1.0, k0, m.speed, t, g2, dg2),
                    term(1.0, k0, rx_motion.speed, t, g3, dg3),
                ])
            }
            PanelKind::Irs => {
                let ang = g.irs_arrival_angles(t)?;
                let arr = -g.link_vectors(t).irs_rx;
                let arr_dot = -rx_vel;
                let (az_dot, el_dot) = direction_rates(&arr, &arr_dot);
                let az_dot = azimuth_rate(g.azimuth_form, &arr, az_dot, false);
                let (g3, dg3) = ground_projection(
                    ang.arrival_azimuth,
                    ang.arrival_elevation,
                    az_dot,
                    el_dot,
                    rx_motion.azimuth,
                );
                Ok(vec![term(1.0, k0, rx_motion.speed, t, g3, dg3)])
            }
        }
    }
}

/// Per-unit phasors of one reflected path, ready to be combined with any
/// unit phase vector.
#[derive(Debug, Clone)]
pub struct ReflectedBasis {
    n_tx: usize,
    n_rx: usize,
    units: usize,
    /// `units × n_tx`, `e^{−jk₀ ε^{T,X}_n}`
    tx: Vec<Complex64>,
    /// `units × n_rx`, `e^{−jk₀ ε^{X,R}_n}`
    rx: Vec<Complex64>,
    /// Path weight over `√N` times the Doppler factor.
    prefactor: Complex64,
    delay: f64,
}

impl ReflectedBasis {
    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Gains for every element pair, Tx index outermost.
    pub fn field(&self, phases: &[f64]) -> Result<ReflectedField> {
        if phases.len() != self.units {
            return Err(invalid("phases", format!("expected {} unit phases, got {}", self.units, phases.len())));
        }
        let mut gains = vec![Complex64::new(0.0, 0.0); self.n_tx * self.n_rx];
        if self.prefactor.norm() == 0.0 {
            return Ok(ReflectedField {
                delay: self.delay,
                gains,
            });
        }
        for (n, phi) in phases.iter().enumerate() {
            let w = Complex64::cis(*phi);
            let tx = &self.tx[n * self.n_tx..(n + 1) * self.n_tx];
            let rx = &self.rx[n * self.n_rx..(n + 1) * self.n_rx];
            for (i, a) in tx.iter().enumerate() {
                let wa = w * a;
                let row = &mut gains[i * self.n_rx..(i + 1) * self.n_rx];
                for (g, b) in row.iter_mut().zip(rx) {
                    *g += wa * b;
                }
            }
        }
        for g in &mut gains {
            *g *= self.prefactor;
        }
        Ok(ReflectedField {
            delay: self.delay,
            gains,
        })
    }
}

/// Gains of one reflected path for every element pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedField {
    pub delay: f64,
    pub gains: Vec<Complex64>,
}

#[derive(Debug, Clone)]
struct RayBasis {
    state: ScattererState,
    position: Vec3,
    /// `√(P_ℓ/M)/√(K+1) · e^{jφ} e^{−jk₀ ε^{T,S}}` per Tx point.
    tx: Vec<Complex64>,
}

#[derive(Debug, Clone)]
struct ClusterBasis {
    delay: f64,
    rays: Vec<RayBasis>,
}

/// Tx side of the scattered paths of one realization; time-invariant
/// because the transmitter and the scatterers are static.
#[derive(Debug, Clone)]
pub struct ScatterBasis {
    geometry: SceneGeometry,
    wavenumber: f64,
    n_tx: usize,
    clusters: Vec<ClusterBasis>,
}

impl ScatterBasis {
    fn new(model: &ChannelModel, realization: &ClusterRealization, tx_points: &[Vec3]) -> Result<Self> {
        let cfg = model.config();
        let g = cfg.geometry;
        let k0 = cfg.wavenumber();
        let range = cfg.clusters.initial_range;
        let tx_pos = g.tx_position();
        let sw = model.scatter_weight();
        let clusters = realization
            .clusters
            .iter()
            .map(|c| {
                let amp = sw * (c.power / c.rays.len() as f64).sqrt();
                let rays = c
                    .rays
                    .iter()
                    .map(|r| {
                        let state = ScattererState {
                            range,
                            azimuth: r.azimuth,
                            elevation: r.elevation,
                        };
                        let position = scatterer_position(&state, g.distance);
                        let tx = tx_points
                            .iter()
                            .map(|a| {
                                let d = (position - tx_pos - a).norm();
                                Complex64::from_polar(amp, r.phase - k0 * d)
                            })
                            .collect();
                        RayBasis { state, position, tx }
                    })
                    .collect();
                ClusterBasis {
                    delay: c.delay,
                    rays,
                }
            })
            .collect();
        Ok(Self {
            geometry: g,
            wavenumber: k0,
            n_tx: tx_points.len(),
            clusters,
        })
    }

    fn delays(&self, t: f64) -> Result<Vec<f64>> {
        let g = &self.geometry;
        self.clusters
            .iter()
            .map(|c| {
                let first = &c.rays[0];
                let tr = scatterer_track(t, &first.state, &g.rx_motion, g.distance, g.tx_height, g.azimuth_form)?;
                Ok((tr.tx_range + tr.rx_range) / SPEED_OF_LIGHT + c.delay)
            })
            .collect()
    }

    /// Cluster gains at time `t` for every (Tx point, `rx_points`) pair.
    pub fn field(&self, t: f64, rx_points: &[Vec3]) -> Result<ScatterField> {
        let g = &self.geometry;
        let k0 = self.wavenumber;
        let n_rx = rx_points.len();
        let rx_pos = g.rx_position(t);
        let n_clusters = self.clusters.len();
        let pairs = self.n_tx * n_rx;
        let mut gains = vec![Complex64::new(0.0, 0.0); pairs * n_clusters];
        let mut delays = Vec::with_capacity(n_clusters);
        let mut rx_phasors = vec![Complex64::new(0.0, 0.0); n_rx];
        for (l, c) in self.clusters.iter().enumerate() {
            for (m, ray) in c.rays.iter().enumerate() {
                let tr = scatterer_track(t, &ray.state, &g.rx_motion, g.distance, g.tx_height, g.azimuth_form)?;
                if m == 0 {
                    delays.push((tr.tx_range + tr.rx_range) / SPEED_OF_LIGHT + c.delay);
                }
                let doppler =
                    k0 * g.rx_motion.speed * t * (tr.azimuth - g.rx_motion.azimuth).cos() * tr.elevation.cos();
                for (b, off) in rx_phasors.iter_mut().zip(rx_points) {
                    let d = (rx_pos + off - ray.position).norm();
                    if !(d > 0.0) {
                        return Err(Error::DegenerateGeometry("receiver element on a scatterer".into()));
                    }
                    *b = Complex64::cis(doppler - k0 * d);
                }
                for (i, a) in ray.tx.iter().enumerate() {
                    for (j, b) in rx_phasors.iter().enumerate() {
                        gains[(i * n_rx + j) * n_clusters + l] += a * b;
                    }
                }
            }
        }
        Ok(ScatterField {
            clusters: n_clusters,
            delays,
            gains,
        })
    }
}

/// Cluster gains for every element pair: index `(pair, cluster)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterField {
    pub clusters: usize,
    pub delays: Vec<f64>,
    pub gains: Vec<Complex64>,
}

/// All `2 + L` taps for a grid of element pairs. Delays are shared by all
/// pairs; gains are stored pair-major, Tx index outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct TapField {
    pub n_tx: usize,
    pub n_rx: usize,
    pub delays: Vec<f64>,
    pub gains: Vec<Complex64>,
}

impl TapField {
    pub fn assemble(
        n_tx: usize,
        n_rx: usize,
        airs: &ReflectedField,
        irs: &ReflectedField,
        scatter: &ScatterField,
    ) -> Self {
        let pairs = n_tx * n_rx;
        assert_eq!(pairs, airs.gains.len());
        assert_eq!(pairs, irs.gains.len());
        assert_eq!(pairs * scatter.clusters, scatter.gains.len());
        let taps = 2 + scatter.clusters;
        let mut delays = Vec::with_capacity(taps);
        delays.push(airs.delay);
        delays.push(irs.delay);
        delays.extend_from_slice(&scatter.delays);
        let mut gains = Vec::with_capacity(pairs * taps);
        for k in 0..pairs {
            gains.push(airs.gains[k]);
            gains.push(irs.gains[k]);
            gains.extend_from_slice(&scatter.gains[k * scatter.clusters..(k + 1) * scatter.clusters]);
        }
        Self {
            n_tx,
            n_rx,
            delays,
            gains,
        }
    }

    pub fn tap_count(&self) -> usize {
        self.delays.len()
    }

    pub fn gains(&self, i: usize, j: usize) -> &[Complex64] {
        let taps = self.tap_count();
        let k = i * self.n_rx + j;
        &self.gains[k * taps..(k + 1) * taps]
    }

    /// Narrowband coefficient: sum of all tap gains.
    pub fn tap_sum(&self, i: usize, j: usize) -> Complex64 {
        self.gains(i, j).iter().sum()
    }

    pub fn taps(&self, i: usize, j: usize) -> Vec<PathTap> {
        self.gains(i, j)
            .iter()
            .zip(&self.delays)
            .enumerate()
            .map(|(k, (g, d))| PathTap {
                class: match k {
                    0 => PathClass::Airs,
                    1 => PathClass::Irs,
                    l => PathClass::Sbr(l - 2),
                },
                gain: *g,
                delay: *d,
            })
            .collect()
    }

    /// `H(f) = Σ gain · e^{−j2πf·delay}` for frequency offsets `freqs`.
    pub fn frequency_response(&self, i: usize, j: usize, freqs: &[f64]) -> Vec<Complex64> {
        frequency_response_of(self.gains(i, j), &self.delays, freqs)
    }
}

fn frequency_response_of(gains: &[Complex64], delays: &[f64], freqs: &[f64]) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|f| {
            gains
                .iter()
                .zip(delays)
                .map(|(g, d)| g * Complex64::cis(-TAU * f * d))
                .sum()
        })
        .collect()
}

/// AIRS tap between Tx element `p` and Rx element `q` (1-based).
pub fn h_airs(p: usize, q: usize, t: f64, model: &ChannelModel, schedule: &PhaseSchedule) -> Result<PathTap> {
    reflected_tap(PanelKind::Airs, p, q, t, model, schedule)
}

/// IRS tap between Tx element `p` and Rx element `q` (1-based).
pub fn h_irs(p: usize, q: usize, t: f64, model: &ChannelModel, schedule: &PhaseSchedule) -> Result<PathTap> {
    reflected_tap(PanelKind::Irs, p, q, t, model, schedule)
}

fn reflected_tap(
    kind: PanelKind,
    p: usize,
    q: usize,
    t: f64,
    model: &ChannelModel,
    schedule: &PhaseSchedule,
) -> Result<PathTap> {
    let points = ArrayPoints::pair(model.geometry(), p, q)?;
    let f = model.reflected_basis(kind, t, &points)?.field(&schedule.phases_at(t)?)?;
    Ok(PathTap {
        class: match kind {
            PanelKind::Airs => PathClass::Airs,
            PanelKind::Irs => PathClass::Irs,
        },
        gain: f.gains[0],
        delay: f.delay,
    })
}

/// One tap per cluster between Tx element `p` and Rx element `q`.
pub fn h_sbr(
    p: usize,
    q: usize,
    t: f64,
    model: &ChannelModel,
    realization: &ClusterRealization,
) -> Result<Vec<PathTap>> {
    let points = ArrayPoints::pair(model.geometry(), p, q)?;
    let f = model.scatter_basis(realization, &points.tx)?.field(t, &points.rx)?;
    Ok(f
        .gains
        .iter()
        .zip(&f.delays)
        .enumerate()
        .map(|(l, (g, d))| PathTap {
            class: PathClass::Sbr(l),
            gain: *g,
            delay: *d,
        })
        .collect())
}

/// Delays of all paths at time `t`.
pub fn path_delays(t: f64, model: &ChannelModel, realization: &ClusterRealization) -> Result<PathDelays> {
    model.path_delays(t, realization)
}

/// All `2 + L` taps of the pair `(p, q)`.
pub fn cir(
    p: usize,
    q: usize,
    t: f64,
    model: &ChannelModel,
    realization: &ClusterRealization,
    schedules: &Schedules,
) -> Result<Vec<PathTap>> {
    let points = ArrayPoints::pair(model.geometry(), p, q)?;
    Ok(model.tap_field(t, &points, realization, schedules)?.taps(0, 0))
}

/// `H(f) = Σ gain · e^{−j2πf·delay}` over a list of taps.
pub fn frequency_response(taps: &[PathTap], freqs: &[f64]) -> Vec<Complex64> {
    let gains: Vec<Complex64> = taps.iter().map(|t| t.gain).collect();
    let delays: Vec<f64> = taps.iter().map(|t| t.delay).collect();
    frequency_response_of(&gains, &delays, freqs)
}

/// `P × Q` narrowband channel matrix: entry `(p, q)` is the tap sum.
pub fn channel_matrix(
    t: f64,
    model: &ChannelModel,
    realization: &ClusterRealization,
    schedules: &Schedules,
) -> Result<DMatrix<Complex64>> {
    let g = model.geometry();
    let points = ArrayPoints::full(g);
    let field = model.tap_field(t, &points, realization, schedules)?;
    Ok(DMatrix::from_fn(g.tx.count, g.rx.count, |i, j| field.tap_sum(i, j)))
}
