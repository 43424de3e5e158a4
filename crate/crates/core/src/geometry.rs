//! Deterministic geometry of the link: array offsets, panel rotations,
//! trajectories, link vectors, per-unit distances and direction angles.
//!
//! Everything lives in one frame anchored below the transmitter: the Tx array
//! reference sits at `(0, 0, H_BS)`, the receiver starts at `(D, 0, 0)` on the
//! ground and the panels are placed at their absolute coordinates. The
//! per-link vectors are differences of these positions.
//!
//! Rotation convention: a unit offset is the rotation matrix applied to the
//! column vector `[k_h δ_h, k_v δ_v, 0]ᵀ`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Largest excursion of an arcsine argument beyond `[-1, 1]` that is
/// treated as rounding noise and clipped.
pub const ASIN_CLIP_TOLERANCE: f64 = 1e-12;

/// Pitch, yaw and roll of a reflecting panel, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationAngles {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

/// Uniform linear array at one end of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaSpec {
    pub count: usize,
    /// Element spacing in meters.
    pub spacing: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl UlaSpec {
    /// Offset of one element step, i.e. `δ · [−cosβ cosα, sinβ sinα, sinβ]`
    /// divided by `δ`. Not unit length in general.
    pub fn step_direction(&self) -> Vec3 {
        let (sa, ca) = self.azimuth.sin_cos();
        let (sb, cb) = self.elevation.sin_cos();
        Vec3::new(-cb * ca, sb * sa, sb)
    }

    /// Offset of a fractional element position, `x` steps of `δ` away from
    /// the first element.
    pub fn offset_at(&self, steps: f64) -> Vec3 {
        self.step_direction() * (steps * self.spacing)
    }
}

/// Linear motion of a panel: speed plus azimuth and elevation movement angles.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PanelMotion {
    pub speed: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl PanelMotion {
    /// Velocity vector; the elevation angle is measured from the vertical.
    pub fn velocity(&self) -> Vec3 {
        let (sa, ca) = self.azimuth.sin_cos();
        let (se, ce) = self.elevation.sin_cos();
        Vec3::new(se * ca, se * sa, ce) * self.speed
    }
}

/// One reflecting surface (IRS or AIRS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePanel {
    pub units_h: usize,
    pub units_v: usize,
    /// Horizontal unit size δ_h, meters.
    pub unit_width: f64,
    /// Vertical unit size δ_v, meters.
    pub unit_height: f64,
    pub rotation: RotationAngles,
    /// Initial center: x, y and height above ground.
    pub anchor: Vec3,
    pub motion: PanelMotion,
}

impl SurfacePanel {
    pub fn unit_count(&self) -> usize {
        self.units_h * self.units_v
    }

    /// Offsets of every unit, horizontal index outermost.
    pub fn unit_offsets(&self) -> Vec<Vec3> {
        let rot = rotation_matrix(&self.rotation);
        let mut out = Vec::with_capacity(self.unit_count());
        for h in 1..=self.units_h {
            for v in 1..=self.units_v {
                out.push(rot * self.local_offset(h, v));
            }
        }
        out
    }

    fn local_offset(&self, h: usize, v: usize) -> Vec3 {
        let k_h = (2.0 * h as f64 - self.units_h as f64 - 1.0) / 2.0;
        let k_v = (2.0 * v as f64 - self.units_v as f64 - 1.0) / 2.0;
        Vec3::new(k_h * self.unit_width, k_v * self.unit_height, 0.0)
    }

    /// Half of the panel diagonal; no unit lies farther from the center.
    pub fn half_diagonal(&self) -> f64 {
        let w = (self.units_h as f64 - 1.0) * self.unit_width;
        let h = (self.units_v as f64 - 1.0) * self.unit_height;
        0.5 * (w * w + h * h).sqrt()
    }

    /// Returns a message when a unit dimension leaves `[λ/10, λ/2]`.
    pub fn unit_size_warning(&self, wavelength: f64) -> Option<String> {
        let lo = wavelength / 10.0;
        let hi = wavelength / 2.0;
        let tol = 1e-9 * wavelength;
        [("width", self.unit_width), ("height", self.unit_height)]
            .into_iter()
            .find(|(_, d)| *d < lo - tol || *d > hi + tol)
            .map(|(name, d)| {
                format!(
                    "unit {name} {:.4} λ outside the sub-wavelength range [0.1 λ, 0.5 λ]",
                    d / wavelength
                )
            })
    }
}

/// Receiver motion: horizontal only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MobileSpec {
    pub speed: f64,
    pub azimuth: f64,
}

impl MobileSpec {
    pub fn velocity(&self) -> Vec3 {
        let (s, c) = self.azimuth.sin_cos();
        Vec3::new(c, s, 0.0) * self.speed
    }
}

/// How azimuth angles are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AzimuthForm {
    /// Quadrant-correct `atan2(y, x)` of the direction vector.
    #[default]
    TwoArgument,
    /// The single-argument forms: `atan(x/y)` for the AIRS departure
    /// azimuth and `asin(y/ρ)` for arrival azimuths. They fold quadrants.
    Folded,
}

/// `R = Rz(pitch) · Ry(yaw) · Rx(roll)`.
pub fn rotation_matrix(angles: &RotationAngles) -> Matrix3<f64> {
    let (sp, cp) = angles.pitch.sin_cos();
    let (sy, cy) = angles.yaw.sin_cos();
    let (sr, cr) = angles.roll.sin_cos();
    let rz = Matrix3::new(cp, -sp, 0.0, sp, cp, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    rz * ry * rx
}

/// Offset of the `p`-th element (1-based) from the first element.
pub fn ula_offset(p: usize, spec: &UlaSpec) -> Result<Vec3> {
    if p == 0 || p > spec.count {
        return Err(Error::IndexOutOfRange {
            what: "antenna",
            index: p,
            max: spec.count,
        });
    }
    Ok(spec.offset_at((p - 1) as f64))
}

/// Offset of unit `(h, v)` (1-based) from the panel center.
pub fn surface_unit_offset(h: usize, v: usize, panel: &SurfacePanel) -> Result<Vec3> {
    if h == 0 || h > panel.units_h {
        return Err(Error::IndexOutOfRange {
            what: "horizontal unit",
            index: h,
            max: panel.units_h,
        });
    }
    if v == 0 || v > panel.units_v {
        return Err(Error::IndexOutOfRange {
            what: "vertical unit",
            index: v,
            max: panel.units_v,
        });
    }
    Ok(rotation_matrix(&panel.rotation) * panel.local_offset(h, v))
}

/// AIRS center at time `t`, relative to the transmitter height.
pub fn airs_position(t: f64, panel: &SurfacePanel, tx_height: f64) -> Vec3 {
    let p = panel.anchor + panel.motion.velocity() * t;
    Vec3::new(p.x, p.y, p.z - tx_height)
}

/// `‖link + antenna_offset − unit_offset‖`.
///
/// `link` runs from the panel center to the array reference, so the result
/// is the distance between one unit and one antenna element.
pub fn per_unit_distance(link: &Vec3, antenna_offset: &Vec3, unit_offset: &Vec3) -> Result<f64> {
    let d = (link + antenna_offset - unit_offset).norm();
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::DegenerateGeometry(format!(
            "coincident endpoints (distance {d})"
        )))
    }
}

/// Arcsine with the clipping policy: arguments within
/// [`ASIN_CLIP_TOLERANCE`] of `±1` are clipped, larger excursions fail.
pub fn clipped_asin(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + ASIN_CLIP_TOLERANCE {
        return Err(Error::DegenerateGeometry(format!(
            "arcsine argument {x} outside [-1, 1]"
        )));
    }
    Ok(x.clamp(-1.0, 1.0).asin())
}

fn nonzero_norm(v: &Vec3, what: &str) -> Result<f64> {
    let n = v.norm();
    if n > 0.0 && n.is_finite() {
        Ok(n)
    } else {
        Err(Error::DegenerateGeometry(format!("zero-length {what}")))
    }
}

/// Elevation of a direction vector, `asin(z/‖v‖)`.
pub fn elevation_of(v: &Vec3) -> Result<f64> {
    let n = nonzero_norm(v, "direction vector")?;
    clipped_asin(v.z / n)
}

/// Time derivatives `(d azimuth/dt, d elevation/dt)` of the two-argument
/// azimuth and the elevation of `v`, given its rate of change `v_dot`.
pub fn direction_rates(v: &Vec3, v_dot: &Vec3) -> (f64, f64) {
    let rho2 = v.x * v.x + v.y * v.y;
    let r2 = rho2 + v.z * v.z;
    let az = (v.x * v_dot.y - v.y * v_dot.x) / rho2;
    let el = (v_dot.z * r2 - v.z * v.dot(v_dot)) / (r2 * rho2.sqrt());
    (az, el)
}

/// The four center-to-center link vectors at one time instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkVectors {
    pub tx_airs: Vec3,
    pub airs_rx: Vec3,
    pub tx_irs: Vec3,
    pub irs_rx: Vec3,
}

/// Departure and arrival angles of the AIRS path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirsAngles {
    pub departure_azimuth: f64,
    pub departure_elevation: f64,
    pub arrival_elevation: f64,
    pub arrival_azimuth: f64,
}

/// Arrival angles of the IRS path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrsAngles {
    pub arrival_elevation: f64,
    pub arrival_azimuth: f64,
}

/// Which reflecting surface a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PanelKind {
    Airs,
    Irs,
}

/// Static description of the whole link geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneGeometry {
    pub tx: UlaSpec,
    pub rx: UlaSpec,
    pub irs: SurfacePanel,
    pub airs: SurfacePanel,
    pub rx_motion: MobileSpec,
    /// Horizontal Tx–Rx distance D at t = 0.
    pub distance: f64,
    /// Transmitter height H_BS.
    pub tx_height: f64,
    pub azimuth_form: AzimuthForm,
}

impl SceneGeometry {
    pub fn tx_position(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.tx_height)
    }

    pub fn rx_position(&self, t: f64) -> Vec3 {
        Vec3::new(self.distance, 0.0, 0.0) + self.rx_motion.velocity() * t
    }

    pub fn irs_center(&self) -> Vec3 {
        self.irs.anchor
    }

    pub fn airs_center(&self, t: f64) -> Vec3 {
        self.airs.anchor + self.airs.motion.velocity() * t
    }

    pub fn panel(&self, kind: PanelKind) -> &SurfacePanel {
        match kind {
            PanelKind::Airs => &self.airs,
            PanelKind::Irs => &self.irs,
        }
    }

    pub fn panel_center(&self, kind: PanelKind, t: f64) -> Vec3 {
        match kind {
            PanelKind::Airs => self.airs_center(t),
            PanelKind::Irs => self.irs_center(),
        }
    }

    pub fn panel_velocity(&self, kind: PanelKind) -> Vec3 {
        match kind {
            PanelKind::Airs => self.airs.motion.velocity(),
            PanelKind::Irs => Vec3::zeros(),
        }
    }

    pub fn link_vectors(&self, t: f64) -> LinkVectors {
        let tx = self.tx_position();
        let rx = self.rx_position(t);
        let airs = self.airs_center(t);
        let irs = self.irs_center();
        LinkVectors {
            tx_airs: airs - tx,
            airs_rx: rx - airs,
            tx_irs: irs - tx,
            irs_rx: rx - irs,
        }
    }

    pub fn airs_angles(&self, t: f64) -> Result<AirsAngles> {
        let links = self.link_vectors(t);
        let dep = links.tx_airs;
        // arrival direction points from the receiver back to the AIRS
        let arr = -links.airs_rx;
        nonzero_norm(&dep, "Tx-AIRS link")?;
        nonzero_norm(&arr, "AIRS-Rx link")?;
        let departure_elevation = elevation_of(&dep)?;
        let arrival_elevation = elevation_of(&arr)?;
        let (departure_azimuth, arrival_azimuth) = match self.azimuth_form {
            AzimuthForm::TwoArgument => (dep.y.atan2(dep.x), arr.y.atan2(arr.x)),
            AzimuthForm::Folded => (
                (dep.x / dep.y).atan(),
                folded_arrival_azimuth(arr.y, &arr, arrival_elevation)?,
            ),
        };
        Ok(AirsAngles {
            departure_azimuth,
            departure_elevation,
            arrival_elevation,
            arrival_azimuth,
        })
    }

    pub fn irs_arrival_angles(&self, t: f64) -> Result<IrsAngles> {
        let arr = -self.link_vectors(t).irs_rx;
        nonzero_norm(&arr, "IRS-Rx link")?;
        let arrival_elevation = elevation_of(&arr)?;
        let arrival_azimuth = match self.azimuth_form {
            AzimuthForm::TwoArgument => arr.y.atan2(arr.x),
            AzimuthForm::Folded => folded_arrival_azimuth(arr.y, &arr, arrival_elevation)?,
        };
        Ok(IrsAngles {
            arrival_elevation,
            arrival_azimuth,
        })
    }

    /// Unit offsets of a panel, cached by callers that evaluate many times.
    pub fn unit_offsets(&self, kind: PanelKind) -> Vec<Vec3> {
        self.panel(kind).unit_offsets()
    }

    /// Per-unit distances `(Tx element → unit, unit → Rx element)` for every
    /// unit of a panel at time `t`.
    pub fn unit_distances(
        &self,
        kind: PanelKind,
        units: &[Vec3],
        t: f64,
        tx_offset: &Vec3,
        rx_offset: &Vec3,
    ) -> Result<Vec<(f64, f64)>> {
        let center = self.panel_center(kind, t);
        let to_tx = self.tx_position() - center;
        let to_rx = self.rx_position(t) - center;
        units
            .iter()
            .map(|u| {
                Ok((
                    per_unit_distance(&to_tx, tx_offset, u)?,
                    per_unit_distance(&to_rx, rx_offset, u)?,
                ))
            })
            .collect()
    }
}

/// `asin(y / (‖v‖ cos β))`.
fn folded_arrival_azimuth(y: f64, v: &Vec3, elevation: f64) -> Result<f64> {
    let rho = v.norm() * elevation.cos();
    if rho <= 0.0 {
        return Err(Error::DegenerateGeometry("vertical arrival direction".into()));
    }
    clipped_asin(y / rho)
}

/// Range and arrival angles of one scatterer as seen from the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScattererState {
    pub range: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl ScattererState {
    /// `range · [cosβ cosα, cosβ sinα, sinβ]`.
    pub fn direction_vector(&self) -> Vec3 {
        let (sa, ca) = self.azimuth.sin_cos();
        let (sb, cb) = self.elevation.sin_cos();
        Vec3::new(cb * ca, cb * sa, sb) * self.range
    }
}

/// Scatterer ranges and arrival angles at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScattererTrack {
    /// ε^{S,R}(t)
    pub rx_range: f64,
    /// ε^{T,S}; the scatterer and the transmitter are both static.
    pub tx_range: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

/// Absolute scatterer position for a receiver starting at `(D, 0, 0)`.
///
/// With `u = range·[cosβ cosα, cosβ sinα, sinβ]` the scatterer sits at
/// `(D − u_x, −u_y, u_z)`, so that `Rx(t) − S = (u_x + v t cosχ,
/// u_y + v t sinχ, −u_z)`.
pub fn scatterer_position(initial: &ScattererState, distance: f64) -> Vec3 {
    let u = initial.direction_vector();
    Vec3::new(distance - u.x, -u.y, u.z)
}

pub fn scatterer_track(
    t: f64,
    initial: &ScattererState,
    rx: &MobileSpec,
    distance: f64,
    tx_height: f64,
    form: AzimuthForm,
) -> Result<ScattererTrack> {
    if !(initial.range > 0.0) {
        return Err(Error::DegenerateGeometry("scatterer range must be positive".into()));
    }
    let u0 = initial.direction_vector();
    if t == 0.0 {
        return Ok(ScattererTrack {
            rx_range: initial.range,
            tx_range: tx_range(&u0, distance, tx_height),
            azimuth: initial.azimuth,
            elevation: initial.elevation,
        });
    }
    let (s, c) = rx.azimuth.sin_cos();
    let shift = rx.speed * t;
    let u = Vec3::new(u0.x + shift * c, u0.y + shift * s, u0.z);
    let rx_range = u.norm();
    let elevation = clipped_asin(u0.z / rx_range)?;
    let azimuth = match form {
        AzimuthForm::TwoArgument => u.y.atan2(u.x),
        AzimuthForm::Folded => clipped_asin(u0.y / (rx_range * elevation.cos()))?,
    };
    Ok(ScattererTrack {
        rx_range,
        tx_range: tx_range(&u0, distance, tx_height),
        azimuth,
        elevation,
    })
}

fn tx_range(u0: &Vec3, distance: f64, tx_height: f64) -> f64 {
    let dx = distance - u0.x;
    let dz = tx_height - u0.z;
    (u0.y * u0.y + dx * dx + dz * dz).sqrt()
}
