//! Per-unit phase shifts of the reflecting panels.
//!
//! Four designs are supported: all-zero, frozen random, co-aligned (every
//! unit cancels its own Tx→unit→Rx path phase so that all reflections add
//! up with a common phase at the receiver) and the co-aligned design
//! quantized to `n` bits.
//!
//! Co-aligned schedules are evaluated lazily because the panel and the
//! receiver move: [`PhaseSchedule::phases_at`] recomputes the unit
//! distances at the requested instant.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::fading::uniform_phase;
use crate::geometry::{ula_offset, PanelKind, SceneGeometry, SurfacePanel, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMethod {
    /// Every unit at phase 0.
    Zero,
    /// One uniform draw per unit, frozen over time.
    Random,
    /// Path phases cancelled unit by unit.
    CoAligned,
    /// [`PhaseMethod::CoAligned`] quantized to `bits` bits.
    Quantized { bits: u32 },
}

impl PhaseMethod {
    /// Numeric label 1–4 used by the config file and the CLI.
    pub fn number(&self) -> u8 {
        match self {
            PhaseMethod::Zero => 1,
            PhaseMethod::Random => 2,
            PhaseMethod::CoAligned => 3,
            PhaseMethod::Quantized { .. } => 4,
        }
    }

    pub fn from_number(n: u8, bits: u32) -> Result<Self> {
        let m = match n {
            1 => PhaseMethod::Zero,
            2 => PhaseMethod::Random,
            3 => PhaseMethod::CoAligned,
            4 => PhaseMethod::Quantized { bits },
            _ => return Err(invalid("phase.method", format!("expected 1..=4, got {n}"))),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhaseMethod::Quantized { bits } if *bits == 0 || *bits > 30 => {
                Err(invalid("phase.bits", format!("expected 1..=30, got {bits}")))
            }
            _ => Ok(()),
        }
    }

    /// Short label, e.g. `m3` or `m4_2bit`.
    pub fn label(&self) -> String {
        match self {
            PhaseMethod::Quantized { bits } => format!("m4_{bits}bit"),
            m => format!("m{}", m.number()),
        }
    }
}

/// A phase method together with the common phase the co-aligned designs
/// steer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDesign {
    pub method: PhaseMethod,
    pub target: f64,
}

impl Default for PhaseDesign {
    fn default() -> Self {
        Self {
            method: PhaseMethod::CoAligned,
            target: 0.0,
        }
    }
}

/// Wraps into `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w < TAU {
        w
    } else {
        0.0
    }
}

/// Midpoint of the `2^bits`-interval partition cell of `[0, 2π)` that
/// contains `phi` (taken mod 2π).
pub fn quantize_phase(phi: f64, bits: u32) -> f64 {
    let cells = (1u64 << bits) as f64;
    let width = TAU / cells;
    let k = (wrap_phase(phi) / width).floor().min(cells - 1.0);
    (k + 0.5) * width
}

/// Shortest distance between two angles on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(TAU - d)
}

/// Phase of every unit of one panel as a function of time.
#[derive(Debug, Clone)]
pub enum PhaseSchedule {
    /// Time-invariant values, one per unit.
    Fixed(Vec<f64>),
    Aligned(Box<AlignedSchedule>),
}

/// Geometry needed to evaluate a co-aligned schedule.
#[derive(Debug, Clone)]
pub struct AlignedSchedule {
    geometry: SceneGeometry,
    kind: PanelKind,
    units: Vec<Vec3>,
    wavenumber: f64,
    tx_offset: Vec3,
    rx_offset: Vec3,
    target: f64,
    bits: Option<u32>,
}

impl AlignedSchedule {
    fn phases_at(&self, t: f64) -> Result<Vec<f64>> {
        let d = self.geometry.unit_distances(
            self.kind,
            &self.units,
            t,
            &self.tx_offset,
            &self.rx_offset,
        )?;
        Ok(d.into_iter()
            .map(|(a, b)| {
                let phi = wrap_phase(self.target + self.wavenumber * (a + b));
                match self.bits {
                    Some(bits) => quantize_phase(phi, bits),
                    None => phi,
                }
            })
            .collect())
    }
}

impl PhaseSchedule {
    pub fn unit_count(&self) -> usize {
        match self {
            PhaseSchedule::Fixed(v) => v.len(),
            PhaseSchedule::Aligned(a) => a.units.len(),
        }
    }

    pub fn is_time_invariant(&self) -> bool {
        matches!(self, PhaseSchedule::Fixed(_))
    }

    pub fn phases_at(&self, t: f64) -> Result<Vec<f64>> {
        match self {
            PhaseSchedule::Fixed(v) => Ok(v.clone()),
            PhaseSchedule::Aligned(a) => a.phases_at(t),
        }
    }

    pub fn phase(&self, unit: usize, t: f64) -> Result<f64> {
        match self {
            PhaseSchedule::Fixed(v) => Ok(v[unit]),
            PhaseSchedule::Aligned(a) => Ok(a.phases_at(t)?[unit]),
        }
    }
}

/// All-zero schedule.
pub fn phases_method1(panel: &SurfacePanel) -> PhaseSchedule {
    PhaseSchedule::Fixed(vec![0.0; panel.unit_count()])
}

/// One uniform phase per unit, constant in time.
pub fn phases_method2<R: Rng + ?Sized>(panel: &SurfacePanel, rng: &mut R) -> PhaseSchedule {
    PhaseSchedule::Fixed((0..panel.unit_count()).map(|_| uniform_phase(rng)).collect())
}

/// Co-aligned schedule designed for Tx element `p` and Rx element `q`
/// (1-based).
pub fn phases_method3(
    geometry: &SceneGeometry,
    kind: PanelKind,
    wavelength: f64,
    p: usize,
    q: usize,
    target: f64,
) -> Result<PhaseSchedule> {
    aligned(geometry, kind, wavelength, p, q, target, None)
}

/// Co-aligned schedule quantized to `bits` bits.
pub fn phases_method4(
    geometry: &SceneGeometry,
    kind: PanelKind,
    wavelength: f64,
    p: usize,
    q: usize,
    target: f64,
    bits: u32,
) -> Result<PhaseSchedule> {
    PhaseMethod::Quantized { bits }.validate()?;
    aligned(geometry, kind, wavelength, p, q, target, Some(bits))
}

fn aligned(
    geometry: &SceneGeometry,
    kind: PanelKind,
    wavelength: f64,
    p: usize,
    q: usize,
    target: f64,
    bits: Option<u32>,
) -> Result<PhaseSchedule> {
    if !(wavelength > 0.0) {
        return Err(invalid("wavelength", "must be positive"));
    }
    Ok(PhaseSchedule::Aligned(Box::new(AlignedSchedule {
        geometry: *geometry,
        kind,
        units: geometry.unit_offsets(kind),
        wavenumber: TAU / wavelength,
        tx_offset: ula_offset(p, &geometry.tx)?,
        rx_offset: ula_offset(q, &geometry.rx)?,
        target,
        bits,
    })))
}

/// Builds the schedule of `kind` for a design. Random designs take their
/// values from `random_phases`, which must hold one entry per unit.
pub fn schedule_for(
    design: &PhaseDesign,
    geometry: &SceneGeometry,
    kind: PanelKind,
    wavelength: f64,
    random_phases: Option<&[f64]>,
) -> Result<PhaseSchedule> {
    let panel = geometry.panel(kind);
    match design.method {
        PhaseMethod::Zero => Ok(phases_method1(panel)),
        PhaseMethod::Random => {
            let v = random_phases.ok_or_else(|| invalid("phase.method", "random phases missing"))?;
            if v.len() != panel.unit_count() {
                return Err(invalid("phase.method", "random phase count mismatch"));
            }
            Ok(PhaseSchedule::Fixed(v.to_vec()))
        }
        PhaseMethod::CoAligned => phases_method3(geometry, kind, wavelength, 1, 1, design.target),
        PhaseMethod::Quantized { bits } => {
            phases_method4(geometry, kind, wavelength, 1, 1, design.target, bits)
        }
    }
}
