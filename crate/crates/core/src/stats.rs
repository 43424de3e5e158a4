//! Ensemble estimators: space-time, temporal, spatial and frequency
//! correlation functions and MIMO capacity.
//!
//! Expectations run over ensemble members (cluster draws, ray phases and
//! the random unit phases). Geometry and the co-aligned phase schedules are
//! deterministic per scenario, so the reflected fields of those designs are
//! computed once and shared by every member.
//!
//! Members are evaluated in parallel and collected in index order; every
//! reduction is a compensated sum over that fixed order, so results do not
//! depend on the worker count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{
    channel_matrix, ArrayPoints, ChannelModel, ReflectedBasis, ReflectedField, Schedules, TapField,
};
use crate::error::{invalid, Error, Result};
use crate::fading::ClusterRealization;
use crate::geometry::{PanelKind, Vec3};
use crate::phase::{PhaseDesign, PhaseMethod};

/// Grid and horizon settings shared by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Width of the reference frequency grid, Hz.
    pub fcf_bandwidth_hz: f64,
    pub fcf_points: usize,
    /// Time-average horizon `[0, T]`, seconds.
    pub capacity_horizon_s: f64,
    pub capacity_time_points: usize,
    /// Average capacity over the frequency grid instead of using the
    /// tap-sum matrix.
    pub wideband_capacity: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            fcf_bandwidth_hz: 100e6,
            fcf_points: 64,
            capacity_horizon_s: 2.0,
            capacity_time_points: 101,
            wideband_capacity: false,
        }
    }
}

impl AnalysisOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.fcf_bandwidth_hz > 0.0) || !self.fcf_bandwidth_hz.is_finite() {
            return Err(invalid("analysis.fcf_bandwidth_hz", "must be positive"));
        }
        if self.fcf_points == 0 {
            return Err(invalid("analysis.fcf_points", "must be at least 1"));
        }
        if !(self.capacity_horizon_s >= 0.0) || !self.capacity_horizon_s.is_finite() {
            return Err(invalid("analysis.capacity_horizon_s", "must be non-negative"));
        }
        if self.capacity_time_points == 0 {
            return Err(invalid("analysis.capacity_time_points", "must be at least 1"));
        }
        Ok(())
    }

    /// Baseband offsets of the reference frequency grid:
    /// `−B/2 + iB/n`, `i = 0..n`.
    pub fn frequency_grid(&self) -> Vec<f64> {
        let n = self.fcf_points as f64;
        (0..self.fcf_points)
            .map(|i| -0.5 * self.fcf_bandwidth_hz + i as f64 * self.fcf_bandwidth_hz / n)
            .collect()
    }

    /// Evenly spaced instants on `[0, T]`.
    pub fn time_grid(&self) -> Vec<f64> {
        linspace(0.0, self.capacity_horizon_s, self.capacity_time_points)
    }
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Ensemble size and base seed. Member `i` draws from stream `i` of the
/// seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub n_realizations: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(n_realizations: usize, seed: u64) -> Self {
        Self {
            n_realizations,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::EmptyEnsemble);
        }
        Ok(())
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Maps `f` over member indices `0..n` in parallel; output is in index
/// order.
pub fn map_members<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

/// A normalized correlation estimate over an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub axis: Vec<f64>,
    pub values: Vec<Complex64>,
    pub magnitude: Vec<f64>,
    /// Standard error of the numerator mean over the normalization;
    /// `NaN` for a single member.
    pub std_error: Vec<f64>,
}

/// One member's contribution at one axis point: `conj(a)·b`, `|a|²`,
/// `|b|²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub cross: Complex64,
    pub first: f64,
    pub second: f64,
}

impl Moments {
    pub fn of(a: Complex64, b: Complex64) -> Self {
        Self {
            cross: a.conj() * b,
            first: a.norm_sqr(),
            second: b.norm_sqr(),
        }
    }
}

/// Normalizes member moments (`members[m][k]`) into a correlation per axis
/// point.
pub fn reduce_correlation(axis: &[f64], members: &[Vec<Moments>]) -> Result<CorrelationResult> {
    let n = members.len();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut values = Vec::with_capacity(axis.len());
    let mut magnitude = Vec::with_capacity(axis.len());
    let mut std_error = Vec::with_capacity(axis.len());
    for k in 0..axis.len() {
        let column = members.iter().map(|m| m[k]);
        let re: CompensatedSum = column.clone().map(|m| m.cross.re).collect();
        let im: CompensatedSum = column.clone().map(|m| m.cross.im).collect();
        let a: CompensatedSum = column.clone().map(|m| m.first).collect();
        let b: CompensatedSum = column.clone().map(|m| m.second).collect();
        let sq: CompensatedSum = column.map(|m| m.cross.norm_sqr()).collect();
        let norm = (a.value() * b.value()).sqrt();
        if !(norm > 0.0) {
            return Err(Error::NonFinite("correlation normalization"));
        }
        let v = Complex64::new(re.value(), im.value()) / norm;
        values.push(v);
        magnitude.push(v.norm());
        let nf = n as f64;
        let se = if n > 1 {
            let mean = Complex64::new(re.value(), im.value()) / nf;
            let var = ((sq.value() - nf * mean.norm_sqr()) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt() / (norm / nf)
        } else {
            f64::NAN
        };
        std_error.push(se);
    }
    Ok(CorrelationResult {
        axis: axis.to_vec(),
        values,
        magnitude,
        std_error,
    })
}

/// An instant and the element offsets evaluated at it.
#[derive(Debug, Clone)]
pub struct Probe {
    pub t: f64,
    pub points: ArrayPoints,
}

enum Reflection {
    Fixed {
        airs: ReflectedField,
        irs: ReflectedField,
    },
    Random {
        airs: ReflectedBasis,
        irs: ReflectedBasis,
    },
}

/// Evaluates a set of probes for several phase designs on each ensemble
/// member, sharing the scattered part between designs.
pub struct Evaluator<'a> {
    model: &'a ChannelModel,
    probes: Vec<Probe>,
    /// `[design][probe]`
    reflections: Vec<Vec<Reflection>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a ChannelModel, designs: &[PhaseDesign], probes: Vec<Probe>) -> Result<Self> {
        let mut reflections = Vec::with_capacity(designs.len());
        for design in designs {
            design.method.validate()?;
            let mut config = *model.config();
            config.phase = *design;
            let m = ChannelModel::new(config)?;
            let schedules = match design.method {
                PhaseMethod::Random => None,
                _ => Some(m.schedules(design, None)?),
            };
            let per_probe = probes
                .iter()
                .map(|p| {
                    let airs = m.reflected_basis(PanelKind::Airs, p.t, &p.points)?;
                    let irs = m.reflected_basis(PanelKind::Irs, p.t, &p.points)?;
                    Ok(match &schedules {
                        None => Reflection::Random { airs, irs },
                        Some(s) => Reflection::Fixed {
                            airs: airs.field(&s.airs.phases_at(p.t)?)?,
                            irs: irs.field(&s.irs.phases_at(p.t)?)?,
                        },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            reflections.push(per_probe);
        }
        Ok(Self {
            model,
            probes,
            reflections,
        })
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    /// Tap fields of member `index`, `[design][probe]`.
    pub fn member(&self, seed: u64, index: u64) -> Result<Vec<Vec<TapField>>> {
        let r = self.model.realization(seed, index)?;
        let scatter = self
            .probes
            .iter()
            .map(|p| {
                self.model
                    .scatter_basis(&r.clusters, &p.points.tx)?
                    .field(p.t, &p.points.rx)
            })
            .collect::<Result<Vec<_>>>()?;
        self.reflections
            .iter()
            .map(|per_probe| {
                per_probe
                    .iter()
                    .zip(&self.probes)
                    .zip(&scatter)
                    .map(|((refl, p), s)| {
                        let (airs, irs) = match refl {
                            Reflection::Fixed { airs, irs } => (airs.clone(), irs.clone()),
                            Reflection::Random { airs, irs } => {
                                (airs.field(&r.airs_phases)?, irs.field(&r.irs_phases)?)
                            }
                        };
                        Ok(TapField::assemble(
                            p.points.tx.len(),
                            p.points.rx.len(),
                            &airs,
                            &irs,
                            s,
                        ))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Tx offset `dp` wavelengths from element 1 along the array axis.
fn tx_offset(model: &ChannelModel, dp: f64) -> Vec3 {
    model.geometry().tx.step_direction() * (dp * model.config().wavelength())
}

fn rx_offset(model: &ChannelModel, dq: f64) -> Vec3 {
    model.geometry().rx.step_direction() * (dq * model.config().wavelength())
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid(name, "grid values must be finite"));
    }
    Ok(())
}

fn correlate_designs<F>(
    evaluator: &Evaluator,
    designs: usize,
    axis: &[f64],
    ensemble: &EnsembleSpec,
    moments: F,
) -> Result<Vec<CorrelationResult>>
where
    F: Fn(&[TapField]) -> Vec<Moments> + Sync + Send,
{
    ensemble.validate()?;
    let members = map_members(ensemble.n_realizations, |i| {
        let fields = evaluator.member(ensemble.seed, i)?;
        Ok(fields.iter().map(|f| moments(f)).collect::<Vec<_>>())
    })?;
    (0..designs)
        .map(|d| {
            let per_member: Vec<Vec<Moments>> = members.iter().map(|m| m[d].clone()).collect();
            reduce_correlation(axis, &per_member)
        })
        .collect()
}

/// Space-time correlation between element 1 pair at `t` and the pair offset
/// by `(dp, dq)` wavelengths at `t + dt`.
pub fn stcf(
    model: &ChannelModel,
    design: &PhaseDesign,
    t: f64,
    dp: f64,
    dq: f64,
    dt: f64,
    ensemble: &EnsembleSpec,
) -> Result<CorrelationResult> {
    check_grid("stcf", &[t, dp, dq, dt])?;
    let reference = ArrayPoints {
        tx: vec![Vec3::zeros()],
        rx: vec![Vec3::zeros()],
    };
    let shifted = ArrayPoints {
        tx: vec![tx_offset(model, dp)],
        rx: vec![rx_offset(model, dq)],
    };
    let probes = vec![
        Probe {
            t,
            points: reference,
        },
        Probe {
            t: t + dt,
            points: shifted,
        },
    ];
    let ev = Evaluator::new(model, std::slice::from_ref(design), probes)?;
    let mut out = correlate_designs(&ev, 1, &[dt], ensemble, |f| {
        vec![Moments::of(f[0].tap_sum(0, 0), f[1].tap_sum(0, 0))]
    })?;
    Ok(out.remove(0))
}

/// Temporal autocorrelation of the first element pair, one result per
/// design.
pub fn acf(
    model: &ChannelModel,
    designs: &[PhaseDesign],
    t: f64,
    lags: &[f64],
    ensemble: &EnsembleSpec,
) -> Result<Vec<CorrelationResult>> {
    check_grid("acf lags", lags)?;
    let pair = ArrayPoints::pair(model.geometry(), 1, 1)?;
    let probes = std::iter::once(t)
        .chain(lags.iter().map(|dt| t + dt))
        .map(|t| Probe {
            t,
            points: pair.clone(),
        })
        .collect();
    let ev = Evaluator::new(model, designs, probes)?;
    correlate_designs(&ev, designs.len(), lags, ensemble, |f| {
        let h0 = f[0].tap_sum(0, 0);
        f[1..].iter().map(|g| Moments::of(h0, g.tap_sum(0, 0))).collect()
    })
}

/// Spatial cross-correlation at instant `t` between Rx element 1 and Rx
/// points `dq` wavelengths along the Rx array axis; Tx element 1.
pub fn ccf(
    model: &ChannelModel,
    designs: &[PhaseDesign],
    t: f64,
    spacings: &[f64],
    ensemble: &EnsembleSpec,
) -> Result<Vec<CorrelationResult>> {
    check_grid("ccf spacings", spacings)?;
    let mut rx = vec![Vec3::zeros()];
    rx.extend(spacings.iter().map(|dq| rx_offset(model, *dq)));
    let probes = vec![Probe {
        t,
        points: ArrayPoints {
            tx: vec![Vec3::zeros()],
            rx,
        },
    }];
    let ev = Evaluator::new(model, designs, probes)?;
    correlate_designs(&ev, designs.len(), spacings, ensemble, |f| {
        let h0 = f[0].tap_sum(0, 0);
        (1..=spacings.len())
            .map(|k| Moments::of(h0, f[0].tap_sum(0, k)))
            .collect()
    })
}

/// Frequency correlation of the first element pair at instant `t`,
/// averaged over the reference frequency grid of `options`.
pub fn fcf(
    model: &ChannelModel,
    designs: &[PhaseDesign],
    t: f64,
    lags: &[f64],
    options: &AnalysisOptions,
    ensemble: &EnsembleSpec,
) -> Result<Vec<CorrelationResult>> {
    check_grid("fcf lags", lags)?;
    options.validate()?;
    let grid = options.frequency_grid();
    let probes = vec![Probe {
        t,
        points: ArrayPoints::pair(model.geometry(), 1, 1)?,
    }];
    let ev = Evaluator::new(model, designs, probes)?;
    let nf = grid.len() as f64;
    correlate_designs(&ev, designs.len(), lags, ensemble, |f| {
        let base = f[0].frequency_response(0, 0, &grid);
        lags.iter()
            .map(|df| {
                let shifted: Vec<f64> = grid.iter().map(|x| x + df).collect();
                let h = f[0].frequency_response(0, 0, &shifted);
                let mut re = CompensatedSum::default();
                let mut im = CompensatedSum::default();
                let mut a = CompensatedSum::default();
                let mut b = CompensatedSum::default();
                for (x, y) in base.iter().zip(&h) {
                    let m = Moments::of(*x, *y);
                    re.add(m.cross.re);
                    im.add(m.cross.im);
                    a.add(m.first);
                    b.add(m.second);
                }
                Moments {
                    cross: Complex64::new(re.value(), im.value()) / nf,
                    first: a.value() / nf,
                    second: b.value() / nf,
                }
            })
            .collect()
    })
}

/// `log₂ det(I + (ρ/Q)·H Hᴴ)` for a `P × Q` matrix, evaluated on the
/// smaller Gram product.
pub fn capacity_of(h: &DMatrix<Complex64>, snr: f64) -> Result<f64> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(invalid("snr", "must be finite and non-negative"));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("channel matrix"));
    }
    let q = h.ncols();
    let gram = if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    };
    let n = gram.nrows();
    let m = DMatrix::<Complex64>::identity(n, n) + gram * Complex64::from(snr / q as f64);
    let chol = m
        .cholesky()
        .ok_or(Error::NonFinite("capacity Gram matrix is not positive definite"))?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum();
    Ok((log_det / std::f64::consts::LN_2).max(0.0))
}

/// Instantaneous capacity of one realization at `t`.
pub fn capacity(
    t: f64,
    snr: f64,
    model: &ChannelModel,
    realization: &ClusterRealization,
    schedules: &Schedules,
) -> Result<f64> {
    capacity_of(&channel_matrix(t, model, realization, schedules)?, snr)
}

/// Mean capacity against SNR for one design.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCurve {
    pub snr: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

/// Trapezoidal average over `times`; a single instant returns its value.
pub fn time_average(times: &[f64], values: &[f64]) -> f64 {
    if times.len() == 1 {
        return values[0];
    }
    let span = times[times.len() - 1] - times[0];
    if span == 0.0 {
        return values.iter().copied().collect::<CompensatedSum>().value() / values.len() as f64;
    }
    let s: CompensatedSum = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .collect();
    s.value() / span
}

fn matrices(field: &TapField, wideband: Option<&[f64]>) -> Vec<DMatrix<Complex64>> {
    match wideband {
        None => vec![DMatrix::from_fn(field.n_tx, field.n_rx, |i, j| field.tap_sum(i, j))],
        Some(freqs) => {
            let responses: Vec<Vec<Complex64>> = (0..field.n_tx * field.n_rx)
                .map(|k| field.frequency_response(k / field.n_rx, k % field.n_rx, freqs))
                .collect();
            (0..freqs.len())
                .map(|f| DMatrix::from_fn(field.n_tx, field.n_rx, |i, j| responses[i * field.n_rx + j][f]))
                .collect()
        }
    }
}

/// Ensemble mean of the time-averaged capacity at each SNR (linear), one
/// curve per design.
pub fn mean_capacity(
    model: &ChannelModel,
    designs: &[PhaseDesign],
    times: &[f64],
    snrs: &[f64],
    options: &AnalysisOptions,
    ensemble: &EnsembleSpec,
) -> Result<Vec<CapacityCurve>> {
    ensemble.validate()?;
    if times.is_empty() {
        return Err(invalid("time grid", "must not be empty"));
    }
    check_grid("time grid", times)?;
    check_grid("snr grid", snrs)?;
    let full = ArrayPoints::full(model.geometry());
    let probes = times
        .iter()
        .map(|t| Probe {
            t: *t,
            points: full.clone(),
        })
        .collect();
    let ev = Evaluator::new(model, designs, probes)?;
    let freqs = options.frequency_grid();
    let wideband = options.wideband_capacity.then_some(freqs.as_slice());
    // members[m][design][snr]
    let members = map_members(ensemble.n_realizations, |i| {
        ev.member(ensemble.seed, i)?
            .iter()
            .map(|per_probe| {
                let mut series = vec![Vec::with_capacity(times.len()); snrs.len()];
                for field in per_probe {
                    let hs = matrices(field, wideband);
                    for (s, snr) in series.iter_mut().zip(snrs) {
                        let c = hs
                            .iter()
                            .map(|h| capacity_of(h, *snr))
                            .collect::<Result<CompensatedSum>>()?;
                        s.push(c.value() / hs.len() as f64);
                    }
                }
                Ok(series.iter().map(|s| time_average(times, s)).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let n = members.len() as f64;
    Ok((0..designs.len())
        .map(|d| {
            let mut mean = Vec::with_capacity(snrs.len());
            let mut std_error = Vec::with_capacity(snrs.len());
            for k in 0..snrs.len() {
                let s: CompensatedSum = members.iter().map(|m| m[d][k]).collect();
                let mu = s.value() / n;
                let dev: CompensatedSum = members.iter().map(|m| (m[d][k] - mu).powi(2)).collect();
                mean.push(mu);
                std_error.push(if n > 1.0 {
                    (dev.value() / (n - 1.0) / n).sqrt()
                } else {
                    f64::NAN
                });
            }
            CapacityCurve {
                snr: snrs.to_vec(),
                mean,
                std_error,
            }
        })
        .collect())
}
