//! Reference sweeps and CSV output.
//!
//! Each preset adjusts the scenario file form, resolves it through the same
//! validation as user files, runs the estimators and returns one table per
//! curve family. Axis ranges are artifact choices and are recorded in every
//! table's metadata.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::channel::ChannelModel;
use crate::config::{ConfigError, ConfigFile};
use crate::error::Error as ModelError;
use crate::phase::{PhaseDesign, PhaseMethod};
use crate::stats::{
    acf, ccf, fcf, linspace, mean_capacity, AnalysisOptions, CorrelationResult, EnsembleSpec,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Model {
        context: String,
        source: ModelError,
    },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    AcfFig3,
    CcfFig4,
    CcfTimeFig5,
    FcfFig6,
    CapacityFig7,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::AcfFig3,
        Preset::CcfFig4,
        Preset::CcfTimeFig5,
        Preset::FcfFig6,
        Preset::CapacityFig7,
        Preset::Custom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::AcfFig3 => "acf_fig3",
            Preset::CcfFig4 => "ccf_fig4",
            Preset::CcfTimeFig5 => "ccf_time_fig5",
            Preset::FcfFig6 => "fcf_fig6",
            Preset::CapacityFig7 => "capacity_fig7",
            Preset::Custom => "custom",
        }
    }

    /// Ensemble size used when none is given.
    pub fn default_realizations(&self) -> usize {
        match self {
            Preset::CapacityFig7 => 500,
            _ => 2000,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset `{s}`; expected one of {}", names.join(", "))
            })
    }
}

/// A rectangular table with `#` metadata lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    /// File stem.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Formats with 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `table` as CSV: metadata lines, header, rows.
pub fn emit_csv(table: &ResultTable, path: &Path) -> io::Result<()> {
    if table.rows.iter().any(|r| r.len() != table.columns.len()) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "table is not rectangular",
        ));
    }
    let mut out = Vec::new();
    for (k, v) in &table.metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|x| format_value(*x)))?;
        }
        w.flush()?;
    }
    fs::write(path, out)
}

/// Reads a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> io::Result<ResultTable> {
    let text = fs::read_to_string(path)?;
    let mut metadata = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ") {
            Some(m) => {
                let (k, v) = m.split_once(": ").unwrap_or((m, ""));
                metadata.push((k.to_string(), v.to_string()));
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let bad = |e: std::num::ParseFloatError| io::Error::new(io::ErrorKind::InvalidData, e);
    let rows = r
        .records()
        .map(|rec| {
            rec?.iter()
                .map(|x| x.parse::<f64>().map_err(bad))
                .collect::<io::Result<Vec<f64>>>()
        })
        .collect::<io::Result<Vec<_>>>()?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ResultTable {
        name,
        columns,
        rows,
        metadata,
    })
}

/// One curve family: a scenario variant and a label.
struct Family {
    label: String,
    file: ConfigFile,
}

struct Run<'a> {
    preset: Preset,
    ensemble: EnsembleSpec,
    base: &'a ConfigFile,
}

impl Run<'_> {
    fn model(&self, f: &Family) -> Result<(ChannelModel, AnalysisOptions), ExperimentError> {
        let (scenario, analysis) = f.file.resolve()?;
        let model = ChannelModel::new(scenario).map_err(|e| self.math(f, e))?;
        Ok((model, analysis))
    }

    fn math(&self, f: &Family, source: ModelError) -> ExperimentError {
        ExperimentError::Model {
            context: format!("preset {} ({})", self.preset, f.label),
            source,
        }
    }

    fn metadata(&self, f: &Family, extra: &[(&str, String)]) -> Vec<(String, String)> {
        let mut m = vec![
            ("tool".to_string(), format!("airs-sim {TOOL_VERSION}")),
            ("preset".to_string(), self.preset.name().to_string()),
            ("family".to_string(), f.label.clone()),
            ("seed".to_string(), self.ensemble.seed.to_string()),
            (
                "n_realizations".to_string(),
                self.ensemble.n_realizations.to_string(),
            ),
            ("config_sha256".to_string(), f.file.hash()),
        ];
        m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        m
    }

    fn designs(&self, methods: &[PhaseMethod]) -> Vec<PhaseDesign> {
        let target = self.base.phase.target_deg.to_radians();
        methods
            .iter()
            .map(|m| PhaseDesign { method: *m, target })
            .collect()
    }

    fn family(&self, label: impl Into<String>, edit: impl FnOnce(&mut ConfigFile)) -> Family {
        let mut file = self.base.clone();
        edit(&mut file);
        Family {
            label: label.into(),
            file,
        }
    }
}

fn correlation_table(
    name: String,
    axis_name: &str,
    designs: &[PhaseDesign],
    results: &[CorrelationResult],
    metadata: Vec<(String, String)>,
) -> ResultTable {
    correlation_table_labeled(
        name,
        axis_name,
        &designs.iter().map(|d| d.method.label()).collect::<Vec<_>>(),
        results,
        metadata,
    )
}

fn correlation_table_labeled(
    name: String,
    axis_name: &str,
    labels: &[String],
    results: &[CorrelationResult],
    metadata: Vec<(String, String)>,
) -> ResultTable {
    let mut columns = vec![axis_name.to_string()];
    for l in labels {
        for suffix in ["abs", "re", "im", "ci3"] {
            columns.push(format!("{l}_{suffix}"));
        }
    }
    let rows = (0..results.first().map_or(0, |r| r.axis.len()))
        .map(|k| {
            let mut row = vec![results[0].axis[k]];
            for r in results {
                row.extend([
                    r.magnitude[k],
                    r.values[k].re,
                    r.values[k].im,
                    3.0 * r.std_error[k],
                ]);
            }
            row
        })
        .collect();
    ResultTable {
        name,
        columns,
        rows,
        metadata,
    }
}

const ACF_LAGS: (f64, f64, usize) = (0.0, 0.01, 101);
const CCF_SPACINGS: (f64, f64, usize) = (0.0, 5.0, 51);
const FCF_LAG_POINTS: usize = 101;
const SNR_DB: (f64, f64, usize) = (-10.0, 30.0, 17);

fn grid_note(g: (f64, f64, usize), unit: &str) -> (&'static str, String) {
    (
        "axis",
        format!("{} points from {} to {} {unit} (artifact choice)", g.2, g.0, g.1),
    )
}

fn acf_tables(run: &Run, families: Vec<Family>, methods: &[PhaseMethod], t: f64) -> Result<Vec<ResultTable>, ExperimentError> {
    let lags = linspace(ACF_LAGS.0, ACF_LAGS.1, ACF_LAGS.2);
    let designs = run.designs(methods);
    families
        .iter()
        .map(|f| {
            let (model, _) = run.model(f)?;
            let r = acf(&model, &designs, t, &lags, &run.ensemble).map_err(|e| run.math(f, e))?;
            let meta = run.metadata(f, &[("t_s", t.to_string()), grid_note(ACF_LAGS, "s")]);
            Ok(correlation_table(
                format!("{}_{}", run.preset, f.label),
                "dt_s",
                &designs,
                &r,
                meta,
            ))
        })
        .collect()
}

fn ccf_tables(run: &Run, families: Vec<Family>, methods: &[PhaseMethod], t: f64) -> Result<Vec<ResultTable>, ExperimentError> {
    let spacings = linspace(CCF_SPACINGS.0, CCF_SPACINGS.1, CCF_SPACINGS.2);
    let designs = run.designs(methods);
    families
        .iter()
        .map(|f| {
            let (model, _) = run.model(f)?;
            let r = ccf(&model, &designs, t, &spacings, &run.ensemble).map_err(|e| run.math(f, e))?;
            let meta = run.metadata(
                f,
                &[("t_s", t.to_string()), grid_note(CCF_SPACINGS, "wavelengths")],
            );
            Ok(correlation_table(
                format!("{}_{}", run.preset, f.label),
                "dq_wavelengths",
                &designs,
                &r,
                meta,
            ))
        })
        .collect()
}

fn fcf_tables(run: &Run, families: Vec<Family>, methods: &[PhaseMethod], t: f64) -> Result<Vec<ResultTable>, ExperimentError> {
    let designs = run.designs(methods);
    families
        .iter()
        .map(|f| {
            let (model, analysis) = run.model(f)?;
            let half = 0.5 * analysis.fcf_bandwidth_hz;
            let lags = linspace(0.0, half, FCF_LAG_POINTS);
            let r = fcf(&model, &designs, t, &lags, &analysis, &run.ensemble).map_err(|e| run.math(f, e))?;
            let meta = run.metadata(
                f,
                &[
                    ("t_s", t.to_string()),
                    grid_note((0.0, half, FCF_LAG_POINTS), "Hz"),
                    (
                        "frequency_grid",
                        format!(
                            "{} points over {} Hz centered on the carrier",
                            analysis.fcf_points, analysis.fcf_bandwidth_hz
                        ),
                    ),
                ],
            );
            Ok(correlation_table(
                format!("{}_{}", run.preset, f.label),
                "df_hz",
                &designs,
                &r,
                meta,
            ))
        })
        .collect()
}

fn capacity_tables(run: &Run, families: Vec<Family>, methods: &[PhaseMethod]) -> Result<Vec<ResultTable>, ExperimentError> {
    let snr_db = linspace(SNR_DB.0, SNR_DB.1, SNR_DB.2);
    let snr: Vec<f64> = snr_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
    let designs = run.designs(methods);
    families
        .iter()
        .map(|f| {
            let (model, analysis) = run.model(f)?;
            let times = analysis.time_grid();
            let curves = mean_capacity(&model, &designs, &times, &snr, &analysis, &run.ensemble)
                .map_err(|e| run.math(f, e))?;
            let mut columns = vec!["snr_db".to_string()];
            for d in &designs {
                columns.push(format!("{}_bps_hz", d.method.label()));
                columns.push(format!("{}_ci3", d.method.label()));
            }
            let rows = (0..snr.len())
                .map(|k| {
                    let mut row = vec![snr_db[k]];
                    for c in &curves {
                        row.push(c.mean[k]);
                        row.push(3.0 * c.std_error[k]);
                    }
                    row
                })
                .collect();
            let meta = run.metadata(
                f,
                &[
                    grid_note(SNR_DB, "dB"),
                    (
                        "time_grid",
                        format!(
                            "{} points on [0, {}] s, trapezoidal average",
                            analysis.capacity_time_points, analysis.capacity_horizon_s
                        ),
                    ),
                    (
                        "matrix",
                        if analysis.wideband_capacity {
                            "per-frequency-bin average".to_string()
                        } else {
                            "tap sum".to_string()
                        },
                    ),
                ],
            );
            Ok(ResultTable {
                name: format!("{}_{}", run.preset, f.label),
                columns,
                rows,
                metadata: meta,
            })
        })
        .collect()
}

/// Computes every table of `preset` without writing.
pub fn build_tables(
    preset: Preset,
    base: &ConfigFile,
    seed: u64,
    n_realizations: usize,
) -> Result<Vec<ResultTable>, ExperimentError> {
    base.resolve()?;
    let run = Run {
        preset,
        ensemble: EnsembleSpec::new(n_realizations, seed),
        base,
    };
    run.ensemble.validate().map_err(|source| ExperimentError::Model {
        context: format!("preset {preset}"),
        source,
    })?;
    use PhaseMethod::*;
    match preset {
        Preset::AcfFig3 => {
            let families = [10usize, 20]
                .iter()
                .map(|&n| {
                    run.family(format!("units_{n}x{n}"), |f| {
                        for p in [&mut f.irs, &mut f.airs] {
                            p.units_h = n;
                            p.units_v = n;
                        }
                    })
                })
                .collect();
            acf_tables(&run, families, &[Zero, Random, CoAligned, Quantized { bits: 4 }], 0.0)
        }
        Preset::CcfFig4 => {
            let families = [0.5f64, 0.25]
                .iter()
                .map(|&w| {
                    run.family(format!("unit_{w}lambda"), |f| {
                        for p in [&mut f.irs, &mut f.airs] {
                            p.unit_width_wavelengths = w;
                            p.unit_height_wavelengths = w;
                        }
                    })
                })
                .collect();
            ccf_tables(&run, families, &[Zero, Random, CoAligned, Quantized { bits: 3 }], 0.5)
        }
        Preset::CcfTimeFig5 => {
            let spacings = linspace(CCF_SPACINGS.0, CCF_SPACINGS.1, CCF_SPACINGS.2);
            let designs = run.designs(&[Zero, CoAligned]);
            let f = run.family("times", |_| {});
            let (model, _) = run.model(&f)?;
            let instants = [0.0, 0.5, 1.0];
            let mut labels = Vec::new();
            let mut results = Vec::new();
            for t in instants {
                let r = ccf(&model, &designs, t, &spacings, &run.ensemble).map_err(|e| run.math(&f, e))?;
                for (d, r) in designs.iter().zip(r) {
                    labels.push(format!("{}_t{t}", d.method.label()));
                    results.push(r);
                }
            }
            let meta = run.metadata(
                &f,
                &[
                    ("t_s", "0, 0.5, 1.0 (artifact choice)".to_string()),
                    grid_note(CCF_SPACINGS, "wavelengths"),
                ],
            );
            Ok(vec![correlation_table_labeled(
                format!("{}_{}", run.preset, f.label),
                "dq_wavelengths",
                &labels,
                &results,
                meta,
            )])
        }
        Preset::FcfFig6 => fcf_tables(
            &run,
            vec![run.family("default", |_| {})],
            &[Zero, Random, CoAligned, Quantized { bits: 2 }],
            0.5,
        ),
        Preset::CapacityFig7 => {
            let families = [2usize, 4]
                .iter()
                .map(|&n| {
                    run.family(format!("mimo_{n}x{n}"), |f| {
                        f.tx.antennas = n;
                        f.rx.antennas = n;
                    })
                })
                .collect();
            capacity_tables(&run, families, &[Zero, Random, CoAligned, Quantized { bits: 2 }])
        }
        Preset::Custom => {
            let (scenario, _) = base.resolve()?;
            let method = [scenario.phase.method];
            let mut tables = Vec::new();
            let family = |kind: &str| run.family(kind.to_string(), |_| {});
            tables.extend(acf_tables(&run, vec![family("acf")], &method, 0.0)?);
            tables.extend(ccf_tables(&run, vec![family("ccf")], &method, 0.0)?);
            tables.extend(fcf_tables(&run, vec![family("fcf")], &method, 0.0)?);
            tables.extend(capacity_tables(&run, vec![family("capacity")], &method)?);
            Ok(tables)
        }
    }
}

/// Runs `preset` and writes one CSV per table into `out_dir`.
pub fn run_preset(
    preset: Preset,
    base: &ConfigFile,
    out_dir: &Path,
    seed: u64,
    n_realizations: usize,
) -> Result<Vec<(PathBuf, ResultTable)>, ExperimentError> {
    let tables = build_tables(preset, base, seed, n_realizations)?;
    fs::create_dir_all(out_dir).map_err(|source| ExperimentError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    tables
        .into_iter()
        .map(|t| {
            let path = out_dir.join(format!("{}.csv", t.name));
            emit_csv(&t, &path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            Ok((path, t))
        })
        .collect()
}
