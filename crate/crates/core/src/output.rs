//! CSV tables and run manifests.
//!
//! Every CSV starts with a `# units:` comment line, then a header row.
//! Floats are written with 17 significant digits, so values round-trip
//! exactly. Each CSV gets one `<stem>.manifest.json` next to it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffusive::{time_average, TrajectoryRecord, CLAMP_LIMIT};
use crate::error::{Error, Result};
use crate::harness::{CorrelationRow, EnsembleStats, ExperimentConfig, SweepTable};
use crate::jump::{analytic_regime_ok, JumpTrajectory, MAX_JUMP_PROBABILITY};
use crate::master::POSITIVITY_TOLERANCE;
use crate::observables::{MIN_BATCHES, NOISY_FRACTION};
use crate::params::{SystemParams, STABILITY_LIMIT};
use crate::steady::{NULL_EIGENVALUE_TOLERANCE, RESIDUAL_TOLERANCE};

pub const TRAJECTORY_COLUMNS: &[&str] = &["t", "rho_ll", "rho_cc", "rho_rr", "z", "i_t"];
pub const JUMP_COLUMNS: &[&str] = &["t", "rho_cc", "n_detected"];
pub const CORRELATION_COLUMNS: &[&str] = &[
    "gamma",
    "delta",
    "s_tq",
    "s_tq_err",
    "s_tt",
    "s_qq",
    "pearson",
    "pearson_err",
    "noisy",
];
pub const SWEEP_COLUMNS: &[&str] = &["delta", "gamma", "rho_cc_ss", "i_t_ss", "degenerate"];
pub const ENSEMBLE_COLUMNS: &[&str] = &["t", "mean_rho_cc", "err_rho_cc", "mean_i_t", "err_i_t", "n_traj"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub runtime_seconds: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunManifest {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: config.seed,
            config: config.clone(),
            runtime_seconds: 0.0,
            tolerances: tolerances(),
            outputs: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.diagnostics.insert(key.to_string(), v);
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid("manifest", format!("{}: {e}", path.display())))
    }
}

/// Numerical tolerances in effect, by name.
pub fn tolerances() -> BTreeMap<String, f64> {
    [
        ("stability_limit", STABILITY_LIMIT),
        ("positivity", POSITIVITY_TOLERANCE),
        ("null_eigenvalue", NULL_EIGENVALUE_TOLERANCE),
        ("steady_residual", RESIDUAL_TOLERANCE),
        ("clamp_limit", CLAMP_LIMIT),
        ("max_jump_probability", MAX_JUMP_PROBABILITY),
        ("min_batches", MIN_BATCHES as f64),
        ("noisy_fraction", NOISY_FRACTION),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Results ready to be written.
pub enum Results<'a> {
    Trajectory {
        record: &'a TrajectoryRecord,
        /// Moving-average window applied to every column but `t`; 0 for none.
        window: f64,
        bin_dt: f64,
    },
    Jump {
        trajectory: &'a JumpTrajectory,
        params: &'a SystemParams,
    },
    Correlation(&'a [CorrelationRow]),
    Sweep(&'a SweepTable),
    Ensemble(&'a EnsembleStats),
}

fn float(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

/// Writes a table from column-major data.
fn table(units: &str, columns: &[&str], rows: usize, cell: impl Fn(usize, usize, &mut String)) -> String {
    let mut out = String::with_capacity(64 + rows * columns.len() * 24);
    out.push_str("# units: ");
    out.push_str(units);
    out.push('\n');
    out.push_str(&columns.join(","));
    out.push('\n');
    for r in 0..rows {
        for c in 0..columns.len() {
            if c > 0 {
                out.push(',');
            }
            cell(r, c, &mut out);
        }
        out.push('\n');
    }
    out
}

fn trajectory_csv(record: &TrajectoryRecord, window: f64, bin_dt: f64) -> Result<String> {
    let smooth = |xs: &Vec<f64>| -> Result<Vec<f64>> {
        if window > 0.0 {
            time_average(xs, window, bin_dt)
        } else {
            Ok(xs.clone())
        }
    };
    let cols = [
        record.times.clone(),
        smooth(&record.rho_ll)?,
        smooth(&record.rho_cc)?,
        smooth(&record.rho_rr)?,
        smooth(&record.record_z)?,
        smooth(&record.i_t)?,
    ];
    Ok(table(
        "t [1/Omega]; rho_* dimensionless; z dimensionless (reads rho_cc); i_t [e*Omega]",
        TRAJECTORY_COLUMNS,
        record.len(),
        |r, c, out| float(out, cols[c][r]),
    ))
}

fn jump_csv(tr: &JumpTrajectory) -> String {
    table(
        "t [1/Omega]; rho_cc dimensionless; n_detected count",
        JUMP_COLUMNS,
        tr.len(),
        |r, c, out| match c {
            0 => float(out, tr.times[r]),
            1 => float(out, tr.rho_cc[r]),
            _ => {
                let _ = write!(out, "{}", tr.n_detected[r]);
            }
        },
    )
}

fn correlation_csv(rows: &[CorrelationRow]) -> String {
    table(
        "gamma, delta [Omega]; s_* zero-frequency spectra [Omega-units, e = h = 1]; pearson dimensionless",
        CORRELATION_COLUMNS,
        rows.len(),
        |r, c, out| {
            let row = &rows[r];
            let res = row.result.as_ref();
            let pick = |f: fn(&crate::observables::CorrelationResult) -> f64| res.map_or(f64::NAN, f);
            match c {
                0 => float(out, row.gamma),
                1 => float(out, row.delta),
                2 => float(out, pick(|x| x.s_tq)),
                3 => float(out, pick(|x| x.s_tq_err)),
                4 => float(out, pick(|x| x.s_tt)),
                5 => float(out, pick(|x| x.s_qq)),
                6 => float(out, pick(|x| x.pearson)),
                7 => float(out, pick(|x| x.pearson_err)),
                _ => out.push_str(if res.is_none_or(|x| x.noisy) { "true" } else { "false" }),
            }
        },
    )
}

fn sweep_csv(t: &SweepTable) -> String {
    table(
        "delta, gamma [Omega]; rho_cc_ss dimensionless; i_t_ss [e*Omega]",
        SWEEP_COLUMNS,
        t.rows.len(),
        |r, c, out| {
            let row = &t.rows[r];
            match c {
                0 => float(out, row.delta),
                1 => float(out, row.gamma),
                2 => float(out, row.rho_cc_ss),
                3 => float(out, row.i_t_ss),
                _ => out.push_str(if row.degenerate { "true" } else { "false" }),
            }
        },
    )
}

fn ensemble_csv(s: &EnsembleStats) -> String {
    table(
        "t [1/Omega]; rho_cc dimensionless; i_t [e*Omega]; n_traj count",
        ENSEMBLE_COLUMNS,
        s.times.len(),
        |r, c, out| match c {
            0 => float(out, s.times[r]),
            1 => float(out, s.mean_rho_cc[r]),
            2 => float(out, s.err_rho_cc[r]),
            3 => float(out, s.mean_i_t[r]),
            4 => float(out, s.err_i_t[r]),
            _ => {
                let _ = write!(out, "{}", s.n_traj);
            }
        },
    )
}

/// Renders the CSV text for `results`.
pub fn render_csv(results: &Results) -> Result<String> {
    let empty = |what: &str| Err(Error::invalid("output", format!("no {what} to write")));
    match results {
        Results::Trajectory { record, window, bin_dt } => {
            if record.is_empty() {
                return empty("trajectory rows");
            }
            trajectory_csv(record, *window, *bin_dt)
        }
        Results::Jump { trajectory, .. } => {
            if trajectory.is_empty() {
                return empty("trajectory rows");
            }
            Ok(jump_csv(trajectory))
        }
        Results::Correlation(rows) => {
            if rows.is_empty() {
                return empty("grid cells");
            }
            Ok(correlation_csv(rows))
        }
        Results::Sweep(t) => {
            if t.rows.is_empty() {
                return empty("grid cells");
            }
            Ok(sweep_csv(t))
        }
        Results::Ensemble(s) => {
            if s.times.is_empty() {
                return empty("time bins");
            }
            Ok(ensemble_csv(s))
        }
    }
}

/// `out/run.csv` -> `out/run.<suffix>`.
pub fn sibling(csv: &Path, suffix: &str) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    csv.with_file_name(format!("{stem}.{suffix}"))
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    sibling(csv, "manifest.json")
}

#[derive(Serialize)]
struct JumpSidecar<'a> {
    params: &'a SystemParams,
    jump_times: &'a [f64],
    total_detected: u64,
    max_post_jump_c: f64,
    analytic_regime_ok: bool,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the CSV, any sidecar, and the manifest. Everything is rendered
/// before the first file is touched. Returns the paths written.
pub fn emit(results: &Results, csv_path: &Path, manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    let csv = render_csv(results)?;
    let mut files = vec![(csv_path.to_path_buf(), csv)];
    if let Results::Jump { trajectory, params } = results {
        let side = JumpSidecar {
            params,
            jump_times: &trajectory.jump_times,
            total_detected: trajectory.total_detected(),
            max_post_jump_c: trajectory.max_post_jump_c,
            analytic_regime_ok: analytic_regime_ok(params),
        };
        let text = serde_json::to_string_pretty(&side).map_err(|e| Error::invalid("output", e.to_string()))?;
        files.push((sibling(csv_path, "jumps.json"), text + "\n"));
    }
    let mut manifest = manifest.clone();
    manifest.outputs = files
        .iter()
        .map(|(p, _)| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
        .collect();
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid("manifest", e.to_string()))?;
    files.push((manifest_path(csv_path), text + "\n"));

    for (path, text) in &files {
        write_file(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
