//! Configuration files and `key=value` overrides.
//!
//! A config file is either flat text (`key = value` per line, `#` comments)
//! or a JSON run manifest written by a previous run. Later assignments win,
//! so command-line overrides applied after the file take precedence.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{log_grid, ExperimentConfig, Mode};
use crate::output::RunManifest;
use crate::params::BiasMode;
use crate::state::Basis;

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "mode",
    "omega",
    "delta",
    "epsilon",
    "gamma_l",
    "gamma_r",
    "gamma",
    "dt",
    "bias",
    "mu_l",
    "kt_l",
    "mu_r",
    "kt_r",
    "t0",
    "t1",
    "v_bias",
    "s_i",
    "n_traj",
    "t_final",
    "seed",
    "output",
    "delta_values",
    "gamma_values",
    "decimate",
    "threads",
    "t_burn",
    "t_cut",
    "window",
    "init",
];

/// Environment variable naming the directory for default output files.
pub const OUTPUT_DIR_ENV: &str = "TQDSIM_OUTPUT_DIR";

/// Defaults for a mode before any keys are applied.
pub fn defaults_for(mode: Mode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        mode,
        ..ExperimentConfig::default()
    };
    match mode {
        Mode::Correlate => {
            cfg.params = cfg.params.with_leads(20.0, 16.0);
            cfg.delta_values = vec![10.0, 14.0, 20.0];
            cfg.t_final = 400.0;
            cfg.decimate = 100;
        }
        Mode::Jump => {
            cfg.params = cfg.params.with_leads(20.0, 16.0).with_delta(20.0).with_gamma(0.5);
        }
        _ => {}
    }
    cfg
}

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(key, format!("expected a number, got `{value}`")))
}

fn integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::invalid(key, format!("expected a non-negative integer, got `{value}`")))
}

/// Either a comma-separated list or `log:lo:hi:n`.
fn grid(key: &str, value: &str) -> Result<Vec<f64>> {
    let v = value.trim();
    if let Some(spec) = v.strip_prefix("log:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(key, "log grid must be `log:lo:hi:n`"));
        }
        let lo = number(key, parts[0])?;
        let hi = number(key, parts[1])?;
        let n: usize = integer(key, parts[2])?;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::invalid(key, "log grid needs 0 < lo <= hi"));
        }
        return Ok(log_grid(lo, hi, n));
    }
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| number(key, x)).collect()
}

/// Applies one assignment.
pub fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let p = &mut cfg.params;
    let d = &mut cfg.detector;
    match key {
        "mode" => {
            cfg.mode = Mode::parse(value.trim())
                .ok_or_else(|| Error::invalid(key, format!("unknown mode `{value}`")))?
        }
        "omega" => p.omega = number(key, value)?,
        "delta" => p.delta = number(key, value)?,
        "epsilon" => p.epsilon = number(key, value)?,
        "gamma_l" => p.gamma_l = number(key, value)?,
        "gamma_r" => p.gamma_r = number(key, value)?,
        "gamma" => p.gamma_meas = number(key, value)?,
        "dt" => p.dt = number(key, value)?,
        "bias" => {
            p.bias_mode = match value.trim() {
                "infinite" => BiasMode::Infinite,
                "finite" => BiasMode::Finite,
                other => {
                    return Err(Error::invalid(
                        key,
                        format!("expected `infinite` or `finite`, got `{other}`"),
                    ))
                }
            }
        }
        "mu_l" => p.bath_l.mu = number(key, value)?,
        "kt_l" => p.bath_l.kt = number(key, value)?,
        "mu_r" => p.bath_r.mu = number(key, value)?,
        "kt_r" => p.bath_r.kt = number(key, value)?,
        "t0" => d.t0 = number(key, value)?,
        "t1" => d.t1 = number(key, value)?,
        "v_bias" => d.v_bias = number(key, value)?,
        "s_i" => d.s_i = number(key, value)?,
        "n_traj" => cfg.n_traj = integer(key, value)?,
        "t_final" => cfg.t_final = number(key, value)?,
        "seed" => cfg.seed = integer(key, value)?,
        "output" => {
            let v = value.trim();
            cfg.output_path = (!v.is_empty()).then(|| v.to_string());
        }
        "delta_values" => cfg.delta_values = grid(key, value)?,
        "gamma_values" => cfg.gamma_values = grid(key, value)?,
        "decimate" => cfg.decimate = integer(key, value)?,
        "threads" => cfg.threads = integer(key, value)?,
        "t_burn" => cfg.t_burn = number(key, value)?,
        "t_cut" => cfg.t_cut = number(key, value)?,
        "window" => cfg.window = number(key, value)?,
        "init" => {
            cfg.initial = Basis::parse(value.trim())
                .ok_or_else(|| Error::invalid(key, "expected one of 0, L, C, R"))?
        }
        _ => return Err(Error::invalid(key, "unknown key")),
    }
    Ok(())
}

/// Splits `key=value`.
pub fn split_assignment(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::invalid(s.trim(), "expected `key=value`"))?;
    let key = k.trim();
    if !KEYS.contains(&key) {
        return Err(Error::invalid(key, "unknown key"));
    }
    Ok((key.to_string(), v.trim().to_string()))
}

/// Parses flat `key = value` text into assignments.
pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(split_assignment)
        .collect()
}

/// Source of a base configuration.
enum Base {
    Full(Box<ExperimentConfig>),
    Assignments(Vec<(String, String)>),
}

fn read_base(path: &Path) -> Result<Base> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Error::invalid("config", format!("{}: {e}", path.display())))?;
        Ok(Base::Full(Box::new(manifest.config)))
    } else {
        Ok(Base::Assignments(parse_flat(&text)?))
    }
}

/// Builds a validated config from an optional file plus overrides.
///
/// `mode` fixes the mode (as a subcommand does); otherwise the `mode` key
/// decides, defaulting to `steady`. Mode-specific defaults are applied first.
pub fn parse_config(
    path: Option<&Path>,
    overrides: &[(String, String)],
    mode: Option<Mode>,
) -> Result<ExperimentConfig> {
    let base = match path {
        Some(p) => Some(read_base(p)?),
        None => None,
    };
    let mut cfg = match base {
        Some(Base::Full(cfg)) => {
            let mut cfg = *cfg;
            if let Some(m) = mode {
                cfg.mode = m;
            }
            for (k, v) in overrides {
                apply(&mut cfg, k, v)?;
            }
            cfg
        }
        other => {
            let mut all = match other {
                Some(Base::Assignments(a)) => a,
                _ => Vec::new(),
            };
            all.extend(overrides.iter().cloned());
            let chosen = match mode {
                Some(m) => m,
                None => match all.iter().rev().find(|(k, _)| k == "mode") {
                    Some((_, v)) => Mode::parse(v)
                        .ok_or_else(|| Error::invalid("mode", format!("unknown mode `{v}`")))?,
                    None => Mode::Steady,
                },
            };
            let mut cfg = defaults_for(chosen);
            for (k, v) in &all {
                apply(&mut cfg, k, v)?;
            }
            cfg.mode = chosen;
            cfg
        }
    };
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a whitespace-separated list of assignments, e.g. for tests.
pub fn parse_assignments(text: &str) -> Result<ExperimentConfig> {
    let pairs = text
        .split_whitespace()
        .map(split_assignment)
        .collect::<Result<Vec<_>>>()?;
    parse_config(None, &pairs, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = parse_assignments("mode=steady delta=10 gamma=10 gamma_l=10 gamma_r=8").unwrap();
        assert_eq!(cfg.mode, Mode::Steady);
        assert_eq!(cfg.params.delta, 10.0);
        assert_eq!(cfg.params.gamma_meas, 10.0);
        assert_eq!(cfg.params.dt, 1e-4);
        assert_eq!(cfg.n_traj, 1);
    }

    #[test]
    fn coarse_dt_is_rejected() {
        let e = parse_assignments("dt=1 gamma=10").unwrap_err();
        assert!(matches!(e, Error::StabilityGuard { .. }));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn transmittance_out_of_range() {
        match parse_assignments("t1=1.5").unwrap_err() {
            Error::Invalid { key, .. } => assert_eq!(key, "t1"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        match parse_assignments("gama=3").unwrap_err() {
            Error::Invalid { key, reason } => {
                assert_eq!(key, "gama");
                assert!(reason.contains("unknown"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn flat_text_with_comments() {
        let pairs = parse_flat("# header\n delta = 14 # inline\n\ngamma=5\n").unwrap();
        assert_eq!(
            pairs,
            vec![("delta".into(), "14".into()), ("gamma".into(), "5".into())]
        );
    }

    #[test]
    fn grids_parse() {
        assert_eq!(grid("g", "1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(grid("g", "log:0.1:100:20").unwrap(), log_grid(0.1, 100.0, 20));
        assert!(grid("g", "log:0:1:3").is_err());
        assert!(grid("g", "1,x").is_err());
    }

    #[test]
    fn correlate_defaults() {
        let cfg = parse_config(None, &[], Some(Mode::Correlate)).unwrap();
        assert_eq!((cfg.params.gamma_l, cfg.params.gamma_r), (20.0, 16.0));
        assert_eq!(cfg.delta_values, vec![10.0, 14.0, 20.0]);
    }

    #[test]
    fn empty_grid_rejected_in_sweep() {
        let pairs = vec![("gamma_values".to_string(), String::new())];
        match parse_config(None, &pairs, Some(Mode::Sweep)).unwrap_err() {
            Error::Invalid { key, .. } => assert_eq!(key, "gamma_values"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn later_assignments_win() {
        let cfg = parse_assignments("delta=3 delta=7").unwrap();
        assert_eq!(cfg.params.delta, 7.0);
    }
}
