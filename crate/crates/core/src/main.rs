use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use tqdsim::config::{self, OUTPUT_DIR_ENV};
use tqdsim::diffusive::{run_diffusive_trajectory, WienerStream};
use tqdsim::harness::{
    correlation_experiment, master_curve, run_ensemble, sweep_steady_state, ExperimentConfig, Mode,
};
use tqdsim::jump::run_jump_trajectory;
use tqdsim::observables::tqd_current;
use tqdsim::output::{emit, Results, RunManifest};
use tqdsim::steady::steady_state;
use tqdsim::validate::run_suite;
use tqdsim::{Error, Result};

/// Quantum-trajectory simulator for a triple quantum dot with a monitored
/// central dot.
#[derive(Parser)]
#[command(name = "tqdsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state of the master equation at one (delta, gamma).
    Steady(RunArgs),
    /// Diffusive (continuous-measurement) trajectories.
    TrajDiffusive(RunArgs),
    /// Quantum-jump trajectories.
    TrajJump(RunArgs),
    /// Ensemble mean of diffusive or jump trajectories (mode=diffusive|jump|master).
    Ensemble(RunArgs),
    /// Steady-state sweep over the delta and gamma grids.
    Sweep(RunArgs),
    /// Zero-frequency TQD/QPC cross-correlations over the grids.
    Correlate(RunArgs),
    /// Runs the invariant suite.
    Validate,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Flat key=value file or a run manifest JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    decimate: Option<usize>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    gamma_l: Option<String>,
    #[arg(long)]
    gamma_r: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    bias: Option<String>,
    #[arg(long)]
    mu_l: Option<String>,
    #[arg(long)]
    kt_l: Option<String>,
    #[arg(long)]
    mu_r: Option<String>,
    #[arg(long)]
    kt_r: Option<String>,
    #[arg(long)]
    t0: Option<String>,
    #[arg(long)]
    t1: Option<String>,
    #[arg(long)]
    v_bias: Option<String>,
    #[arg(long)]
    s_i: Option<String>,
    #[arg(long)]
    n_traj: Option<String>,
    #[arg(long)]
    t_final: Option<String>,
    #[arg(long)]
    delta_values: Option<String>,
    #[arg(long)]
    gamma_values: Option<String>,
    #[arg(long)]
    t_burn: Option<String>,
    #[arg(long)]
    t_cut: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    init: Option<String>,
    /// Extra `key=value` assignments, applied after the flags.
    assignments: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("mode", self.mode.clone());
        push("seed", self.seed.map(|s| s.to_string()));
        push("threads", self.threads.map(|s| s.to_string()));
        push("decimate", self.decimate.map(|s| s.to_string()));
        push("output", self.output.clone());
        for (k, v) in [
            ("omega", &self.omega),
            ("delta", &self.delta),
            ("epsilon", &self.epsilon),
            ("gamma_l", &self.gamma_l),
            ("gamma_r", &self.gamma_r),
            ("gamma", &self.gamma),
            ("dt", &self.dt),
            ("bias", &self.bias),
            ("mu_l", &self.mu_l),
            ("kt_l", &self.kt_l),
            ("mu_r", &self.mu_r),
            ("kt_r", &self.kt_r),
            ("t0", &self.t0),
            ("t1", &self.t1),
            ("v_bias", &self.v_bias),
            ("s_i", &self.s_i),
            ("n_traj", &self.n_traj),
            ("t_final", &self.t_final),
            ("delta_values", &self.delta_values),
            ("gamma_values", &self.gamma_values),
            ("t_burn", &self.t_burn),
            ("t_cut", &self.t_cut),
            ("window", &self.window),
            ("init", &self.init),
        ] {
            push(k, v.clone());
        }
        for a in &self.assignments {
            out.push(config::split_assignment(a)?);
        }
        Ok(out)
    }
}

fn load(args: &RunArgs, fixed: Option<Mode>) -> Result<ExperimentConfig> {
    config::parse_config(args.config.as_deref(), &args.overrides()?, fixed)
}

fn output_path(cfg: &ExperimentConfig, default_name: &str) -> PathBuf {
    match &cfg.output_path {
        Some(p) => PathBuf::from(p),
        None => match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) => Path::new(&dir).join(default_name),
            None => PathBuf::from(default_name),
        },
    }
}

/// `run.csv` -> `run_007.csv` for trajectory `k` of several.
fn numbered(path: &Path, k: usize, n: usize) -> PathBuf {
    if n == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map_or("traj".into(), |s| s.to_string_lossy().into_owned());
    let ext = path.extension().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}_{k:03}.{ext}"))
}

fn finish(mut manifest: RunManifest, start: Instant, results: &Results, path: &Path) -> Result<()> {
    manifest.runtime_seconds = start.elapsed().as_secs_f64();
    for p in emit(results, path, &manifest)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_steady(args: &RunArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = load(args, Some(Mode::Steady))?;
    let ss = steady_state(&cfg.params)?;
    println!(
        "rho_00={:.6} rho_LL={:.6} rho_CC={:.6} rho_RR={:.6} I_T={:.6}",
        ss.rho_00(),
        ss.rho_ll(),
        ss.rho_cc(),
        ss.rho_rr(),
        tqd_current(&ss, &cfg.params)?
    );
    let mut sweep_cfg = cfg.clone();
    sweep_cfg.delta_values = vec![cfg.params.delta];
    sweep_cfg.gamma_values = vec![cfg.params.gamma_meas];
    let table = sweep_steady_state(&sweep_cfg)?;
    let manifest = RunManifest::new("steady", &cfg);
    finish(manifest, start, &Results::Sweep(&table), &output_path(&cfg, "steady.csv"))
}

fn cmd_traj(args: &RunArgs, mode: Mode) -> Result<()> {
    let cfg = load(args, Some(mode))?;
    let (name, default) = match mode {
        Mode::Diffusive => ("traj-diffusive", "traj_diffusive.csv"),
        _ => ("traj-jump", "traj_jump.csv"),
    };
    let base = output_path(&cfg, default);
    let rho0 = cfg.initial_state();
    for k in 0..cfg.n_traj {
        let start = Instant::now();
        let mut stream = WienerStream::new(cfg.seed, k as u64, cfg.params.dt);
        let mut manifest = RunManifest::new(name, &cfg);
        manifest.diagnostic("stream_id", k);
        let path = numbered(&base, k, cfg.n_traj);
        if mode == Mode::Diffusive {
            let rec = run_diffusive_trajectory(&rho0, &cfg.params, cfg.t_final, &mut stream, cfg.decimate)?;
            manifest.diagnostic("max_clamp", rec.max_clamp);
            manifest.diagnostic("valid", rec.is_valid());
            let results = Results::Trajectory {
                record: &rec,
                window: cfg.window,
                bin_dt: cfg.bin_dt(),
            };
            finish(manifest, start, &results, &path)?;
        } else {
            let tr = run_jump_trajectory(&rho0, &cfg.params, cfg.t_final, &mut stream, cfg.decimate)?;
            manifest.diagnostic("total_detected", tr.total_detected());
            let results = Results::Jump {
                trajectory: &tr,
                params: &cfg.params,
            };
            finish(manifest, start, &results, &path)?;
        }
    }
    Ok(())
}

fn cmd_ensemble(args: &RunArgs) -> Result<()> {
    let start = Instant::now();
    let overrides = args.overrides()?;
    let has_mode = args.config.is_some() || overrides.iter().any(|(k, _)| k == "mode");
    let cfg = load(args, if has_mode { None } else { Some(Mode::Diffusive) })?;
    let stats = match cfg.mode {
        Mode::Master => master_curve(&cfg)?,
        Mode::Diffusive | Mode::Jump => run_ensemble(&cfg)?,
        other => {
            return Err(Error::Invalid {
                key: "mode".into(),
                reason: format!("ensemble needs diffusive, jump or master, got {}", other.name()),
            })
        }
    };
    let mut manifest = RunManifest::new("ensemble", &cfg);
    manifest.diagnostic("n_invalid", stats.n_invalid);
    finish(manifest, start, &Results::Ensemble(&stats), &output_path(&cfg, "ensemble.csv"))
}

fn cmd_sweep(args: &RunArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = load(args, Some(Mode::Sweep))?;
    let table = sweep_steady_state(&cfg)?;
    let mut manifest = RunManifest::new("sweep", &cfg);
    manifest.diagnostic("rho_cc_decreases", table.rho_cc_decreases);
    manifest.diagnostic("current_increases", table.current_increases);
    manifest.diagnostic("degenerate_cells", table.rows.iter().filter(|r| r.degenerate).count());
    finish(manifest, start, &Results::Sweep(&table), &output_path(&cfg, "sweep.csv"))
}

fn cmd_correlate(args: &RunArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = load(args, Some(Mode::Correlate))?;
    let rows = correlation_experiment(&cfg)?;
    let failed: Vec<String> = rows.iter().filter_map(|r| r.error.clone()).collect();
    let mut manifest = RunManifest::new("correlate", &cfg);
    manifest.diagnostic("cell_errors", &failed);
    finish(manifest, start, &Results::Correlation(&rows), &output_path(&cfg, "correlate.csv"))?;
    if failed.len() == rows.len() {
        return Err(Error::InsufficientData(failed[0].clone()));
    }
    Ok(())
}

fn cmd_validate() -> Result<bool> {
    let checks = run_suite();
    for c in &checks {
        println!("{}", c.line());
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Steady(a) => cmd_steady(a),
        Command::TrajDiffusive(a) => cmd_traj(a, Mode::Diffusive),
        Command::TrajJump(a) => cmd_traj(a, Mode::Jump),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Validate => match cmd_validate() {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(3),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
