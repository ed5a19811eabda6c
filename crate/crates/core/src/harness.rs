//! Ensembles, steady-state sweeps and correlation experiments.
//!
//! Trajectory `k` of a run always uses Wiener substream `k` of the master
//! seed, and reductions run serially in stream order, so results depend only
//! on the configuration and seed, never on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusive::{run_diffusive_trajectory, WienerStream};
use crate::error::{Error, Result};
use crate::jump::run_jump_trajectory;
use crate::master::evolve_master_sampled;
use crate::observables::{tqd_current, CorrelationResult, DetectorModel, SpectralBatches};
use crate::params::SystemParams;
use crate::state::{Basis, DensityMatrix};
use crate::steady::steady_state;

/// Trajectories are simulated and folded in chunks of this many streams.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Steady,
    Master,
    Diffusive,
    Jump,
    Sweep,
    Correlate,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        Some(match s {
            "steady" => Mode::Steady,
            "master" => Mode::Master,
            "diffusive" => Mode::Diffusive,
            "jump" => Mode::Jump,
            "sweep" => Mode::Sweep,
            "correlate" => Mode::Correlate,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Steady => "steady",
            Mode::Master => "master",
            Mode::Diffusive => "diffusive",
            Mode::Jump => "jump",
            Mode::Sweep => "sweep",
            Mode::Correlate => "correlate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub params: SystemParams,
    pub detector: DetectorModel,
    pub n_traj: usize,
    pub t_final: f64,
    pub seed: u64,
    pub output_path: Option<String>,
    pub delta_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    /// Store every `decimate`-th integration step.
    pub decimate: usize,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub t_burn: f64,
    pub t_cut: f64,
    /// Moving-average window for trajectory output; 0 disables it.
    pub window: f64,
    pub initial: Basis,
}

/// `n` points log-spaced over `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

pub fn default_delta_grid() -> Vec<f64> {
    log_grid(2.0, 30.0, 15)
}

pub fn default_gamma_grid() -> Vec<f64> {
    log_grid(0.1, 100.0, 20)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Steady,
            params: SystemParams::default(),
            detector: DetectorModel::default(),
            n_traj: 1,
            t_final: 5.0,
            seed: 0,
            output_path: None,
            delta_values: default_delta_grid(),
            gamma_values: default_gamma_grid(),
            decimate: 10,
            threads: 0,
            t_burn: 10.0,
            t_cut: 5.0,
            window: 0.0,
            initial: Basis::Left,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.detector.validate()?;
        if self.n_traj < 1 {
            return Err(Error::invalid("n_traj", "must be >= 1"));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::invalid("t_final", "must be > 0"));
        }
        if self.decimate < 1 {
            return Err(Error::invalid("decimate", "must be >= 1"));
        }
        if !(self.t_burn >= 0.0) {
            return Err(Error::invalid("t_burn", "must be >= 0"));
        }
        if !(self.t_cut > 0.0) {
            return Err(Error::invalid("t_cut", "must be > 0"));
        }
        if !(self.window >= 0.0) {
            return Err(Error::invalid("window", "must be >= 0"));
        }
        if matches!(self.mode, Mode::Sweep | Mode::Correlate) {
            if self.delta_values.is_empty() {
                return Err(Error::invalid("delta_values", "grid must not be empty"));
            }
            if self.gamma_values.is_empty() {
                return Err(Error::invalid("gamma_values", "grid must not be empty"));
            }
            // every grid cell must pass the stability guard
            for &d in &self.delta_values {
                for &g in &self.gamma_values {
                    self.params
                        .with_delta(d)
                        .with_gamma(g)
                        .validate()
                        .map_err(|e| match e {
                            Error::Invalid { key, reason } => Error::Invalid {
                                key,
                                reason: format!("{reason} (grid cell delta={d}, gamma={g})"),
                            },
                            other => other,
                        })?;
                }
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> DensityMatrix {
        DensityMatrix::pure(self.initial)
    }

    /// Spacing of stored bins.
    pub fn bin_dt(&self) -> f64 {
        self.params.dt * self.decimate as f64
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))
    }
}

/// Per-bin mean and standard error over trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_rho_cc: Vec<f64>,
    pub err_rho_cc: Vec<f64>,
    pub mean_rho_ll: Vec<f64>,
    pub err_rho_ll: Vec<f64>,
    pub mean_rho_rr: Vec<f64>,
    pub err_rho_rr: Vec<f64>,
    pub mean_i_t: Vec<f64>,
    pub err_i_t: Vec<f64>,
    /// Trajectories that entered the averages.
    pub n_traj: usize,
    /// Trajectories excluded as invalid.
    pub n_invalid: usize,
}

/// Running mean/variance of one binned series, folded in a fixed order.
#[derive(Debug, Clone)]
struct Accumulator {
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Accumulator {
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn add(&mut self, n: usize, xs: &[f64]) {
        // Welford update with n = number of samples including this one
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(xs) {
            let d = x - *m;
            *m += d / n as f64;
            *s += d * (x - *m);
        }
    }

    fn finish(self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let err = self
            .m2
            .iter()
            .map(|s| {
                if n > 1 {
                    (s / (n - 1) as f64 / n as f64).sqrt()
                } else {
                    f64::NAN
                }
            })
            .collect();
        (self.mean, err)
    }
}

/// Binned series of one trajectory used for ensemble statistics.
struct Sample {
    times: Vec<f64>,
    rho_cc: Vec<f64>,
    rho_ll: Vec<f64>,
    rho_rr: Vec<f64>,
    i_t: Vec<f64>,
}

fn simulate_one(config: &ExperimentConfig, stream_id: u64) -> Result<Option<Sample>> {
    let p = &config.params;
    let mut stream = WienerStream::new(config.seed, stream_id, p.dt);
    let rho0 = config.initial_state();
    match config.mode {
        Mode::Diffusive => {
            let rec = run_diffusive_trajectory(&rho0, p, config.t_final, &mut stream, config.decimate)?;
            if !rec.is_valid() {
                return Ok(None);
            }
            Ok(Some(Sample {
                times: rec.times,
                rho_cc: rec.rho_cc,
                rho_ll: rec.rho_ll,
                rho_rr: rec.rho_rr,
                i_t: rec.i_t,
            }))
        }
        Mode::Jump => {
            let tr = run_jump_trajectory(&rho0, p, config.t_final, &mut stream, config.decimate)?;
            Ok(Some(Sample {
                times: tr.times,
                rho_cc: tr.rho_cc,
                rho_ll: tr.rho_ll,
                rho_rr: tr.rho_rr,
                i_t: tr.i_t,
            }))
        }
        other => Err(Error::invalid(
            "mode",
            format!("ensembles need mode diffusive or jump, got {}", other.name()),
        )),
    }
}

/// Runs `n_traj` trajectories (`stream_id = 0..n_traj`) and aggregates them.
/// Trajectories that fail numerically or exceed the clamp limit are excluded;
/// more than 1% of them fails the run.
pub fn run_ensemble(config: &ExperimentConfig) -> Result<EnsembleStats> {
    config.validate()?;
    if !matches!(config.mode, Mode::Diffusive | Mode::Jump) {
        return Err(Error::invalid("mode", "ensembles need mode diffusive or jump"));
    }
    let pool = config.pool()?;
    let limit = config.n_traj / 100;

    let mut times: Option<Vec<f64>> = None;
    let mut acc: Option<[Accumulator; 4]> = None;
    let mut used = 0usize;
    let mut invalid = 0usize;

    for start in (0..config.n_traj).step_by(CHUNK) {
        let end = (start + CHUNK).min(config.n_traj);
        let batch: Vec<Result<Option<Sample>>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|id| simulate_one(config, id as u64))
                .collect()
        });
        for result in batch {
            let sample = match result {
                Ok(Some(s)) => s,
                Ok(None) | Err(Error::NonFinite { .. }) | Err(Error::ZeroTraceProjection { .. }) => {
                    invalid += 1;
                    if invalid > limit {
                        return Err(Error::TooManyInvalid {
                            failed: invalid,
                            total: config.n_traj,
                            limit,
                        });
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let len = sample.times.len();
            let accs = acc.get_or_insert_with(|| std::array::from_fn(|_| Accumulator::new(len)));
            if times.is_none() {
                times = Some(sample.times);
            }
            used += 1;
            accs[0].add(used, &sample.rho_cc);
            accs[1].add(used, &sample.rho_ll);
            accs[2].add(used, &sample.rho_rr);
            accs[3].add(used, &sample.i_t);
        }
    }

    let (Some(times), Some([cc, ll, rr, it])) = (times, acc) else {
        return Err(Error::TooManyInvalid {
            failed: invalid,
            total: config.n_traj,
            limit,
        });
    };
    let (mean_rho_cc, err_rho_cc) = cc.finish(used);
    let (mean_rho_ll, err_rho_ll) = ll.finish(used);
    let (mean_rho_rr, err_rho_rr) = rr.finish(used);
    let (mean_i_t, err_i_t) = it.finish(used);
    Ok(EnsembleStats {
        times,
        mean_rho_cc,
        err_rho_cc,
        mean_rho_ll,
        err_rho_ll,
        mean_rho_rr,
        err_rho_rr,
        mean_i_t,
        err_i_t,
        n_traj: used,
        n_invalid: invalid,
    })
}

/// Deterministic Lindblad solution on the same bins as an ensemble run,
/// reported with zero error bars and `n_traj = 0`.
pub fn master_curve(config: &ExperimentConfig) -> Result<EnsembleStats> {
    config.params.validate()?;
    let sol = evolve_master_sampled(
        &config.initial_state(),
        &config.params,
        config.t_final,
        config.decimate,
    )?;
    let n = sol.times.len();
    let pick = |f: &dyn Fn(&DensityMatrix) -> f64| sol.states.iter().map(f).collect::<Vec<_>>();
    let i_t = sol
        .states
        .iter()
        .map(|s| tqd_current(s, &config.params))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleStats {
        times: sol.times.clone(),
        mean_rho_cc: pick(&|s| s.rho_cc()),
        err_rho_cc: vec![0.0; n],
        mean_rho_ll: pick(&|s| s.rho_ll()),
        err_rho_ll: vec![0.0; n],
        mean_rho_rr: pick(&|s| s.rho_rr()),
        err_rho_rr: vec![0.0; n],
        mean_i_t: i_t,
        err_i_t: vec![0.0; n],
        n_traj: 0,
        n_invalid: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub gamma: f64,
    pub rho_cc_ss: f64,
    pub i_t_ss: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Neighbouring gamma cells (at fixed delta) where `rho_cc` decreases.
    pub rho_cc_decreases: usize,
    /// Neighbouring gamma cells with `gamma >= |delta|` (Zeno side) where `I_T`
    /// still rises.
    pub current_increases: usize,
}

fn steady_row(params: &SystemParams, delta: f64, gamma: f64) -> Result<SweepRow> {
    let p = params.with_delta(delta).with_gamma(gamma);
    match steady_state(&p) {
        Ok(ss) => Ok(SweepRow {
            delta,
            gamma,
            rho_cc_ss: ss.rho_cc(),
            i_t_ss: tqd_current(&ss, &p)?,
            degenerate: false,
        }),
        Err(Error::NonUniqueSteadyState { .. }) | Err(Error::SteadyStateResidual { .. }) => {
            Ok(SweepRow {
                delta,
                gamma,
                rho_cc_ss: f64::NAN,
                i_t_ss: f64::NAN,
                degenerate: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Steady state on the `delta_values x gamma_values` grid (delta-major order).
/// Degenerate cells are marked rather than fatal.
pub fn sweep_steady_state(config: &ExperimentConfig) -> Result<SweepTable> {
    let mut cfg = config.clone();
    cfg.mode = Mode::Sweep;
    cfg.validate()?;
    let cells: Vec<(f64, f64)> = cfg
        .delta_values
        .iter()
        .flat_map(|&d| cfg.gamma_values.iter().map(move |&g| (d, g)))
        .collect();
    let pool = cfg.pool()?;
    let rows = pool.install(|| {
        cells
            .par_iter()
            .map(|&(d, g)| steady_row(&cfg.params, d, g))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rho_cc_decreases = 0;
    let mut current_increases = 0;
    let n_gamma = cfg.gamma_values.len();
    for per_delta in rows.chunks(n_gamma) {
        let mut order: Vec<&SweepRow> = per_delta.iter().filter(|r| !r.degenerate).collect();
        order.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        for w in order.windows(2) {
            if w[1].rho_cc_ss < w[0].rho_cc_ss - 1e-12 {
                rho_cc_decreases += 1;
            }
            if w[0].gamma >= w[0].delta.abs() && w[1].i_t_ss > w[0].i_t_ss + 1e-12 {
                current_increases += 1;
            }
        }
    }
    Ok(SweepTable {
        rows,
        rho_cc_decreases,
        current_increases,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub gamma: f64,
    pub delta: f64,
    /// `None` when the estimator had too little data; see `error`.
    pub result: Option<CorrelationResult>,
    pub error: Option<String>,
}

/// Zero-frequency batches of `(I_T, z)` for one stationary trajectory.
pub fn trajectory_batches(
    config: &ExperimentConfig,
    params: &SystemParams,
    stream_id: u64,
) -> Result<SpectralBatches> {
    let mut stream = WienerStream::new(config.seed, stream_id, params.dt);
    let rec = run_diffusive_trajectory(
        &config.initial_state(),
        params,
        config.t_final,
        &mut stream,
        config.decimate,
    )?;
    SpectralBatches::estimate(
        &rec.i_t,
        &rec.record_z,
        config.bin_dt(),
        config.t_burn,
        config.t_cut,
    )
}

/// Cross-correlation of the TQD current with the detector record for each
/// `(gamma, delta)` cell, pooling batches from `n_traj` trajectories per cell.
pub fn correlation_experiment(config: &ExperimentConfig) -> Result<Vec<CorrelationRow>> {
    let mut cfg = config.clone();
    cfg.mode = Mode::Correlate;
    cfg.validate()?;
    if cfg.gamma_values.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::invalid("gamma_values", "correlations need gamma > 0"));
    }
    let sign = cfg.detector.contrast_sign();
    let cells: Vec<(f64, f64)> = cfg
        .delta_values
        .iter()
        .flat_map(|&d| cfg.gamma_values.iter().map(move |&g| (g, d)))
        .collect();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..cfg.n_traj as u64).map(move |k| (c, k)))
        .collect();
    let pool = cfg.pool()?;
    let per_job: Vec<Result<SpectralBatches>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, k)| {
                let (g, d) = cells[c];
                trajectory_batches(&cfg, &cfg.params.with_delta(d).with_gamma(g), k)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(cells.len());
    let mut results = per_job.into_iter();
    for &(gamma, delta) in &cells {
        let mut pooled = SpectralBatches::default();
        let mut failure: Option<Error> = None;
        for _ in 0..cfg.n_traj {
            match results.next().expect("one result per job") {
                Ok(b) => pooled.extend(&b),
                Err(e @ Error::InsufficientData(_)) => failure = Some(e),
                Err(e) => return Err(e),
            }
        }
        let summary = if let Some(e) = failure {
            Err(e)
        } else {
            pooled.summarize(sign)
        };
        rows.push(match summary {
            Ok(r) => CorrelationRow {
                gamma,
                delta,
                result: Some(r),
                error: None,
            },
            Err(e @ Error::InsufficientData(_)) => CorrelationRow {
                gamma,
                delta,
                result: None,
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        });
    }
    Ok(rows)
}

/// Mean and batch-means standard error of a correlated stationary series
/// after dropping `burn` samples.
pub fn batch_mean(series: &[f64], burn: usize, batch: usize) -> Result<(f64, f64)> {
    let data = series.get(burn..).unwrap_or(&[]);
    let n_batches = data.len().checked_div(batch).unwrap_or(0);
    if n_batches < crate::observables::MIN_BATCHES {
        return Err(Error::InsufficientData(format!(
            "{n_batches} batches of {batch} samples"
        )));
    }
    let means: Vec<f64> = data
        .chunks_exact(batch)
        .map(|c| c.iter().sum::<f64>() / batch as f64)
        .collect();
    let n = means.len() as f64;
    let m = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    Ok((m, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = default_gamma_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[19], 100.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let d = default_delta_grid();
        assert_eq!((d.len(), d[0], d[14]), (15, 2.0, 30.0));
    }

    #[test]
    fn empty_grid_rejected() {
        let cfg = ExperimentConfig {
            mode: Mode::Sweep,
            delta_values: vec![],
            ..ExperimentConfig::default()
        };
        assert!(matches!(sweep_steady_state(&cfg), Err(Error::Invalid { .. })));
    }

    #[test]
    fn single_trajectory_ensemble_has_undefined_error() {
        let cfg = ExperimentConfig {
            mode: Mode::Diffusive,
            t_final: 0.2,
            ..ExperimentConfig::default()
        };
        let stats = run_ensemble(&cfg).unwrap();
        assert_eq!(stats.n_traj, 1);
        let mut s = WienerStream::new(cfg.seed, 0, cfg.params.dt);
        let rec = run_diffusive_trajectory(&cfg.initial_state(), &cfg.params, 0.2, &mut s, 10).unwrap();
        assert_eq!(stats.mean_rho_cc, rec.rho_cc);
        assert!(stats.err_rho_cc.iter().all(|e| e.is_nan()));
    }

    #[test]
    fn master_mode_is_not_an_ensemble() {
        let cfg = ExperimentConfig {
            mode: Mode::Master,
            ..ExperimentConfig::default()
        };
        assert!(run_ensemble(&cfg).is_err());
        let curve = master_curve(&cfg).unwrap();
        assert_eq!(curve.times.len(), 5001);
    }

    #[test]
    fn degenerate_cells_are_marked() {
        let mut cfg = ExperimentConfig {
            mode: Mode::Sweep,
            delta_values: vec![10.0],
            gamma_values: vec![0.0, 1.0],
            ..ExperimentConfig::default()
        };
        cfg.params.omega = 0.0;
        let t = sweep_steady_state(&cfg).unwrap();
        assert!(t.rows.iter().all(|r| r.degenerate && r.rho_cc_ss.is_nan()));
    }

    #[test]
    fn batch_mean_of_constant() {
        let (m, e) = batch_mean(&[2.0; 100], 10, 10).unwrap();
        assert_eq!((m, e), (2.0, 0.0));
        assert!(batch_mean(&[2.0; 100], 10, 20).is_err());
    }
}
