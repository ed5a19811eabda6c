//! Diffusive unraveling: Euler-Maruyama integration of the Ito stochastic
//! master equation for a weakly responding charge detector on the central
//! dot, and the detector record it produces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Generator;
use crate::observables::tqd_current;
use crate::params::SystemParams;
use crate::state::{DensityMatrix, HermitianMatrix4, C, DIM};

/// Trajectories whose populations needed clamping by more than this are
/// flagged invalid.
pub const CLAMP_LIMIT: f64 = 1e-3;

/// Gaussian increments with variance `dt` from an independent substream.
///
/// The generator is ChaCha8 keyed by `seed` with stream number `stream_id`,
/// so distinct ids give non-overlapping sequences on any platform.
#[derive(Debug, Clone)]
pub struct WienerStream {
    seed: u64,
    stream_id: u64,
    dt: f64,
    sqrt_dt: f64,
    rng: ChaCha8Rng,
}

impl WienerStream {
    pub fn new(seed: u64, stream_id: u64, dt: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        WienerStream {
            seed,
            stream_id,
            dt,
            sqrt_dt: dt.sqrt(),
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Next Wiener increment `dW ~ N(0, dt)`.
    pub fn increment(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        z * self.sqrt_dt
    }

    /// Uniform draw on `[0, 1)` from the same stream.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Precomputed Euler-Maruyama stepper.
#[derive(Debug, Clone)]
pub struct DiffusiveStepper {
    gen: Generator,
    sqrt_gamma: f64,
    dt: f64,
}

impl DiffusiveStepper {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        Ok(DiffusiveStepper {
            gen: Generator::new(params)?,
            sqrt_gamma: params.gamma_meas.sqrt(),
            dt: params.dt,
        })
    }

    /// Advances `rho` by one step driven by `dw`, without renormalizing.
    pub fn raw_step(&self, rho: &DensityMatrix, dw: f64) -> DensityMatrix {
        let mut drift = HermitianMatrix4::zeros();
        self.gen.rhs_into(rho, &mut drift);
        let mut next = *rho;
        next.axpy(self.dt, &drift);
        if self.sqrt_gamma > 0.0 && dw != 0.0 {
            // sqrt(gamma) (P rho + rho P - 2 rho_cc rho) dW, P = |C><C|
            let k = self.sqrt_gamma * dw;
            let two_cc = 2.0 * rho.rho_cc();
            let out = next.raw_mut();
            for i in 0..DIM {
                for j in i..DIM {
                    let weight = (i == C) as u8 as f64 + (j == C) as u8 as f64 - two_cc;
                    let v = out.get(i, j) + rho.get(i, j) * (k * weight);
                    out.set(i, j, v);
                }
            }
        }
        next
    }

    /// One normalized step. `step` is only used for diagnostics.
    pub fn step(&self, rho: &DensityMatrix, dw: f64, step: usize) -> Result<DensityMatrix> {
        if !dw.is_finite() {
            return Err(Error::NonFinite { step });
        }
        let next = self.raw_step(rho, dw);
        match next.normalized() {
            Some(n) if n.is_finite() => Ok(n),
            _ => Err(Error::NonFinite { step }),
        }
    }
}

/// One Euler-Maruyama step of the diffusive stochastic master equation,
/// renormalized to unit trace.
pub fn sme_step(rho: &DensityMatrix, params: &SystemParams, dw: f64) -> Result<DensityMatrix> {
    DiffusiveStepper::new(params)?.step(rho, dw, 0)
}

/// Detector record `z = rho_cc + dW / (sqrt(gamma) dt)`.
pub fn record_sample(rho_cc: f64, dw: f64, params: &SystemParams) -> Result<f64> {
    if !(params.gamma_meas > 0.0) {
        return Err(Error::invalid("gamma", "a detector record needs gamma > 0"));
    }
    Ok(rho_cc + dw / (params.gamma_meas.sqrt() * params.dt))
}

/// Stored bins of one conditioned trajectory.
///
/// Row `j` holds the state at `t_j = j * decimate * dt`. `record_z` is the
/// detector record averaged over the steps of bin `(t_{j-1}, t_j]` and `dw`
/// is the summed Wiener increment of that bin; row 0 has the noiseless
/// reading `rho_cc(0)` and `dw = 0`. With `gamma = 0` the record is NaN.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub rho_ll: Vec<f64>,
    pub rho_cc: Vec<f64>,
    pub rho_rr: Vec<f64>,
    pub record_z: Vec<f64>,
    pub i_t: Vec<f64>,
    pub dw: Vec<f64>,
    /// Largest population clamp applied along the run.
    pub max_clamp: f64,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.max_clamp <= CLAMP_LIMIT
    }

    fn push(&mut self, t: f64, rho: &DensityMatrix, z: f64, dw: f64, i_t: f64) {
        self.times.push(t);
        self.rho_ll.push(rho.rho_ll());
        self.rho_cc.push(rho.rho_cc());
        self.rho_rr.push(rho.rho_rr());
        self.record_z.push(z);
        self.i_t.push(i_t);
        self.dw.push(dw);
    }
}

pub fn run_diffusive_trajectory(
    rho0: &DensityMatrix,
    params: &SystemParams,
    t_final: f64,
    stream: &mut WienerStream,
    decimate: usize,
) -> Result<TrajectoryRecord> {
    if !(t_final > 0.0) {
        return Err(Error::invalid("t_final", "must be > 0"));
    }
    if decimate == 0 {
        return Err(Error::invalid("decimate", "must be >= 1"));
    }
    if stream.dt() != params.dt {
        return Err(Error::invalid("dt", "Wiener stream and parameters disagree on dt"));
    }
    let stepper = DiffusiveStepper::new(params)?;
    let current = |rho: &DensityMatrix| tqd_current(rho, params);
    let has_record = params.gamma_meas > 0.0;
    let record_gain = if has_record {
        1.0 / (params.gamma_meas.sqrt() * params.dt)
    } else {
        0.0
    };

    let n_steps = (t_final / params.dt).round() as usize;
    let capacity = n_steps / decimate + 2;
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(capacity),
        rho_ll: Vec::with_capacity(capacity),
        rho_cc: Vec::with_capacity(capacity),
        rho_rr: Vec::with_capacity(capacity),
        record_z: Vec::with_capacity(capacity),
        i_t: Vec::with_capacity(capacity),
        dw: Vec::with_capacity(capacity),
        max_clamp: 0.0,
    };

    let mut rho = *rho0;
    let z0 = if has_record { rho.rho_cc() } else { f64::NAN };
    rec.push(0.0, &rho, z0, 0.0, current(&rho)?);

    let mut z_acc = 0.0;
    let mut dw_acc = 0.0;
    let mut in_bin = 0usize;
    for step in 1..=n_steps {
        let dw = stream.increment();
        if has_record {
            z_acc += rho.rho_cc() + dw * record_gain;
        }
        dw_acc += dw;
        in_bin += 1;

        rho = stepper.step(&rho, dw, step)?;
        let clamp = rho.clamp_populations();
        if clamp > 0.0 {
            rec.max_clamp = rec.max_clamp.max(clamp);
            rho = rho.normalized().ok_or(Error::NonFinite { step })?;
        }

        if step % decimate == 0 || step == n_steps {
            let z = if has_record {
                z_acc / in_bin as f64
            } else {
                f64::NAN
            };
            rec.push(step as f64 * params.dt, &rho, z, dw_acc, current(&rho)?);
            z_acc = 0.0;
            dw_acc = 0.0;
            in_bin = 0;
        }
    }
    Ok(rec)
}

/// Centered moving mean over `floor(window / dt)` samples; windows are
/// truncated at the edges.
pub fn time_average(signal: &[f64], window: f64, dt: f64) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::invalid("signal", "empty signal"));
    }
    if !(dt > 0.0) || !(window >= dt * (1.0 - 1e-12)) {
        return Err(Error::invalid("window", "must satisfy window >= dt > 0"));
    }
    // guard against 0.1 / 1e-3 = 99.999...
    let width = ((window / dt) * (1.0 + 1e-12)).floor().max(1.0) as usize;
    let before = (width - 1) / 2;
    let after = width - 1 - before;

    let mut prefix = Vec::with_capacity(signal.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for x in signal {
        acc += x;
        prefix.push(acc);
    }
    let n = signal.len();
    if width == 1 {
        return Ok(signal.to_vec());
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect())
}
