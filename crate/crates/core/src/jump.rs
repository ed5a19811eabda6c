//! Quantum-jump unraveling for a tunneling charge detector: each detected
//! electron projects the central dot empty, and between detections the state
//! follows the normalized no-jump flow.

use serde::{Deserialize, Serialize};

use crate::diffusive::WienerStream;
use crate::error::{Error, Result};
use crate::model::Generator;
use crate::observables::tqd_current;
use crate::params::SystemParams;
use crate::state::{DensityMatrix, HermitianMatrix4, C, DIM};

/// Largest `gamma * dt` for which a single Bernoulli draw per step is used.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

/// Detection probability `gamma (1 - rho_cc) dt` for one step.
pub fn jump_probability(rho: &DensityMatrix, params: &SystemParams) -> Result<f64> {
    let g_dt = params.gamma_meas * params.dt;
    if g_dt > MAX_JUMP_PROBABILITY {
        return Err(Error::invalid(
            "dt",
            format!("gamma * dt = {g_dt} exceeds {MAX_JUMP_PROBABILITY}"),
        ));
    }
    Ok((g_dt * (1.0 - rho.rho_cc())).clamp(0.0, 1.0))
}

/// Post-detection state `P rho P / Tr(P rho P)` with `P = 1 - |C><C|`.
pub fn apply_jump(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let rho_cc = rho.rho_cc();
    if !(rho_cc < 1.0 - 1e-9) {
        return Err(Error::ZeroTraceProjection { rho_cc });
    }
    let mut out = *rho;
    for k in 0..DIM {
        out.set(C, k, 0.0.into());
    }
    out.normalized().ok_or(Error::ZeroTraceProjection { rho_cc })
}

/// Precomputed no-jump integrator.
#[derive(Debug, Clone)]
pub struct NoJumpStepper {
    gen: Generator,
    gamma: f64,
    dt: f64,
}

impl NoJumpStepper {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        Ok(NoJumpStepper {
            gen: Generator::without_measurement(params)?,
            gamma: params.gamma_meas,
            dt: params.dt,
        })
    }

    /// Explicit Euler step of
    /// `-i[H, rho] + leads + gamma (1/2 {P_C, rho} - rho_cc rho)`,
    /// with `rho_cc` taken before the step. No renormalization.
    pub fn step(&self, rho: &DensityMatrix, step: usize) -> Result<DensityMatrix> {
        let mut drift = HermitianMatrix4::zeros();
        self.gen.rhs_into(rho, &mut drift);
        if self.gamma > 0.0 {
            let cc = rho.rho_cc();
            for i in 0..DIM {
                for j in i..DIM {
                    let weight = 0.5 * ((i == C) as u8 as f64 + (j == C) as u8 as f64) - cc;
                    let v = drift.get(i, j) + rho.get(i, j) * (self.gamma * weight);
                    drift.set(i, j, v);
                }
            }
        }
        let mut next = *rho;
        next.axpy(self.dt, &drift);
        if !next.is_finite() {
            return Err(Error::NonFinite { step });
        }
        Ok(next)
    }
}

pub fn no_jump_step(rho: &DensityMatrix, params: &SystemParams) -> Result<DensityMatrix> {
    NoJumpStepper::new(params)?.step(rho, 0)
}

/// Approximate `rho_cc` a time `t_since_jump` after a detection,
/// `(2 Omega^2 / Delta^2) exp(gamma t / 2) (1 - cos(Delta t))`.
pub fn analytic_rho_cc(t_since_jump: f64, params: &SystemParams) -> Result<f64> {
    if params.delta == 0.0 {
        return Err(Error::invalid("delta", "analytic form needs delta != 0"));
    }
    let ratio = params.omega / params.delta;
    Ok(2.0
        * ratio
        * ratio
        * (0.5 * params.gamma_meas * t_since_jump).exp()
        * (1.0 - (params.delta * t_since_jump).cos()))
}

/// Whether `Omega, gamma << Delta` holds (both below `|Delta| / 10`), the
/// regime in which [`analytic_rho_cc`] is expected to be accurate.
pub fn analytic_regime_ok(params: &SystemParams) -> bool {
    let scale = params.delta.abs() / 10.0;
    params.omega <= scale && params.gamma_meas <= scale
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpTrajectory {
    pub times: Vec<f64>,
    pub rho_cc: Vec<f64>,
    pub rho_ll: Vec<f64>,
    pub rho_rr: Vec<f64>,
    pub i_t: Vec<f64>,
    /// Cumulative detector count `N(t)`.
    pub n_detected: Vec<u64>,
    /// End of each step in which a detection occurred.
    pub jump_times: Vec<f64>,
    /// Largest `|rho_cC|` element right after any jump.
    pub max_post_jump_c: f64,
}

impl JumpTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_detected(&self) -> u64 {
        self.n_detected.last().copied().unwrap_or(0)
    }

    fn push(&mut self, t: f64, rho: &DensityMatrix, n: u64, i_t: f64) {
        self.times.push(t);
        self.rho_cc.push(rho.rho_cc());
        self.rho_ll.push(rho.rho_ll());
        self.rho_rr.push(rho.rho_rr());
        self.i_t.push(i_t);
        self.n_detected.push(n);
    }
}

/// Runs one jump trajectory, drawing `dN` from the stream's uniform
/// sequence. Rows are stored every `decimate` steps, as in the diffusive
/// record.
pub fn run_jump_trajectory(
    rho0: &DensityMatrix,
    params: &SystemParams,
    t_final: f64,
    stream: &mut WienerStream,
    decimate: usize,
) -> Result<JumpTrajectory> {
    if !(t_final > 0.0) {
        return Err(Error::invalid("t_final", "must be > 0"));
    }
    if decimate == 0 {
        return Err(Error::invalid("decimate", "must be >= 1"));
    }
    if stream.dt() != params.dt {
        return Err(Error::invalid("dt", "stream and parameters disagree on dt"));
    }
    let stepper = NoJumpStepper::new(params)?;
    let g_dt = params.gamma_meas * params.dt;
    if g_dt > MAX_JUMP_PROBABILITY {
        return Err(Error::invalid("dt", "gamma * dt exceeds 0.1"));
    }

    let n_steps = (t_final / params.dt).round() as usize;
    let mut traj = JumpTrajectory::default();
    let mut rho = *rho0;
    let mut count = 0u64;
    traj.push(0.0, &rho, count, tqd_current(&rho, params)?);

    for step in 1..=n_steps {
        let p = (g_dt * (1.0 - rho.rho_cc())).clamp(0.0, 1.0);
        let u = stream.uniform();
        let t = step as f64 * params.dt;
        if u < p {
            rho = apply_jump(&rho)?;
            count += 1;
            traj.jump_times.push(t);
            let worst = (0..DIM).map(|k| rho.get(C, k).norm()).fold(0.0, f64::max);
            traj.max_post_jump_c = traj.max_post_jump_c.max(worst);
        } else {
            rho = stepper.step(&rho, step)?;
        }
        if step % decimate == 0 || step == n_steps {
            traj.push(t, &rho, count, tqd_current(&rho, params)?);
        }
    }
    Ok(traj)
}
