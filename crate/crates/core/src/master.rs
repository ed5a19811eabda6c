//! Ensemble-averaged (unconditioned) evolution.

use crate::error::{Error, Result};
use crate::model::Generator;
use crate::params::SystemParams;
use crate::state::{DensityMatrix, HermitianMatrix4};

/// Eigenvalues below this raise [`Error::Positivity`].
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

/// Stored samples of a deterministic solution.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl MasterSolution {
    pub fn rho_cc(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.rho_cc()).collect()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("solution holds the initial state")
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step(gen: &Generator, rho: &DensityMatrix, dt: f64) -> DensityMatrix {
    let stage = |base: &DensityMatrix, k: &HermitianMatrix4, h: f64| {
        let mut s = *base;
        s.axpy(h, k);
        s
    };
    let k1 = gen.rhs(rho);
    let k2 = gen.rhs(&stage(rho, &k1, 0.5 * dt));
    let k3 = gen.rhs(&stage(rho, &k2, 0.5 * dt));
    let k4 = gen.rhs(&stage(rho, &k3, dt));
    let mut next = *rho;
    next.axpy(dt / 6.0, &k1);
    next.axpy(dt / 3.0, &k2);
    next.axpy(dt / 3.0, &k3);
    next.axpy(dt / 6.0, &k4);
    next
}

/// Integrates with the step `params.dt`, storing every `stride`-th state
/// (plus the initial one). Positivity is checked at every stored sample.
pub fn evolve_master_sampled(
    rho0: &DensityMatrix,
    params: &SystemParams,
    t_final: f64,
    stride: usize,
) -> Result<MasterSolution> {
    params.validate()?;
    if !(t_final > 0.0) {
        return Err(Error::invalid("t_final", "must be > 0"));
    }
    if stride == 0 {
        return Err(Error::invalid("decimate", "must be >= 1"));
    }
    let gen = Generator::new(params)?;
    let n_steps = (t_final / params.dt).round() as usize;
    let mut times = Vec::with_capacity(n_steps / stride + 1);
    let mut states = Vec::with_capacity(n_steps / stride + 1);
    let mut rho = *rho0;
    times.push(0.0);
    states.push(rho);
    for step in 1..=n_steps {
        rho = rk4_step(&gen, &rho, params.dt);
        if step % stride == 0 || step == n_steps {
            if !rho.is_finite() {
                return Err(Error::NonFinite { step });
            }
            let t = step as f64 * params.dt;
            let min_eig = rho.eigenvalues()[0];
            if min_eig < -POSITIVITY_TOLERANCE {
                return Err(Error::Positivity {
                    time: t,
                    min_eigenvalue: min_eig,
                });
            }
            times.push(t);
            states.push(rho);
        }
    }
    Ok(MasterSolution { times, states })
}

/// Default decimation used by [`evolve_master`].
pub const DEFAULT_STRIDE: usize = 10;

pub fn evolve_master(
    rho0: &DensityMatrix,
    params: &SystemParams,
    t_final: f64,
) -> Result<MasterSolution> {
    evolve_master_sampled(rho0, params, t_final, DEFAULT_STRIDE)
}
