//! Hamiltonian, lead rates and the Lindblad generator of the monitored
//! triple dot.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{BiasMode, SystemParams};
use crate::state::{Basis, DensityMatrix, HermitianMatrix4, Mat4, C, DIM, E0, L, R};

/// `H = eps (n_L + n_R) + (eps + Delta) n_C - Omega (|L><C| + |R><C| + h.c.)`.
/// The empty state decouples.
pub fn build_hamiltonian(params: &SystemParams) -> HermitianMatrix4 {
    let mut h = HermitianMatrix4::zeros();
    let eps = params.epsilon;
    let hop = Complex64::new(-params.omega, 0.0);
    h.set(L, L, eps.into());
    h.set(R, R, eps.into());
    h.set(C, C, (eps + params.delta).into());
    h.set(L, C, hop);
    h.set(R, C, hop);
    h
}

/// Fermi occupation `1 / (1 + exp(E / kT))`; `kT = 0` is the step function
/// with `f(0) = 1/2`.
pub fn fermi(energy: f64, kt: f64) -> Result<f64> {
    if kt < 0.0 || kt.is_nan() {
        return Err(Error::invalid("kt", "temperature must be >= 0"));
    }
    if kt == 0.0 {
        return Ok(match energy.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Greater) => 0.0,
            _ => 0.5,
        });
    }
    let x = energy / kt;
    // evaluate on the side where exp cannot overflow
    Ok(if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    })
}

/// Tunneling rates into (`+`) and out of (`-`) the outer dots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub gamma_l_in: f64,
    pub gamma_l_out: f64,
    pub gamma_r_in: f64,
    pub gamma_r_out: f64,
}

pub fn build_rates(params: &SystemParams) -> Result<RateSet> {
    match params.bias_mode {
        BiasMode::Infinite => Ok(RateSet {
            gamma_l_in: params.gamma_l,
            gamma_l_out: 0.0,
            gamma_r_in: 0.0,
            gamma_r_out: params.gamma_r,
        }),
        BiasMode::Finite => {
            // Fermi factors are taken at the bare outer-dot level.
            let fl = fermi(params.epsilon - params.bath_l.mu, params.bath_l.kt)?;
            let fr = fermi(params.epsilon - params.bath_r.mu, params.bath_r.kt)?;
            Ok(RateSet {
                gamma_l_in: params.gamma_l * fl,
                gamma_l_out: params.gamma_l * (1.0 - fl),
                gamma_r_in: params.gamma_r * fr,
                gamma_r_out: params.gamma_r * (1.0 - fr),
            })
        }
    }
}

/// Superexchange coupling `Omega^2 / Delta` between the outer dots.
pub fn effective_coupling(params: &SystemParams) -> Result<f64> {
    if params.delta == 0.0 {
        return Err(Error::invalid("delta", "effective coupling needs delta != 0"));
    }
    Ok(params.omega * params.omega / params.delta)
}

/// `D[A] rho = A rho A^dagger - 1/2 {A^dagger A, rho}` for a general jump
/// operator.
pub fn dissipator(jump_op: &Mat4, rho: &Mat4) -> Mat4 {
    let adag = jump_op.dagger();
    let ada = adag * *jump_op;
    *jump_op * *rho * adag - (ada * *rho + *rho * ada).scale(0.5)
}

/// Jump operators of the unconditional dynamics: lead tunneling in each
/// direction, then `sqrt(gamma) |C><C|`. Zero-rate channels are omitted.
pub fn jump_operators(params: &SystemParams) -> Result<Vec<Mat4>> {
    let rates = build_rates(params)?;
    let mut ops = Vec::new();
    let mut push = |rate: f64, op: Mat4| {
        if rate > 0.0 {
            ops.push(op.scale(rate.sqrt()));
        }
    };
    push(rates.gamma_l_in, Mat4::outer(Basis::Left, Basis::Empty));
    push(rates.gamma_l_out, Mat4::outer(Basis::Empty, Basis::Left));
    push(rates.gamma_r_in, Mat4::outer(Basis::Right, Basis::Empty));
    push(rates.gamma_r_out, Mat4::outer(Basis::Empty, Basis::Right));
    push(params.gamma_meas, Mat4::projector(Basis::Center));
    Ok(ops)
}

/// `-i[H, rho] + sum_k D[L_k] rho` assembled from dense matrix products.
/// Slow; [`Generator`] is the production path.
pub fn lindblad_rhs_dense(rho: &DensityMatrix, params: &SystemParams) -> Result<Mat4> {
    let h = build_hamiltonian(params).to_matrix();
    let r = rho.to_matrix();
    let mut out = (h * r - r * h).scale_c(Complex64::new(0.0, -1.0));
    for op in jump_operators(params)? {
        out = out + dissipator(&op, &r);
    }
    Ok(out)
}

/// Ensemble-averaged Lindblad right-hand side.
pub fn lindblad_rhs(rho: &DensityMatrix, params: &SystemParams) -> Result<HermitianMatrix4> {
    Ok(Generator::new(params)?.rhs(rho))
}

/// `sqrt(rate) |to><from|`
#[derive(Debug, Clone, Copy, PartialEq)]
struct Transition {
    to: usize,
    from: usize,
    rate: f64,
}

/// Precomputed Liouvillian exploiting the sparsity of every term.
#[derive(Debug, Clone)]
pub struct Generator {
    h: [[f64; DIM]; DIM],
    transitions: Vec<Transition>,
    dephasing: f64,
}

impl Generator {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate_physical()?;
        Self::with_measurement(params, params.gamma_meas)
    }

    /// Leads and Hamiltonian only; the measurement term is supplied by the
    /// caller (jump unraveling).
    pub fn without_measurement(params: &SystemParams) -> Result<Self> {
        params.validate_physical()?;
        Self::with_measurement(params, 0.0)
    }

    fn with_measurement(params: &SystemParams, dephasing: f64) -> Result<Self> {
        let hm = build_hamiltonian(params);
        let mut h = [[0.0; DIM]; DIM];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = hm.get(i, j).re;
            }
        }
        let rates = build_rates(params)?;
        let transitions = [
            (L, E0, rates.gamma_l_in),
            (E0, L, rates.gamma_l_out),
            (R, E0, rates.gamma_r_in),
            (E0, R, rates.gamma_r_out),
        ]
        .into_iter()
        .filter(|t| t.2 > 0.0)
        .map(|(to, from, rate)| Transition { to, from, rate })
        .collect();
        Ok(Generator {
            h,
            transitions,
            dephasing,
        })
    }

    pub fn dephasing(&self) -> f64 {
        self.dephasing
    }

    pub fn rhs(&self, rho: &DensityMatrix) -> HermitianMatrix4 {
        let mut out = HermitianMatrix4::zeros();
        self.rhs_into(rho, &mut out);
        out
    }

    pub(crate) fn rhs_into(&self, rho: &DensityMatrix, out: &mut HermitianMatrix4) {
        let minus_i = Complex64::new(0.0, -1.0);
        let g = |i: usize, j: usize| rho.get(i, j);
        for i in 0..DIM {
            for j in i..DIM {
                // [H, rho]_ij with real symmetric H
                let mut comm = Complex64::new(0.0, 0.0);
                for k in 0..DIM {
                    let hik = self.h[i][k];
                    if hik != 0.0 {
                        comm += g(k, j) * hik;
                    }
                    let hkj = self.h[k][j];
                    if hkj != 0.0 {
                        comm -= g(i, k) * hkj;
                    }
                }
                let mut d = minus_i * comm;
                for t in &self.transitions {
                    if i == t.from {
                        d -= g(i, j) * (0.5 * t.rate);
                    }
                    if j == t.from {
                        d -= g(i, j) * (0.5 * t.rate);
                    }
                    if i == t.to && j == t.to {
                        d += g(t.from, t.from) * t.rate;
                    }
                }
                if (i == C) != (j == C) {
                    d -= g(i, j) * (0.5 * self.dephasing);
                }
                out.set(i, j, d);
            }
        }
    }

    /// Real 16x16 matrix of the generator acting on the real coordinates of
    /// Hermitian matrices (see [`HermitianMatrix4::to_real_coords`]).
    pub fn real_superoperator(&self) -> nalgebra::SMatrix<f64, 16, 16> {
        let mut m = nalgebra::SMatrix::<f64, 16, 16>::zeros();
        for col in 0..16 {
            let mut e = [0.0; 16];
            e[col] = 1.0;
            let basis = DensityMatrix::from_hermitian(HermitianMatrix4::from_real_coords(&e));
            let image = self.rhs(&basis).to_real_coords();
            for (row, v) in image.iter().enumerate() {
                m[(row, col)] = *v;
            }
        }
        m
    }
}
