//! Invariant suite run by `tqdsim validate`.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::diffusive::{run_diffusive_trajectory, DiffusiveStepper, WienerStream};
use crate::error::Result;
use crate::jump::run_jump_trajectory;
use crate::master::{evolve_master_sampled, POSITIVITY_TOLERANCE};
use crate::model::build_hamiltonian;
use crate::params::SystemParams;
use crate::state::{Basis, DensityMatrix, DIM};
use crate::steady::steady_state;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }

    fn from_result(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Check::new(name, passed, detail),
            Err(e) => Check::new(name, false, format!("error: {e}")),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<28} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// `rho_cc(t)` for closed evolution from `|L>`, by diagonalizing `H`.
pub fn unitary_rho_cc(params: &SystemParams, t: f64) -> f64 {
    let h = build_hamiltonian(params);
    let m = Matrix4::from_fn(|i, j| h.get(i, j).re);
    let eig = SymmetricEigen::new(m);
    let v = eig.eigenvectors;
    let mut psi0 = Vector4::zeros();
    psi0[Basis::Left.index()] = 1.0;
    let coeffs = v.transpose() * psi0;
    let c = Basis::Center.index();
    let amp: Complex64 = (0..DIM)
        .map(|k| Complex64::from_polar(coeffs[k] * v[(c, k)], -eig.eigenvalues[k] * t))
        .sum();
    amp.norm_sqr()
}

fn trace_hermiticity_positivity() -> Result<(bool, String)> {
    let p = SystemParams::default();
    let sol = evolve_master_sampled(&DensityMatrix::pure(Basis::Left), &p, 5.0, 10)?;
    let master_trace = sol.states.iter().map(|s| (s.trace() - 1.0).abs()).fold(0.0, f64::max);
    let master_min = sol.states.iter().map(|s| s.eigenvalues()[0]).fold(0.0, f64::min);

    // Euler-Maruyama does not preserve positivity, so the stochastic minimum
    // eigenvalue is reported but only the diagonal clamp guard applies to it
    let stepper = DiffusiveStepper::new(&p)?;
    let mut stream = WienerStream::new(7, 0, p.dt);
    let mut rho = DensityMatrix::pure(Basis::Left);
    let mut worst_trace: f64 = 0.0;
    let mut min_eig: f64 = 0.0;
    for step in 1..=50_000 {
        rho = stepper.step(&rho, stream.increment(), step)?;
        rho.clamp_populations();
        rho = rho.normalized().unwrap_or(rho);
        worst_trace = worst_trace.max((rho.trace() - 1.0).abs());
        if step % 10 == 0 {
            min_eig = min_eig.min(rho.eigenvalues()[0]);
        }
    }
    let herm = rho.to_matrix().hermiticity_error();
    let ok = master_trace < 1e-10 && worst_trace < 1e-12 && herm < 1e-14 && master_min > -POSITIVITY_TOLERANCE;
    Ok((
        ok,
        format!(
            "master |tr-1|={master_trace:.1e} min eig={master_min:.1e}; sme |tr-1|={worst_trace:.1e} herm={herm:.1e} min eig={min_eig:.1e} (info)"
        ),
    ))
}

fn measurement_eigenstates() -> Result<(bool, String)> {
    // with no hopping and no leads, |C> and |L> are fixed by the measurement
    let p = SystemParams {
        omega: 0.0,
        gamma_l: 0.0,
        gamma_r: 0.0,
        ..SystemParams::default()
    };
    let mut worst: f64 = 0.0;
    for b in [Basis::Center, Basis::Left] {
        let rho0 = DensityMatrix::pure(b);
        let mut stream = WienerStream::new(11, b.index() as u64, p.dt);
        let rec = run_diffusive_trajectory(&rho0, &p, 1.0, &mut stream, 1)?;
        let target = if b == Basis::Center { 1.0 } else { 0.0 };
        worst = rec.rho_cc.iter().map(|x| (x - target).abs()).fold(worst, f64::max);
    }
    Ok((worst < 1e-12, format!("max |drift|={worst:.1e}")))
}

fn post_jump_empty() -> Result<(bool, String)> {
    let p = SystemParams::default().with_leads(20.0, 16.0).with_delta(20.0).with_gamma(5.0);
    let mut stream = WienerStream::new(3, 0, p.dt);
    let tr = run_jump_trajectory(&DensityMatrix::pure(Basis::Left), &p, 20.0, &mut stream, 1)?;
    let n = tr.jump_times.len();
    Ok((
        n > 0 && tr.max_post_jump_c == 0.0,
        format!("{n} jumps, max post-jump |rho_C.|={:.1e}", tr.max_post_jump_c),
    ))
}

fn dephasing_rate() -> Result<(bool, String)> {
    let p = SystemParams {
        omega: 0.0,
        gamma_l: 0.0,
        gamma_r: 0.0,
        ..SystemParams::default()
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rho0 = DensityMatrix::from_amplitudes([
        Complex64::new(0.0, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(0.0, 0.0),
    ]);
    let sol = evolve_master_sampled(&rho0, &p, 1.0, 100)?;
    let worst = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(t, st)| {
            let expected = 0.5 * (-p.gamma_meas * t / 2.0).exp();
            (st.get(Basis::Left.index(), Basis::Center.index()).norm() - expected).abs() / expected
        })
        .fold(0.0, f64::max);
    Ok((worst < 1e-6, format!("max rel err={worst:.1e}")))
}

fn unitary_limit() -> Result<(bool, String)> {
    let p = SystemParams {
        gamma_l: 0.0,
        gamma_r: 0.0,
        gamma_meas: 0.0,
        ..SystemParams::default()
    };
    let sol = evolve_master_sampled(&DensityMatrix::pure(Basis::Left), &p, 5.0, 100)?;
    let worst = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(t, st)| (st.rho_cc() - unitary_rho_cc(&p, *t)).abs())
        .fold(0.0, f64::max);
    Ok((worst < 1e-8, format!("max |diff| vs expm={worst:.1e}")))
}

fn steady_fixed_point() -> Result<(bool, String)> {
    let p = SystemParams::default();
    let ss = steady_state(&p)?;
    let sol = evolve_master_sampled(&ss, &p, 10.0, 1000)?;
    let diff = (*sol.final_state().as_hermitian() - *ss.as_hermitian()).max_abs();
    Ok((diff < 1e-8, format!("max |rho(10)-rho_ss|={diff:.1e}")))
}

fn wiener_statistics() -> Result<(bool, String)> {
    let dt = 1e-4;
    let n = 1_000_000usize;
    let mut stream = WienerStream::new(2024, 0, dt);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = stream.increment();
        s1 += x;
        s2 += x * x;
    }
    let mean = s1 / n as f64;
    let var = s2 / n as f64 - mean * mean;
    let ok = mean.abs() < 3.0 * (dt / n as f64).sqrt() && ((var - dt) / dt).abs() < 0.01;
    Ok((ok, format!("mean={mean:.2e}, var/dt={:.4}", var / dt)))
}

fn no_flagged_trajectories() -> Result<(bool, String)> {
    let p = SystemParams::default();
    let mut flagged = 0;
    let n = 20;
    for k in 0..n {
        let mut stream = WienerStream::new(1, k, p.dt);
        let rec = run_diffusive_trajectory(&DensityMatrix::pure(Basis::Left), &p, 5.0, &mut stream, 10)?;
        if !rec.is_valid() {
            flagged += 1;
        }
    }
    Ok((flagged == 0, format!("{flagged} of {n} diffusive trajectories flagged")))
}

/// Runs every check; never stops at the first failure.
pub fn run_suite() -> Vec<Check> {
    vec![
        Check::from_result("trace/hermiticity/positivity", trace_hermiticity_positivity()),
        Check::from_result("measurement eigenstates", measurement_eigenstates()),
        Check::from_result("post-jump rho_cc = 0", post_jump_empty()),
        Check::from_result("dephasing exp(-gamma t/2)", dephasing_rate()),
        Check::from_result("unitary limit vs expm", unitary_limit()),
        Check::from_result("steady state fixed point", steady_fixed_point()),
        Check::from_result("wiener statistics", wiener_statistics()),
        Check::from_result("no flagged trajectories", no_flagged_trajectories()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_oracle_two_level_limit() {
        // Delta = 0, no leads: |L> -> C population sin^2(sqrt(2) t) / 2
        let p = SystemParams::default().with_delta(0.0);
        for t in [0.0, 0.3, 1.1] {
            let expected = 0.5 * (2f64.sqrt() * t).sin().powi(2);
            assert!((unitary_rho_cc(&p, t) - expected).abs() < 1e-12);
        }
    }
}
