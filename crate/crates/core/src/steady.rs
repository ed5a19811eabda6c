//! Stationary state from the null space of the vectorized Liouvillian.

use crate::error::{Error, Result};
use crate::model::Generator;
use crate::params::SystemParams;
use crate::state::{DensityMatrix, HermitianMatrix4};

/// Eigenvalues with modulus below this count as zero modes.
pub const NULL_EIGENVALUE_TOLERANCE: f64 = 1e-10;
/// Bound on `max |L rho_ss|`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Number of Liouvillian eigenvalues with `|lambda| < NULL_EIGENVALUE_TOLERANCE`.
pub fn null_dimension(params: &SystemParams) -> Result<usize> {
    let gen = Generator::new(params)?;
    Ok(gen
        .real_superoperator()
        .complex_eigenvalues()
        .iter()
        .filter(|l| l.norm() < NULL_EIGENVALUE_TOLERANCE)
        .count())
}

pub fn steady_state(params: &SystemParams) -> Result<DensityMatrix> {
    params.validate_physical()?;
    let gen = Generator::new(params)?;
    let liouvillian = gen.real_superoperator();

    let zero_modes = liouvillian
        .complex_eigenvalues()
        .iter()
        .filter(|l| l.norm() < NULL_EIGENVALUE_TOLERANCE)
        .count();
    if zero_modes > 1 {
        return Err(Error::NonUniqueSteadyState {
            dimension: zero_modes,
            tolerance: NULL_EIGENVALUE_TOLERANCE,
        });
    }

    let svd = liouvillian.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (k_min, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let mut coords = [0.0; 16];
    for (c, x) in coords.iter_mut().enumerate() {
        *x = v_t[(k_min, c)];
    }
    let rho = DensityMatrix::from_hermitian(HermitianMatrix4::from_real_coords(&coords))
        .normalized()
        .ok_or(Error::NonUniqueSteadyState {
            dimension: zero_modes,
            tolerance: NULL_EIGENVALUE_TOLERANCE,
        })?;

    let residual = gen.rhs(&rho).max_abs();
    if residual >= RESIDUAL_TOLERANCE {
        return Err(Error::SteadyStateResidual {
            residual,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    Ok(rho)
}
