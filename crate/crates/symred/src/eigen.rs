//! Complex eigenpairs of real matrices via shifted inverse iteration.
//!
//! The normal-form engine needs right eigenvectors of the linearized
//! Hamiltonian vector field, a real matrix with (in the elliptic case)
//! purely imaginary spectrum.  `nalgebra` computes the eigenvalues through
//! its real Schur decomposition; the eigenvectors are recovered here by
//! inverse iteration with a fixed complex shift, which converges in a step
//! or two because the Schur eigenvalues are accurate to machine precision.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Relative residual demanded of a converged eigenpair.
const RESIDUAL_TOL: f64 = 1e-12;
/// Maximum inverse-iteration sweeps before giving up.
const MAX_SWEEPS: usize = 50;

/// Right eigenpairs `(lambda, v)` of a real matrix for every eigenvalue
/// with positive imaginary part, sorted by ascending imaginary part.
///
/// Each vector is normalized to unit Euclidean length; its complex phase
/// is left arbitrary and must be fixed by the caller.
pub(crate) fn positive_rotation_eigenpairs(
    matrix: &DMatrix<f64>,
) -> Result<Vec<(C64, DVector<C64>)>> {
    let complexified = matrix.map(|x| C64::new(x, 0.0));
    let scale = matrix.norm().max(1.0);
    let mut seeds: Vec<C64> = matrix
        .complex_eigenvalues()
        .iter()
        .copied()
        .filter(|e| e.im > 0.0)
        .collect();
    seeds.sort_by(|a, b| a.im.total_cmp(&b.im));
    seeds
        .into_iter()
        .map(|seed| refine_pair(&complexified, seed, scale))
        .collect()
}

/// Inverse iteration for the eigenvector belonging to `seed`, followed by
/// a Rayleigh-quotient estimate of the eigenvalue.
fn refine_pair(matrix: &DMatrix<C64>, seed: C64, scale: f64) -> Result<(C64, DVector<C64>)> {
    let n = matrix.nrows();
    let identity = DMatrix::<C64>::identity(n, n);
    // Deterministic, fully populated start vector: inverse iteration only
    // needs a nonzero component along the target eigenvector.
    let mut vector = DVector::from_fn(n, |j, _| C64::new(1.0 + 0.25 * j as f64, 0.05 * (j + 1) as f64));
    vector /= C64::new(vector.norm(), 0.0);

    // Offset the shift slightly off the eigenvalue so the factorization
    // stays invertible; the offset only slows convergence marginally.
    let mut shift = seed + C64::new(1e-11 * scale, 0.0);
    let mut residual = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        let shifted = matrix - &identity * shift;
        let Some(next) = shifted.lu().solve(&vector) else {
            // Exactly singular: nudge the shift and retry.
            shift += C64::new(1e-10 * scale, 1e-10 * scale);
            continue;
        };
        let norm = next.norm();
        if !norm.is_finite() || norm == 0.0 {
            shift += C64::new(1e-10 * scale, 1e-10 * scale);
            continue;
        }
        vector = next / C64::new(norm, 0.0);
        let image = matrix * &vector;
        let rayleigh = vector.dotc(&image);
        residual = (&image - &vector * rayleigh).norm();
        if residual <= RESIDUAL_TOL * scale {
            return Ok((rayleigh, vector));
        }
        // Late sweeps switch to Rayleigh shifts for cubic convergence on
        // clustered spectra.
        if sweep >= 2 {
            shift = rayleigh;
        }
        let _ = sweep;
    }
    Err(Error::NonConvergence {
        iterations: MAX_SWEEPS,
        residual: residual / scale,
    })
}
