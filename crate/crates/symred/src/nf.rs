//! Birkhoff normal forms at elliptic equilibria.
//!
//! Starting from a polynomial Hamiltonian jet and a critical point, the
//! engine recenters the expansion, normalizes the quadratic part into a sum
//! of harmonic oscillators through a linear symplectic change of
//! coordinates, and then removes non-resonant terms degree by degree with
//! Lie transforms.  The surviving terms depend on the phase-space variables
//! only through the action combinations `I_k = (q_k^2 + p_k^2)/2`, so the
//! output is a polynomial in the actions: the leading integrable model of
//! the dynamics near the equilibrium.
//!
//! The degree-by-degree bookkeeping runs in complex coordinates
//! `z_k = (q_k + i p_k)/sqrt(2)`, where the quadratic part acts diagonally
//! on monomials and the homological equation becomes a division.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::ComplexSeries;
use crate::eigen;
use crate::equilibria::quadratic_coefficient_matrix;
use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

type C64 = Complex<f64>;

/// Largest linear-term norm accepted as "critical" when recentering.
const CRITICAL_TOL: f64 = 1e-9;
/// Relative tolerance for classifying the linearized spectrum.
const SPECTRUM_TOL: f64 = 1e-9;
/// Largest symplecticity residual tolerated in the normalizing matrix.
const SYMPLECTIC_TOL: f64 = 1e-10;
/// Default threshold below which a homological denominator counts as an
/// exact resonance.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-10;

/// How one elliptic mode of the linearization was normalized.
#[derive(Clone, Debug, Serialize)]
pub struct ModeRecord {
    /// Signed oscillator frequency after normalization.
    pub frequency: f64,
    /// Eigenvalue of the linearized vector field as `(re, im)`, `im > 0`.
    pub eigenvalue: (f64, f64),
    /// Whether the eigenvector was conjugated to fix its symplectic sign.
    pub conjugated: bool,
}

/// Linear symplectic change of coordinates diagonalizing a quadratic
/// Hamiltonian into `sum_k omega_k (q_k^2 + p_k^2)/2`.
#[derive(Clone, Debug)]
pub struct LinearNormalization {
    /// Change of coordinates: old variables = `matrix` times new variables,
    /// with positions in rows/columns `0..f` and momenta in `f..2f`.
    pub matrix: DMatrix<f64>,
    /// Mode frequencies, ordered by ascending magnitude.
    pub frequencies: Vec<f64>,
    /// Per-mode normalization diagnostics, same order as `frequencies`.
    pub modes: Vec<ModeRecord>,
}

/// A monomial that could not be normalized away because its homological
/// denominator vanishes: the frequencies satisfy an exact (or
/// numerically exact) resonance and the term is part of the kernel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResonantTerm {
    /// Exponents of `z_1..z_f` followed by `zbar_1..zbar_f`.
    pub exponents: Vec<u8>,
    /// Complex coefficient as `(re, im)`.
    pub coefficient: (f64, f64),
    /// The near-zero denominator `<omega, alpha - beta>`.
    pub denominator: f64,
}

/// Birkhoff normal form of a Hamiltonian jet at an elliptic equilibrium.
#[derive(Clone, Debug)]
pub struct NormalForm {
    /// Hamiltonian value at the equilibrium.
    pub e0: f64,
    /// Highest polynomial degree that was normalized.
    pub order: usize,
    /// Oscillator frequencies of the linearized dynamics.
    pub frequencies: Vec<f64>,
    /// Coefficients of the action polynomial: the key lists the exponent
    /// of each action `I_k = (q_k^2 + p_k^2)/2`, so `[1, 0, ...]` maps to
    /// the frequency of the first mode and `[2, 0, ...]` to the leading
    /// anharmonic correction.  The constant term is kept in `e0` instead.
    pub action_terms: BTreeMap<Vec<u8>, f64>,
    /// Non-action terms protected by an exact resonance of the
    /// frequencies.  Empty in the nonresonant case; when present, the
    /// normal form is `e0` plus the action polynomial plus these
    /// monomials, and it still commutes with the quadratic part to the
    /// accuracy of the resonance.
    pub resonant_terms: Vec<ResonantTerm>,
    /// Generating functions of the Lie transforms, one per degree starting
    /// at three, expressed in the normalized real variables.
    pub generators: Vec<TruncatedSeries>,
    /// The linear normalization applied before the Lie transforms.
    pub linearization: LinearNormalization,
    /// Smallest `|<m, omega>|` over integer vectors `0 < |m|_1 <= order`:
    /// the margin by which the frequencies clear a low-order resonance.
    pub resonance_margin: f64,
}

/// Serializable snapshot of a [`NormalForm`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalFormRecord {
    #[serde(rename = "E0")]
    pub e0: f64,
    pub order: usize,
    pub frequencies: Vec<f64>,
    /// Pairs of action exponents and coefficient, sorted by exponents.
    pub action_terms: Vec<(Vec<u8>, f64)>,
    /// Resonance-protected monomials; empty unless the frequencies are
    /// exactly resonant at or below the truncation order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resonant_terms: Vec<ResonantTerm>,
    /// Normalizing symplectic matrix, row-major.
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    pub resonance_margin: f64,
}

impl NormalForm {
    /// Snapshot with plain-data fields, suitable for JSON output.
    pub fn record(&self) -> NormalFormRecord {
        let m = &self.linearization.matrix;
        NormalFormRecord {
            e0: self.e0,
            order: self.order,
            frequencies: self.frequencies.clone(),
            action_terms: self
                .action_terms
                .iter()
                .map(|(alpha, &c)| (alpha.clone(), c))
                .collect(),
            resonant_terms: self.resonant_terms.clone(),
            m: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
            resonance_margin: self.resonance_margin,
        }
    }
}

/// Recenter a polynomial at `z0`, requiring `z0` to be a critical point.
///
/// Returns the Taylor expansion around `z0` (same truncation degree); the
/// constant term of the result is the value at `z0` and the linear part
/// must vanish to within a small tolerance, otherwise the point is not an
/// equilibrium and the error reports the gradient norm found.
pub fn taylor_shift(h: &TruncatedSeries, z0: &[f64]) -> Result<TruncatedSeries> {
    let shifted = h.shifted(z0)?;
    let linear = shifted.homogeneous_part(1);
    let gradient_norm = linear
        .terms()
        .map(|(_, c)| c * c)
        .sum::<f64>()
        .sqrt();
    if gradient_norm > CRITICAL_TOL {
        return Err(Error::NotCritical { gradient_norm });
    }
    // Drop the residual linear dust so downstream stages see an exact
    // critical point.
    shifted.sub(&linear)
}

/// The block matrix of the standard symplectic form, `[[0, I], [-I, 0]]`.
fn symplectic_form(dof: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * dof, 2 * dof);
    for k in 0..dof {
        j[(k, dof + k)] = 1.0;
        j[(dof + k, k)] = -1.0;
    }
    j
}

/// Indices of the entries that carry the vector's support.
fn support(vector: &DVector<f64>) -> Vec<usize> {
    let peak = vector.amax();
    if peak == 0.0 {
        return Vec::new();
    }
    (0..vector.len())
        .filter(|&j| vector[j].abs() > 1e-8 * peak)
        .collect()
}

/// Normalize a positive-definite-frequency quadratic Hamiltonian.
///
/// The input is the quadratic part `h2(x) = x^T S x / 2` of a Hamiltonian
/// in canonical variables.  When the linearized vector field `J S` has
/// distinct, purely imaginary eigenvalues, the routine builds a real
/// symplectic matrix `M` such that `h2(M x)` is a sum of decoupled
/// oscillators `omega_k (q_k^2 + p_k^2)/2`, with modes ordered by
/// ascending frequency magnitude.  Otherwise it reports why the spectrum
/// is not elliptic.
pub fn linearize_and_normalize(quadratic: &TruncatedSeries) -> Result<LinearNormalization> {
    let n = quadratic.num_vars();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "linear normalization needs an even, positive number of variables, got {n}"
        )));
    }
    let dof = n / 2;
    let s = quadratic_coefficient_matrix(&quadratic.homogeneous_part(2));
    let field = symplectic_form(dof) * &s;

    let eigenvalues = field.complex_eigenvalues();
    let radius = eigenvalues.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let tol = SPECTRUM_TOL * (1.0 + radius);
    for e in eigenvalues.iter() {
        if e.re.abs() > tol {
            return Err(Error::NotElliptic {
                detail: format!(
                    "eigenvalue {:.6e} + {:.6e}i of the linearization has a nonzero real part",
                    e.re, e.im
                ),
            });
        }
        if e.im.abs() <= tol {
            return Err(Error::NotElliptic {
                detail: "the linearization has a zero frequency".to_string(),
            });
        }
    }
    let pairs = eigen::positive_rotation_eigenpairs(&field)?;
    if pairs.len() != dof {
        return Err(Error::NotElliptic {
            detail: format!(
                "expected {dof} oscillatory modes, found {}",
                pairs.len()
            ),
        });
    }
    for window in pairs.windows(2) {
        if window[1].0.im - window[0].0.im <= tol {
            return Err(Error::NotElliptic {
                detail: format!(
                    "repeated frequency {:.12} in the linearized spectrum",
                    window[0].0.im
                ),
            });
        }
    }

    let form = symplectic_form(dof);
    let mut matrix = DMatrix::zeros(n, n);
    let mut frequencies = Vec::with_capacity(dof);
    let mut modes = Vec::with_capacity(dof);
    for (k, (value, vector)) in pairs.iter().enumerate() {
        let mut x: DVector<f64> = vector.map(|c| c.re);
        let mut y: DVector<f64> = vector.map(|c| c.im);

        // Orient the mode plane: the symplectic pairing of the real and
        // imaginary parts must be positive, else swap to the conjugate
        // eigenvector.
        let mut kappa = x.dot(&(&form * &y));
        let conjugated = kappa < 0.0;
        if conjugated {
            y = -y;
            kappa = -kappa;
        }
        if kappa <= 1e-12 {
            return Err(Error::NotElliptic {
                detail: format!("mode {k} has a symplectically degenerate eigenvector"),
            });
        }

        // The eigenvector is defined up to a complex phase; the three steps
        // below pin it deterministically.  First rotate so the sum of
        // squared components is real and nonnegative, which separates the
        // real and imaginary parts as cleanly as the mode allows.
        let principal = C64::new(x.dot(&x) - y.dot(&y), 2.0 * x.dot(&y));
        if principal.norm() > 1e-12 {
            let theta = 0.5 * principal.arg();
            let (sin, cos) = theta.sin_cos();
            let rx = cos * &x + sin * &y;
            let ry = cos * &y - sin * &x;
            x = rx;
            y = ry;
        }
        // When the two parts live on disjoint coordinate blocks, put the
        // block containing the lowest-numbered coordinate into the real
        // part (a quarter turn swaps the parts).
        let sx = support(&x);
        let sy = support(&y);
        if !sx.is_empty() && !sy.is_empty() && sx.iter().all(|j| !sy.contains(j)) && sy[0] < sx[0] {
            let swapped = -&y;
            y = x;
            x = swapped;
        }
        // Finally fix the overall sign by the largest real component.
        let lead = (0..n).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()));
        if let Some(j) = lead {
            if x[j] < 0.0 {
                x = -x;
                y = -y;
            }
        }

        let c = 1.0 / kappa.sqrt();
        let q_col = &x * c;
        let p_col = &y * c;
        let frequency = (&s * &q_col).dot(&q_col);
        if (frequency.abs() - value.im).abs() > 1e-6 * (1.0 + radius) {
            return Err(Error::Invalid(format!(
                "mode {k}: quadratic-form frequency {frequency:.12} disagrees with eigenvalue {:.12}",
                value.im
            )));
        }
        matrix.set_column(k, &q_col);
        matrix.set_column(dof + k, &p_col);
        frequencies.push(frequency);
        modes.push(ModeRecord {
            frequency,
            eigenvalue: (value.re, value.im),
            conjugated,
        });
    }

    let residual = (matrix.transpose() * &form * &matrix - &form).amax();
    if residual > SYMPLECTIC_TOL {
        return Err(Error::Invalid(format!(
            "normalizing matrix failed the symplectic check with residual {residual:.3e}"
        )));
    }
    Ok(LinearNormalization {
        matrix,
        frequencies,
        modes,
    })
}

/// Outcome of splitting one homogeneous slice against the oscillator.
struct HomologicalSplit {
    /// Terms divided by their eigenvalue: the Lie generator for the slice.
    generator: ComplexSeries,
    /// Terms the transform cannot remove, `alpha == beta` and any
    /// resonance-protected ones.
    kernel: ComplexSeries,
    /// Non-negligible terms whose denominator fell below the tolerance.
    resonant: Vec<ResonantTerm>,
}

/// `<omega, alpha - beta>`: the homological eigenvalue of `z^a zbar^b`
/// divided by `i`.
fn frequency_pairing(frequencies: &[f64], alpha: &[u8], beta: &[u8]) -> f64 {
    frequencies
        .iter()
        .zip(alpha.iter().zip(beta))
        .map(|(w, (&a, &b))| w * (f64::from(a) - f64::from(b)))
        .sum()
}

/// Divide a slice by the homological operator wherever that is safe.
///
/// Terms with `alpha == beta` go to the kernel.  Terms whose denominator
/// `<omega, alpha - beta>` is at least `resonance_tol` in magnitude are
/// divided into the generator.  The remaining terms sit on an exact (or
/// numerically exact) resonance and cannot be divided: they are kept in
/// the kernel, and the ones with a non-negligible coefficient are listed
/// in `resonant` so callers can decide whether that is acceptable.
fn homological_split(
    hn: &ComplexSeries,
    frequencies: &[f64],
    resonance_tol: f64,
) -> Result<HomologicalSplit> {
    let n = hn.num_vars();
    if !n.is_multiple_of(2) || frequencies.len() != n / 2 {
        return Err(Error::DimensionMismatch {
            context: "homological frequencies",
            expected: n / 2,
            got: frequencies.len(),
        });
    }
    let dof = n / 2;
    let negligible = 1e-10 * (1.0 + hn.max_abs_coeff());
    let mut generator_terms = Vec::new();
    let mut kernel_terms = Vec::new();
    let mut resonant = Vec::new();
    for (index, coeff) in hn.terms() {
        let exps = index.exponents();
        let (alpha, beta) = exps.split_at(dof);
        if alpha == beta {
            kernel_terms.push((exps.to_vec(), coeff));
            continue;
        }
        let pairing = frequency_pairing(frequencies, alpha, beta);
        if pairing.abs() < resonance_tol {
            if coeff.norm() > negligible {
                resonant.push(ResonantTerm {
                    exponents: exps.to_vec(),
                    coefficient: (coeff.re, coeff.im),
                    denominator: pairing,
                });
            }
            kernel_terms.push((exps.to_vec(), coeff));
            continue;
        }
        generator_terms.push((exps.to_vec(), coeff / C64::new(0.0, pairing)));
    }
    Ok(HomologicalSplit {
        generator: ComplexSeries::from_terms(n, hn.max_degree(), generator_terms)?,
        kernel: ComplexSeries::from_terms(n, hn.max_degree(), kernel_terms)?,
        resonant,
    })
}

/// Split a polynomial into a Lie generator and the kernel remainder.
///
/// Interprets the input (typically one homogeneous slice of the
/// Hamiltonian) in complex coordinates where the oscillator part acts on a
/// monomial `z^alpha zbar^beta` with eigenvalue `i <omega, alpha - beta>`.
/// Terms with `alpha == beta` cannot be removed and form the kernel; every
/// other term is divided by its eigenvalue to produce the generator.
/// A denominator smaller than `resonance_tol` under a non-negligible
/// coefficient aborts with the offending integer combination.
pub fn homological_solve(
    hn: &ComplexSeries,
    frequencies: &[f64],
    resonance_tol: f64,
) -> Result<(ComplexSeries, ComplexSeries)> {
    let split = homological_split(hn, frequencies, resonance_tol)?;
    if let Some(worst) = split
        .resonant
        .iter()
        .max_by(|a, b| {
            let na = C64::new(a.coefficient.0, a.coefficient.1).norm();
            let nb = C64::new(b.coefficient.0, b.coefficient.1).norm();
            na.total_cmp(&nb)
        })
    {
        let dof = hn.num_vars() / 2;
        let (alpha, beta) = worst.exponents.split_at(dof);
        return Err(Error::Resonance {
            combination: alpha
                .iter()
                .zip(beta)
                .map(|(&a, &b)| i64::from(a) - i64::from(b))
                .collect(),
            denominator: worst.denominator,
        });
    }
    Ok((split.generator, split.kernel))
}

/// One Lie-transform stage: push a Hamiltonian through the time-one flow
/// of a generating polynomial, keeping terms up to `order`.
///
/// Computes `sum_k ad_W^k H / k!` with `ad_W H = {W, H}`, which transforms
/// `H` by the inverse time-one flow of `W`.  The generator must start at
/// degree three so that each bracket raises the minimum degree and the sum
/// terminates.  Degrees below the generator's are returned unchanged.
pub fn lie_transform_step(
    h: &TruncatedSeries,
    generator: &TruncatedSeries,
    order: usize,
) -> Result<TruncatedSeries> {
    let base = h.truncated(order);
    if generator.is_zero() {
        return Ok(base);
    }
    if generator.min_degree().unwrap_or(0) < 3 {
        return Err(Error::Invalid(
            "Lie generator must have minimum degree three".to_string(),
        ));
    }
    // The jet is only exact to `order`, but widening both operands by one
    // degree before bracketing is safe: any phantom degree-(order+1)
    // content meets the generator's degree >= 3 part at degree
    // (order+1) + 3 - 2 > order, beyond what the result keeps.
    let wide_generator = generator.with_degree_bound(order + 1);
    let mut accumulated = base.clone();
    let mut term = base;
    let mut factorial = 1.0;
    for k in 1..=order {
        let next = wide_generator.poisson_bracket(&term.with_degree_bound(order + 1))?;
        if next.is_zero() {
            break;
        }
        factorial *= k as f64;
        term = next;
        accumulated = accumulated.add(&term.scale(1.0 / factorial))?;
    }
    Ok(accumulated)
}

/// Complex-coordinate twin of [`lie_transform_step`], used internally by
/// the degree-by-degree normalization.
fn lie_transform_complex(
    h: &ComplexSeries,
    generator: &ComplexSeries,
    order: usize,
) -> Result<ComplexSeries> {
    if generator.is_zero() {
        return Ok(h.clone());
    }
    if generator.min_degree().unwrap_or(0) < 3 {
        return Err(Error::Invalid(
            "Lie generator must have minimum degree three".to_string(),
        ));
    }
    // Same degree-bound bookkeeping as the real version.
    let wide_generator = generator.with_degree_bound(order + 1);
    let mut accumulated = h.clone();
    let mut term = h.clone();
    let mut factorial = 1.0;
    for k in 1..=order {
        let next = wide_generator.poisson_bracket(&term.with_degree_bound(order + 1))?;
        if next.is_zero() {
            break;
        }
        factorial *= k as f64;
        term = next;
        accumulated = accumulated.add(&term.scale(C64::new(1.0 / factorial, 0.0)))?;
    }
    Ok(accumulated)
}

/// Smallest `|<m, frequencies>|` over nonzero integer vectors with
/// `|m|_1 <= order`: how far the frequencies sit from a resonance of
/// order up to `order`.
pub fn nonresonance_margin(frequencies: &[f64], order: usize) -> f64 {
    fn scan(frequencies: &[f64], budget: i64, partial: f64, nonzero: bool, best: &mut f64) {
        match frequencies.split_first() {
            None => {
                if nonzero {
                    *best = best.min(partial.abs());
                }
            }
            Some((w, rest)) => {
                for m in -budget..=budget {
                    scan(
                        rest,
                        budget - m.abs(),
                        partial + m as f64 * w,
                        nonzero || m != 0,
                        best,
                    );
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    scan(frequencies, order as i64, 0.0, false, &mut best);
    best
}

/// Compute the Birkhoff normal form of a Hamiltonian jet at an elliptic
/// critical point.
///
/// `h` is a polynomial in `2f` canonical variables carrying at least the
/// requested (even) `order`; `z0` is the equilibrium.  The returned data
/// holds the action-polynomial coefficients through degree `order`, the
/// linear normalization, the Lie generators, and the resonance margin of
/// the frequencies.  `resonance_tol` bounds the smallest homological
/// denominator accepted for division; terms below it sit on an exact
/// resonance, stay in the Hamiltonian (where they commute with the
/// quadratic part to the accuracy of the resonance), and are reported in
/// `resonant_terms` rather than silently divided by a vanishing number.
pub fn normal_form(
    h: &TruncatedSeries,
    z0: &[f64],
    order: usize,
    resonance_tol: f64,
) -> Result<NormalForm> {
    if order < 2 || !order.is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "normal-form order must be even and at least two, got {order}"
        )));
    }
    let n = h.num_vars();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "normal form needs an even, positive number of variables, got {n}"
        )));
    }
    if h.max_degree() < order {
        return Err(Error::Invalid(format!(
            "series is truncated at degree {} but order {order} was requested",
            h.max_degree()
        )));
    }
    let dof = n / 2;

    let shifted = taylor_shift(h, z0)?;
    let e0 = shifted.coefficient(&vec![0u8; n]);
    let linearization = linearize_and_normalize(&shifted.homogeneous_part(2))?;
    let aligned = shifted
        .substitute_linear(&linearization.matrix)?
        .truncated(order);
    let mut current = ComplexSeries::from_real(&aligned)?;
    let mut generators = Vec::with_capacity(order.saturating_sub(2));
    for degree in 3..=order {
        let slice = current.homogeneous_part(degree);
        let split = homological_split(&slice, &linearization.frequencies, resonance_tol)?;
        if split.generator.is_zero() {
            generators.push(TruncatedSeries::zero(n, order));
            continue;
        }
        current = lie_transform_complex(&current, &split.generator, order)?.hermitianized()?;
        let imag_tol = 1e-10 * (1.0 + split.generator.max_abs_coeff());
        generators.push(split.generator.to_real(imag_tol)?);
    }

    // Everything left must be a polynomial in the actions
    // z_k zbar_k = (q_k^2 + p_k^2)/2, except for terms protected by an
    // exact resonance of the frequencies, which are kept and reported.
    let dust_tol = 1e-9 * (1.0 + current.max_abs_coeff());
    let mut action_terms = BTreeMap::new();
    let mut resonant_terms = Vec::new();
    for (index, coeff) in current.terms() {
        let exps = index.exponents();
        let (alpha, beta) = exps.split_at(dof);
        if exps.iter().all(|&e| e == 0) {
            continue;
        }
        if alpha == beta {
            action_terms.insert(alpha.to_vec(), coeff.re);
            continue;
        }
        if coeff.norm() <= dust_tol {
            continue;
        }
        let pairing = frequency_pairing(&linearization.frequencies, alpha, beta);
        if pairing.abs() < resonance_tol {
            resonant_terms.push(ResonantTerm {
                exponents: exps.to_vec(),
                coefficient: (coeff.re, coeff.im),
                denominator: pairing,
            });
        } else {
            return Err(Error::Invalid(format!(
                "normalization left a non-action term of size {:.3e}",
                coeff.norm()
            )));
        }
    }

    let resonance_margin = nonresonance_margin(&linearization.frequencies, order);
    Ok(NormalForm {
        e0,
        order,
        frequencies: linearization.frequencies.clone(),
        action_terms,
        resonant_terms,
        generators,
        linearization,
        resonance_margin,
    })
}
