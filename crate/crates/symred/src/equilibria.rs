//! Relative equilibria of reduced simple mechanical systems.
//!
//! A relative equilibrium is a phase point where the reduced Hamiltonian
//! is critical. For the charts used here this splits into three
//! conditions: the shape momenta match the connection pairing
//! `p = A^T J`, the body momentum is an eigenvector of the locked
//! inertia (`J x I^{-1} J = 0`, trivial for `S^1`), and the shape is a
//! critical point of the amended potential
//! `V_eff = 1/2 J . I(q)^{-1} J + V(q)`.
//!
//! Two solve modes cover the systems in this crate:
//!
//! * [`EquilibriumProblem::FixedShape`]: the shape is prescribed (for the
//!   three-body problem, an equilateral triangle) and the momentum
//!   magnitude is solved from radial stationarity in closed form, then
//!   verified against the remaining gradient components.
//! * [`EquilibriumProblem::FixedMomentum`]: the scalar momentum is
//!   prescribed and the shape is found by a damped Newton iteration on
//!   the amended-potential gradient, with jet-derived exact Hessians.

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::lie::{deprit_chart, so3_coadjoint_rate};
use crate::mech::{widen_ring, MechanicalSystem, ReducedChart, ReducedGeometry, SymmetryGroup};
use crate::series::TruncatedSeries;

/// Convergence threshold on the Newton step norm.
const STEP_TOL: f64 = 1e-12;
/// Residual bound certifying a critical point of the amended potential.
const RESIDUAL_TOL: f64 = 1e-10;
/// Maximum Newton iterations before giving up.
const MAX_ITERATIONS: usize = 100;
/// Relative bound on real parts below which a spectrum counts as elliptic.
const ELLIPTIC_TOL: f64 = 1e-8;

/// What is held fixed and what is solved for.
#[derive(Clone, Debug)]
pub enum EquilibriumProblem {
    /// Prescribed shape; the momentum magnitude (body momentum along the
    /// third axis) is solved from radial stationarity of the amended
    /// potential. Requires the `SO(3)` group.
    FixedShape { shape: Vec<f64> },
    /// Prescribed scalar momentum; the shape is solved by Newton
    /// iteration from `guess`. Requires the `S^1` group.
    FixedMomentum { momentum: f64, guess: Vec<f64> },
}

/// Separate residuals of the three relative-equilibrium conditions.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualReport {
    /// `|p - A^T J|`: shape momenta against the connection pairing.
    pub momentum_match: f64,
    /// `|J x I^{-1} J|`: body momentum against the locked-inertia
    /// eigenvector condition (zero for abelian groups).
    pub coadjoint: f64,
    /// `|grad V_eff|`: criticality of the amended potential.
    pub shape_gradient: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.momentum_match
            .max(self.coadjoint)
            .max(self.shape_gradient)
    }
}

/// A converged relative equilibrium in the reduced chart.
#[derive(Clone, Debug, Serialize)]
pub struct RelativeEquilibrium {
    /// Full chart point: positions then momenta (`2 * dof` values). For
    /// zero momentum the degenerate sphere pair is dropped and the point
    /// lists the shape variables and momenta only.
    pub point: Vec<f64>,
    /// Momentum magnitude: sphere radius for `SO(3)`, conserved scalar
    /// for `S^1`.
    pub momentum: f64,
    /// Reduced Hamiltonian value at the equilibrium.
    pub energy: f64,
    /// Linearized mode frequencies, sorted ascending.
    pub frequencies: Vec<f64>,
    /// Whether the linearized spectrum is purely imaginary within
    /// tolerance.
    pub elliptic: bool,
    pub residuals: ResidualReport,
}

/// The amended potential `V_eff` as a jet around the shape point `q`,
/// exact to `degree`. The momentum is taken along the third body axis
/// for `SO(3)` (`J = (0, 0, momentum)`) and as the conserved scalar for
/// `S^1`; for the trivial group this is the plain potential.
pub fn amended_potential(
    system: &MechanicalSystem,
    momentum: f64,
    q: &[f64],
    degree: usize,
) -> Result<TruncatedSeries> {
    let geometry = system.reduced_geometry(q, degree)?;
    let rotor = match system.group() {
        SymmetryGroup::So3 => geometry.inertia_inv.entry(2, 2).clone(),
        SymmetryGroup::S1 => geometry.inertia_inv.entry(0, 0).clone(),
        SymmetryGroup::Trivial => TruncatedSeries::zero(system.shape_dim(), degree),
    };
    rotor
        .scale(0.5 * momentum * momentum)
        .add(&geometry.potential)
}

/// Evaluate the three equilibrium-condition residuals at a chart point.
pub fn check_equilibrium_conditions(
    system: &MechanicalSystem,
    chart: &ReducedChart,
    point: &[f64],
) -> Result<ResidualReport> {
    let fs = system.shape_dim();
    let dof = system.dof();
    if point.len() != 2 * dof {
        return Err(Error::DimensionMismatch {
            context: "chart point",
            expected: 2 * dof,
            got: point.len(),
        });
    }
    let q = &point[..fs];
    let momenta = &point[dof..dof + fs];
    let geometry = system.reduced_geometry(q, 1)?;

    let (body_momentum, coadjoint) = match (system.group(), chart) {
        (SymmetryGroup::So3, ReducedChart::MomentumSphere { radius }) => {
            let j = if *radius == 0.0 {
                Vector3::zeros()
            } else {
                deprit_chart(point[fs], point[2 * dof - 1], *radius)?
            };
            let inertia_inv = geometry.inertia_inv.evaluate(q)?;
            let velocity = Vector3::from_iterator((0..3).map(|a| {
                (0..3).map(|b| inertia_inv[(a, b)] * j[b]).sum::<f64>()
            }));
            let coadjoint = so3_coadjoint_rate(&velocity, &j).norm();
            (j.as_slice().to_vec(), coadjoint)
        }
        (SymmetryGroup::S1, ReducedChart::FiberParameter { momentum }) => {
            (vec![*momentum], 0.0)
        }
        (SymmetryGroup::Trivial, ReducedChart::Canonical) => (Vec::new(), 0.0),
        _ => {
            return Err(Error::Invalid(
                "chart does not match the system's symmetry group".to_string(),
            ))
        }
    };

    let connection = geometry.connection.evaluate(q)?;
    let momentum_match = (0..fs)
        .map(|alpha| {
            let paired: f64 = body_momentum
                .iter()
                .enumerate()
                .map(|(a, j)| connection[(alpha, a)] * j)
                .sum();
            (momenta[alpha] - paired).powi(2)
        })
        .sum::<f64>()
        .sqrt();

    let shape_gradient = amended_gradient_norm(&geometry, &body_momentum, fs)?;

    Ok(ResidualReport {
        momentum_match,
        coadjoint,
        shape_gradient,
    })
}

/// Norm of the amended-potential gradient with the body momentum held
/// constant, from degree-1 geometry jets.
fn amended_gradient_norm(
    geometry: &ReducedGeometry,
    body_momentum: &[f64],
    fs: usize,
) -> Result<f64> {
    let gd = body_momentum.len();
    let mut veff = geometry.potential.clone();
    for a in 0..gd {
        for b in 0..gd {
            let weight = 0.5 * body_momentum[a] * body_momentum[b];
            if weight != 0.0 {
                veff = veff.add(&geometry.inertia_inv.entry(a, b).scale(weight))?;
            }
        }
    }
    let grad = veff.gradient(&vec![0.0; fs])?;
    Ok(grad.iter().map(|g| g * g).sum::<f64>().sqrt())
}

/// Locate a relative equilibrium.
pub fn solve_effective_potential(
    system: &MechanicalSystem,
    problem: &EquilibriumProblem,
) -> Result<RelativeEquilibrium> {
    match problem {
        EquilibriumProblem::FixedShape { shape } => solve_fixed_shape(system, shape),
        EquilibriumProblem::FixedMomentum { momentum, guess } => {
            solve_fixed_momentum(system, *momentum, guess)
        }
    }
}

fn solve_fixed_shape(system: &MechanicalSystem, shape: &[f64]) -> Result<RelativeEquilibrium> {
    if system.group() != SymmetryGroup::So3 {
        return Err(Error::Invalid(
            "fixed-shape solve needs the rotation group".to_string(),
        ));
    }
    let fs = system.shape_dim();
    if shape.len() != fs {
        return Err(Error::DimensionMismatch {
            context: "shape point",
            expected: fs,
            got: shape.len(),
        });
    }

    // Stationarity of V_eff = 1/2 r^2 (I^{-1})_33 + V in every shape
    // direction: 1/2 r^2 k + g = 0 with k = grad (I^{-1})_33, g = grad V.
    // Solve for r^2 in least squares; the residual check below rejects
    // shapes where the remaining components do not vanish.
    let origin = vec![0.0; fs];
    let geometry = system.reduced_geometry(shape, 1)?;
    let g = geometry.potential.gradient(&origin)?;
    let k = geometry.inertia_inv.entry(2, 2).gradient(&origin)?;
    let k_sq: f64 = k.iter().map(|x| x * x).sum();
    if k_sq == 0.0 {
        return Err(Error::NoEquilibrium {
            detail: "inertia does not vary along the shape family".to_string(),
        });
    }
    let dot: f64 = g.iter().zip(&k).map(|(a, b)| a * b).sum();
    let mut r_sq = -2.0 * dot / k_sq;
    let scale: f64 = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if r_sq < 0.0 {
        if r_sq > -1e-9 * (1.0 + scale) {
            r_sq = 0.0;
        } else {
            return Err(Error::NoEquilibrium {
                detail: format!(
                    "radial stationarity needs negative squared momentum (r^2 = {r_sq:.6e})"
                ),
            });
        }
    }
    let radius = r_sq.sqrt();

    if radius == 0.0 {
        return zero_momentum_equilibrium(system, shape, &g);
    }

    let chart = ReducedChart::MomentumSphere { radius };
    let connection = geometry.connection.evaluate(&origin)?;
    let dof = system.dof();
    let mut point = vec![0.0; 2 * dof];
    point[..fs].copy_from_slice(shape);
    for alpha in 0..fs {
        // J = (0, 0, r) in the body frame.
        point[dof + alpha] = connection[(alpha, 2)] * radius;
    }

    let residuals = check_equilibrium_conditions(system, &chart, &point)?;
    if residuals.max() > RESIDUAL_TOL {
        return Err(Error::NoEquilibrium {
            detail: format!(
                "prescribed shape is not critical: residual {:.3e}",
                residuals.max()
            ),
        });
    }

    let h = system.reduced_hamiltonian(&chart, &point, 2)?;
    let (frequencies, elliptic) = linear_frequencies(&h, dof)?;
    Ok(RelativeEquilibrium {
        point,
        momentum: radius,
        energy: h.constant_term(),
        frequencies,
        elliptic,
        residuals,
    })
}

/// Equilibrium at zero momentum: a critical point of the bare potential.
/// The momentum sphere degenerates, so the record carries the shape-only
/// canonical chart and its oscillation frequencies.
fn zero_momentum_equilibrium(
    system: &MechanicalSystem,
    shape: &[f64],
    potential_gradient: &[f64],
) -> Result<RelativeEquilibrium> {
    let fs = system.shape_dim();
    let residual: f64 = potential_gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    if residual > RESIDUAL_TOL {
        return Err(Error::NoEquilibrium {
            detail: format!("potential gradient {residual:.3e} at zero momentum"),
        });
    }
    let geometry = system.reduced_geometry(shape, 2)?;
    let nv = 2 * fs;
    let mut h = widen_ring(&geometry.potential, nv)?;
    for alpha in 0..fs {
        for beta in 0..fs {
            let p_a = TruncatedSeries::variable(nv, 2, fs + alpha)?;
            let p_b = TruncatedSeries::variable(nv, 2, fs + beta)?;
            let inv = widen_ring(geometry.horizontal_metric_inv.entry(alpha, beta), nv)?;
            h = h.add(&inv.mul(&p_a)?.mul(&p_b)?.scale(0.5))?;
        }
    }
    let (frequencies, elliptic) = linear_frequencies(&h, fs)?;
    let mut point = shape.to_vec();
    point.extend(std::iter::repeat_n(0.0, fs));
    Ok(RelativeEquilibrium {
        point,
        momentum: 0.0,
        energy: geometry.potential.constant_term(),
        frequencies,
        elliptic,
        residuals: ResidualReport {
            momentum_match: 0.0,
            coadjoint: 0.0,
            shape_gradient: residual,
        },
    })
}

fn solve_fixed_momentum(
    system: &MechanicalSystem,
    momentum: f64,
    guess: &[f64],
) -> Result<RelativeEquilibrium> {
    if system.group() != SymmetryGroup::S1 {
        return Err(Error::Invalid(
            "fixed-momentum solve needs the circle group".to_string(),
        ));
    }
    let fs = system.shape_dim();
    if guess.len() != fs {
        return Err(Error::DimensionMismatch {
            context: "shape guess",
            expected: fs,
            got: guess.len(),
        });
    }

    let gradient_at = |q: &[f64]| -> Result<Vec<f64>> {
        amended_potential(system, momentum, q, 1)?.gradient(&vec![0.0; fs])
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut q = guess.to_vec();
    let mut residual = norm(&gradient_at(&q)?);
    for iteration in 0..MAX_ITERATIONS {
        let jet = amended_potential(system, momentum, &q, 2)?;
        let grad = DVector::from_vec(jet.gradient(&vec![0.0; fs])?);
        let hessian = quadratic_coefficient_matrix(&jet);
        let step = hessian
            .lu()
            .solve(&grad.scale(-1.0))
            .ok_or(Error::NonConvergence {
                iterations: iteration,
                residual,
            })?;

        // Backtracking: shrink the step until the gradient norm improves;
        // inadmissible trial shapes count as no improvement.
        let mut lambda = 1.0;
        let (next_q, next_residual) = loop {
            let trial: Vec<f64> = q
                .iter()
                .zip(step.iter())
                .map(|(x, s)| x + lambda * s)
                .collect();
            match gradient_at(&trial) {
                Ok(g) => {
                    let r = norm(&g);
                    if r < residual || residual < STEP_TOL {
                        break (trial, r);
                    }
                }
                Err(Error::ShapeOutOfRange { .. }) | Err(Error::Domain { .. }) => {}
                Err(e) => return Err(e),
            }
            lambda *= 0.5;
            if lambda < 1e-8 {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    residual,
                });
            }
        };
        let step_norm = lambda * step.norm();
        q = next_q;
        residual = next_residual;
        if step_norm < STEP_TOL {
            break;
        }
    }
    if residual > RESIDUAL_TOL {
        return Err(Error::NonConvergence {
            iterations: MAX_ITERATIONS,
            residual,
        });
    }

    let chart = ReducedChart::FiberParameter { momentum };
    let geometry = system.reduced_geometry(&q, 1)?;
    let connection = geometry.connection.evaluate(&vec![0.0; fs])?;
    let mut point = vec![0.0; 2 * fs];
    point[..fs].copy_from_slice(&q);
    for alpha in 0..fs {
        point[fs + alpha] = connection[(alpha, 0)] * momentum;
    }

    let h = system.reduced_hamiltonian(&chart, &point, 2)?;
    let (frequencies, elliptic) = linear_frequencies(&h, fs)?;
    let residuals = check_equilibrium_conditions(system, &chart, &point)?;
    Ok(RelativeEquilibrium {
        point,
        momentum,
        energy: h.constant_term(),
        frequencies,
        elliptic,
        residuals,
    })
}

/// Symmetric coefficient matrix `S` of the quadratic part of a jet
/// (`S_ij = d^2 h / dx_i dx_j`).
pub(crate) fn quadratic_coefficient_matrix(jet: &TruncatedSeries) -> DMatrix<f64> {
    let n = jet.num_vars();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut exps = vec![0u8; n];
            exps[i] += 1;
            exps[j] += 1;
            let c = jet.coefficient(&exps);
            if i == j {
                s[(i, i)] = 2.0 * c;
            } else {
                s[(i, j)] = c;
                s[(j, i)] = c;
            }
        }
    }
    s
}

/// Mode frequencies of a linearized Hamiltonian: the positive imaginary
/// parts of the spectrum of `J grad^2 h`, sorted ascending, with an
/// ellipticity flag (all real parts negligible).
fn linear_frequencies(jet: &TruncatedSeries, dof: usize) -> Result<(Vec<f64>, bool)> {
    let n = 2 * dof;
    if jet.num_vars() != n {
        return Err(Error::DimensionMismatch {
            context: "linearization chart",
            expected: n,
            got: jet.num_vars(),
        });
    }
    let s = quadratic_coefficient_matrix(jet);
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..dof {
            a[(k, j)] = s[(dof + k, j)];
            a[(dof + k, j)] = -s[(k, j)];
        }
    }
    let eigenvalues = a.complex_eigenvalues();
    let magnitude = eigenvalues.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let elliptic = eigenvalues
        .iter()
        .all(|e| e.re.abs() <= ELLIPTIC_TOL * (1.0 + magnitude));
    let mut imag: Vec<f64> = eigenvalues.iter().map(|e| e.im.abs()).collect();
    imag.sort_by(|a, b| a.total_cmp(b));
    // The spectrum comes in +/- i omega pairs; average each pair.
    let frequencies = (0..dof)
        .map(|k| 0.5 * (imag[2 * k] + imag[2 * k + 1]))
        .collect();
    Ok((frequencies, elliptic))
}

// ----- parameter sweeps -----------------------------------------------------

/// One row of an equilibrium sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub momentum: f64,
    pub energy: f64,
    /// Ascending frequencies, padded to the full mode count (leading
    /// zeros for degenerate zero-momentum points, `NaN` on failure).
    pub frequencies: Vec<f64>,
    pub converged: bool,
}

fn row_from_solve(
    system: &MechanicalSystem,
    parameter: f64,
    outcome: Result<RelativeEquilibrium>,
) -> SweepRow {
    let dof = system.dof();
    match outcome {
        Ok(eq) => {
            let mut frequencies = eq.frequencies.clone();
            while frequencies.len() < dof {
                frequencies.insert(0, 0.0);
            }
            SweepRow {
                parameter,
                momentum: eq.momentum,
                energy: eq.energy,
                frequencies,
                converged: true,
            }
        }
        Err(_) => SweepRow {
            parameter,
            momentum: f64::NAN,
            energy: f64::NAN,
            frequencies: vec![f64::NAN; dof],
            converged: false,
        },
    }
}

/// Solve one equilibrium per parameter value, in parallel. Failed points
/// are recorded with `converged = false`, never dropped.
pub fn sweep_equilibria<F>(
    system: &MechanicalSystem,
    parameters: &[f64],
    problem_at: F,
) -> Vec<SweepRow>
where
    F: Fn(f64) -> Result<EquilibriumProblem> + Sync,
{
    parameters
        .par_iter()
        .map(|&parameter| {
            let outcome =
                problem_at(parameter).and_then(|p| solve_effective_potential(system, &p));
            row_from_solve(system, parameter, outcome)
        })
        .collect()
}

/// Sequential sweep where each solve is seeded with the previously
/// converged shape (parameter continuation along a branch).
pub fn sweep_with_continuation<F>(
    system: &MechanicalSystem,
    parameters: &[f64],
    initial_guess: &[f64],
    problem_at: F,
) -> Vec<SweepRow>
where
    F: Fn(f64, &[f64]) -> EquilibriumProblem,
{
    let fs = system.shape_dim();
    let mut guess = initial_guess.to_vec();
    parameters
        .iter()
        .map(|&parameter| {
            let outcome =
                solve_effective_potential(system, &problem_at(parameter, &guess));
            if let Ok(eq) = &outcome {
                guess = eq.point[..fs].to_vec();
            }
            row_from_solve(system, parameter, outcome)
        })
        .collect()
}

/// Write sweep rows as CSV with header
/// `param,r,energy,omega_1..omega_f,converged`.
pub fn write_sweep_csv<W: Write>(writer: &mut W, rows: &[SweepRow]) -> Result<()> {
    let modes = rows.first().map_or(0, |row| row.frequencies.len());
    write!(writer, "param,r,energy")?;
    for k in 1..=modes {
        write!(writer, ",omega_{k}")?;
    }
    writeln!(writer, ",converged")?;
    for row in rows {
        write!(
            writer,
            "{:.10},{:.10},{:.10}",
            row.parameter, row.momentum, row.energy
        )?;
        for omega in &row.frequencies {
            write!(writer, ",{omega:.10}")?;
        }
        writeln!(writer, ",{}", row.converged)?;
    }
    Ok(())
}
