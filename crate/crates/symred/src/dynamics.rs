//! Reduced equations of motion, trajectory integration, and SO(3)
//! reconstruction.
//!
//! The reduced Hamiltonian lives on a canonical chart, so the equations of
//! motion are Hamilton's equations of `h_r`; the Deprit chart already
//! encodes the Lie--Poisson structure of the momentum sphere.  The public
//! vector field builds a local jet of `h_r` at the requested state and
//! reads the gradient off its linear part.  The integrator cannot afford a
//! fresh jet per Runge--Kutta stage, so it caches one polynomial expansion
//! of the reduced geometry (inverse inertia, connection, inverse
//! horizontal metric, potential) around the current shape and re-expands
//! whenever the trajectory leaves a trust region; the cached field is the
//! exact Hamiltonian field of the cached `h`, so conservation diagnostics
//! stay meaningful.
//!
//! Reconstruction integrates `g' = g Xi` with `xi = I^{-1} J - A q'`,
//! projecting each Runge--Kutta step back onto the rotation group through
//! the polar decomposition.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::lie::deprit_chart;
use crate::mech::{MechanicalSystem, ReducedChart, SymmetryGroup};
use crate::series::TruncatedSeries;

/// Polynomial degree of the cached geometry expansion used on
/// trajectories.
const TABLE_DEGREE: usize = 8;
/// Trust radius (inf-norm shape displacement) of a cached expansion: the
/// truncation error of the degree-8 table stays below 1e-12 inside it for
/// geometry whose scale of variation is order one.
const TABLE_RADIUS: f64 = 0.02;
/// Orthogonality residual accepted when validating a rotation matrix.
const ROTATION_TOL: f64 = 1e-8;

/// One recorded point of a reduced trajectory.
#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub time: f64,
    /// Chart state: shape coordinates, sphere angle `u` (SO(3) only),
    /// conjugate momenta, sphere momentum `v` last.
    pub state: Vec<f64>,
    /// Value of the reduced Hamiltonian at the state.
    pub energy: f64,
}

/// A fixed-step reduced trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Momentum chart the states live on.
    pub chart: ReducedChart,
    /// Number of shape coordinates at the front of each state.
    pub shape_dim: usize,
    pub samples: Vec<TrajectorySample>,
    /// True when integration stopped early at a chart singularity or an
    /// inadmissible shape; `samples` then holds the part before the stop.
    pub truncated: bool,
}

/// A rotation matrix with its group membership enforced.
#[derive(Clone, Debug)]
pub struct Rotation {
    matrix: Matrix3<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            matrix: Matrix3::identity(),
        }
    }

    /// Accept a matrix that is already a rotation to tight tolerance.
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        let residual = (matrix.transpose() * matrix - Matrix3::identity()).amax();
        if residual > ROTATION_TOL || matrix.determinant() < 0.0 {
            return Err(Error::Invalid(format!(
                "matrix is not a rotation: orthogonality residual {residual:.3e}, \
                 determinant {:.6}",
                matrix.determinant()
            )));
        }
        Ok(Rotation { matrix })
    }

    /// Project a nearby matrix onto the rotation group (polar
    /// decomposition via the SVD, determinant fixed to +1).
    pub fn project(matrix: &Matrix3<f64>) -> Result<Self> {
        let svd = matrix.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => {
                return Err(Error::Invalid(
                    "rotation projection failed: SVD did not converge".to_string(),
                ))
            }
        };
        let mut u = u;
        if (u * v_t).determinant() < 0.0 {
            let smallest = (0..3)
                .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
                .unwrap();
            for row in 0..3 {
                u[(row, smallest)] = -u[(row, smallest)];
            }
        }
        let projected = u * v_t;
        if !projected.iter().all(|x| x.is_finite()) {
            return Err(Error::Invalid(
                "rotation projection produced a non-finite matrix".to_string(),
            ));
        }
        Ok(Rotation { matrix: projected })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// `max |g^T g - Id|`: how far the stored matrix is from orthogonal.
    pub fn orthogonality_residual(&self) -> f64 {
        (self.matrix.transpose() * self.matrix - Matrix3::identity()).amax()
    }
}

/// Hamiltonian vector field of the reduced system at one state, computed
/// from a local degree-2 jet of the reduced Hamiltonian: the returned
/// derivative is `J grad h_r` in the chart ordering (positions first,
/// momenta second).
pub fn reduced_vector_field(
    system: &MechanicalSystem,
    chart: &ReducedChart,
    state: &[f64],
) -> Result<Vec<f64>> {
    let dof = system.dof();
    let n = 2 * dof;
    let jet = system.reduced_hamiltonian(chart, state, 2)?;
    let mut field = vec![0.0; n];
    for k in 0..dof {
        let mut unit = vec![0u8; n];
        unit[k] = 1;
        let dq = jet.coefficient(&unit);
        unit[k] = 0;
        unit[dof + k] = 1;
        let dp = jet.coefficient(&unit);
        field[k] = dp;
        field[dof + k] = -dq;
    }
    Ok(field)
}

/// Group momentum at a chart state: the body momentum vector `J` for the
/// momentum sphere, the conserved scalar for a circle fiber, empty for a
/// trivial group.
pub fn chart_momentum(
    system: &MechanicalSystem,
    chart: &ReducedChart,
    state: &[f64],
) -> Result<Vec<f64>> {
    let dof = system.dof();
    if state.len() != 2 * dof {
        return Err(Error::DimensionMismatch {
            context: "chart state",
            expected: 2 * dof,
            got: state.len(),
        });
    }
    match *chart {
        ReducedChart::MomentumSphere { radius } => {
            let fs = system.shape_dim();
            let j = deprit_chart(state[fs], state[2 * dof - 1], radius)?;
            Ok(vec![j[0], j[1], j[2]])
        }
        ReducedChart::FiberParameter { momentum } => Ok(vec![momentum]),
        ReducedChart::Canonical => Ok(Vec::new()),
    }
}

/// Locked-frame velocity `xi = I^{-1} J - A q'` at a chart state, with
/// `q' = d^{-1}(p - A^T J)`: the group velocity that reconstruction
/// integrates.  For SO(3) this is the body angular velocity.
pub fn body_velocity(
    system: &MechanicalSystem,
    chart: &ReducedChart,
    state: &[f64],
) -> Result<Vec<f64>> {
    let fs = system.shape_dim();
    let dof = system.dof();
    if state.len() != 2 * dof {
        return Err(Error::DimensionMismatch {
            context: "chart state",
            expected: 2 * dof,
            got: state.len(),
        });
    }
    let momentum = chart_momentum(system, chart, state)?;
    let geometry = system.reduced_geometry(&state[..fs], 0)?;
    let inertia_inv = geometry.inertia_inv.constant_part();
    let connection = geometry.connection.constant_part();
    let metric_inv = geometry.horizontal_metric_inv.constant_part();
    let j = DVector::from_column_slice(&momentum);
    let p = DVector::from_fn(fs, |a, _| state[dof + a]);
    let shifted = &p - &connection * &j;
    let shape_velocity = &metric_inv * &shifted;
    let xi = &inertia_inv * &j - connection.transpose() * shape_velocity;
    Ok(xi.iter().copied().collect())
}

/// All exponent vectors of `vars` variables with total degree at most
/// `max_degree`, in a fixed deterministic order.
fn graded_exponents(vars: usize, max_degree: usize) -> Vec<Vec<u8>> {
    fn extend(prefix: &mut Vec<u8>, remaining: usize, budget: usize, out: &mut Vec<Vec<u8>>) {
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=budget {
            prefix.push(e as u8);
            extend(prefix, remaining - 1, budget - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), vars, max_degree, &mut out);
    out
}

/// Point values of the reduced geometry entries needed by the field.
struct GeometrySlice {
    inertia_inv: DMatrix<f64>,
    /// `shape_dim x group_dim`; row `alpha` holds `A_alpha`.
    connection: DMatrix<f64>,
    metric_inv: DMatrix<f64>,
    potential: f64,
}

/// Geometry values plus their first shape derivatives at one point.
struct GeometryPoint {
    value: GeometrySlice,
    shape_derivatives: Vec<GeometrySlice>,
}

/// Cached polynomial expansion of the reduced geometry around one shape
/// point.  All entries share one monomial basis, so an evaluation is a
/// single matrix--vector product instead of a rebuild of series jets.
struct GeometryTable {
    shape_dim: usize,
    group_dim: usize,
    center: Vec<f64>,
    exponents: Vec<Vec<u8>>,
    /// Row block `0..entries` holds entry values; block `1 + alpha` holds
    /// the shape derivative along `alpha`.  Entry order: `I^{-1}` row by
    /// row, `A`, `d^{-1}`, then the potential.
    rows: DMatrix<f64>,
}

impl GeometryTable {
    fn entry_count(&self) -> usize {
        let (fs, gd) = (self.shape_dim, self.group_dim);
        gd * gd + fs * gd + fs * fs + 1
    }

    fn build(system: &MechanicalSystem, center: &[f64]) -> Result<GeometryTable> {
        let fs = system.shape_dim();
        let gd = system.group().dim();
        let geometry = system.reduced_geometry(center, TABLE_DEGREE)?;
        let mut entries: Vec<&TruncatedSeries> = Vec::with_capacity(gd * gd + fs * gd + fs * fs + 1);
        for i in 0..gd {
            for j in 0..gd {
                entries.push(geometry.inertia_inv.entry(i, j));
            }
        }
        for alpha in 0..fs {
            for a in 0..gd {
                entries.push(geometry.connection.entry(alpha, a));
            }
        }
        for alpha in 0..fs {
            for beta in 0..fs {
                entries.push(geometry.horizontal_metric_inv.entry(alpha, beta));
            }
        }
        entries.push(&geometry.potential);

        let exponents = graded_exponents(fs, TABLE_DEGREE);
        let count = entries.len();
        let mut rows = DMatrix::zeros(count * (1 + fs), exponents.len());
        for (e, series) in entries.iter().enumerate() {
            for (t, exps) in exponents.iter().enumerate() {
                rows[(e, t)] = series.coefficient(exps);
            }
            for alpha in 0..fs {
                let derivative = series.derivative(alpha)?;
                for (t, exps) in exponents.iter().enumerate() {
                    rows[(count * (1 + alpha) + e, t)] = derivative.coefficient(exps);
                }
            }
        }
        Ok(GeometryTable {
            shape_dim: fs,
            group_dim: gd,
            center: center.to_vec(),
            exponents,
            rows,
        })
    }

    fn in_range(&self, shape: &[f64]) -> bool {
        shape
            .iter()
            .zip(&self.center)
            .all(|(q, c)| (q - c).abs() <= TABLE_RADIUS)
    }

    fn unpack(&self, flat: &DVector<f64>, block: usize) -> GeometrySlice {
        let (fs, gd) = (self.shape_dim, self.group_dim);
        let base = block * self.entry_count();
        let inertia_inv = DMatrix::from_fn(gd, gd, |i, j| flat[base + i * gd + j]);
        let connection = DMatrix::from_fn(fs, gd, |a, b| flat[base + gd * gd + a * gd + b]);
        let metric_inv =
            DMatrix::from_fn(fs, fs, |a, b| flat[base + gd * gd + fs * gd + a * fs + b]);
        let potential = flat[base + gd * gd + fs * gd + fs * fs];
        GeometrySlice {
            inertia_inv,
            connection,
            metric_inv,
            potential,
        }
    }

    fn evaluate(&self, shape: &[f64]) -> GeometryPoint {
        let fs = self.shape_dim;
        // Powers of each displacement up to the table degree.
        let mut powers = vec![[0.0; TABLE_DEGREE + 1]; fs];
        for (i, table) in powers.iter_mut().enumerate() {
            let d = shape[i] - self.center[i];
            table[0] = 1.0;
            for k in 1..=TABLE_DEGREE {
                table[k] = table[k - 1] * d;
            }
        }
        let monomials = DVector::from_fn(self.exponents.len(), |t, _| {
            self.exponents[t]
                .iter()
                .enumerate()
                .map(|(i, &e)| powers[i][e as usize])
                .product()
        });
        let flat = &self.rows * monomials;
        GeometryPoint {
            value: self.unpack(&flat, 0),
            shape_derivatives: (0..fs).map(|alpha| self.unpack(&flat, 1 + alpha)).collect(),
        }
    }
}

/// Everything the integrator needs at one state.
struct StageData {
    field: Vec<f64>,
    energy: f64,
    /// Locked-frame velocity `xi` (length `group_dim`).
    body_velocity: Vec<f64>,
}

/// Field evaluator holding the cached geometry table, re-expanding it when
/// the trajectory leaves the trust region.
struct FieldEvaluator<'a> {
    system: &'a MechanicalSystem,
    chart: ReducedChart,
    table: Option<GeometryTable>,
}

impl<'a> FieldEvaluator<'a> {
    fn new(system: &'a MechanicalSystem, chart: ReducedChart) -> Result<Self> {
        match (system.group(), chart) {
            (SymmetryGroup::So3, ReducedChart::MomentumSphere { .. })
            | (SymmetryGroup::S1, ReducedChart::FiberParameter { .. })
            | (SymmetryGroup::Trivial, ReducedChart::Canonical) => {}
            _ => {
                return Err(Error::Invalid(format!(
                    "chart {chart:?} does not match symmetry group {:?}",
                    system.group()
                )));
            }
        }
        Ok(FieldEvaluator {
            system,
            chart,
            table: None,
        })
    }

    fn eval(&mut self, state: &[f64]) -> Result<StageData> {
        let fs = self.system.shape_dim();
        let dof = self.system.dof();
        let n = 2 * dof;
        if state.len() != n {
            return Err(Error::DimensionMismatch {
                context: "chart state",
                expected: n,
                got: state.len(),
            });
        }
        if !state.iter().all(|x| x.is_finite()) {
            return Err(Error::Invalid("state has non-finite components".to_string()));
        }
        let shape = &state[..fs];
        if self.table.as_ref().is_none_or(|t| !t.in_range(shape)) {
            self.table = Some(GeometryTable::build(self.system, shape)?);
        }
        let table = self.table.as_ref().unwrap();
        let geometry = table.evaluate(shape);

        // Momentum and, on the sphere, its chart derivatives.
        let (momentum, sphere_partials) = match self.chart {
            ReducedChart::MomentumSphere { radius } => {
                let (u, v) = (state[fs], state[n - 1]);
                if v.abs() >= radius {
                    return Err(Error::ChartSingular {
                        v_abs: v.abs(),
                        r: radius,
                    });
                }
                let w = (radius * radius - v * v).sqrt();
                let (sin, cos) = u.sin_cos();
                let j = DVector::from_column_slice(&[v, w * sin, w * cos]);
                let j_u = DVector::from_column_slice(&[0.0, w * cos, -w * sin]);
                let j_v = DVector::from_column_slice(&[1.0, -v / w * sin, -v / w * cos]);
                (j, Some((j_u, j_v)))
            }
            ReducedChart::FiberParameter { momentum } => {
                (DVector::from_column_slice(&[momentum]), None)
            }
            ReducedChart::Canonical => (DVector::zeros(0), None),
        };

        let value = &geometry.value;
        let p = DVector::from_fn(fs, |a, _| state[dof + a]);
        let shifted = &p - &value.connection * &momentum;
        let shape_velocity = &value.metric_inv * &shifted;
        let inertia_momentum = &value.inertia_inv * &momentum;
        let xi = &inertia_momentum - value.connection.transpose() * &shape_velocity;

        let energy = 0.5 * momentum.dot(&inertia_momentum)
            + 0.5 * shifted.dot(&shape_velocity)
            + value.potential;

        let mut field = vec![0.0; n];
        for alpha in 0..fs {
            field[alpha] = shape_velocity[alpha];
        }
        for alpha in 0..fs {
            let d = &geometry.shape_derivatives[alpha];
            let dh = 0.5 * momentum.dot(&(&d.inertia_inv * &momentum))
                + 0.5 * shifted.dot(&(&d.metric_inv * &shifted))
                - shape_velocity.dot(&(&d.connection * &momentum))
                + d.potential;
            field[dof + alpha] = -dh;
        }
        if let Some((j_u, j_v)) = sphere_partials {
            field[fs] = xi.dot(&j_v);
            field[n - 1] = -xi.dot(&j_u);
        }
        Ok(StageData {
            field,
            energy,
            body_velocity: xi.iter().copied().collect(),
        })
    }
}

fn displaced(state: &[f64], direction: &[f64], step: f64) -> Vec<f64> {
    state
        .iter()
        .zip(direction)
        .map(|(x, d)| x + step * d)
        .collect()
}

/// One classical Runge--Kutta step, reusing the already-evaluated field at
/// the step's start.
fn rk4_step(
    evaluator: &mut FieldEvaluator,
    state: &[f64],
    start_field: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let k2 = evaluator.eval(&displaced(state, start_field, dt / 2.0))?.field;
    let k3 = evaluator.eval(&displaced(state, &k2, dt / 2.0))?.field;
    let k4 = evaluator.eval(&displaced(state, &k3, dt))?.field;
    Ok((0..state.len())
        .map(|i| state[i] + dt / 6.0 * (start_field[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrate the reduced equations of motion with fixed-step RK4 from
/// `state0` to time `t_final`, recording every step.
///
/// A chart singularity or inadmissible shape encountered mid-run truncates
/// the trajectory and sets its flag instead of failing; an inadmissible
/// initial state is an error.
pub fn integrate_reduced(
    system: &MechanicalSystem,
    chart: &ReducedChart,
    state0: &[f64],
    dt: f64,
    t_final: f64,
) -> Result<Trajectory> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::Invalid(format!(
            "final time must be nonnegative, got {t_final}"
        )));
    }
    let mut evaluator = FieldEvaluator::new(system, *chart)?;
    let mut current = evaluator.eval(state0)?;
    let mut state = state0.to_vec();
    let mut samples = vec![TrajectorySample {
        time: 0.0,
        state: state.clone(),
        energy: current.energy,
    }];
    let steps = (t_final / dt).round() as usize;
    let mut truncated = false;
    for k in 1..=steps {
        let next = match rk4_step(&mut evaluator, &state, &current.field, dt) {
            Ok(next) if next.iter().all(|x| x.is_finite()) => next,
            _ => {
                truncated = true;
                break;
            }
        };
        current = match evaluator.eval(&next) {
            Ok(data) => data,
            Err(_) => {
                truncated = true;
                break;
            }
        };
        state = next;
        samples.push(TrajectorySample {
            time: k as f64 * dt,
            state: state.clone(),
            energy: current.energy,
        });
    }
    Ok(Trajectory {
        chart: *chart,
        shape_dim: system.shape_dim(),
        samples,
        truncated,
    })
}

/// Solve the reconstruction equation `g' = g Xi(t)` along a reduced
/// trajectory of an SO(3) system, starting from `initial`.
///
/// `Xi` is the skew matrix of `xi = I^{-1} J - A q'` evaluated at each
/// sample; within a step it is interpolated linearly.  Every RK4 update is
/// projected back onto the rotation group, so the output satisfies
/// `g^T g = Id` to projection accuracy and the spatial momentum `g J`
/// is conserved to integrator accuracy.
pub fn reconstruct(
    system: &MechanicalSystem,
    trajectory: &Trajectory,
    initial: &Rotation,
) -> Result<Vec<Rotation>> {
    if system.group() != SymmetryGroup::So3 {
        return Err(Error::Invalid(format!(
            "reconstruction needs an SO(3) system, got {:?}",
            system.group()
        )));
    }
    let mut evaluator = FieldEvaluator::new(system, trajectory.chart)?;
    let mut velocities = Vec::with_capacity(trajectory.samples.len());
    for sample in &trajectory.samples {
        let data = evaluator.eval(&sample.state)?;
        velocities.push(Vector3::new(
            data.body_velocity[0],
            data.body_velocity[1],
            data.body_velocity[2],
        ));
    }

    let mut rotations = Vec::with_capacity(trajectory.samples.len());
    rotations.push(initial.clone());
    for k in 0..trajectory.samples.len().saturating_sub(1) {
        let dt = trajectory.samples[k + 1].time - trajectory.samples[k].time;
        let start = velocities[k].cross_matrix();
        let mid = ((velocities[k] + velocities[k + 1]) / 2.0).cross_matrix();
        let end = velocities[k + 1].cross_matrix();
        let g = rotations[k].matrix();
        let k1 = g * start;
        let k2 = (g + k1 * (dt / 2.0)) * mid;
        let k3 = (g + k2 * (dt / 2.0)) * mid;
        let k4 = (g + k3 * dt) * end;
        let raw = g + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        rotations.push(Rotation::project(&raw)?);
    }
    Ok(rotations)
}

/// Write a trajectory as CSV: `t`, shape coordinates, conjugate momenta,
/// the sphere pair `(u, v)` when present, the energy, and optionally the
/// row-major entries of reconstructed rotations.  Values are written with
/// shortest round-trip precision.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    trajectory: &Trajectory,
    rotations: Option<&[Rotation]>,
) -> Result<()> {
    if let Some(rotations) = rotations {
        if rotations.len() != trajectory.samples.len() {
            return Err(Error::DimensionMismatch {
                context: "rotation sequence",
                expected: trajectory.samples.len(),
                got: rotations.len(),
            });
        }
    }
    let fs = trajectory.shape_dim;
    let sphere = matches!(trajectory.chart, ReducedChart::MomentumSphere { .. });
    let dof = fs + usize::from(sphere);

    let mut header = vec!["t".to_string()];
    header.extend((1..=fs).map(|a| format!("q{a}")));
    header.extend((1..=fs).map(|a| format!("p{a}")));
    if sphere {
        header.push("u".to_string());
        header.push("v".to_string());
    }
    header.push("energy".to_string());
    if rotations.is_some() {
        for i in 0..3 {
            for j in 0..3 {
                header.push(format!("g{i}{j}"));
            }
        }
    }
    writeln!(out, "{}", header.join(","))?;

    for (k, sample) in trajectory.samples.iter().enumerate() {
        let mut row = vec![sample.time.to_string()];
        row.extend((0..fs).map(|a| sample.state[a].to_string()));
        row.extend((0..fs).map(|a| sample.state[dof + a].to_string()));
        if sphere {
            row.push(sample.state[fs].to_string());
            row.push(sample.state[2 * dof - 1].to_string());
        }
        row.push(sample.energy.to_string());
        if let Some(rotations) = rotations {
            let g = rotations[k].matrix();
            for i in 0..3 {
                for j in 0..3 {
                    row.push(g[(i, j)].to_string());
                }
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
