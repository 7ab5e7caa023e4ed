//! Reduced geometry of simple mechanical systems.
//!
//! A simple mechanical system is a collection of point masses whose body
//! positions are smooth functions `r_i(q)` of shape coordinates, moved
//! rigidly by a symmetry group (`SO(3)`, `S^1` about the third axis, or no
//! group at all), with a shape-only potential `V(q)`. From the embedding
//! alone this module builds, as truncated series around a chosen shape
//! point:
//!
//! - the locked inertia tensor `I(q)` — `sum_i m_i (|r_i|^2 Id - r_i r_i^T)`
//!   for `SO(3)`, the scalar `sum_i m_i (x_i^2 + y_i^2)` for `S^1`;
//! - the momentum coefficients `L(q)` pairing shape velocity with group
//!   momentum, `L_{a,alpha} = sum_i m_i (e_a x r_i) . dr_i/dq_alpha`;
//! - the mechanical connection `A = I^{-1} L` (stored transposed, one row
//!   per shape coordinate);
//! - the shape metric `h_{alpha beta} = sum_i m_i dr_i/dq_alpha . dr_i/dq_beta`
//!   and the horizontal metric `d = h - A^T I A = h - L^T I^{-1} L`;
//! - the reduced Hamiltonian
//!
//!   ```text
//!   h = 1/2 J^T I^{-1} J + 1/2 (p - A^T J)^T d^{-1} (p - A^T J) + V(q)
//!   ```
//!
//!   in canonical variables, with `J` expressed through the cylindrical
//!   momentum-sphere chart for `SO(3)` and held as a constant parameter for
//!   `S^1`.
//!
//! Everything is derived from the embedding through the general formulas;
//! closed forms from specific models are used only as cross-checks in
//! tests. Matrix jets are inverted by a Neumann series around the inverted
//! constant part, exact to the truncation degree.
//!
//! Canonical variable ordering in the reduced chart: shape coordinates
//! first, then (for `SO(3)`) the sphere angle `u`, then the conjugate
//! momenta in the same order, with the sphere momentum `v` last.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lie::deprit_chart_series;
use crate::series::TruncatedSeries;

/// Symmetry group acting rigidly on the body configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryGroup {
    /// Full rotation group; reduced momentum lives on a sphere in `so(3)*`.
    So3,
    /// Rotations about the third axis; reduced momentum is a conserved
    /// scalar parameter.
    S1,
    /// No symmetry; the reduced chart is the plain cotangent chart.
    Trivial,
}

impl SymmetryGroup {
    /// Dimension of the group (and of the momentum block).
    pub fn dim(&self) -> usize {
        match self {
            SymmetryGroup::So3 => 3,
            SymmetryGroup::S1 => 1,
            SymmetryGroup::Trivial => 0,
        }
    }
}

/// Shape-to-body embedding of a mechanical system, jet-evaluable: given
/// affine jets of the shape coordinates (all in one series ring), produce
/// the body position jets of every particle and the potential jet in the
/// same ring.
///
/// Implementations must build their outputs from the supplied jets through
/// series operations only, so the ring (variable count and truncation
/// degree) propagates unchanged; no group variables may appear.
pub trait ShapeEmbedding: Send + Sync {
    /// Number of shape coordinates.
    fn shape_dim(&self) -> usize;

    /// Number of point masses.
    fn particle_count(&self) -> usize;

    /// Body position jets `[x_i, y_i, z_i]` for each particle.
    fn positions(&self, shape: &[TruncatedSeries]) -> Result<Vec<[TruncatedSeries; 3]>>;

    /// Potential jet `V(q)`.
    fn potential(&self, shape: &[TruncatedSeries]) -> Result<TruncatedSeries>;
}

/// A small matrix with truncated-series entries, all in one ring.
#[derive(Clone, Debug)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<TruncatedSeries>,
}

impl SeriesMatrix {
    fn from_fn<F>(rows: usize, cols: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<TruncatedSeries>,
    {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j)?);
            }
        }
        Ok(SeriesMatrix { rows, cols, entries })
    }

    fn empty() -> Self {
        SeriesMatrix {
            rows: 0,
            cols: 0,
            entries: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> &TruncatedSeries {
        &self.entries[row * self.cols + col]
    }

    /// Evaluate every entry at a point of the ring.
    pub fn evaluate(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.entry(i, j).evaluate(point)?;
            }
        }
        Ok(out)
    }

    /// The matrix of constant terms (value at the expansion point).
    pub fn constant_part(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).constant_term())
    }

    fn transpose(&self) -> Self {
        SeriesMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: (0..self.cols * self.rows)
                .map(|n| self.entry(n % self.rows, n / self.rows).clone())
                .collect(),
        }
    }

    fn mul_mat(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "series matrix product",
                expected: self.cols,
                got: other.rows,
            });
        }
        let (num_vars, max_degree) = self.ring_or(other);
        Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = TruncatedSeries::zero(num_vars, max_degree);
            for k in 0..self.cols {
                acc = acc.add(&self.entry(i, k).mul(other.entry(k, j))?)?;
            }
            Ok(acc)
        })
    }

    fn scale(&self, factor: f64) -> Self {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(factor)).collect(),
        }
    }

    fn sub(&self, other: &Self) -> Result<Self> {
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.entry(i, j).sub(other.entry(i, j))
        })
    }

    fn truncated(&self, degree: usize) -> Self {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.truncated(degree)).collect(),
        }
    }

    fn symmetrized(&self) -> Result<Self> {
        Self::from_fn(self.rows, self.cols, |i, j| {
            Ok(self.entry(i, j).add(self.entry(j, i))?.scale(0.5))
        })
    }

    /// Ring parameters, falling back to `other` when this matrix is empty.
    fn ring_or(&self, other: &Self) -> (usize, usize) {
        self.entries
            .first()
            .or_else(|| other.entries.first())
            .map(|e| (e.num_vars(), e.max_degree()))
            .expect("ring of an empty matrix product")
    }

    /// Jet inverse of a square matrix by Neumann series around the inverted
    /// constant part: with `M = M0 + N` (`N` of valuation >= 1),
    /// `M^{-1} = sum_k (-M0^{-1} N)^k M0^{-1}` — exact to the truncation
    /// degree. `constant_inverse` must be the inverse of `constant_part()`.
    fn inverse_with(&self, constant_inverse: &DMatrix<f64>) -> Result<Self> {
        let n = self.rows;
        if n == 0 {
            return Ok(Self::empty());
        }
        let (num_vars, max_degree) = self.ring_or(self);
        let c = Self::from_fn(n, n, |i, j| {
            Ok(TruncatedSeries::constant(
                num_vars,
                max_degree,
                constant_inverse[(i, j)],
            ))
        })?;
        let constant = Self::from_fn(n, n, |i, j| {
            Ok(TruncatedSeries::constant(
                num_vars,
                max_degree,
                self.entry(i, j).constant_term(),
            ))
        })?;
        let tail = self.sub(&constant)?;
        let step = c.mul_mat(&tail)?.scale(-1.0);
        let mut acc = c.clone();
        let mut power = c;
        for _ in 1..=max_degree {
            power = step.mul_mat(&power)?;
            acc = Self::from_fn(n, n, |i, j| acc.entry(i, j).add(power.entry(i, j)))?;
        }
        Ok(acc)
    }
}

/// Momentum treatment of the reduced chart, matched to the system's group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReducedChart {
    /// `SO(3)`: momentum on the sphere `|J| = radius`, charted by the
    /// cylindrical pair `(u, v)` appended to the canonical variables.
    MomentumSphere { radius: f64 },
    /// `S^1`: conserved scalar momentum carried as a parameter.
    FiberParameter { momentum: f64 },
    /// No symmetry: plain canonical chart on the cotangent bundle.
    Canonical,
}

/// All reduced-geometry jets of a system around one shape point, in the
/// shape-variable ring (one variable per shape coordinate, displacements
/// from the expansion point), each exact to the build degree.
pub struct ReducedGeometry {
    pub shape_dim: usize,
    pub group_dim: usize,
    /// Locked inertia `I` (`group_dim x group_dim`).
    pub inertia: SeriesMatrix,
    pub inertia_inv: SeriesMatrix,
    /// Momentum coefficients `L` (`group_dim x shape_dim`): group momentum
    /// generated per unit shape velocity.
    pub momentum_coefficients: SeriesMatrix,
    /// Mechanical connection `A = I^{-1} L`, stored as
    /// `shape_dim x group_dim` (row `alpha` holds the Lie-algebra value
    /// `A_alpha`).
    pub connection: SeriesMatrix,
    /// Shape metric `h_{alpha beta}`.
    pub shape_metric: SeriesMatrix,
    /// Horizontal metric `d = h - L^T I^{-1} L`.
    pub horizontal_metric: SeriesMatrix,
    pub horizontal_metric_inv: SeriesMatrix,
    /// Potential jet `V`.
    pub potential: TruncatedSeries,
}

/// A simple mechanical system: masses, symmetry group and shape embedding.
pub struct MechanicalSystem {
    masses: Vec<f64>,
    group: SymmetryGroup,
    embedding: Box<dyn ShapeEmbedding>,
}

impl MechanicalSystem {
    /// Assemble a system, validating masses against the embedding.
    pub fn new(
        masses: Vec<f64>,
        group: SymmetryGroup,
        embedding: Box<dyn ShapeEmbedding>,
    ) -> Result<Self> {
        if masses.len() != embedding.particle_count() {
            return Err(Error::DimensionMismatch {
                context: "mass list",
                expected: embedding.particle_count(),
                got: masses.len(),
            });
        }
        if let Some(&m) = masses.iter().find(|&&m| !m.is_finite() || m <= 0.0) {
            return Err(Error::Invalid(format!(
                "masses must be positive and finite, got {m}"
            )));
        }
        Ok(MechanicalSystem {
            masses,
            group,
            embedding,
        })
    }

    pub fn group(&self) -> SymmetryGroup {
        self.group
    }

    pub fn shape_dim(&self) -> usize {
        self.embedding.shape_dim()
    }

    pub fn particle_count(&self) -> usize {
        self.embedding.particle_count()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Total degrees of freedom of the reduced chart: shape coordinates
    /// plus the sphere angle for `SO(3)`.
    pub fn dof(&self) -> usize {
        self.shape_dim() + usize::from(self.group == SymmetryGroup::So3)
    }

    /// Locked inertia jet around `q0`, exact to `degree`.
    pub fn locked_inertia(&self, q0: &[f64], degree: usize) -> Result<SeriesMatrix> {
        Ok(self.reduced_geometry(q0, degree)?.inertia)
    }

    /// Mechanical connection jet around `q0`, exact to `degree`.
    pub fn mechanical_connection(&self, q0: &[f64], degree: usize) -> Result<SeriesMatrix> {
        Ok(self.reduced_geometry(q0, degree)?.connection)
    }

    /// Horizontal metric jet around `q0`, exact to `degree`.
    pub fn horizontal_metric(&self, q0: &[f64], degree: usize) -> Result<SeriesMatrix> {
        Ok(self.reduced_geometry(q0, degree)?.horizontal_metric)
    }

    /// Potential jet around `q0`, exact to `degree`. Unlike the full
    /// geometry this needs no metric inversion, so it works even where the
    /// locked inertia degenerates.
    pub fn potential_jet(&self, q0: &[f64], degree: usize) -> Result<TruncatedSeries> {
        let fs = self.shape_dim();
        if q0.len() != fs {
            return Err(Error::DimensionMismatch {
                context: "shape point",
                expected: fs,
                got: q0.len(),
            });
        }
        let build_degree = degree.max(1);
        let shape: Vec<TruncatedSeries> = (0..fs)
            .map(|a| TruncatedSeries::affine(fs, build_degree, q0[a], a))
            .collect::<Result<_>>()?;
        Ok(self.embedding.potential(&shape)?.truncated(degree))
    }

    /// Build every geometric jet around the shape point `q0`, exact to
    /// `degree`. The embedding is evaluated one degree higher so that the
    /// shape derivatives feeding the metric and momentum coefficients are
    /// exact at `degree`.
    pub fn reduced_geometry(&self, q0: &[f64], degree: usize) -> Result<ReducedGeometry> {
        let fs = self.shape_dim();
        if q0.len() != fs {
            return Err(Error::DimensionMismatch {
                context: "shape point",
                expected: fs,
                got: q0.len(),
            });
        }
        let build_degree = degree + 1;
        let shape: Vec<TruncatedSeries> = (0..fs)
            .map(|a| TruncatedSeries::affine(fs, build_degree, q0[a], a))
            .collect::<Result<_>>()?;

        let positions = self.embedding.positions(&shape)?;
        if positions.len() != self.particle_count() {
            return Err(Error::DimensionMismatch {
                context: "embedding particle positions",
                expected: self.particle_count(),
                got: positions.len(),
            });
        }
        for body in &positions {
            for component in body {
                if component.num_vars() != fs || component.max_degree() != build_degree {
                    return Err(Error::Invalid(
                        "embedding output left the shape-jet ring".to_string(),
                    ));
                }
            }
        }

        // Shape derivatives of every body vector, exact to `degree`.
        let mut velocity_basis = Vec::with_capacity(positions.len());
        for body in &positions {
            let mut per_shape = Vec::with_capacity(fs);
            for alpha in 0..fs {
                let dx = body[0].derivative(alpha)?;
                let dy = body[1].derivative(alpha)?;
                let dz = body[2].derivative(alpha)?;
                per_shape.push([dx, dy, dz]);
            }
            velocity_basis.push(per_shape);
        }

        let shape_metric = SeriesMatrix::from_fn(fs, fs, |alpha, beta| {
            let mut acc = TruncatedSeries::zero(fs, degree);
            for (i, &m) in self.masses.iter().enumerate() {
                for (va, vb) in velocity_basis[i][alpha].iter().zip(&velocity_basis[i][beta]) {
                    acc = acc.add(&va.mul(vb)?.scale(m))?;
                }
            }
            Ok(acc)
        })?
        .symmetrized()?;

        let gd = self.group.dim();
        let (inertia, momentum_coefficients) = match self.group {
            SymmetryGroup::So3 => {
                let inertia = SeriesMatrix::from_fn(3, 3, |a, b| {
                    let mut acc = TruncatedSeries::zero(fs, build_degree);
                    for (i, &m) in self.masses.iter().enumerate() {
                        let r = &positions[i];
                        if a == b {
                            for (c, rc) in r.iter().enumerate() {
                                if c != a {
                                    acc = acc.add(&rc.mul(rc)?.scale(m))?;
                                }
                            }
                        } else {
                            acc = acc.sub(&r[a].mul(&r[b])?.scale(m))?;
                        }
                    }
                    Ok(acc.truncated(degree))
                })?
                .symmetrized()?;
                // L_{a,alpha} = sum_i m_i (e_a x r_i) . dr_i/dq_alpha
                let momentum = SeriesMatrix::from_fn(3, fs, |a, alpha| {
                    let mut acc = TruncatedSeries::zero(fs, degree);
                    let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                    for (i, &m) in self.masses.iter().enumerate() {
                        let r = &positions[i];
                        let d = &velocity_basis[i][alpha];
                        // (e_a x r) . d = r_b d_c - r_c d_b  (cyclic a,b,c)
                        acc = acc.add(&r[b].mul(&d[c])?.scale(m))?;
                        acc = acc.sub(&r[c].mul(&d[b])?.scale(m))?;
                    }
                    Ok(acc)
                })?;
                (inertia, momentum)
            }
            SymmetryGroup::S1 => {
                let inertia = SeriesMatrix::from_fn(1, 1, |_, _| {
                    let mut acc = TruncatedSeries::zero(fs, build_degree);
                    for (i, &m) in self.masses.iter().enumerate() {
                        let r = &positions[i];
                        acc = acc.add(&r[0].mul(&r[0])?.scale(m))?;
                        acc = acc.add(&r[1].mul(&r[1])?.scale(m))?;
                    }
                    Ok(acc.truncated(degree))
                })?;
                // (e_z x r) . d = x dy - y dx
                let momentum = SeriesMatrix::from_fn(1, fs, |_, alpha| {
                    let mut acc = TruncatedSeries::zero(fs, degree);
                    for (i, &m) in self.masses.iter().enumerate() {
                        let r = &positions[i];
                        let d = &velocity_basis[i][alpha];
                        acc = acc.add(&r[0].mul(&d[1])?.scale(m))?;
                        acc = acc.sub(&r[1].mul(&d[0])?.scale(m))?;
                    }
                    Ok(acc)
                })?;
                (inertia, momentum)
            }
            SymmetryGroup::Trivial => (SeriesMatrix::empty(), SeriesMatrix::empty()),
        };

        let inertia_inv = if gd > 0 {
            let constant_inverse = invert_positive_definite(&inertia.constant_part())
                .map_err(|direction| Error::SingularShape {
                    eigendirection: direction,
                })?;
            inertia.inverse_with(&constant_inverse)?
        } else {
            SeriesMatrix::empty()
        };

        // A = (I^{-1} L)^T: shape_dim x group_dim.
        let connection = if gd > 0 {
            inertia_inv.mul_mat(&momentum_coefficients)?.transpose()
        } else {
            SeriesMatrix::from_fn(fs, 0, |_, _| unreachable!())?
        };

        // d = h - L^T I^{-1} L.
        let horizontal_metric = if gd > 0 {
            shape_metric
                .sub(
                    &momentum_coefficients
                        .transpose()
                        .mul_mat(&inertia_inv.mul_mat(&momentum_coefficients)?)?,
                )?
                .symmetrized()?
        } else {
            shape_metric.clone()
        };

        let horizontal_metric_inv = {
            let constant_inverse = invert_positive_definite(&horizontal_metric.constant_part())
                .map_err(|direction| {
                    Error::ShapeOutOfRange {
                        detail: format!(
                            "horizontal metric is not positive definite along {direction:?}"
                        ),
                    }
                })?;
            horizontal_metric.inverse_with(&constant_inverse)?
        };

        let potential = self.embedding.potential(&shape)?.truncated(degree);

        Ok(ReducedGeometry {
            shape_dim: fs,
            group_dim: gd,
            inertia: inertia.truncated(degree),
            inertia_inv: inertia_inv.truncated(degree),
            momentum_coefficients,
            connection: connection.truncated(degree),
            shape_metric,
            horizontal_metric,
            horizontal_metric_inv,
            potential,
        })
    }

    /// The reduced Hamiltonian as a series in the canonical chart variables
    /// (displacements from the phase point `at`), exact to `degree`.
    ///
    /// `at` lists the full phase point: shape coordinates, then (for
    /// `SO(3)`) the sphere angle `u`, then the conjugate momenta in the
    /// same order with the sphere momentum `v` last — `2 * dof()` values.
    pub fn reduced_hamiltonian(
        &self,
        chart: &ReducedChart,
        at: &[f64],
        degree: usize,
    ) -> Result<TruncatedSeries> {
        match (self.group, chart) {
            (SymmetryGroup::So3, ReducedChart::MomentumSphere { .. })
            | (SymmetryGroup::S1, ReducedChart::FiberParameter { .. })
            | (SymmetryGroup::Trivial, ReducedChart::Canonical) => {}
            _ => {
                return Err(Error::Invalid(format!(
                    "chart {chart:?} does not match symmetry group {:?}",
                    self.group
                )));
            }
        }
        let fs = self.shape_dim();
        let dof = self.dof();
        let nv = 2 * dof;
        if at.len() != nv {
            return Err(Error::DimensionMismatch {
                context: "phase point",
                expected: nv,
                got: at.len(),
            });
        }

        let geometry = self.reduced_geometry(&at[..fs], degree)?;
        let lift = |m: &SeriesMatrix| -> Result<SeriesMatrix> {
            SeriesMatrix::from_fn(m.rows(), m.cols(), |i, j| {
                widen_ring(m.entry(i, j), nv)
            })
        };
        let inertia_inv = lift(&geometry.inertia_inv)?;
        let connection = lift(&geometry.connection)?;
        let metric_inv = lift(&geometry.horizontal_metric_inv)?;
        let potential = widen_ring(&geometry.potential, nv)?;

        // Momentum jets J_a in the phase ring.
        let momentum: Vec<TruncatedSeries> = match *chart {
            ReducedChart::MomentumSphere { radius } => {
                let (u0, v0) = (at[fs], at[nv - 1]);
                deprit_chart_series(u0, v0, radius, nv, degree, fs, nv - 1)?.to_vec()
            }
            ReducedChart::FiberParameter { momentum } => {
                vec![TruncatedSeries::constant(nv, degree, momentum)]
            }
            ReducedChart::Canonical => Vec::new(),
        };

        // Rotor energy 1/2 J^T I^{-1} J.
        let mut h = TruncatedSeries::zero(nv, degree);
        for a in 0..geometry.group_dim {
            for b in 0..geometry.group_dim {
                h = h.add(
                    &momentum[a]
                        .mul(inertia_inv.entry(a, b))?
                        .mul(&momentum[b])?
                        .scale(0.5),
                )?;
            }
        }

        // Shifted shape momenta c_alpha = p_alpha - (A^T J)_alpha.
        let mut shifted = Vec::with_capacity(fs);
        for alpha in 0..fs {
            let mut c = TruncatedSeries::affine(nv, degree, at[dof + alpha], dof + alpha)?;
            for (a, j) in momentum.iter().enumerate() {
                c = c.sub(&connection.entry(alpha, a).mul(j)?)?;
            }
            shifted.push(c);
        }

        // Shape kinetic energy 1/2 c^T d^{-1} c.
        for alpha in 0..fs {
            for beta in 0..fs {
                h = h.add(
                    &shifted[alpha]
                        .mul(metric_inv.entry(alpha, beta))?
                        .mul(&shifted[beta])?
                        .scale(0.5),
                )?;
            }
        }

        h.add(&potential)
    }
}

/// Re-express a shape-ring series in a wider ring that keeps the shape
/// variables at the same indices (extra variables simply never appear).
pub(crate) fn widen_ring(series: &TruncatedSeries, num_vars: usize) -> Result<TruncatedSeries> {
    TruncatedSeries::from_terms(
        num_vars,
        series.max_degree(),
        series.terms().map(|(index, c)| {
            let mut exps = vec![0u8; num_vars];
            exps[..index.len()].copy_from_slice(index.exponents());
            (exps, c)
        }),
    )
}

/// Invert a symmetric positive-definite matrix, returning the offending
/// eigendirection when the matrix is degenerate or indefinite.
fn invert_positive_definite(
    matrix: &DMatrix<f64>,
) -> std::result::Result<DMatrix<f64>, Vec<f64>> {
    let eigen = matrix.clone().symmetric_eigen();
    let scale = eigen
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &l| m.max(l.abs()))
        .max(1.0);
    if let Some(k) = eigen
        .eigenvalues
        .iter()
        .position(|&l| l <= 1e-12 * scale)
    {
        return Err(eigen.eigenvectors.column(k).iter().copied().collect());
    }
    matrix
        .clone()
        .try_inverse()
        .ok_or_else(|| vec![0.0; matrix.nrows()])
}
