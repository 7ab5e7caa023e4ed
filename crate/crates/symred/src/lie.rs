//! Non-canonical bracket structures: anholonomic frames and the coadjoint
//! machinery for `so(3)*`.
//!
//! Two constructions feed the reduced equations of motion:
//!
//! - **Anholonomic frames.** A local frame `X_i = sum_j a_i^j d/ds_j` on the
//!   base turns the canonical bracket on `(s, p)` into a frame bracket on
//!   `(s, pi)` with `pi = a^T p`:
//!
//!   ```text
//!   {f, g} = sum_{j,i} a[(j,i)] (df/ds_j dg/dpi_i - df/dpi_i dg/ds_j)
//!            - sum_{i,j,k} c_ij^k pi_k df/dpi_i dg/dpi_j
//!   ```
//!
//!   where `[X_i, X_j] = sum_k c_ij^k X_k`. The frame matrix is stored with
//!   column `i` holding the coordinate components of `X_i`, so the momentum
//!   substitution is `pi = a^T p`. The formula reproduces
//!   `{pi_i, pi_j} = -sum_k c_ij^k pi_k`, the (−) Lie–Poisson relation of
//!   the body-frame momentum functions.
//!
//! - **Momentum spheres of `so(3)*`.** Body angular momentum evolves by the
//!   coadjoint action, `Jdot = J x xi` for `xi = dh/dJ`, which conserves
//!   `|J|` exactly; the sphere `|J| = r` carries the cylindrical chart
//!   `J = (v, w sin u, w cos u)`, `w = sqrt(r^2 - v^2)`, in which `(u, v)`
//!   is a canonical pair: `{J_a, J_b} = -eps_abc J_c` follows from
//!   `{u, v} = 1` by the chain rule.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::series::{Elementary, TruncatedSeries};

/// Matrix-valued frame coefficients: column `i` holds the components of the
/// frame field `X_i` at the queried base point.
pub type FrameMatrixFn = Box<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Structure functions at a base point: `result[k][(i, j)] = c_ij^k` where
/// `[X_i, X_j] = sum_k c_ij^k X_k`.
pub type StructureFn = Box<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;

/// A local frame on an `n`-dimensional base together with its commutation
/// structure, defining a Poisson bracket on `(s_1..s_n, pi_1..pi_n)`.
pub struct AnholonomicFrame {
    dimension: usize,
    frame: FrameMatrixFn,
    structure: StructureFn,
}

impl AnholonomicFrame {
    /// Build a frame from its coefficient and structure functions.
    pub fn new(dimension: usize, frame: FrameMatrixFn, structure: StructureFn) -> Self {
        AnholonomicFrame {
            dimension,
            frame,
            structure,
        }
    }

    /// The coordinate (holonomic) frame: identity coefficients, vanishing
    /// structure functions. Its bracket is the canonical one.
    pub fn holonomic(dimension: usize) -> Self {
        Self::new(
            dimension,
            Box::new(move |_| DMatrix::identity(dimension, dimension)),
            Box::new(move |_| vec![DMatrix::zeros(dimension, dimension); dimension]),
        )
    }

    /// Base dimension `n`; phase points carry `2n` components.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Evaluate the frame bracket `{f, g}` at a phase point
    /// `(s_1..s_n, pi_1..pi_n)` from the gradients of `f` and `g` there.
    ///
    /// Gradients are ordered like the phase point. Fails when the frame
    /// matrix is singular at the point or the structure functions are not
    /// antisymmetric in their lower indices.
    pub fn bracket_with_gradients(
        &self,
        at: &[f64],
        grad_f: &[f64],
        grad_g: &[f64],
    ) -> Result<f64> {
        let n = self.dimension;
        for (slice, context) in [
            (&at, "bracket evaluation point"),
            (&grad_f, "bracket first gradient"),
            (&grad_g, "bracket second gradient"),
        ] {
            if slice.len() != 2 * n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: 2 * n,
                    got: slice.len(),
                });
            }
        }
        let (s, pi) = at.split_at(n);

        let a = (self.frame)(s);
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "frame matrix",
                expected: n,
                got: a.nrows().max(a.ncols()),
            });
        }
        // The frame must be a frame: reject singular coefficient matrices.
        if a.clone().try_inverse().is_none() {
            return Err(Error::SingularFrame);
        }

        let c = (self.structure)(s);
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                context: "structure function array",
                expected: n,
                got: c.len(),
            });
        }
        for ck in &c {
            for i in 0..n {
                for j in 0..i {
                    if (ck[(i, j)] + ck[(j, i)]).abs() > 1e-12 {
                        return Err(Error::Invalid(
                            "structure functions must be antisymmetric in their lower indices"
                                .to_string(),
                        ));
                    }
                }
            }
        }

        let mut value = 0.0;
        for j in 0..n {
            for i in 0..n {
                value += a[(j, i)] * (grad_f[j] * grad_g[n + i] - grad_f[n + i] * grad_g[j]);
            }
        }
        for (k, ck) in c.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    value -= ck[(i, j)] * pi[k] * grad_f[n + i] * grad_g[n + j];
                }
            }
        }
        Ok(value)
    }

    /// Evaluate the frame bracket of two series (in the `(s, pi)` variables)
    /// at a phase point.
    pub fn bracket(
        &self,
        f: &TruncatedSeries,
        g: &TruncatedSeries,
        at: &[f64],
    ) -> Result<f64> {
        for series in [f, g] {
            if series.num_vars() != 2 * self.dimension {
                return Err(Error::DimensionMismatch {
                    context: "bracket operand variables",
                    expected: 2 * self.dimension,
                    got: series.num_vars(),
                });
            }
        }
        let grad_f = f.gradient(at)?;
        let grad_g = g.gradient(at)?;
        self.bracket_with_gradients(at, &grad_f, &grad_g)
    }
}

/// Totally antisymmetric symbol `eps_abc`: the structure constants of
/// `so(3)` under the identification of its bracket with the vector cross
/// product.
pub fn epsilon(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Time derivative of body angular momentum under the (−) Lie–Poisson
/// structure: `Jdot = -ad*_xi J = J x xi` with `xi = dh/dJ`.
///
/// `<J, Jdot> = 0` identically, so `|J|` is conserved along the flow; at a
/// relative equilibrium `xi` is parallel to `J` and the rate vanishes.
pub fn so3_coadjoint_rate(xi: &Vector3<f64>, j: &Vector3<f64>) -> Vector3<f64> {
    j.cross(xi)
}

/// Cylindrical chart on the momentum sphere `|J| = r`:
/// `J = (v, w sin u, w cos u)` with `w = sqrt(r^2 - v^2)`.
///
/// Fails at and beyond the poles `|v| >= r`, where the chart is singular.
pub fn deprit_chart(u: f64, v: f64, r: f64) -> Result<Vector3<f64>> {
    if v.abs() >= r {
        return Err(Error::ChartSingular { v_abs: v.abs(), r });
    }
    let w = (r * r - v * v).sqrt();
    Ok(Vector3::new(v, w * u.sin(), w * u.cos()))
}

/// Jet of the momentum components `(J_1, J_2, J_3)` of [`deprit_chart`]
/// around the chart point `(u0, v0)`, as series in a `num_vars`-variable
/// ring where variable `u_var` is the displacement of `u` and `v_var` that
/// of `v`.
///
/// `(u, v)` is a canonical pair, so substituting these jets into canonical
/// expressions realizes the (−) Lie–Poisson bracket of the momentum sphere.
pub fn deprit_chart_series(
    u0: f64,
    v0: f64,
    r: f64,
    num_vars: usize,
    max_degree: usize,
    u_var: usize,
    v_var: usize,
) -> Result<[TruncatedSeries; 3]> {
    if v0.abs() >= r {
        return Err(Error::ChartSingular { v_abs: v0.abs(), r });
    }
    let u = TruncatedSeries::affine(num_vars, max_degree, u0, u_var)?;
    let v = TruncatedSeries::affine(num_vars, max_degree, v0, v_var)?;
    // w = sqrt(r^2 - v^2); the constant term r^2 - v0^2 > 0 on the chart.
    let w = TruncatedSeries::constant(num_vars, max_degree, r * r)
        .sub(&v.mul(&v)?)?
        .compose_elementary(Elementary::Sqrt)?;
    let j2 = w.mul(&u.compose_elementary(Elementary::Sin)?)?;
    let j3 = w.mul(&u.compose_elementary(Elementary::Cos)?)?;
    Ok([v, j2, j3])
}
