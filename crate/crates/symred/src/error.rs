//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands (or an operand and a chart) disagree on dimension.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Elementary-function composition applied outside its domain,
    /// e.g. `sqrt` of a jet with non-positive constant term. This is how a
    /// chart-singular expansion point announces itself.
    #[error("domain violation in {op}: constant term {constant} is outside the admissible range")]
    Domain { op: &'static str, constant: f64 },

    /// Momentum-sphere chart evaluated at or beyond a pole.
    #[error("chart singularity: |v| = {v_abs} >= r = {r}")]
    ChartSingular { v_abs: f64, r: f64 },

    /// Anholonomic frame matrix not invertible at the evaluation point.
    #[error("anholonomic frame matrix is singular at the evaluation point")]
    SingularFrame,

    /// Locked inertia tensor degenerate at the queried shape.
    #[error("singular shape: locked inertia tensor is degenerate along {eigendirection:?}")]
    SingularShape { eigendirection: Vec<f64> },

    /// Shape point outside a model's admissible range (e.g. a pendulum arm
    /// displaced beyond its length).
    #[error("shape outside the admissible range: {detail}")]
    ShapeOutOfRange { detail: String },

    /// Iterative solver exhausted its iteration budget.
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The requested relative equilibrium does not exist.
    #[error("no relative equilibrium: {detail}")]
    NoEquilibrium { detail: String },

    /// Linearization has real, repeated, or otherwise non-elliptic spectrum.
    #[error("linearization is not elliptic: {detail}")]
    NotElliptic { detail: String },

    /// A small denominator below the resonance tolerance was hit while
    /// solving the homological equation.
    #[error("resonant frequency combination m = {combination:?}: <m, omega> = {denominator:.3e}")]
    Resonance {
        combination: Vec<i64>,
        denominator: f64,
    },

    /// Normal-form expansion requested around a point that is not a critical
    /// point of the Hamiltonian.
    #[error("expansion point is not an equilibrium: linear-part norm {gradient_norm:.3e}")]
    NotCritical { gradient_norm: f64 },

    /// Malformed user input (bad ranges, inconsistent parameters, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Format(#[from] serde_json::Error),
}
