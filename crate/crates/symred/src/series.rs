//! Sparse truncated multivariate power-series arithmetic.
//!
//! This module is the jet engine of the crate: Hamiltonians, generating
//! functions and geometric coefficients are all Taylor-expanded into a
//! [`TruncatedSeries`] and manipulated through the operations here.
//!
//! Conventions:
//!
//! - Variables carry the canonical ordering `(q_1 .. q_f, p_1 .. p_f)`, so
//!   with `2f` variables the symplectic structure matrix is
//!   `[[0, I], [-I, 0]]` and the Poisson bracket is
//!   `{a, b} = sum_k (da/dq_k db/dp_k - da/dp_k db/dq_k)`.
//! - A series keeps only terms of total degree at most `max_degree`; every
//!   operation truncates eagerly to maintain that bound.
//! - Canonical form: coefficients with absolute value below [`PRUNE_EPS`]
//!   are dropped after every operation, so long chains of Lie-series
//!   arithmetic do not accumulate numerical lint. Two series are equal
//!   exactly when their canonical term maps are equal.
//!
//! Degree bookkeeping treats a series as a jet of an unknown smooth
//! function: binary operations bound the result by the smaller operand
//! degree, and each differentiation lowers the bound by one. When the caller
//! knows a series is an exact polynomial (so no unknown tail exists), the
//! bound can be raised again with [`TruncatedSeries::with_degree_bound`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Coefficients with absolute value below this threshold are treated as zero
/// and removed when a series is brought to canonical form.
pub const PRUNE_EPS: f64 = 1e-14;

/// Exponent vector of a monomial, ordered graded-lexicographically:
/// lower total degree first, ties broken lexicographically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(SmallVec<[u8; 8]>);

impl MultiIndex {
    /// Multi-index with the given exponents.
    pub fn new(exponents: &[u8]) -> Self {
        MultiIndex(SmallVec::from_slice(exponents))
    }

    /// The zero multi-index (constant monomial) on `len` variables.
    pub fn zeros(len: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, len))
    }

    /// The multi-index of the bare variable `var` among `len` variables.
    pub fn unit(len: usize, var: usize) -> Self {
        let mut m = Self::zeros(len);
        m.0[var] = 1;
        m
    }

    /// Exponents as a slice.
    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    /// Number of variables.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when there are no variables.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree of the monomial.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// Component-wise sum (monomial product).
    pub(crate) fn sum(&self, other: &Self) -> Self {
        debug_assert_eq!(self.0.len(), other.0.len());
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    /// Copy with the exponent of `var` lowered by one.
    pub(crate) fn lowered(&self, var: usize) -> Self {
        debug_assert!(self.0[var] > 0);
        let mut m = self.clone();
        m.0[var] -= 1;
        m
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

/// Elementary functions available for composition with a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Sin,
    Cos,
    /// Requires a strictly positive constant term.
    Sqrt,
    /// Requires a nonzero constant term.
    Recip,
}

/// A multivariate polynomial truncated at a total degree, in canonical
/// (zero-pruned, degree-sorted) form.
///
/// Terms are stored sparsely in a map keyed by [`MultiIndex`]; iteration is
/// in graded-lexicographic order, so homogeneous components come out
/// contiguously and in a deterministic order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SeriesRecord", try_from = "SeriesRecord")]
pub struct TruncatedSeries {
    num_vars: usize,
    max_degree: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl TruncatedSeries {
    // ----- construction -------------------------------------------------

    /// The zero series.
    pub fn zero(num_vars: usize, max_degree: usize) -> Self {
        TruncatedSeries {
            num_vars,
            max_degree,
            terms: BTreeMap::new(),
        }
    }

    /// A constant series.
    pub fn constant(num_vars: usize, max_degree: usize, value: f64) -> Self {
        let mut terms = BTreeMap::new();
        if value.abs() >= PRUNE_EPS {
            terms.insert(MultiIndex::zeros(num_vars), value);
        }
        TruncatedSeries {
            num_vars,
            max_degree,
            terms,
        }
    }

    /// The bare variable `var` (zero when `max_degree` is 0, by truncation).
    pub fn variable(num_vars: usize, max_degree: usize, var: usize) -> Result<Self> {
        if var >= num_vars {
            return Err(Error::DimensionMismatch {
                context: "variable index",
                expected: num_vars,
                got: var,
            });
        }
        let mut s = Self::zero(num_vars, max_degree);
        if max_degree >= 1 {
            s.terms.insert(MultiIndex::unit(num_vars, var), 1.0);
        }
        Ok(s)
    }

    /// The affine jet `value + x_var`, the degree-`max_degree` expansion of
    /// the coordinate function `x_var` around the point with that coordinate
    /// equal to `value`.
    pub fn affine(num_vars: usize, max_degree: usize, value: f64, var: usize) -> Result<Self> {
        let mut s = Self::variable(num_vars, max_degree, var)?;
        if value.abs() >= PRUNE_EPS {
            s.terms.insert(MultiIndex::zeros(num_vars), value);
        }
        Ok(s)
    }

    /// Build a series from `(exponents, coefficient)` terms. Duplicated
    /// exponent vectors are summed. Terms of degree above `max_degree` are
    /// rejected: construction is exact, truncation belongs to arithmetic.
    pub fn from_terms<I, E>(num_vars: usize, max_degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (E, f64)>,
        E: AsRef<[u8]>,
    {
        let mut map = BTreeMap::new();
        for (exps, coeff) in terms {
            let exps = exps.as_ref();
            if exps.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    context: "term exponent vector",
                    expected: num_vars,
                    got: exps.len(),
                });
            }
            let index = MultiIndex::new(exps);
            if index.degree() > max_degree {
                return Err(Error::Invalid(format!(
                    "term {:?} has degree {} above the truncation degree {}",
                    index,
                    index.degree(),
                    max_degree
                )));
            }
            *map.entry(index).or_insert(0.0) += coeff;
        }
        Ok(Self::from_map(num_vars, max_degree, map))
    }

    /// Canonicalize a raw term map (prune small coefficients).
    fn from_map(num_vars: usize, max_degree: usize, mut terms: BTreeMap<MultiIndex, f64>) -> Self {
        terms.retain(|_, c| c.abs() >= PRUNE_EPS);
        TruncatedSeries {
            num_vars,
            max_degree,
            terms,
        }
    }

    // ----- inspection ---------------------------------------------------

    /// Number of variables.
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Truncation degree.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of stored (nonzero) terms, the constant term included.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// True when the canonical form has no terms.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    /// Coefficient of the given exponent vector (zero when absent).
    pub fn coefficient(&self, exponents: &[u8]) -> f64 {
        self.terms
            .get(&MultiIndex::new(exponents))
            .copied()
            .unwrap_or(0.0)
    }

    /// The constant (degree-zero) coefficient.
    pub fn constant_term(&self) -> f64 {
        self.terms
            .get(&MultiIndex::zeros(self.num_vars))
            .copied()
            .unwrap_or(0.0)
    }

    /// Largest absolute coefficient (zero for the zero series).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Sup-distance between coefficient maps, over the union of terms.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_vars(other, "coefficient comparison")?;
        let mut worst = 0.0_f64;
        for (index, &c) in &self.terms {
            worst = worst.max((c - other.terms.get(index).copied().unwrap_or(0.0)).abs());
        }
        for (index, &c) in &other.terms {
            if !self.terms.contains_key(index) {
                worst = worst.max(c.abs());
            }
        }
        Ok(worst)
    }

    fn check_same_vars(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.num_vars,
                got: other.num_vars,
            });
        }
        Ok(())
    }

    // ----- degree management --------------------------------------------

    /// Drop terms above `degree` and lower the stated bound accordingly.
    pub fn truncated(&self, degree: usize) -> Self {
        let bound = degree.min(self.max_degree);
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() <= bound)
            .map(|(m, &c)| (m.clone(), c))
            .collect();
        TruncatedSeries {
            num_vars: self.num_vars,
            max_degree: bound,
            terms,
        }
    }

    /// Restate the truncation bound.
    ///
    /// Lowering the bound truncates. Raising it is an exactness assertion by
    /// the caller — the claim that the series is a genuine polynomial with no
    /// unknown tail — and keeps the terms as they are. The graded normal-form
    /// machinery relies on this to recover degrees that the conservative jet
    /// bookkeeping would discard.
    pub fn with_degree_bound(&self, degree: usize) -> Self {
        if degree < self.max_degree {
            self.truncated(degree)
        } else {
            let mut s = self.clone();
            s.max_degree = degree;
            s
        }
    }

    /// The homogeneous component of the given total degree, with the same
    /// truncation bound.
    pub fn homogeneous_part(&self, degree: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() == degree)
            .map(|(m, &c)| (m.clone(), c))
            .collect();
        TruncatedSeries {
            num_vars: self.num_vars,
            max_degree: self.max_degree,
            terms,
        }
    }

    /// Smallest total degree with a nonzero term (`None` for the zero series).
    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().next().map(|m| m.degree())
    }

    // ----- linear-space operations --------------------------------------

    /// Sum; the result is truncated at the smaller of the two bounds.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other, "series addition")?;
        let bound = self.max_degree.min(other.max_degree);
        let mut map = BTreeMap::new();
        for (index, &c) in self.terms.iter().chain(other.terms.iter()) {
            if index.degree() <= bound {
                *map.entry(index.clone()).or_insert(0.0) += c;
            }
        }
        Ok(Self::from_map(self.num_vars, bound, map))
    }

    /// Difference; same truncation rule as [`TruncatedSeries::add`].
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Multiplication by a scalar.
    pub fn scale(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(m, &c)| (m.clone(), c * factor))
            .collect();
        Self::from_map(self.num_vars, self.max_degree, terms)
    }

    // ----- multiplicative structure -------------------------------------

    /// Product; truncated convolution at the smaller of the two bounds.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other, "series multiplication")?;
        let bound = self.max_degree.min(other.max_degree);
        let mut map = BTreeMap::new();
        accumulate_product(&mut map, self, other, bound, 1.0);
        Ok(Self::from_map(self.num_vars, bound, map))
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, exponent: u32) -> Result<Self> {
        let mut acc = Self::constant(self.num_vars, self.max_degree, 1.0);
        for _ in 0..exponent {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    // ----- calculus -----------------------------------------------------

    /// Partial derivative with respect to variable `var`. The truncation
    /// bound drops by one: the derivative of a degree-`d` jet is a
    /// degree-`d - 1` jet.
    pub fn derivative(&self, var: usize) -> Result<Self> {
        if var >= self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "variable index",
                expected: self.num_vars,
                got: var,
            });
        }
        let mut map = BTreeMap::new();
        for (index, &c) in &self.terms {
            let e = index.exponents()[var];
            if e > 0 {
                map.insert(index.lowered(var), c * f64::from(e));
            }
        }
        Ok(Self::from_map(
            self.num_vars,
            self.max_degree.saturating_sub(1),
            map,
        ))
    }

    /// Canonical Poisson bracket under the `(q_1..q_f, p_1..p_f)` ordering:
    /// `{a, b} = sum_k (da/dq_k db/dp_k - da/dp_k db/dq_k)`.
    ///
    /// Requires an even number of variables. The result is bounded by
    /// `min(deg a, deg b) - 1`: one derivative of an unknown tail can pollute
    /// that degree and above. For exact polynomials the caller may restore a
    /// higher bound with [`TruncatedSeries::with_degree_bound`].
    pub fn poisson_bracket(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other, "poisson bracket")?;
        if !self.num_vars.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "poisson bracket needs an even number of variables (q, p pairs), got {}",
                self.num_vars
            )));
        }
        let dof = self.num_vars / 2;
        let bound = self.max_degree.min(other.max_degree).saturating_sub(1);
        let mut map = BTreeMap::new();
        for k in 0..dof {
            let a_q = self.derivative(k)?;
            let a_p = self.derivative(dof + k)?;
            let b_q = other.derivative(k)?;
            let b_p = other.derivative(dof + k)?;
            accumulate_product(&mut map, &a_q, &b_p, bound, 1.0);
            accumulate_product(&mut map, &a_p, &b_q, bound, -1.0);
        }
        Ok(Self::from_map(self.num_vars, bound, map))
    }

    // ----- composition --------------------------------------------------

    /// Compose an elementary function with the series: for `f` one of
    /// `exp, sin, cos, sqrt, recip`, build the jet of `f(self)` by Taylor
    /// expansion around the constant term `c0` and Horner evaluation in the
    /// zero-constant part.
    ///
    /// `sqrt` requires `c0 > 0` and `recip` requires `c0 != 0`; violations
    /// are reported as domain errors, which is how a chart-singular
    /// expansion point announces itself to callers.
    pub fn compose_elementary(&self, function: Elementary) -> Result<Self> {
        let c0 = self.constant_term();
        let d = self.max_degree;
        // taylor[k] = f^(k)(c0) / k!
        let mut taylor = vec![0.0; d + 1];
        match function {
            Elementary::Exp => {
                taylor[0] = c0.exp();
                for k in 1..=d {
                    taylor[k] = taylor[k - 1] / k as f64;
                }
            }
            Elementary::Sin | Elementary::Cos => {
                let (s, c) = c0.sin_cos();
                // Derivative cycles: sin -> [sin, cos, -sin, -cos],
                // cos -> [cos, -sin, -cos, sin].
                let cycle = match function {
                    Elementary::Sin => [s, c, -s, -c],
                    _ => [c, -s, -c, s],
                };
                let mut factorial = 1.0;
                for (k, slot) in taylor.iter_mut().enumerate() {
                    if k > 0 {
                        factorial *= k as f64;
                    }
                    *slot = cycle[k % 4] / factorial;
                }
            }
            Elementary::Sqrt => {
                if c0 <= 0.0 {
                    return Err(Error::Domain {
                        op: "sqrt",
                        constant: c0,
                    });
                }
                taylor[0] = c0.sqrt();
                for k in 1..=d {
                    // Binomial series: t_k = t_{k-1} * (1/2 - (k-1)) / (k c0).
                    taylor[k] = taylor[k - 1] * (0.5 - (k as f64 - 1.0)) / (k as f64 * c0);
                }
            }
            Elementary::Recip => {
                if c0 == 0.0 {
                    return Err(Error::Domain {
                        op: "recip",
                        constant: c0,
                    });
                }
                taylor[0] = 1.0 / c0;
                for k in 1..=d {
                    taylor[k] = -taylor[k - 1] / c0;
                }
            }
        }

        // Horner in the zero-constant part s = self - c0 (valuation >= 1,
        // so the truncated powers are exact).
        let centered = self.sub(&Self::constant(self.num_vars, d, c0))?;
        let mut acc = Self::constant(self.num_vars, d, taylor[d]);
        for k in (0..d).rev() {
            acc = acc.mul(&centered)?;
            acc = acc.add(&Self::constant(self.num_vars, d, taylor[k]))?;
        }
        Ok(acc)
    }

    /// Substitute a series for every variable: `x_i := args[i]`. All
    /// arguments must share a variable count and truncation degree, which
    /// the result inherits.
    ///
    /// The receiver is treated as an exact polynomial. When an argument has
    /// a nonzero constant term, its truncated tail would feed back into low
    /// degrees of the result; callers substituting jets (rather than exact
    /// polynomials, as in a Taylor shift) should keep arguments
    /// constant-free.
    pub fn substitute(&self, args: &[TruncatedSeries]) -> Result<Self> {
        if args.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "substitution arguments",
                expected: self.num_vars,
                got: args.len(),
            });
        }
        let (new_vars, bound) = match args.first() {
            Some(first) => (first.num_vars, first.max_degree),
            // A series on zero variables is its constant term.
            None => return Ok(Self::constant(0, self.max_degree, self.constant_term())),
        };
        for arg in args {
            if arg.num_vars != new_vars || arg.max_degree != bound {
                return Err(Error::Invalid(
                    "substitution arguments must share a variable count and truncation degree"
                        .to_string(),
                ));
            }
        }

        // Images of monomials, built by peeling one variable at a time and
        // cached so shared divisors are computed once.
        let mut cache: std::collections::HashMap<MultiIndex, TruncatedSeries> =
            std::collections::HashMap::new();
        cache.insert(
            MultiIndex::zeros(self.num_vars),
            Self::constant(new_vars, bound, 1.0),
        );

        fn image(
            index: &MultiIndex,
            args: &[TruncatedSeries],
            cache: &mut std::collections::HashMap<MultiIndex, TruncatedSeries>,
        ) -> Result<TruncatedSeries> {
            if let Some(hit) = cache.get(index) {
                return Ok(hit.clone());
            }
            let var = index
                .exponents()
                .iter()
                .position(|&e| e > 0)
                .expect("nonconstant monomial");
            let parent = image(&index.lowered(var), args, cache)?;
            let value = parent.mul(&args[var])?;
            cache.insert(index.clone(), value.clone());
            Ok(value)
        }

        let mut acc = Self::zero(new_vars, bound);
        for (index, &c) in &self.terms {
            acc = acc.add(&image(index, args, &mut cache)?.scale(c))?;
        }
        Ok(acc)
    }

    /// Linear change of variables `x_i := sum_j map[(i, j)] y_j`. The matrix
    /// must have one row per current variable; the result has one variable
    /// per column and keeps the truncation degree.
    pub fn substitute_linear(&self, map: &DMatrix<f64>) -> Result<Self> {
        if map.nrows() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "linear substitution rows",
                expected: self.num_vars,
                got: map.nrows(),
            });
        }
        let new_vars = map.ncols();
        let args: Vec<TruncatedSeries> = (0..self.num_vars)
            .map(|i| {
                Self::from_terms(
                    new_vars,
                    self.max_degree,
                    (0..new_vars).map(|j| (MultiIndex::unit(new_vars, j).0, map[(i, j)])),
                )
            })
            .collect::<Result<_>>()?;
        self.substitute(&args)
    }

    /// Taylor shift: re-expand the polynomial around `origin`, i.e.
    /// substitute `x_i := x_i + origin[i]`. The receiver is treated as an
    /// exact polynomial, so the shift loses nothing.
    pub fn shifted(&self, origin: &[f64]) -> Result<Self> {
        if origin.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "shift origin",
                expected: self.num_vars,
                got: origin.len(),
            });
        }
        let args: Vec<TruncatedSeries> = (0..self.num_vars)
            .map(|i| Self::affine(self.num_vars, self.max_degree, origin[i], i))
            .collect::<Result<_>>()?;
        self.substitute(&args)
    }

    // ----- evaluation ---------------------------------------------------

    /// Evaluate the polynomial at a point.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "evaluation point",
                expected: self.num_vars,
                got: point.len(),
            });
        }
        let mut total = 0.0;
        for (index, &c) in &self.terms {
            let mut monomial = c;
            for (x, &e) in point.iter().zip(index.exponents()) {
                if e > 0 {
                    monomial *= x.powi(i32::from(e));
                }
            }
            total += monomial;
        }
        Ok(total)
    }

    /// Gradient at a point: the vector of partial derivatives.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        (0..self.num_vars)
            .map(|k| self.derivative(k)?.evaluate(point))
            .collect()
    }
}

/// Accumulate `sign * a * b`, truncated at `bound`, into a raw term map.
fn accumulate_product(
    acc: &mut BTreeMap<MultiIndex, f64>,
    a: &TruncatedSeries,
    b: &TruncatedSeries,
    bound: usize,
    sign: f64,
) {
    for (ma, &ca) in &a.terms {
        let da = ma.degree();
        if da > bound {
            continue;
        }
        for (mb, &cb) in &b.terms {
            if da + mb.degree() > bound {
                continue;
            }
            *acc.entry(ma.sum(mb)).or_insert(0.0) += sign * ca * cb;
        }
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TruncatedSeries(vars={}, deg<={}, {})",
            self.num_vars, self.max_degree, self
        )
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (index, c)) in self.terms().enumerate() {
            if n == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            write!(f, "{}", c.abs())?;
            for (v, &e) in index.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, " x{}", v + 1)?,
                    _ => write!(f, " x{}^{}", v + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

/// Serialization form of a series: exponent vectors paired with
/// coefficients, under the stated variable count and truncation degree.
#[derive(Serialize, Deserialize)]
pub struct SeriesRecord {
    pub num_vars: usize,
    pub max_degree: usize,
    pub terms: Vec<(Vec<u8>, f64)>,
}

impl From<TruncatedSeries> for SeriesRecord {
    fn from(series: TruncatedSeries) -> Self {
        SeriesRecord {
            num_vars: series.num_vars,
            max_degree: series.max_degree,
            terms: series
                .terms()
                .map(|(m, c)| (m.exponents().to_vec(), c))
                .collect(),
        }
    }
}

impl TryFrom<SeriesRecord> for TruncatedSeries {
    type Error = Error;

    fn try_from(record: SeriesRecord) -> Result<Self> {
        TruncatedSeries::from_terms(record.num_vars, record.max_degree, record.terms)
    }
}
