//! Complex canonical coordinates for normal-form computations.
//!
//! A real canonical pair `(q_k, p_k)` maps to `z_k = (q_k + i p_k)/sqrt(2)`
//! and its conjugate `zbar_k = (q_k - i p_k)/sqrt(2)`. Under this convention
//! `{z_k, zbar_k} = -i`, and the canonical bracket becomes
//!
//! ```text
//! {f, g} = i * sum_k (df/dzbar_k dg/dz_k - df/dz_k dg/dzbar_k).
//! ```
//!
//! The payoff is that the quadratic part of an elliptic Hamiltonian
//! diagonalizes as `H_2 = sum_k w_k z_k zbar_k`, so its adjoint operator
//! `D = {H_2, .}` acts on a monomial `z^a zbar^b` as multiplication by
//! `i <w, a - b>`: the homological equation of each normalization stage
//! is solved coefficient by coefficient.
//!
//! Variables are ordered `(z_1 .. z_f, zbar_1 .. zbar_f)`, mirroring the
//! real ordering `(q_1 .. q_f, p_1 .. p_f)`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{MultiIndex, TruncatedSeries, PRUNE_EPS};

/// A truncated power series in conjugate complex canonical variables.
///
/// Shares the sparse graded-lexicographic representation and eager
/// truncation of [`TruncatedSeries`], with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSeries {
    num_vars: usize,
    max_degree: usize,
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl ComplexSeries {
    // ----- construction -------------------------------------------------

    /// The zero series.
    pub fn zero(num_vars: usize, max_degree: usize) -> Self {
        ComplexSeries {
            num_vars,
            max_degree,
            terms: BTreeMap::new(),
        }
    }

    /// A constant series.
    pub fn constant(num_vars: usize, max_degree: usize, value: Complex64) -> Self {
        let mut s = Self::zero(num_vars, max_degree);
        if value.norm() >= PRUNE_EPS {
            s.terms.insert(MultiIndex::zeros(num_vars), value);
        }
        s
    }

    /// Build from `(exponents, coefficient)` terms; duplicates are summed,
    /// terms above the truncation degree rejected.
    pub fn from_terms<I, E>(num_vars: usize, max_degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (E, Complex64)>,
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
            *map.entry(index).or_insert(Complex64::ZERO) += coeff;
        }
        Ok(Self::from_map(num_vars, max_degree, map))
    }

    /// The diagonal oscillator `sum_k frequencies[k] * z_k zbar_k`.
    pub fn oscillator(frequencies: &[f64], max_degree: usize) -> Result<Self> {
        let dof = frequencies.len();
        Self::from_terms(
            2 * dof,
            max_degree,
            frequencies.iter().enumerate().map(|(k, &w)| {
                let mut exps = vec![0u8; 2 * dof];
                exps[k] = 1;
                exps[dof + k] = 1;
                (exps, Complex64::new(w, 0.0))
            }),
        )
    }

    fn from_map(
        num_vars: usize,
        max_degree: usize,
        mut terms: BTreeMap<MultiIndex, Complex64>,
    ) -> Self {
        terms.retain(|_, c| c.norm() >= PRUNE_EPS);
        ComplexSeries {
            num_vars,
            max_degree,
            terms,
        }
    }

    // ----- inspection ---------------------------------------------------

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, Complex64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    /// Coefficient of the given exponent vector (zero when absent).
    pub fn coefficient(&self, exponents: &[u8]) -> Complex64 {
        self.terms
            .get(&MultiIndex::new(exponents))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    /// Largest coefficient norm.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Sup-distance between coefficient maps.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_vars(other, "coefficient comparison")?;
        let mut worst = 0.0_f64;
        for (index, &c) in &self.terms {
            worst =
                worst.max((c - other.terms.get(index).copied().unwrap_or(Complex64::ZERO)).norm());
        }
        for (index, &c) in &other.terms {
            if !self.terms.contains_key(index) {
                worst = worst.max(c.norm());
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

    /// Homogeneous component of the given degree, same truncation bound.
    pub fn homogeneous_part(&self, degree: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() == degree)
            .map(|(m, &c)| (m.clone(), c))
            .collect();
        ComplexSeries {
            num_vars: self.num_vars,
            max_degree: self.max_degree,
            terms,
        }
    }

    /// Restate the truncation bound (raising it asserts polynomial
    /// exactness, as for the real series type).
    pub fn with_degree_bound(&self, degree: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() <= degree)
            .map(|(m, &c)| (m.clone(), c))
            .collect();
        ComplexSeries {
            num_vars: self.num_vars,
            max_degree: degree,
            terms,
        }
    }

    /// Smallest total degree with a nonzero term.
    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().next().map(|m| m.degree())
    }

    // ----- arithmetic ---------------------------------------------------

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other, "series addition")?;
        let bound = self.max_degree.min(other.max_degree);
        let mut map = BTreeMap::new();
        for (index, &c) in self.terms.iter().chain(other.terms.iter()) {
            if index.degree() <= bound {
                *map.entry(index.clone()).or_insert(Complex64::ZERO) += c;
            }
        }
        Ok(Self::from_map(self.num_vars, bound, map))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(m, &c)| (m.clone(), c * factor))
            .collect();
        Self::from_map(self.num_vars, self.max_degree, terms)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other, "series multiplication")?;
        let bound = self.max_degree.min(other.max_degree);
        let mut map = BTreeMap::new();
        accumulate_product(&mut map, self, other, bound, Complex64::new(1.0, 0.0));
        Ok(Self::from_map(self.num_vars, bound, map))
    }

    /// Partial derivative; the truncation bound drops by one.
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

    /// Canonical bracket in conjugate complex variables:
    /// `{f, g} = i sum_k (df/dzbar_k dg/dz_k - df/dz_k dg/dzbar_k)`.
    pub fn poisson_bracket(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other, "poisson bracket")?;
        if !self.num_vars.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "poisson bracket needs an even number of variables (z, zbar pairs), got {}",
                self.num_vars
            )));
        }
        let dof = self.num_vars / 2;
        let bound = self.max_degree.min(other.max_degree).saturating_sub(1);
        let i = Complex64::new(0.0, 1.0);
        let mut map = BTreeMap::new();
        for k in 0..dof {
            let f_z = self.derivative(k)?;
            let f_zbar = self.derivative(dof + k)?;
            let g_z = other.derivative(k)?;
            let g_zbar = other.derivative(dof + k)?;
            accumulate_product(&mut map, &f_zbar, &g_z, bound, i);
            accumulate_product(&mut map, &f_z, &g_zbar, bound, -i);
        }
        Ok(Self::from_map(self.num_vars, bound, map))
    }

    /// Substitute a series for every variable (receiver treated as an exact
    /// polynomial; see the real counterpart for the tail caveat).
    pub fn substitute(&self, args: &[ComplexSeries]) -> Result<Self> {
        if args.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "substitution arguments",
                expected: self.num_vars,
                got: args.len(),
            });
        }
        let (new_vars, bound) = match args.first() {
            Some(first) => (first.num_vars, first.max_degree),
            None => {
                let c = self.terms.get(&MultiIndex::zeros(0)).copied();
                return Ok(Self::constant(
                    0,
                    self.max_degree,
                    c.unwrap_or(Complex64::ZERO),
                ));
            }
        };
        for arg in args {
            if arg.num_vars != new_vars || arg.max_degree != bound {
                return Err(Error::Invalid(
                    "substitution arguments must share a variable count and truncation degree"
                        .to_string(),
                ));
            }
        }

        let mut cache: HashMap<MultiIndex, ComplexSeries> = HashMap::new();
        cache.insert(
            MultiIndex::zeros(self.num_vars),
            Self::constant(new_vars, bound, Complex64::new(1.0, 0.0)),
        );

        fn image(
            index: &MultiIndex,
            args: &[ComplexSeries],
            cache: &mut HashMap<MultiIndex, ComplexSeries>,
        ) -> Result<ComplexSeries> {
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

    // ----- conversion against real series -------------------------------

    /// Express a real-coefficient series in the complex variables:
    /// substitute `q_k = (z_k + zbar_k)/sqrt(2)`,
    /// `p_k = -i (z_k - zbar_k)/sqrt(2)`.
    pub fn from_real(series: &TruncatedSeries) -> Result<Self> {
        let num_vars = series.num_vars();
        if !num_vars.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "complex conversion needs an even number of variables, got {num_vars}"
            )));
        }
        let dof = num_vars / 2;
        let bound = series.max_degree();
        let lifted = Self::from_map(
            num_vars,
            bound,
            series
                .terms()
                .map(|(m, c)| (m.clone(), Complex64::new(c, 0.0)))
                .collect(),
        );
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let mi_r = Complex64::new(0.0, -FRAC_1_SQRT_2);
        let mut args = Vec::with_capacity(num_vars);
        for k in 0..dof {
            // q_k = (z_k + zbar_k)/sqrt(2)
            args.push(Self::from_terms(
                num_vars,
                bound,
                [
                    (MultiIndex::unit(num_vars, k).exponents().to_vec(), r),
                    (MultiIndex::unit(num_vars, dof + k).exponents().to_vec(), r),
                ],
            )?);
        }
        for k in 0..dof {
            // p_k = -i (z_k - zbar_k)/sqrt(2)
            args.push(Self::from_terms(
                num_vars,
                bound,
                [
                    (MultiIndex::unit(num_vars, k).exponents().to_vec(), mi_r),
                    (MultiIndex::unit(num_vars, dof + k).exponents().to_vec(), -mi_r),
                ],
            )?);
        }
        lifted.substitute(&args)
    }

    /// Express the series back in real canonical variables: substitute
    /// `z_k = (q_k + i p_k)/sqrt(2)`, `zbar_k = (q_k - i p_k)/sqrt(2)` and
    /// demote the coefficients to real numbers.
    ///
    /// Fails when any resulting coefficient has an imaginary part larger
    /// than `tolerance`: the series violated the reality condition
    /// `c(a, b) = conj(c(b, a))`.
    pub fn to_real(&self, tolerance: f64) -> Result<TruncatedSeries> {
        if !self.num_vars.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "real conversion needs an even number of variables, got {}",
                self.num_vars
            )));
        }
        let dof = self.num_vars / 2;
        let bound = self.max_degree;
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let i_r = Complex64::new(0.0, FRAC_1_SQRT_2);
        let mut args = Vec::with_capacity(self.num_vars);
        for k in 0..dof {
            // z_k = (q_k + i p_k)/sqrt(2)
            args.push(Self::from_terms(
                self.num_vars,
                bound,
                [
                    (MultiIndex::unit(self.num_vars, k).exponents().to_vec(), r),
                    (
                        MultiIndex::unit(self.num_vars, dof + k).exponents().to_vec(),
                        i_r,
                    ),
                ],
            )?);
        }
        for k in 0..dof {
            // zbar_k = (q_k - i p_k)/sqrt(2)
            args.push(Self::from_terms(
                self.num_vars,
                bound,
                [
                    (MultiIndex::unit(self.num_vars, k).exponents().to_vec(), r),
                    (
                        MultiIndex::unit(self.num_vars, dof + k).exponents().to_vec(),
                        -i_r,
                    ),
                ],
            )?);
        }
        let substituted = self.substitute(&args)?;

        let mut worst = 0.0_f64;
        let mut terms = Vec::with_capacity(substituted.terms.len());
        for (index, &c) in &substituted.terms {
            worst = worst.max(c.im.abs());
            terms.push((index.exponents().to_vec(), c.re));
        }
        if worst > tolerance {
            return Err(Error::Invalid(format!(
                "series violates the reality condition: imaginary residue {worst:.3e} \
                 exceeds tolerance {tolerance:.3e}"
            )));
        }
        TruncatedSeries::from_terms(self.num_vars, bound, terms)
    }

    /// Project onto the subspace satisfying the reality condition by
    /// averaging `c(a, b)` with `conj(c(b, a))`. Used to stop roundoff from
    /// drifting a nominally real Hamiltonian off the real slice during long
    /// normal-form recursions.
    pub fn hermitianized(&self) -> Result<Self> {
        if !self.num_vars.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "reality projection needs an even number of variables, got {}",
                self.num_vars
            )));
        }
        let dof = self.num_vars / 2;
        let mut map = BTreeMap::new();
        for (index, &c) in &self.terms {
            let exps = index.exponents();
            let mut swapped = vec![0u8; self.num_vars];
            swapped[..dof].copy_from_slice(&exps[dof..]);
            swapped[dof..].copy_from_slice(&exps[..dof]);
            let partner = self
                .terms
                .get(&MultiIndex::new(&swapped))
                .copied()
                .unwrap_or(Complex64::ZERO);
            map.insert(index.clone(), (c + partner.conj()) / 2.0);
        }
        Ok(Self::from_map(self.num_vars, self.max_degree, map))
    }
}

fn accumulate_product(
    acc: &mut BTreeMap<MultiIndex, Complex64>,
    a: &ComplexSeries,
    b: &ComplexSeries,
    bound: usize,
    factor: Complex64,
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
            *acc.entry(ma.sum(mb)).or_insert(Complex64::ZERO) += factor * ca * cb;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_monomial(dof: usize, max_degree: usize, z: &[u8], zbar: &[u8]) -> ComplexSeries {
        let mut exps = z.to_vec();
        exps.extend_from_slice(zbar);
        ComplexSeries::from_terms(2 * dof, max_degree, [(exps, Complex64::new(1.0, 0.0))])
            .unwrap()
    }

    #[test]
    fn conjugate_pair_bracket_is_minus_i() {
        let z = z_monomial(1, 2, &[1], &[0]);
        let zbar = z_monomial(1, 2, &[0], &[1]);
        let bracket = z.poisson_bracket(&zbar).unwrap();
        let expected = ComplexSeries::constant(2, 1, Complex64::new(0.0, -1.0));
        assert!(bracket.max_coeff_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn action_maps_to_z_zbar() {
        // (q^2 + p^2)/2 becomes exactly z zbar.
        let q = TruncatedSeries::variable(2, 2, 0).unwrap();
        let p = TruncatedSeries::variable(2, 2, 1).unwrap();
        let action = q
            .pow(2)
            .unwrap()
            .add(&p.pow(2).unwrap())
            .unwrap()
            .scale(0.5);
        let complex = ComplexSeries::from_real(&action).unwrap();
        let expected = z_monomial(1, 2, &[1], &[1]);
        assert!(complex.max_coeff_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn real_complex_roundtrip() {
        let f = TruncatedSeries::from_terms(
            4,
            4,
            [
                ([1u8, 0, 0, 0], 0.7),
                ([0, 1, 0, 1], -1.3),
                ([2, 0, 1, 0], 0.25),
                ([0, 0, 0, 4], 2.0),
            ],
        )
        .unwrap();
        let back = ComplexSeries::from_real(&f).unwrap().to_real(1e-12).unwrap();
        assert!(back.max_coeff_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn conversion_is_a_bracket_morphism() {
        let a = TruncatedSeries::from_terms(2, 3, [([2u8, 0], 1.0), ([1, 1], -0.5)]).unwrap();
        let b = TruncatedSeries::from_terms(2, 3, [([0u8, 2], 0.75), ([1, 0], 2.0)]).unwrap();
        let real_bracket = ComplexSeries::from_real(&a.poisson_bracket(&b).unwrap()).unwrap();
        let complex_bracket = ComplexSeries::from_real(&a)
            .unwrap()
            .poisson_bracket(&ComplexSeries::from_real(&b).unwrap())
            .unwrap();
        assert!(real_bracket.max_coeff_diff(&complex_bracket).unwrap() < 1e-13);
    }

    #[test]
    fn oscillator_adjoint_acts_diagonally() {
        // {H_2, z^a zbar^b} = i <w, a - b> z^a zbar^b.
        let w = [0.9, 1.7];
        let h2 = ComplexSeries::oscillator(&w, 6).unwrap();
        let monomial = z_monomial(2, 6, &[2, 0], &[0, 1]);
        let bracket = h2.poisson_bracket(&monomial).unwrap();
        let eigenvalue = Complex64::new(0.0, 2.0 * w[0] - w[1]);
        assert!(
            bracket
                .max_coeff_diff(&monomial.scale(eigenvalue))
                .unwrap()
                < 1e-14
        );
    }

    #[test]
    fn nonreal_series_fails_reality_check() {
        // z alone maps to (q + i p)/sqrt(2): imaginary coefficient on p.
        let z = z_monomial(1, 1, &[1], &[0]);
        assert!(z.to_real(1e-12).is_err());
    }

    #[test]
    fn hermitian_projection_restores_reality() {
        // Perturb one coefficient of a real series off the real slice; the
        // projection must land back on a convertible series.
        let f = TruncatedSeries::from_terms(2, 2, [([2u8, 0], 1.0), ([0, 2], 1.0)]).unwrap();
        let mut complex = ComplexSeries::from_real(&f).unwrap();
        let noise = ComplexSeries::from_terms(
            2,
            2,
            [([1u8, 1], Complex64::new(0.0, 1e-6))],
        )
        .unwrap();
        complex = complex.add(&noise).unwrap();
        assert!(complex.to_real(1e-9).is_err());
        let fixed = complex.hermitianized().unwrap();
        let back = fixed.to_real(1e-12).unwrap();
        assert!(back.max_coeff_diff(&f).unwrap() < 1e-12);
    }
}
