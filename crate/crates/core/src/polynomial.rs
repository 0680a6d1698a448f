//! Multilinear polynomials over binary variables.
//!
//! Every monomial is a product of distinct variables: since `x_i ∈ {0, 1}`,
//! `x_i² = x_i` and products are reduced on construction. Terms are kept in a
//! `BTreeMap` keyed by the sorted variable set so iteration order (and hence
//! every printed or serialized form) is deterministic.
//!
//! Assignments are given either as bit slices (`&[u8]`, variable `i` at
//! position `i`) or packed into an integer index with variable 0 as the least
//! significant bit. The packed form is what the simulators use.

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::ops::{Add, Mul, Neg};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Product of distinct binary variables; the empty product is the constant term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<usize>);

impl Monomial {
    pub fn constant() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial(vec![i])
    }

    /// Builds a monomial from any variable list, applying `x_i² = x_i`.
    pub fn new<I: IntoIterator<Item = usize>>(vars: I) -> Self {
        let mut v: Vec<usize> = vars.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Monomial(v)
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    /// Union of the two variable sets (the reduced product).
    pub fn product(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Bit mask of the variables; only valid when every index is below 64.
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &v| m | (1u64 << v))
    }

    fn is_canonical(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }

    fn satisfied_by_bits(&self, x: &[u8]) -> bool {
        self.0.iter().all(|&v| x[v] != 0)
    }
}

/// Coefficient ring of a polynomial.
pub trait Coefficient:
    Copy + PartialEq + fmt::Debug + Add<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Coefficient for i64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

impl Coefficient for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// Multilinear polynomial in `n_vars` binary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<C> {
    n_vars: usize,
    terms: BTreeMap<Monomial, C>,
}

/// Real-coefficient objective, the usual home of `E(x)`.
pub type BinaryPolynomial = Polynomial<f64>;
/// Complex coefficients, used while expanding the codeword and residuals.
pub type ComplexPolynomial = Polynomial<Complex64>;

impl<C: Coefficient> Polynomial<C> {
    pub fn zero(n_vars: usize) -> Self {
        Polynomial {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: C) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(Monomial::constant(), c);
        p
    }

    /// The single-variable polynomial `x_i`.
    pub fn var(n_vars: usize, i: usize) -> Result<Self> {
        let mut p = Self::zero(n_vars);
        p.try_add_term(Monomial::var(i), C::one())?;
        Ok(p)
    }

    /// Builds a polynomial from `(variables, coefficient)` pairs; repeated
    /// monomials are summed.
    pub fn from_terms<I, V>(n_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (V, C)>,
        V: IntoIterator<Item = usize>,
    {
        let mut p = Self::zero(n_vars);
        for (vars, c) in terms {
            p.try_add_term(Monomial::new(vars), c)?;
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> C {
        self.terms.get(m).copied().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coefficient(&Monomial::constant())
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Adds `c·m` with bounds checking on the variable indices.
    pub fn try_add_term(&mut self, m: Monomial, c: C) -> Result<()> {
        if let Some(&v) = m.vars().last() {
            if v >= self.n_vars {
                return Err(Error::VarOutOfRange {
                    index: v,
                    n_vars: self.n_vars,
                });
            }
        }
        self.add_term(m, c);
        Ok(())
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.get(&m) {
            Some(&old) => old + c,
            None => c,
        };
        if sum.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
    }

    fn check_same_vars(&self, other: &Self) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(Error::VarCountMismatch {
                left: self.n_vars,
                right: other.n_vars,
            });
        }
        Ok(())
    }

    /// Coefficient-wise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-C::one()))
    }

    /// Distributive product with `x_i·x_i = x_i` applied to each new monomial.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        let mut out = Self::zero(self.n_vars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.product(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, k: C) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * k);
        }
        out
    }

    /// Applies `f` to every coefficient, dropping results that become zero.
    pub fn map_coefficients<D: Coefficient, F: Fn(C) -> D>(&self, f: F) -> Polynomial<D> {
        let mut out = Polynomial::zero(self.n_vars);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    /// Evaluates at a bit-vector assignment.
    pub fn eval(&self, x: &[u8]) -> Result<C> {
        if x.len() != self.n_vars {
            return Err(Error::LengthMismatch {
                expected: self.n_vars,
                got: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .filter(|(m, _)| m.satisfied_by_bits(x))
            .fold(C::zero(), |acc, (_, &c)| acc + c))
    }

    /// Evaluates at a packed assignment (variable 0 = least significant bit).
    pub fn eval_index(&self, x: u64) -> C {
        self.terms
            .iter()
            .filter(|(m, _)| {
                let mask = m.mask();
                x & mask == mask
            })
            .fold(C::zero(), |acc, (_, &c)| acc + c)
    }

    /// Values at every packed assignment `0..2^n`, in index order.
    pub fn evaluate_all(&self) -> Vec<C> {
        assert!(self.n_vars < 32, "exhaustive evaluation limited to n < 32");
        let masks: Vec<(u64, C)> = self.terms.iter().map(|(m, &c)| (m.mask(), c)).collect();
        (0..1u64 << self.n_vars)
            .map(|x| {
                masks
                    .iter()
                    .filter(|(mask, _)| x & mask == *mask)
                    .fold(C::zero(), |acc, &(_, c)| acc + c)
            })
            .collect()
    }

    /// True if every stored monomial is in canonical form and in range.
    pub fn is_well_formed(&self) -> bool {
        self.terms.iter().all(|(m, c)| {
            m.is_canonical() && !c.is_zero() && m.vars().iter().all(|&v| v < self.n_vars)
        })
    }
}

impl ComplexPolynomial {
    /// Conjugates every coefficient (the variables themselves are real).
    pub fn conj(&self) -> Self {
        self.map_coefficients(|c| c.conj())
    }

    /// Splits into real and imaginary parts.
    pub fn re_im(&self) -> (BinaryPolynomial, BinaryPolynomial) {
        (
            self.map_coefficients(|c| c.re),
            self.map_coefficients(|c| c.im),
        )
    }
}

impl BinaryPolynomial {
    pub fn to_complex(&self) -> ComplexPolynomial {
        self.map_coefficients(|c| Complex64::new(c, 0.0))
    }

    /// Rounds every coefficient to an integer multiple of `2^-precision_bits`.
    pub fn quantize(&self, precision_bits: u32) -> Result<IntegerPolynomial> {
        let factor = 2f64.powi(precision_bits as i32);
        let mut out = Polynomial::<i64>::zero(self.n_vars);
        for (m, &c) in &self.terms {
            let scaled = (c * factor).round();
            if !scaled.is_finite() || scaled.abs() > MAX_EXACT_COEFFICIENT {
                return Err(Error::CoefficientOverflow {
                    value: c,
                    precision_bits,
                });
            }
            out.add_term(m.clone(), scaled as i64);
        }
        Ok(IntegerPolynomial {
            poly: out,
            scale: 1.0 / factor,
        })
    }

    /// Exhaustive minimum and maximum; verification helper for n ≤ 20.
    pub fn exhaustive_range(&self) -> Option<(f64, f64)> {
        if self.n_vars > 20 {
            return None;
        }
        let values = self.evaluate_all();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

/// Largest magnitude an integer coefficient may take; keeps sums exact in f64 as well.
pub const MAX_EXACT_COEFFICIENT: f64 = (1u64 << 52) as f64;

/// Integer approximation of a real objective: `value ≈ scale · integer value`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerPolynomial {
    poly: Polynomial<i64>,
    scale: f64,
}

impl IntegerPolynomial {
    pub fn new(poly: Polynomial<i64>, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!(
                "scale must be positive, got {scale}"
            )));
        }
        Ok(IntegerPolynomial { poly, scale })
    }

    /// Unit-scale wrapper around an integer polynomial.
    pub fn from_poly(poly: Polynomial<i64>) -> Self {
        IntegerPolynomial { poly, scale: 1.0 }
    }

    pub fn poly(&self) -> &Polynomial<i64> {
        &self.poly
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_vars(&self) -> usize {
        self.poly.n_vars()
    }

    pub fn eval(&self, x: &[u8]) -> Result<i64> {
        self.poly.eval(x)
    }

    pub fn eval_index(&self, x: u64) -> i64 {
        self.poly.eval_index(x)
    }

    pub fn evaluate_all(&self) -> Vec<i64> {
        self.poly.evaluate_all()
    }

    /// Back to real coefficients, multiplied by the scale.
    pub fn dequantize(&self) -> BinaryPolynomial {
        self.poly.map_coefficients(|c| c as f64 * self.scale)
    }

    /// Sign-split bound: `lower ≤ min E ≤ max E ≤ upper`.
    pub fn range_bound(&self) -> (i64, i64) {
        let c0 = self.poly.constant_term();
        let (mut lo, mut hi) = (c0, c0);
        for (m, &c) in self.poly.terms() {
            if m.is_constant() {
                continue;
            }
            if c < 0 {
                lo += c;
            } else {
                hi += c;
            }
        }
        (lo, hi)
    }

    /// Serializes with a leading `# scale` comment, then one term per line.
    pub fn to_text(&self) -> String {
        format!("# scale {}\n{}", self.scale, self.poly.to_text())
    }

    /// Parses the `to_text` format; without a scale comment the scale is 1.
    pub fn from_text(s: &str, n_vars: usize) -> Result<Self> {
        let mut scale = 1.0;
        for (line_no, line) in s.lines().enumerate() {
            if let Some(rest) = line.trim().strip_prefix("# scale") {
                scale = rest.trim().parse().map_err(|_| Error::Parse {
                    line: line_no + 1,
                    msg: format!("bad scale {:?}", rest.trim()),
                })?;
            }
        }
        IntegerPolynomial::new(Polynomial::from_text(s, n_vars)?, scale)
    }
}

impl<C: Coefficient + Display> Polynomial<C> {
    /// One term per line: `coeff i j k`, the constant term as `coeff` alone.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.terms {
            out.push_str(&c.to_string());
            for v in m.vars() {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

impl<C: Coefficient + FromStr> Polynomial<C> {
    /// Parses the `to_text` format. Blank lines and `#` comments are skipped.
    pub fn from_text(s: &str, n_vars: usize) -> Result<Self> {
        let mut p = Self::zero(n_vars);
        for (line_no, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                line: line_no + 1,
                msg,
            };
            let mut fields = line.split_whitespace();
            let coeff_str = fields.next().unwrap_or_default();
            let c: C = coeff_str
                .parse()
                .map_err(|_| err(format!("bad coefficient {coeff_str:?}")))?;
            let vars = fields
                .map(|f| {
                    f.parse::<usize>()
                        .map_err(|_| err(format!("bad index {f:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            p.try_add_term(Monomial::new(vars), c)
                .map_err(|e| err(e.to_string()))?;
        }
        Ok(p)
    }
}

impl<C: Coefficient + Display> Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for v in m.vars() {
                write!(f, "·x{v}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, terms: &[(&[usize], f64)]) -> BinaryPolynomial {
        BinaryPolynomial::from_terms(n, terms.iter().map(|(v, c)| (v.iter().copied(), *c))).unwrap()
    }

    #[test]
    fn add_sums_coefficients() {
        let x0 = p(2, &[(&[0], 1.0)]);
        assert_eq!(x0.add(&x0).unwrap(), p(2, &[(&[0], 2.0)]));
    }

    #[test]
    fn add_cancels_terms() {
        let a = p(2, &[(&[0, 1], 1.0), (&[], 1.0)]);
        let b = p(2, &[(&[0, 1], -1.0)]);
        let s = a.add(&b).unwrap();
        assert_eq!(s, p(2, &[(&[], 1.0)]));
        assert_eq!(s.n_terms(), 1);
    }

    #[test]
    fn add_zero_is_identity() {
        let a = p(3, &[(&[0, 2], 1.5), (&[1], -2.0)]);
        assert_eq!(a.add(&BinaryPolynomial::zero(3)).unwrap(), a);
    }

    #[test]
    fn mismatched_var_counts_are_rejected() {
        let a = BinaryPolynomial::zero(2);
        let b = BinaryPolynomial::zero(3);
        assert!(matches!(a.add(&b), Err(Error::VarCountMismatch { .. })));
        assert!(matches!(a.mul(&b), Err(Error::VarCountMismatch { .. })));
    }

    #[test]
    fn mul_reduces_squares() {
        let a = p(2, &[(&[0], 1.0), (&[], 1.0)]);
        let b = p(2, &[(&[0], 1.0), (&[1], 1.0)]);
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod, p(2, &[(&[0], 2.0), (&[0, 1], 1.0), (&[1], 1.0)]));
        let x0 = p(2, &[(&[0], 1.0)]);
        assert_eq!(x0.mul(&x0).unwrap(), x0);
    }

    #[test]
    fn eval_sums_satisfied_terms() {
        let q = p(2, &[(&[0], 2.0), (&[0, 1], 1.0), (&[1], 1.0)]);
        assert_eq!(q.eval(&[1, 1]).unwrap(), 4.0);
        let with_const = q.add(&p(2, &[(&[], 7.0)])).unwrap();
        assert_eq!(with_const.eval(&[0, 0]).unwrap(), 7.0);
        assert!(matches!(q.eval(&[1]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn eval_index_matches_bit_slice() {
        let q = p(3, &[(&[0, 2], 1.5), (&[1], -2.0), (&[], 0.25)]);
        for x in 0..8u64 {
            let bits: Vec<u8> = (0..3).map(|i| ((x >> i) & 1) as u8).collect();
            assert_eq!(q.eval_index(x), q.eval(&bits).unwrap());
        }
        assert_eq!(q.evaluate_all()[5], q.eval_index(5));
    }

    #[test]
    fn quantize_rounds_and_scales() {
        let q = p(2, &[(&[0], 0.3), (&[1], -1.25)]).quantize(2).unwrap();
        assert_eq!(q.scale(), 0.25);
        assert_eq!(q.poly().coefficient(&Monomial::var(0)), 1);
        assert_eq!(q.poly().coefficient(&Monomial::var(1)), -5);
    }

    #[test]
    fn quantize_precision_zero_keeps_integers() {
        let q = p(2, &[(&[0, 1], 4.0), (&[0], -3.0), (&[], 2.0)])
            .quantize(0)
            .unwrap();
        assert_eq!(q.scale(), 1.0);
        assert_eq!(
            q.dequantize(),
            p(2, &[(&[0, 1], 4.0), (&[0], -3.0), (&[], 2.0)])
        );
    }

    #[test]
    fn quantize_drops_terms_that_round_to_zero() {
        let q = p(2, &[(&[0], 0.1), (&[1], 1.0)]).quantize(1).unwrap();
        assert_eq!(q.poly().n_terms(), 1);
    }

    #[test]
    fn quantize_overflow_is_an_error() {
        let q = p(1, &[(&[0], 1e300)]).quantize(8);
        assert!(matches!(q, Err(Error::CoefficientOverflow { .. })));
    }

    #[test]
    fn range_bound_splits_signs() {
        let q = p(2, &[(&[0, 1], 4.0), (&[0], -3.0), (&[], 2.0)])
            .quantize(0)
            .unwrap();
        assert_eq!(q.range_bound(), (-1, 6));
        let c = p(2, &[(&[], 5.0)]).quantize(0).unwrap();
        assert_eq!(c.range_bound(), (5, 5));
    }

    #[test]
    fn out_of_range_variable_is_rejected() {
        let r = BinaryPolynomial::from_terms(2, [(vec![2usize], 1.0)]);
        assert!(matches!(r, Err(Error::VarOutOfRange { .. })));
    }

    #[test]
    fn text_format_uses_coeff_then_indices() {
        let q = p(3, &[(&[], 2.0), (&[0, 2], -1.5)]);
        assert_eq!(q.to_text(), "2\n-1.5 0 2\n");
        assert_eq!(BinaryPolynomial::from_text(&q.to_text(), 3).unwrap(), q);
    }

    #[test]
    fn integer_text_round_trip_keeps_scale() {
        let q = p(3, &[(&[], 2.0), (&[0, 2], -1.5), (&[1], 0.75)])
            .quantize(3)
            .unwrap();
        let back = IntegerPolynomial::from_text(&q.to_text(), 3).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn text_parse_errors_report_line() {
        let e = BinaryPolynomial::from_text("1 0\nfoo 1\n", 2).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn exhaustive_range_on_small_polynomial() {
        let q = p(2, &[(&[0, 1], 4.0), (&[0], -3.0), (&[], 2.0)]);
        assert_eq!(q.exhaustive_range(), Some((-1.0, 3.0)));
    }
}
