//! Dense univariate polynomials with complex coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Polynomial stored by ascending coefficient, `coeffs[k]` multiplies `x^k`.
///
/// Trailing zeros are trimmed exactly on construction, so the last stored
/// coefficient is the nonzero leading one. The zero polynomial has no
/// coefficients. Small coefficients are never flushed implicitly; use
/// [`ComplexPoly::cleanup`] for that.
#[derive(Clone, Default, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// `c * x^k`.
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// The linear factor `x - a`.
    pub fn linear(a: Complex64) -> Self {
        Self::new(vec![-a, Complex64::new(1.0, 0.0)])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of `x^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree as a signed integer with `-1` for the zero polynomial.
    pub fn degree_signed(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Value and first derivative in a single Horner pass.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// `sum |c_k| |x|^k`, the natural scale of `p(x)` for backward error.
    pub fn abs_eval(&self, x: Complex64) -> f64 {
        let r = x.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(Complex64::new(0.0, 0.0));
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Self::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Scaled to leading coefficient one. The zero polynomial is returned as is.
    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        self.scale(self.leading().inv())
    }

    /// Zeroes every coefficient with modulus at most `eps`, then trims.
    pub fn cleanup(&self, eps: f64) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| if c.norm() <= eps { Complex64::default() } else { c })
                .collect(),
        )
    }

    /// Long division `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn divrem(&self, divisor: &ComplexPoly) -> Result<(ComplexPoly, ComplexPoly)> {
        let dd = divisor.degree().ok_or(Error::DivisionByZeroPolynomial)?;
        let Some(nd) = self.degree() else {
            return Ok((Self::zero(), Self::zero()));
        };
        if nd < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let lead_inv = divisor.leading().inv();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Complex64::default(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let q = rem[k + dd] * lead_inv;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            // the leading term cancels by construction
            rem[k + dd] = Complex64::default();
        }
        rem.truncate(dd);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Monic polynomial with exactly the given roots.
    ///
    /// Expanded in double-double arithmetic, so coefficients are correctly
    /// rounded up to a condition factor of order `eps^2`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut re = vec![Dd::from(1.0)];
        let mut im = vec![Dd::from(0.0)];
        for &r in roots {
            re.push(Dd::from(0.0));
            im.push(Dd::from(0.0));
            for k in (0..re.len()).rev() {
                let (cr, ci) = (re[k], im[k]);
                let (pr, pi) = if k > 0 { (re[k - 1], im[k - 1]) } else { (Dd::from(0.0), Dd::from(0.0)) };
                re[k] = pr.sub(cr.mul(r.re)).add(ci.mul(r.im));
                im[k] = pi.sub(ci.mul(r.re)).sub(cr.mul(r.im));
            }
        }
        Self::new(re.iter().zip(&im).map(|(a, b)| Complex64::new(a.value(), b.value())).collect())
    }

    /// Coefficients of `p(x + a)`.
    pub fn taylor_shift(&self, a: Complex64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for k in (i..n.saturating_sub(1)).rev() {
                let next = c[k + 1];
                c[k] += a * next;
            }
        }
        Self::new(c)
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Maximum coefficient distance, treating missing coefficients as zero.
    pub fn max_coeff_distance(&self, other: &ComplexPoly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for ComplexPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == Complex64::default() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})x")?,
                _ => write!(f, "({c})x^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &ComplexPoly {
    type Output = ComplexPoly;
    fn add(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &ComplexPoly {
    type Output = ComplexPoly;
    fn sub(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, rhs: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPoly::zero();
        }
        let mut out = vec![Complex64::default(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPoly::new(out)
    }
}

impl Neg for &ComplexPoly {
    type Output = ComplexPoly;
    fn neg(self) -> ComplexPoly {
        ComplexPoly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for ComplexPoly {
            type Output = ComplexPoly;
            fn $method(self, rhs: ComplexPoly) -> ComplexPoly {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

/// Complex numbers travel as `[re, im]` pairs.
pub(crate) fn c_to_pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

pub(crate) fn pair_to_c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Serde adapter for a single complex scalar as `[re, im]`.
pub mod complex_pair {
    use super::*;

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        c_to_pair(*c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        <[f64; 2]>::deserialize(d).map(pair_to_c)
    }
}

/// Serde adapter for a list of complex scalars.
pub mod complex_pairs {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(|&c| c_to_pair(c)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?
            .into_iter()
            .map(pair_to_c)
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    #[serde(with = "complex_pairs")]
    coeffs: Vec<Complex64>,
}

impl Serialize for ComplexPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            coeffs: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        if repr.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(serde::de::Error::custom("non-finite coefficient"));
        }
        Ok(ComplexPoly::new(repr.coeffs))
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Self {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Self { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let v = Self::quick_two_sum(s.hi, s.lo + t.hi);
        Self::quick_two_sum(v.hi, v.lo + t.lo)
    }

    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    fn mul(self, b: f64) -> Self {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Self::quick_two_sum(p, e + self.lo * b)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        let p = ComplexPoly::from_real(&[-2.0, 0.0, 4.0]);
        assert_eq!(p.eval(c(1.0)), c(2.0));
        let zero = ComplexPoly::from_real(&[0.0]);
        assert!(zero.is_zero());
        assert_eq!(zero.eval(Complex64::new(7.0, 3.0)), c(0.0));
        assert_eq!(ComplexPoly::one().eval(Complex64::new(-3.5, 9.0)), c(1.0));
    }

    #[test]
    fn derivative_examples() {
        let p = ComplexPoly::from_real(&[-2.0, 0.0, 4.0]);
        assert_eq!(p.derivative(), ComplexPoly::from_real(&[0.0, 8.0]));
        assert!(ComplexPoly::from_real(&[5.0]).derivative().is_zero());
        let x3 = ComplexPoly::monomial(c(1.0), 3);
        assert_eq!(x3.derivative(), ComplexPoly::monomial(c(3.0), 2));
    }

    #[test]
    fn divrem_examples() {
        let a = ComplexPoly::from_real(&[1.0, 0.0, -1.0, 0.0, -1.0, 0.0, 1.0]);
        let b = ComplexPoly::from_real(&[0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0]);
        let (q, r) = a.divrem(&b).unwrap();
        assert_eq!(q, ComplexPoly::one());
        assert_eq!(r, ComplexPoly::from_real(&[1.0, 0.0, 0.0, 0.0, -1.0]));

        let (q, r) = b.divrem(&b).unwrap();
        assert_eq!(q, ComplexPoly::one());
        assert!(r.is_zero());

        let small = ComplexPoly::from_real(&[1.0, 2.0]);
        let (q, r) = small.divrem(&b).unwrap();
        assert!(q.is_zero());
        assert_eq!(r, small);

        assert_eq!(
            a.divrem(&ComplexPoly::zero()),
            Err(Error::DivisionByZeroPolynomial)
        );
    }

    #[test]
    fn from_roots_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = ComplexPoly::from_roots(&[c(s), c(-s)]);
        assert!(p.max_coeff_distance(&ComplexPoly::from_real(&[-0.5, 0.0, 1.0])) < 1e-15);
        assert_eq!(ComplexPoly::from_roots(&[]), ComplexPoly::one());
        assert_eq!(
            ComplexPoly::from_roots(&[c(0.0), c(0.0)]),
            ComplexPoly::monomial(c(1.0), 2)
        );
        let p = ComplexPoly::from_roots(&[c(1.0), c(2.0), c(3.0)]);
        assert_eq!(p, ComplexPoly::from_real(&[-6.0, 11.0, -6.0, 1.0]));
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = ComplexPoly::from_real(&[3.0, -1.0, 0.5, 2.0]);
        let a = Complex64::new(0.7, -1.2);
        let shifted = p.taylor_shift(a);
        for t in [-1.0, 0.0, 0.3, 2.0] {
            let x = Complex64::new(t, 0.4);
            assert!((shifted.eval(x) - p.eval(x + a)).norm() < 1e-12);
        }
    }

    #[test]
    fn cleanup_is_explicit() {
        let p = ComplexPoly::from_real(&[1.0, 1e-20, 1e-20]);
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.cleanup(1e-15).degree(), Some(0));
    }

    #[test]
    fn json_shape() {
        let p = ComplexPoly::new(vec![Complex64::new(1.0, -2.0), Complex64::new(0.0, 3.0)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"coeffs":[[1.0,-2.0],[0.0,3.0]]}"#);
        let back: ComplexPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}

