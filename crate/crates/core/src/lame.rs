//! Lamé operators `A d²/dx² + 2B d/dx` and their parametric form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{complex_pair, ComplexPoly};
use crate::settings::NumericSettings;

/// The operator `A y'' + 2 B y'`.
///
/// `b` carries the halved first-order coefficient. An equation written as
/// `A y'' + b y' + V y = 0` is ingested with [`LameOperator::from_ode`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LameOperator {
    #[serde(rename = "A")]
    pub a: ComplexPoly,
    #[serde(rename = "B")]
    pub b: ComplexPoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degeneracy {
    NonDegenerate,
    Degenerate,
}

impl LameOperator {
    pub fn new(a: ComplexPoly, b: ComplexPoly) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::InvalidInput(
                "leading coefficient A of a Lamé operator must be nonzero".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// From `A y'' + first_order y'`, i.e. `B = first_order / 2`.
    pub fn from_ode(a: ComplexPoly, first_order: ComplexPoly) -> Result<Self> {
        Self::new(a, first_order.scale(Complex64::new(0.5, 0.0)))
    }

    /// `max(deg A - 2, deg B - 1)`; a zero `B` never wins the max.
    pub fn fuchs_index(&self) -> i64 {
        let from_a = self.a.degree_signed() - 2;
        match self.b.degree() {
            Some(db) => from_a.max(db as i64 - 1),
            None => from_a,
        }
    }

    pub fn classify(&self) -> Degeneracy {
        if self.a.degree_signed() > self.b.degree_signed() {
            Degeneracy::NonDegenerate
        } else {
            Degeneracy::Degenerate
        }
    }

    /// `A y'' + 2B y'`.
    pub fn apply(&self, y: &ComplexPoly) -> ComplexPoly {
        let dy = y.derivative();
        &(&self.a * &dy.derivative()) + &(&self.b.scale(Complex64::new(2.0, 0.0)) * &dy)
    }
}

/// `A y'' + (2B - rho D) y' + V y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricLame {
    #[serde(flatten)]
    pub op: LameOperator,
    #[serde(rename = "D")]
    pub d: ComplexPoly,
    #[serde(with = "complex_pair")]
    pub rho: Complex64,
}

impl ParametricLame {
    pub fn new(op: LameOperator, d: ComplexPoly, rho: Complex64) -> Self {
        Self { op, d, rho }
    }

    /// The plain equation, with no constraint term.
    pub fn plain(op: LameOperator) -> Self {
        Self {
            op,
            d: ComplexPoly::zero(),
            rho: Complex64::default(),
        }
    }

    /// `2B - rho D`.
    pub fn first_order(&self) -> ComplexPoly {
        &self.op.b.scale(Complex64::new(2.0, 0.0)) - &self.d.scale(self.rho)
    }

    /// `A y'' + (2B - rho D) y'`.
    pub fn apply(&self, y: &ComplexPoly) -> ComplexPoly {
        let dy = y.derivative();
        &(&self.op.a * &dy.derivative()) + &(&self.first_order() * &dy)
    }

    /// Largest admissible Van Vleck degree, `max(deg A - 2, deg B - 1, deg D - 1)`.
    ///
    /// With `B` the non-degenerate remainder this is `max(p - 1, q - 1)` for
    /// `p + 1 = deg A` and `q = deg D`; with `D = 0` it is the Fuchs index.
    pub fn van_vleck_degree_bound(&self) -> i64 {
        let mut bound = self.op.a.degree_signed() - 2;
        if let Some(db) = self.op.b.degree() {
            bound = bound.max(db as i64 - 1);
        }
        if let Some(dd) = self.d.degree() {
            bound = bound.max(dd as i64 - 1);
        }
        bound
    }

    /// Scale used to certify a residual as the zero polynomial.
    pub fn input_scale(&self, v: &ComplexPoly, y: &ComplexPoly) -> f64 {
        [
            self.op.a.max_abs_coeff(),
            self.op.b.max_abs_coeff() * 2.0,
            self.d.max_abs_coeff() * self.rho.norm(),
            v.max_abs_coeff(),
            y.max_abs_coeff(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `A y'' + (2B - rho D) y' + V y`.
pub fn lame_residual(pl: &ParametricLame, v: &ComplexPoly, y: &ComplexPoly) -> ComplexPoly {
    &pl.apply(y) + &(v * y)
}

/// Largest residual coefficient divided by `1 + max input coefficient`.
pub fn scaled_residual(pl: &ParametricLame, v: &ComplexPoly, y: &ComplexPoly) -> f64 {
    lame_residual(pl, v, y).max_abs_coeff() / (1.0 + pl.input_scale(v, y))
}

/// True when the residual is the zero polynomial at tolerance `tol`.
pub fn certifies_solution(pl: &ParametricLame, v: &ComplexPoly, y: &ComplexPoly, tol: f64) -> bool {
    scaled_residual(pl, v, y) < tol
}

/// One least-squares correction of `v` towards minimising `|dividend + v y|` over all coefficients.
///
/// Division from the top loses the low coefficients of `v` when `y` has large roots.
fn refine_quotient(dividend: &ComplexPoly, y: &ComplexPoly, v: ComplexPoly) -> ComplexPoly {
    let (Some(dv), Some(dy)) = (v.degree(), y.degree()) else {
        return v;
    };
    let rows = dividend.coeffs().len().max(dv + dy + 1);
    let residual = dividend + &(&v * y);
    let m = DMatrix::from_fn(rows, dv + 1, |i, j| if i >= j { y.coeff(i - j) } else { Complex64::default() });
    let rhs = DVector::from_fn(rows, |i, _| -residual.coeff(i));
    match m.svd(true, true).solve(&rhs, 0.0) {
        Ok(delta) if delta.iter().all(|d| d.re.is_finite() && d.im.is_finite()) => {
            ComplexPoly::new(v.coeffs().iter().zip(delta.iter()).map(|(a, d)| a + d).collect())
        }
        _ => v,
    }
}

/// Recovers `V = -(A y'' + (2B - rho D) y') / y` by exact division.
pub fn van_vleck_from_solution(
    pl: &ParametricLame,
    y: &ComplexPoly,
    settings: &NumericSettings,
) -> Result<ComplexPoly> {
    if y.is_zero() {
        return Err(Error::InvalidInput("zero polynomial is not a solution".into()));
    }
    let dividend = pl.apply(y);
    if dividend.is_zero() {
        return Ok(ComplexPoly::zero());
    }
    let (q, _) = dividend.divrem(y)?;
    let v = refine_quotient(&dividend, y, -&q);
    let relative = (&dividend + &(&v * y)).max_abs_coeff() / dividend.max_abs_coeff();
    if relative > settings.division {
        return Err(Error::NotASolution {
            relative_remainder: relative,
            tolerance: settings.division,
        });
    }
    // top coefficients that are pure rounding do not count towards the degree
    let floor = settings.division * v.max_abs_coeff();
    let mut coeffs = v.into_coeffs();
    while coeffs.last().is_some_and(|c| c.norm() <= floor) {
        coeffs.pop();
    }
    let v = ComplexPoly::new(coeffs);
    let bound = pl.van_vleck_degree_bound();
    if v.degree_signed() > bound {
        return Err(Error::DegreeViolation {
            degree: v.degree().unwrap_or(0),
            bound,
        });
    }
    Ok(v)
}
