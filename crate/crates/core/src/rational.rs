//! Rational functions in partial-fraction normal form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{complex_pair, ComplexPoly};
use crate::settings::NumericSettings;

/// One principal-part term `coeff / (x - pole)^order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    #[serde(rename = "at", with = "complex_pair")]
    pub pole: Complex64,
    pub order: u32,
    #[serde(with = "complex_pair")]
    pub coeff: Complex64,
}

impl PoleTerm {
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeff / (x - self.pole).powu(self.order)
    }
}

/// `poly(x) + sum coeff / (x - pole)^order`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RationalFn {
    poly: ComplexPoly,
    #[serde(rename = "poles")]
    terms: Vec<PoleTerm>,
}

impl RationalFn {
    /// Terms sharing a `(pole, order)` pair are merged; zero coefficients dropped.
    pub fn new(poly: ComplexPoly, terms: Vec<PoleTerm>) -> Result<Self> {
        let mut merged: Vec<PoleTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if t.order == 0 {
                return Err(Error::InvalidInput("pole order must be at least 1".into()));
            }
            match merged
                .iter_mut()
                .find(|m| m.pole == t.pole && m.order == t.order)
            {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Complex64::default());
        Ok(Self {
            poly,
            terms: merged,
        })
    }

    pub fn polynomial(poly: ComplexPoly) -> Self {
        Self {
            poly,
            terms: Vec::new(),
        }
    }

    pub fn poly_part(&self) -> &ComplexPoly {
        &self.poly
    }

    pub fn pole_terms(&self) -> &[PoleTerm] {
        &self.terms
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero() && self.terms.is_empty()
    }

    /// Distinct pole locations with their highest order.
    pub fn poles(&self) -> Vec<(Complex64, u32)> {
        let mut out: Vec<(Complex64, u32)> = Vec::new();
        for t in &self.terms {
            match out.iter_mut().find(|(p, _)| *p == t.pole) {
                Some((_, k)) => *k = (*k).max(t.order),
                None => out.push((t.pole, t.order)),
            }
        }
        out
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.poly.eval(x) + self.terms.iter().map(|t| t.eval(x)).sum::<Complex64>()
    }

    /// Evaluation that refuses points within `min_distance` of a pole.
    pub fn try_eval(&self, x: Complex64, min_distance: f64) -> Result<Complex64> {
        if self.terms.iter().any(|t| (x - t.pole).norm() <= min_distance) {
            return Err(Error::PoleHit { point: x });
        }
        Ok(self.eval(x))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            poly: self.poly.scale(s),
            terms: self
                .terms
                .iter()
                .map(|t| PoleTerm {
                    coeff: t.coeff * s,
                    ..*t
                })
                .filter(|t| t.coeff != Complex64::default())
                .collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        Self {
            poly: self.poly.derivative(),
            terms: self
                .terms
                .iter()
                .map(|t| PoleTerm {
                    pole: t.pole,
                    order: t.order + 1,
                    coeff: -t.coeff * t.order as f64,
                })
                .collect(),
        }
    }

    /// `factor * self` as a polynomial; fails unless `factor` clears every pole.
    pub fn times_poly(&self, factor: &ComplexPoly, tol: f64) -> Result<ComplexPoly> {
        let mut out = factor * &self.poly;
        for t in &self.terms {
            let den = ComplexPoly::linear(t.pole).pow(t.order as usize);
            let (q, r) = factor.divrem(&den)?;
            let scale = factor.max_abs_coeff().max(f64::MIN_POSITIVE);
            if r.max_abs_coeff() > tol * scale {
                return Err(Error::InvalidInput(format!(
                    "pole of order {} at {} is not cleared by the factor",
                    t.order, t.pole
                )));
            }
            out = &out + &q.scale(t.coeff);
        }
        Ok(out)
    }

    /// Magnitude used to decide when a coefficient is negligible.
    fn coeff_scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.norm())
            .fold(self.poly.max_abs_coeff(), f64::max)
    }
}

/// Termwise antiderivative with zero integration constant.
pub fn rational_antiderivative(f: &RationalFn) -> Result<RationalFn> {
    let mut terms = Vec::with_capacity(f.terms.len());
    for t in &f.terms {
        if t.order == 1 {
            return Err(Error::LogTerm { pole: t.pole });
        }
        let k = t.order as f64;
        terms.push(PoleTerm {
            pole: t.pole,
            order: t.order - 1,
            coeff: -t.coeff / (k - 1.0),
        });
    }
    RationalFn::new(f.poly.antiderivative(), terms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractionDecomposition {
    pub poly_part: ComplexPoly,
    pub simple_residues: Vec<(Complex64, Complex64)>,
    /// Terms of order two and higher.
    pub higher_terms: Vec<PoleTerm>,
}

impl PartialFractionDecomposition {
    pub fn to_rational(&self) -> RationalFn {
        let mut terms: Vec<PoleTerm> = self
            .simple_residues
            .iter()
            .map(|&(pole, coeff)| PoleTerm {
                pole,
                order: 1,
                coeff,
            })
            .collect();
        terms.extend(self.higher_terms.iter().copied());
        RationalFn {
            poly: self.poly_part.clone(),
            terms,
        }
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.to_rational().eval(x)
    }
}

/// Decomposes `numer / denom` given the roots of `denom` with multiplicities.
pub fn partial_fractions(
    numer: &ComplexPoly,
    denom: &ComplexPoly,
    denom_roots: &[(Complex64, usize)],
    settings: &NumericSettings,
) -> Result<PartialFractionDecomposition> {
    let degree = denom.degree().ok_or(Error::DivisionByZeroPolynomial)?;
    validate_roots(denom, degree, denom_roots, settings)?;

    let (poly_part, rem) = numer.divrem(denom)?;
    let lead = denom.leading();
    let mut simple_residues = Vec::new();
    let mut higher_terms = Vec::new();
    let denom_prime = denom.derivative();

    for (i, &(a, m)) in denom_roots.iter().enumerate() {
        if m == 1 {
            simple_residues.push((a, rem.eval(a) / denom_prime.eval(a)));
            continue;
        }
        // cofactor Q with denom = (x - a)^m Q, built from the other roots
        let mut cofactor = ComplexPoly::constant(lead);
        for (j, &(b, mb)) in denom_roots.iter().enumerate() {
            if j != i {
                cofactor = &cofactor * &ComplexPoly::linear(b).pow(mb);
            }
        }
        let series = series_quotient(&rem.taylor_shift(a), &cofactor.taylor_shift(a), m);
        // series[i] multiplies (x - a)^(i - m)
        for (idx, &coeff) in series.iter().enumerate() {
            let order = (m - idx) as u32;
            if order == 1 {
                simple_residues.push((a, coeff));
            } else {
                higher_terms.push(PoleTerm {
                    pole: a,
                    order,
                    coeff,
                });
            }
        }
    }

    let mut out = PartialFractionDecomposition {
        poly_part,
        simple_residues,
        higher_terms,
    };
    let scale = 1.0 + out.to_rational().coeff_scale();
    let floor = settings.residue_floor * scale;
    out.simple_residues.retain(|(_, c)| c.norm() > floor);
    out.higher_terms.retain(|t| t.coeff.norm() > floor);
    Ok(out)
}

fn validate_roots(
    denom: &ComplexPoly,
    degree: usize,
    roots: &[(Complex64, usize)],
    settings: &NumericSettings,
) -> Result<()> {
    let total: usize = roots.iter().map(|(_, m)| m).sum();
    if total != degree {
        return Err(Error::InconsistentRoots(format!(
            "multiplicities sum to {total}, denominator has degree {degree}"
        )));
    }
    if roots.iter().any(|&(_, m)| m == 0) {
        return Err(Error::InconsistentRoots("zero multiplicity".into()));
    }
    for (i, &(a, _)) in roots.iter().enumerate() {
        for &(b, _) in &roots[i + 1..] {
            if (a - b).norm() < settings.pole_separation {
                return Err(Error::PoleClustering {
                    a,
                    b,
                    threshold: settings.pole_separation,
                });
            }
        }
    }
    let rebuilt = roots.iter().fold(ComplexPoly::constant(denom.leading()), |acc, &(a, m)| {
        &acc * &ComplexPoly::linear(a).pow(m)
    });
    let mismatch = rebuilt.max_coeff_distance(denom) / denom.max_abs_coeff();
    if mismatch > settings.root_validation {
        return Err(Error::InconsistentRoots(format!(
            "rebuilt denominator differs by relative {mismatch:e}"
        )));
    }
    Ok(())
}

/// First `terms` coefficients of the power series `num / den` around zero.
fn series_quotient(num: &ComplexPoly, den: &ComplexPoly, terms: usize) -> Vec<Complex64> {
    let d0 = den.coeff(0);
    let mut s: Vec<Complex64> = Vec::with_capacity(terms);
    for i in 0..terms {
        let acc: Complex64 = (1..=i).map(|j| den.coeff(j) * s[i - j]).sum();
        s.push((num.coeff(i) - acc) / d0);
    }
    s
}

#[derive(Deserialize)]
struct RationalRepr {
    poly: ComplexPoly,
    #[serde(default)]
    poles: Vec<PoleTerm>,
}

impl<'de> Deserialize<'de> for RationalFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RationalRepr::deserialize(d)?;
        RationalFn::new(repr.poly, repr.poles).map_err(serde::de::Error::custom)
    }
}
