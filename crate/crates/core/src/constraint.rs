//! Splitting a Lamé operator into fixed charges and an A-adjusted constraint.
//!
//! Dividing `B` by `A` gives `B = A r' + B~` with `deg B~ < deg A`. The simple
//! poles of `B / A` become fixed charges; the polynomial part together with
//! any higher-order pole terms (from repeated roots of `A`) forms `r'`, and
//! `D = A r'` is a polynomial by construction.
//!
//! Multiplier conventions: the Bethe system reads `G_k = lambda r'(x_k)` and
//! the matching ODE is `A y'' + (2B~ - rho D) y' + V y = 0` with
//! `rho = 2 lambda`. The operator the decomposition came from corresponds to
//! `lambda = -1` for the extracted `r`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lame::{van_vleck_from_solution, LameOperator, ParametricLame};
use crate::poly::{complex_pair, ComplexPoly};
use crate::rational::{partial_fractions, rational_antiderivative, RationalFn};
use crate::roots::{root_multiplicities, RootOptions};
use crate::settings::NumericSettings;

/// Multiplier at which an extracted decomposition reproduces its operator.
pub const OPERATOR_MULTIPLIER: Complex64 = Complex64::new(-1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    #[serde(with = "complex_pair")]
    pub at: Complex64,
    #[serde(with = "complex_pair")]
    pub strength: Complex64,
}

impl Charge {
    pub fn new(at: Complex64, strength: Complex64) -> Self {
        Self { at, strength }
    }

    pub fn real(at: f64, strength: f64) -> Self {
        Self::new(Complex64::new(at, 0.0), Complex64::new(strength, 0.0))
    }
}

/// Fixed charges plus the number of movable unit charges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeProblem {
    pub charges: Vec<Charge>,
    pub n: usize,
}

impl ChargeProblem {
    pub fn new(charges: Vec<Charge>, n: usize) -> Result<Self> {
        let p = Self { charges, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.charges.iter().enumerate() {
            if a.strength == Complex64::default() {
                return Err(Error::InvalidInput(format!("charge at {} has zero strength", a.at)));
            }
            for b in &self.charges[i + 1..] {
                if (a.at - b.at).norm() <= 1e-8 {
                    return Err(Error::InvalidInput(format!(
                        "charges at {} and {} coincide",
                        a.at, b.at
                    )));
                }
            }
        }
        Ok(())
    }

    /// `prod (x - a_j)`.
    pub fn locator(&self) -> ComplexPoly {
        ComplexPoly::from_roots(&self.charges.iter().map(|c| c.at).collect::<Vec<_>>())
    }

    /// `B` with `B / A = sum nu_j / (x - a_j)` and `A` the locator.
    pub fn field_numerator(&self) -> ComplexPoly {
        let locs: Vec<Complex64> = self.charges.iter().map(|c| c.at).collect();
        self.charges
            .iter()
            .enumerate()
            .fold(ComplexPoly::zero(), |acc, (j, c)| {
                let others: Vec<Complex64> = locs
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &a)| a)
                    .collect();
                &acc + &ComplexPoly::from_roots(&others).scale(c.strength)
            })
    }

    /// The classical Lamé operator of an unconstrained problem.
    pub fn operator(&self) -> Result<LameOperator> {
        LameOperator::new(self.locator(), self.field_numerator())
    }
}

/// `sum_k r(x_k) = level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub r: RationalFn,
    #[serde(default, with = "optional_pair")]
    pub level: Option<Complex64>,
}

impl Constraint {
    pub fn new(r: RationalFn, level: Option<Complex64>) -> Self {
        Self { r, level }
    }

    pub fn with_level(mut self, level: Complex64) -> Self {
        self.level = Some(level);
        self
    }
}

mod optional_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        c.map(|c| [c.re, c.im]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Complex64>, D::Error> {
        Ok(Option::<[f64; 2]>::deserialize(d)?.map(|p| Complex64::new(p[0], p[1])))
    }
}

/// Result of splitting `B = A r' + B~`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub a: ComplexPoly,
    pub b: ComplexPoly,
    pub a_roots: Vec<(Complex64, usize)>,
    pub charges: Vec<Charge>,
    pub r_prime: RationalFn,
    pub d: ComplexPoly,
    pub btilde: ComplexPoly,
    pub repeated_roots_of_a: bool,
}

impl Decomposition {
    pub fn problem(&self, n: usize) -> ChargeProblem {
        ChargeProblem {
            charges: self.charges.clone(),
            n,
        }
    }

    /// True when the operator is non-degenerate and no constraint appears.
    pub fn is_unconstrained(&self) -> bool {
        self.r_prime.is_zero()
    }

    /// `A y'' + (2B~ - rho D) y'`.
    pub fn parametric(&self, rho: Complex64) -> ParametricLame {
        ParametricLame::new(
            LameOperator {
                a: self.a.clone(),
                b: self.btilde.clone(),
            },
            self.d.clone(),
            rho,
        )
    }

    /// `B~ + D`, which should reproduce the original `B`.
    pub fn rebuild_b(&self) -> ComplexPoly {
        &self.btilde + &self.d
    }
}

pub fn extract(op: &LameOperator, settings: &NumericSettings) -> Result<Decomposition> {
    let fuchs = op.fuchs_index();
    if fuchs < 0 {
        return Err(Error::InvalidInput(format!(
            "Fuchs index {fuchs} is negative"
        )));
    }
    let root_opts = RootOptions {
        tol: settings.root_tol,
        max_iter: settings.root_max_iter,
    };
    let a_roots = if op.a.degree().unwrap_or(0) == 0 {
        Vec::new()
    } else {
        root_multiplicities(&op.a, &root_opts, settings.multiplicity_cluster)?
    };
    let pf = partial_fractions(&op.b, &op.a, &a_roots, settings)?;
    let charges = pf
        .simple_residues
        .iter()
        .map(|&(at, strength)| Charge { at, strength })
        .collect();
    let r_prime = RationalFn::new(pf.poly_part.clone(), pf.higher_terms.clone())?;
    let d = r_prime.times_poly(&op.a, settings.root_validation)?;

    // B~ = B - D, with rounding above deg A - 1 removed after checking it is rounding
    let diff = &op.b - &d;
    let deg_a = op.a.degree().unwrap_or(0);
    let scale = 1.0 + op.b.max_abs_coeff().max(d.max_abs_coeff());
    let spill = diff.coeffs().iter().skip(deg_a).map(|c| c.norm()).fold(0.0, f64::max);
    if spill > settings.root_validation * scale {
        return Err(Error::InvalidInput(format!(
            "remainder B - A r' has degree at least deg A (excess {spill:e})"
        )));
    }
    let btilde = ComplexPoly::new(diff.coeffs().iter().take(deg_a).copied().collect());

    Ok(Decomposition {
        a: op.a.clone(),
        b: op.b.clone(),
        repeated_roots_of_a: a_roots.iter().any(|&(_, m)| m > 1),
        a_roots,
        charges,
        r_prime,
        d,
        btilde,
    })
}

/// `r` with `r' ` as extracted and zero integration constant; the level is unset.
pub fn antidifferentiate(dec: &Decomposition) -> Result<Constraint> {
    Ok(Constraint::new(rational_antiderivative(&dec.r_prime)?, None))
}

/// `sum_k r(x_k)`.
pub fn constraint_level(r: &RationalFn, points: &[Complex64]) -> Result<Complex64> {
    points.iter().map(|&x| r.try_eval(x, 1e-10)).sum()
}

/// The ODE-side multiplier recovered from a candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierFit {
    /// `rho` in `A y'' + (2B~ - rho D) y' + V y = 0`.
    pub rho_ode: Complex64,
    pub van_vleck: ComplexPoly,
    /// Set when every `rho` works (constant `y`, or `D y'` divisible by `y`).
    pub degenerate: bool,
}

impl MultiplierFit {
    /// The Bethe-side multiplier, `rho_ode / 2`.
    pub fn lambda(&self) -> Complex64 {
        self.rho_ode / 2.0
    }
}

/// Finds `rho` such that `A y'' + (2B~ - rho D) y'` is divisible by `y`.
///
/// Division by `y` is linear, so the remainders `r1` of `A y'' + 2B~ y'` and
/// `r2` of `D y'` must satisfy `r1 = rho r2`; `rho` is the least-squares fit
/// and is then certified by exact recovery of `V`.
pub fn determine_multiplier(
    dec: &Decomposition,
    y: &ComplexPoly,
    settings: &NumericSettings,
) -> Result<MultiplierFit> {
    if y.degree().unwrap_or(0) == 0 {
        return Ok(MultiplierFit {
            rho_ode: Complex64::default(),
            van_vleck: ComplexPoly::zero(),
            degenerate: true,
        });
    }
    let base = dec.parametric(Complex64::default()).apply(y);
    let dy = y.derivative();
    let constraint_part = &dec.d * &dy;
    let (_, r1) = base.divrem(y)?;
    let (_, r2) = constraint_part.divrem(y)?;

    let scale = base.max_abs_coeff().max(constraint_part.max_abs_coeff()).max(f64::MIN_POSITIVE);
    let r2_norm2: f64 = r2.coeffs().iter().map(|c| c.norm_sqr()).sum();
    let degenerate = r2_norm2.sqrt() <= settings.division * scale;
    let rho_ode = if degenerate {
        Complex64::default()
    } else {
        let n = r1.coeffs().len().max(r2.coeffs().len());
        let dot: Complex64 = (0..n).map(|k| r2.coeff(k).conj() * r1.coeff(k)).sum();
        dot / r2_norm2
    };
    let van_vleck = van_vleck_from_solution(&dec.parametric(rho_ode), y, settings).map_err(|e| match e {
        Error::NotASolution {
            relative_remainder, ..
        } => Error::NoConsistentRho { relative_remainder },
        other => other,
    })?;
    Ok(MultiplierFit {
        rho_ode,
        van_vleck,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn s() -> NumericSettings {
        NumericSettings::default()
    }

    fn hermite_op() -> LameOperator {
        LameOperator::from_ode(ComplexPoly::one(), ComplexPoly::from_real(&[0.0, -2.0])).unwrap()
    }

    fn laguerre_op(alpha: f64) -> LameOperator {
        LameOperator::from_ode(
            ComplexPoly::from_real(&[0.0, 1.0]),
            ComplexPoly::from_real(&[alpha + 1.0, -1.0]),
        )
        .unwrap()
    }

    fn section_33_op(n: usize, alpha: f64) -> LameOperator {
        let nf = n as f64;
        // B as printed, for the equation A y'' + B y' + V y = 0
        let printed = ComplexPoly::from_real(&[
            -1.0,
            alpha + 2.0 * nf - 1.0,
            1.0,
            -2.0 * (alpha + 2.0),
            1.0,
            alpha + 1.0 - 2.0 * nf,
            -1.0,
        ]);
        LameOperator::from_ode(
            ComplexPoly::from_real(&[0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0]),
            printed,
        )
        .unwrap()
    }

    #[test]
    fn hermite_has_no_charges() {
        let dec = extract(&hermite_op(), &s()).unwrap();
        assert!(dec.charges.is_empty());
        assert_eq!(dec.r_prime.poly_part(), &ComplexPoly::from_real(&[0.0, -1.0]));
        assert_eq!(dec.d, ComplexPoly::from_real(&[0.0, -1.0]));
        assert!(dec.btilde.is_zero());
        let c = antidifferentiate(&dec).unwrap();
        assert_eq!(c.r.poly_part(), &ComplexPoly::from_real(&[0.0, 0.0, -0.5]));
        assert!(c.level.is_none());
    }

    #[test]
    fn laguerre_has_one_charge() {
        let alpha = 0.5;
        let dec = extract(&laguerre_op(alpha), &s()).unwrap();
        assert_eq!(dec.charges.len(), 1);
        assert!(dec.charges[0].at.norm() < 1e-14);
        assert!((dec.charges[0].strength - r((alpha + 1.0) / 2.0)).norm() < 1e-14);
        assert_eq!(dec.r_prime.poly_part(), &ComplexPoly::from_real(&[-0.5]));
        assert!(dec.d.max_coeff_distance(&ComplexPoly::from_real(&[0.0, -0.5])) < 1e-15);
        let c = antidifferentiate(&dec).unwrap();
        assert!(c.r.poly_part().max_coeff_distance(&ComplexPoly::from_real(&[0.0, -0.5])) < 1e-15);
    }

    #[test]
    fn section_33_five_charges() {
        for &alpha in &[0.0, 0.5, 2.0] {
            for n in 1..=5 {
                let op = section_33_op(n, alpha);
                let dec = extract(&op, &s()).unwrap();
                assert!(dec.repeated_roots_of_a);
                assert_eq!(dec.charges.len(), 5);
                let at = |z: Complex64| {
                    dec.charges
                        .iter()
                        .find(|c| (c.at - z).norm() < 1e-9)
                        .unwrap()
                        .strength
                };
                let tol = 1e-10;
                assert!((at(r(0.0)) - r(-(n as f64) + (1.0 - alpha) / 2.0)).norm() < tol);
                assert!((at(r(1.0)) - r(-0.5)).norm() < tol);
                assert!((at(r(-1.0)) - r(-0.5)).norm() < tol);
                assert!((at(Complex64::i()) - r((alpha + 1.0) / 2.0)).norm() < tol);
                assert!((at(-Complex64::i()) - r((alpha + 1.0) / 2.0)).norm() < tol);

                // r = -(x + 1/x)/2
                let c = antidifferentiate(&dec).unwrap();
                for x in [r(0.7), Complex64::new(1.3, -0.4)] {
                    let expected = -(x + x.inv()) / 2.0;
                    assert!((c.r.eval(x) - expected).norm() < 1e-12);
                }
                assert!(dec.rebuild_b().max_coeff_distance(&op.b) < 1e-10);
                assert!(dec.btilde.degree().unwrap() < 6);
            }
        }
    }

    #[test]
    fn nondegenerate_is_unconstrained() {
        let p = ChargeProblem::new(vec![Charge::real(-1.0, 0.5), Charge::real(1.0, 0.5)], 2).unwrap();
        let op = p.operator().unwrap();
        assert_eq!(op.b, ComplexPoly::from_real(&[0.0, 1.0]));
        let dec = extract(&op, &s()).unwrap();
        assert!(dec.is_unconstrained());
        assert_eq!(dec.charges.len(), 2);
        assert!(dec.d.is_zero());
    }

    #[test]
    fn negative_fuchs_rejected() {
        let op = LameOperator::new(ComplexPoly::one(), ComplexPoly::one()).unwrap();
        assert!(extract(&op, &s()).is_err());
    }

    #[test]
    fn levels() {
        let h3 = [r(-(1.5f64).sqrt()), r(0.0), r((1.5f64).sqrt())];
        let sq = RationalFn::polynomial(ComplexPoly::from_real(&[0.0, 0.0, 1.0]));
        assert!((constraint_level(&sq, &h3).unwrap() - r(3.0)).norm() < 1e-14);

        let l2 = [r(2.0 - 2f64.sqrt()), r(2.0 + 2f64.sqrt())];
        let lin = RationalFn::polynomial(ComplexPoly::from_real(&[0.0, 1.0]));
        assert!((constraint_level(&lin, &l2).unwrap() - r(4.0)).norm() < 1e-14);

        assert_eq!(constraint_level(&lin, &[]).unwrap(), r(0.0));

        let inv = rational_antiderivative(
            &RationalFn::new(
                ComplexPoly::zero(),
                vec![crate::rational::PoleTerm {
                    pole: r(0.0),
                    order: 2,
                    coeff: r(-1.0),
                }],
            )
            .unwrap(),
        )
        .unwrap();
        assert!(matches!(
            constraint_level(&inv, &[r(0.0)]),
            Err(Error::PoleHit { .. })
        ));
    }

    #[test]
    fn hermite_multiplier_reproduces_operator() {
        let dec = extract(&hermite_op(), &s()).unwrap();
        // monic H4
        let y = ComplexPoly::from_real(&[0.75, 0.0, -3.0, 0.0, 1.0]);
        let fit = determine_multiplier(&dec, &y, &s()).unwrap();
        assert!((fit.rho_ode - r(-2.0)).norm() < 1e-12);
        assert!((fit.lambda() - OPERATOR_MULTIPLIER).norm() < 1e-12);
        let rebuilt = dec.parametric(fit.rho_ode).first_order();
        assert!(rebuilt.max_coeff_distance(&ComplexPoly::from_real(&[0.0, -2.0])) < 1e-12);
        assert!(fit.van_vleck.max_coeff_distance(&ComplexPoly::constant(r(8.0))) < 1e-12);
    }

    #[test]
    fn laguerre_multiplier_reproduces_operator() {
        let alpha = 2.0;
        let dec = extract(&laguerre_op(alpha), &s()).unwrap();
        // 2 L_2^2 = x^2 - 8x + 12
        let y = ComplexPoly::from_real(&[12.0, -8.0, 1.0]);
        let fit = determine_multiplier(&dec, &y, &s()).unwrap();
        let rebuilt = dec.parametric(fit.rho_ode).first_order();
        assert!(rebuilt.max_coeff_distance(&ComplexPoly::from_real(&[alpha + 1.0, -1.0])) < 1e-12);
    }

    #[test]
    fn multiplier_edge_cases() {
        let dec = extract(&hermite_op(), &s()).unwrap();
        let fit = determine_multiplier(&dec, &ComplexPoly::one(), &s()).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.rho_ode, r(0.0));

        let y = ComplexPoly::from_roots(&[r(0.2), r(-1.3), r(0.9)]);
        assert!(matches!(
            determine_multiplier(&dec, &y, &s()),
            Err(Error::NoConsistentRho { .. })
        ));
    }

    #[test]
    fn json_level_optional() {
        let c = Constraint::new(RationalFn::polynomial(ComplexPoly::from_real(&[0.0, 1.0])), None);
        let text = serde_json::to_string(&c).unwrap();
        let back: Constraint = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let c = c.with_level(r(4.0));
        let back: Constraint = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.level, Some(r(4.0)));
    }
}
