//! Van Vleck and Stieltjes polynomials: the equilibrium route, a recurrence
//! for Fuchs index zero, and the Heine count.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constraint::{extract, OPERATOR_MULTIPLIER};
use crate::electrostatics::{enumerate_equilibria, enumerate_with_multiplier, Enumeration, SolveOptions};
use crate::error::{Error, Result};
use crate::lame::{scaled_residual, van_vleck_from_solution, LameOperator, ParametricLame};
use crate::poly::{complex_pair, ComplexPoly};
use crate::settings::NumericSettings;

/// Largest count `heine_count` will report.
pub const HEINE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanVleckPair {
    #[serde(rename = "V")]
    pub v: ComplexPoly,
    /// Monic, of the requested degree.
    pub y: ComplexPoly,
    /// Bethe-side multiplier; zero for an unconstrained operator.
    #[serde(with = "complex_pair")]
    pub lambda: Complex64,
    /// Scaled residual of the Lamé equation.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeineStieltjes {
    pub pairs: Vec<VanVleckPair>,
    /// Present when the operator carries no constraint and at least two charges.
    pub heine_bound: Option<u64>,
    pub starts: usize,
    pub failed: usize,
}

/// `binom(n + p - 1, n)`.
pub fn heine_count(n: usize, p: usize) -> Result<u64> {
    if p == 0 {
        return Err(Error::InvalidInput("at least one gap is required".into()));
    }
    if p == 1 || n == 0 {
        return Ok(1);
    }
    // every partial product is itself a binomial, so the division is exact
    let (top, k) = (n as u128 + p as u128 - 1, n.min(p - 1) as u128);
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c * (top - k + i) / i;
        if c > HEINE_CAP as u128 {
            return Err(Error::CountOverflow { cap: HEINE_CAP });
        }
    }
    Ok(c as u64)
}

/// All pairs `(V, y)` with `deg y = n` found by multistart on the equilibrium system.
pub fn solve_heine_stieltjes(
    op: &LameOperator,
    n: usize,
    opts: &SolveOptions,
    settings: &NumericSettings,
) -> Result<HeineStieltjes> {
    let dec = extract(op, settings)?;
    if n == 0 {
        return Ok(HeineStieltjes {
            pairs: vec![VanVleckPair {
                v: ComplexPoly::zero(),
                y: ComplexPoly::one(),
                lambda: Complex64::default(),
                residual: 0.0,
            }],
            heine_bound: None,
            starts: 0,
            failed: 0,
        });
    }
    let problem = dec.problem(n);
    let (found, lambda): (Enumeration, Complex64) = if dec.is_unconstrained() {
        (enumerate_equilibria(&problem, None, opts)?, Complex64::default())
    } else {
        (
            enumerate_with_multiplier(&problem, &dec.r_prime, OPERATOR_MULTIPLIER, opts)?,
            OPERATOR_MULTIPLIER,
        )
    };

    let pl = dec.parametric(lambda * 2.0);
    let mut pairs: Vec<VanVleckPair> = Vec::new();
    for sol in &found.solutions {
        let y = ComplexPoly::from_roots(&sol.x);
        let Ok(v) = van_vleck_from_solution(&pl, &y, settings) else {
            continue;
        };
        if pairs.iter().any(|p| p.v.max_coeff_distance(&v) < 1e-6) {
            continue;
        }
        pairs.push(VanVleckPair {
            residual: scaled_residual(&pl, &v, &y),
            v,
            y,
            lambda: sol.lambda,
        });
    }
    Ok(HeineStieltjes {
        pairs,
        heine_bound: found.heine_bound,
        starts: found.starts,
        failed: found.failed,
    })
}

/// Solves for the monic degree-`n` solution and constant `V` by the coefficient recurrence.
pub fn solve_fuchs0(op: &LameOperator, n: usize) -> Result<VanVleckPair> {
    let fuchs = op.fuchs_index();
    if fuchs != 0 {
        return Err(Error::NotFuchs0(fuchs));
    }
    let a = |k| op.a.coeff(k);
    let b2 = op.b.scale(Complex64::new(2.0, 0.0));
    let b = |k| b2.coeff(k);
    let diag = |k: usize| {
        let kf = k as f64;
        a(2) * (kf * (kf - 1.0)) + b(1) * kf
    };
    let v = -diag(n);
    let scale = 1.0 + [a(0), a(1), a(2), b(0), b(1)].iter().map(|c| c.norm()).fold(0.0, f64::max) * (n * n + 1) as f64;

    let mut c = vec![Complex64::default(); n + 3];
    c[n] = Complex64::new(1.0, 0.0);
    for k in (0..n).rev() {
        let kf = k as f64;
        let den = diag(k) + v;
        if den.norm() <= 1e-12 * scale {
            return Err(Error::RecurrenceBreakdown { index: k });
        }
        let rhs = -(a(1) * (kf * (kf + 1.0)) + b(0) * (kf + 1.0)) * c[k + 1]
            - a(0) * ((kf + 1.0) * (kf + 2.0)) * c[k + 2];
        c[k] = rhs / den;
    }
    c.truncate(n + 1);
    let y = ComplexPoly::new(c);
    let v = ComplexPoly::constant(v);
    let residual = scaled_residual(&ParametricLame::plain(op.clone()), &v, &y);
    Ok(VanVleckPair {
        v,
        y,
        lambda: Complex64::default(),
        residual,
    })
}
