//! Independent generators for the classical polynomial families and the
//! Lamé equations they solve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lame::LameOperator;
use crate::poly::ComplexPoly;
use crate::rational::RationalFn;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn x_poly() -> ComplexPoly {
    ComplexPoly::from_real(&[0.0, 1.0])
}

/// Physicists' Hermite polynomial.
pub fn hermite(n: usize) -> ComplexPoly {
    let mut prev = ComplexPoly::one();
    if n == 0 {
        return prev;
    }
    let mut cur = ComplexPoly::from_real(&[0.0, 2.0]);
    for k in 1..n {
        let next = &(&x_poly() * &cur).scale(c(2.0)) - &prev.scale(c(2.0 * k as f64));
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Generalized Laguerre polynomial.
pub fn laguerre(n: usize, alpha: f64) -> ComplexPoly {
    let mut prev = ComplexPoly::one();
    if n == 0 {
        return prev;
    }
    let mut cur = ComplexPoly::from_real(&[1.0 + alpha, -1.0]);
    for k in 1..n {
        let kf = k as f64;
        let lin = ComplexPoly::from_real(&[2.0 * kf + 1.0 + alpha, -1.0]);
        let next = (&(&lin * &cur) - &prev.scale(c(kf + alpha))).scale(c(1.0 / (kf + 1.0)));
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Jacobi polynomial with the usual normalization `P_n(1) = binom(n + alpha, n)`.
pub fn jacobi(n: usize, alpha: f64, beta: f64) -> ComplexPoly {
    let mut prev = ComplexPoly::one();
    if n == 0 {
        return prev;
    }
    let ab = alpha + beta;
    let mut cur = ComplexPoly::from_real(&[(alpha - beta) / 2.0, (ab + 2.0) / 2.0]);
    for k in 2..=n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        let lead = 2.0 * kf * (kf + ab) * (s - 2.0);
        let lin = ComplexPoly::from_real(&[alpha * alpha - beta * beta, s * (s - 2.0)]).scale(c(s - 1.0));
        let back = 2.0 * (kf + alpha - 1.0) * (kf + beta - 1.0) * s;
        let next = (&(&lin * &cur) - &prev.scale(c(back))).scale(c(1.0 / lead));
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Relativistic Hermite polynomial, via the derivative recurrence of its
/// Rodrigues formula: `g_{k+1} = (1 + x^2/N) g_k' - 2 (N + k) x g_k / N`.
pub fn relativistic_hermite(n: usize, big_n: f64) -> ComplexPoly {
    let weight = ComplexPoly::from_real(&[1.0, 0.0, 1.0 / big_n]);
    let mut g = ComplexPoly::one();
    for k in 0..n {
        let drift = ComplexPoly::from_real(&[0.0, 2.0 * (big_n + k as f64) / big_n]);
        g = &(&weight * &g.derivative()) - &(&drift * &g);
    }
    if n % 2 == 1 {
        -&g
    } else {
        g
    }
}

/// `p(x^m)`.
pub fn substitute_power(p: &ComplexPoly, m: usize) -> ComplexPoly {
    assert!(m >= 1, "power must be positive");
    let mut coeffs = vec![Complex64::default(); (p.coeffs().len().max(1) - 1) * m + 1];
    for (k, &a) in p.coeffs().iter().enumerate() {
        coeffs[k * m] = a;
    }
    ComplexPoly::new(coeffs)
}

/// `x^n p(x + 1/x)` for `n = deg p`.
pub fn palindromic_substitute(p: &ComplexPoly) -> ComplexPoly {
    let n = p.degree().unwrap_or(0);
    let bump = ComplexPoly::from_real(&[1.0, 0.0, 1.0]);
    p.coeffs().iter().enumerate().fold(ComplexPoly::zero(), |acc, (k, &a)| {
        &acc + &(&bump.pow(k) * &ComplexPoly::monomial(a, n - k))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Even,
    Odd,
}

/// Polynomial solution of `y'' - (m+1) x^m y' + m (m+1) n x^(m-1) y = 0` and its `n`.
///
/// Even: `L_{md}^{-1/(m+1)}(x^(m+1))`, `n = (m+1) d`.
/// Odd: `x L_{md-1}^{1/(m+1)}(x^(m+1))`, `n = (m+1) d - 1`.
pub fn schrodinger_solution(m: usize, d: usize, branch: Branch) -> (ComplexPoly, usize) {
    assert!(m >= 1 && d >= 1, "m and d must be positive");
    let q = 1.0 / (m + 1) as f64;
    match branch {
        Branch::Even => (substitute_power(&laguerre(m * d, -q), m + 1), (m + 1) * d),
        Branch::Odd => (
            &x_poly() * &substitute_power(&laguerre(m * d - 1, q), m + 1),
            (m + 1) * d - 1,
        ),
    }
}

/// Rising factorial `t (t+1) ... (t+j-1)`.
pub fn pochhammer(t: f64, j: usize) -> f64 {
    (0..j).map(|i| t + i as f64).product()
}

/// The first `terms` coefficients of `1F1(a; b; x)`.
pub fn hyp1f1_truncated(a: f64, b: f64, terms: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(terms);
    let mut coeff = 1.0;
    for j in 0..terms {
        if j > 0 {
            let bj = b + (j - 1) as f64;
            if bj == 0.0 {
                return Err(Error::PochhammerPole { b, j });
            }
            coeff *= (a + (j - 1) as f64) / (bj * j as f64);
        }
        out.push(coeff);
    }
    Ok(out)
}

/// Power sums `p_1, ..., p_count` of the roots of `p`, from Newton's identities.
pub fn power_sums(p: &ComplexPoly, count: usize) -> Vec<Complex64> {
    let n = p.degree().unwrap_or(0);
    let monic = p.monic();
    // elementary symmetric polynomials e_1..e_n
    let e: Vec<Complex64> = (1..=n)
        .map(|i| monic.coeff(n - i) * if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let mut sums: Vec<Complex64> = Vec::with_capacity(count);
    for k in 1..=count {
        let mut s = Complex64::default();
        for i in 1..k.min(n + 1) {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            s += e[i - 1] * sums[k - i - 1] * sign;
        }
        if k <= n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            s += e[k - 1] * (k as f64 * sign);
        }
        sums.push(s);
    }
    sums
}

/// Rescales `zeros` so that `sum r(s x_k)` hits `target`, for `r = c x^k`.
pub fn scale_to_level(
    zeros: &[Complex64],
    r: &RationalFn,
    target: Complex64,
) -> Result<(Complex64, Vec<Complex64>)> {
    if zeros.is_empty() {
        return Err(Error::InvalidInput("no points to scale".into()));
    }
    let coeffs = r.poly_part().coeffs();
    let mut nonzero = coeffs.iter().enumerate().filter(|(_, a)| a.norm() != 0.0);
    let power = match (nonzero.next(), nonzero.next(), r.is_polynomial()) {
        (Some((k, _)), None, true) if k > 0 => k,
        _ => return Err(Error::NonMonomialConstraint),
    };
    let current: Complex64 = zeros.iter().map(|&z| r.eval(z)).sum();
    if current.norm() == 0.0 {
        return Err(Error::ZeroLevel);
    }
    let s = (target / current).powf(1.0 / power as f64);
    Ok((s, zeros.iter().map(|&z| z * s).collect()))
}

/// A family member with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OracleFamily {
    Hermite { n: usize },
    Laguerre { n: usize, alpha: f64 },
    Jacobi { n: usize, alpha: f64, beta: f64 },
    RelativisticHermite { n: usize, big_n: f64 },
    HermitePower { n: usize, m: usize },
    LaguerrePower { n: usize, m: usize, alpha: f64 },
    LaguerrePalindromic { n: usize, alpha: f64 },
    Schrodinger1F1 { m: usize, d: usize, branch: Branch },
}

/// An operator together with the Van Vleck polynomial its family solution needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyOde {
    pub op: LameOperator,
    pub v: ComplexPoly,
}

impl OracleFamily {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.into()));
        match *self {
            Self::Laguerre { alpha, .. } | Self::LaguerrePalindromic { alpha, .. } if alpha <= -1.0 => {
                bad("alpha must exceed -1")
            }
            Self::LaguerrePower { m, alpha, .. } if alpha <= -1.0 || m == 0 => bad("need alpha > -1 and m >= 1"),
            Self::Jacobi { alpha, beta, .. } if alpha <= -1.0 || beta <= -1.0 => bad("alpha and beta must exceed -1"),
            Self::RelativisticHermite { big_n, .. } if big_n.is_nan() || big_n <= 0.0 => bad("N must be positive"),
            Self::HermitePower { m: 0, .. } => bad("m must be at least 1"),
            Self::Schrodinger1F1 { m, d, .. } if m == 0 || d == 0 => bad("m and d must be at least 1"),
            _ => Ok(()),
        }
    }

    pub fn solution(&self) -> ComplexPoly {
        match *self {
            Self::Hermite { n } => hermite(n),
            Self::Laguerre { n, alpha } => laguerre(n, alpha),
            Self::Jacobi { n, alpha, beta } => jacobi(n, alpha, beta),
            Self::RelativisticHermite { n, big_n } => relativistic_hermite(n, big_n),
            Self::HermitePower { n, m } => substitute_power(&hermite(n), m),
            Self::LaguerrePower { n, m, alpha } => substitute_power(&laguerre(n, alpha), m),
            Self::LaguerrePalindromic { n, alpha } => palindromic_substitute(&laguerre(n, alpha)),
            Self::Schrodinger1F1 { m, d, branch } => schrodinger_solution(m, d, branch).0,
        }
    }

    /// The equation `A y'' + 2B y' + V y = 0` solved by [`Self::solution`].
    pub fn ode(&self) -> FamilyOde {
        let from = |a: &[f64], first: &[f64], v: &[f64]| FamilyOde {
            op: LameOperator::from_ode(ComplexPoly::from_real(a), ComplexPoly::from_real(first))
                .expect("family operators have nonzero A"),
            v: ComplexPoly::from_real(v),
        };
        let spread = |k: usize, value: f64| {
            let mut v = vec![0.0; k + 1];
            v[k] = value;
            v
        };
        match *self {
            Self::Hermite { n } => from(&[1.0], &[0.0, -2.0], &[2.0 * n as f64]),
            Self::Laguerre { n, alpha } => from(&[0.0, 1.0], &[alpha + 1.0, -1.0], &[n as f64]),
            Self::Jacobi { n, alpha, beta } => {
                let nf = n as f64;
                from(
                    &[-1.0, 0.0, 1.0],
                    &[alpha - beta, alpha + beta + 2.0],
                    &[-nf * (nf + alpha + beta + 1.0)],
                )
            }
            Self::RelativisticHermite { n, big_n } => {
                let nf = n as f64;
                from(
                    &[big_n, 0.0, 1.0],
                    &[0.0, -2.0 * (big_n + nf - 1.0)],
                    &[nf * (2.0 * big_n + nf - 1.0)],
                )
            }
            Self::HermitePower { n, m } => {
                let mf = m as f64;
                let mut first = spread(2 * m, -2.0 * mf);
                first[0] -= mf - 1.0;
                from(&[0.0, 1.0], &first, &spread(2 * m - 1, 2.0 * mf * mf * n as f64))
            }
            Self::LaguerrePower { n, m, alpha } => {
                let mf = m as f64;
                let mut first = spread(m, -mf);
                first[0] += 1.0 + alpha * mf;
                from(&[0.0, 1.0], &first, &spread(m - 1, mf * mf * n as f64))
            }
            Self::LaguerrePalindromic { n, alpha } => {
                let (nf, a) = (n as f64, alpha);
                from(
                    &[0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0],
                    &[-1.0, a + 2.0 * nf - 1.0, 1.0, -2.0 * (a + 2.0), 1.0, a + 1.0 - 2.0 * nf, -1.0],
                    &[
                        -nf * (nf + a),
                        2.0 * nf,
                        2.0 * nf * (a + 2.0),
                        -4.0 * nf,
                        nf * (nf - a),
                        2.0 * nf,
                    ],
                )
            }
            Self::Schrodinger1F1 { m, d, branch } => {
                let n = schrodinger_solution(m, d, branch).1;
                let mf = m as f64;
                from(
                    &[1.0],
                    &spread(m, -(mf + 1.0)),
                    &spread(m - 1, mf * (mf + 1.0) * n as f64),
                )
            }
        }
    }

    /// `(r, level)` with `sum r(x_k) = level` over the zeros, where a closed form is known.
    pub fn closed_form_level(&self) -> Option<(RationalFn, f64)> {
        let mono = |k: usize| RationalFn::polynomial(ComplexPoly::monomial(c(1.0), k));
        match *self {
            Self::Hermite { n } => Some((mono(2), (n * n.saturating_sub(1)) as f64 / 2.0)),
            Self::Laguerre { n, alpha } => Some((mono(1), n as f64 * (n as f64 + alpha))),
            Self::HermitePower { n, m } => Some((mono(2 * m), (m * n * n.saturating_sub(1)) as f64 / 2.0)),
            Self::LaguerrePower { n, m, alpha } => Some((mono(m), (m * n) as f64 * (n as f64 + alpha))),
            _ => None,
        }
    }
}
