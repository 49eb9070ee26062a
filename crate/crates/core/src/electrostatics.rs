//! Logarithmic energy of movable unit charges among fixed charges, its
//! complex gradient, the constrained Bethe system and a Newton solver for it.
//!
//! Sign convention: `G_k = sum_j nu_j / (x_k - a_j) + sum_{i != k} 1 / (x_k - x_i)`
//! equals `-2 dL/dx_k` (Wirtinger derivative) for real strengths, and the
//! constrained equilibria solve `G_k = lambda r'(x_k)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraint::{ChargeProblem, Constraint};
use crate::error::{Error, Result};
use crate::poly::{complex_pairs, ComplexPoly};
use crate::rational::RationalFn;
use crate::roots::lex_cmp;
use crate::stieltjes::heine_count;

/// Minimum distance from the arrangement for any evaluated configuration.
pub const ARRANGEMENT_SEPARATION: f64 = 1e-10;

/// Environment variable capping the number of solver threads.
pub const THREADS_ENV: &str = "LAME_FORGE_THREADS";

const POLISH_STEPS: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionKind {
    Unconstrained,
    /// Level prescribed, multiplier solved for.
    Constrained,
    /// Multiplier prescribed, no level condition.
    FixedMultiplier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    #[serde(rename = "X", with = "complex_pairs")]
    pub x: Vec<Complex64>,
    #[serde(with = "crate::poly::complex_pair")]
    pub lambda: Complex64,
    /// `max_k |G_k - lambda r'(x_k)| / (sum of term magnitudes)`.
    pub grad_residual: f64,
    /// `max_k |G_k - lambda r'(x_k)|`.
    pub grad_residual_abs: f64,
    /// `|sum r(x_k) - level|` scaled like the gradient; zero when no level applies.
    pub constraint_residual: f64,
    pub energy: f64,
    pub kind: SolutionKind,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 200,
            random_starts: 32,
            seed: 42,
        }
    }
}

/// Outcome of a multistart run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub solutions: Vec<EquilibriumSolution>,
    pub starts: usize,
    pub converged: usize,
    pub failed: usize,
    /// `binom(n + p - 1, n)` for an unconstrained problem with `p + 1 >= 2` charges.
    pub heine_bound: Option<u64>,
}

fn check_off_arrangement(problem: &ChargeProblem, x: &[Complex64]) -> Result<()> {
    for (k, &xk) in x.iter().enumerate() {
        if !(xk.re.is_finite() && xk.im.is_finite()) {
            return Err(Error::ArrangementHit(format!("x_{k} is not finite")));
        }
        for c in &problem.charges {
            if (xk - c.at).norm() <= ARRANGEMENT_SEPARATION {
                return Err(Error::ArrangementHit(format!("x_{k} = {xk} meets the charge at {}", c.at)));
            }
        }
        for (i, &xi) in x.iter().enumerate().take(k) {
            if (xk - xi).norm() <= ARRANGEMENT_SEPARATION {
                return Err(Error::ArrangementHit(format!("x_{i} and x_{k} coincide at {xk}")));
            }
        }
    }
    Ok(())
}

/// `-sum_k sum_j Re(nu_j) log|a_j - x_k| - sum_{i<k} log|x_k - x_i|`.
pub fn energy(problem: &ChargeProblem, x: &[Complex64]) -> Result<f64> {
    check_off_arrangement(problem, x)?;
    let mut e = 0.0;
    for (k, &xk) in x.iter().enumerate() {
        for c in &problem.charges {
            e -= c.strength.re * (c.at - xk).norm().ln();
        }
        for &xi in &x[..k] {
            e -= (xk - xi).norm().ln();
        }
    }
    Ok(e)
}

/// `G_k` for every movable charge.
pub fn complex_gradient(problem: &ChargeProblem, x: &[Complex64]) -> Result<Vec<Complex64>> {
    check_off_arrangement(problem, x)?;
    Ok(gradient_terms(problem, x).into_iter().map(|(g, _)| g).collect())
}

/// `(G_k, sum of |term|)`; assumes `x` is off the arrangement.
fn gradient_terms(problem: &ChargeProblem, x: &[Complex64]) -> Vec<(Complex64, f64)> {
    x.iter()
        .enumerate()
        .map(|(k, &xk)| {
            let mut g = ZERO;
            let mut size = 0.0;
            for c in &problem.charges {
                let t = c.strength / (xk - c.at);
                g += t;
                size += t.norm();
            }
            for (i, &xi) in x.iter().enumerate() {
                if i != k {
                    let t = (xk - xi).inv();
                    g += t;
                    size += t.norm();
                }
            }
            (g, size)
        })
        .collect()
}

/// Central differences of the energy, returned as `-(dL/du - i dL/dv)`.
///
/// For real strengths this equals [`complex_gradient`].
pub fn finite_difference_gradient(problem: &ChargeProblem, x: &[Complex64], h: f64) -> Result<Vec<Complex64>> {
    if !(1e-8..=1e-4).contains(&h) {
        return Err(Error::InvalidInput(format!("step {h:e} outside [1e-8, 1e-4]")));
    }
    check_off_arrangement(problem, x)?;
    let mut work = x.to_vec();
    let mut partial = |k: usize, dir: Complex64| -> Result<f64> {
        let orig = work[k];
        work[k] = orig + dir * h;
        let plus = energy(problem, &work)?;
        work[k] = orig - dir * h;
        let minus = energy(problem, &work)?;
        work[k] = orig;
        Ok((plus - minus) / (2.0 * h))
    };
    (0..x.len())
        .map(|k| {
            let du = partial(k, Complex64::new(1.0, 0.0))?;
            let dv = partial(k, Complex64::new(0.0, 1.0))?;
            Ok(-Complex64::new(du, -dv))
        })
        .collect()
}

/// `(G_k - lambda r'(x_k), sum r(x_k) - level)`; an unset level counts as zero.
pub fn lagrange_residual(
    problem: &ChargeProblem,
    constraint: &Constraint,
    x: &[Complex64],
    lambda: Complex64,
) -> Result<(Vec<Complex64>, Complex64)> {
    check_off_arrangement(problem, x)?;
    let r_prime = constraint.r.derivative();
    let mut vector = Vec::with_capacity(x.len());
    let mut total = ZERO;
    for (&xk, (g, _)) in x.iter().zip(gradient_terms(problem, x)) {
        total += constraint.r.try_eval(xk, ARRANGEMENT_SEPARATION)?;
        vector.push(g - lambda * r_prime.eval(xk));
    }
    Ok((vector, total - constraint.level.unwrap_or(ZERO)))
}

/// Least-squares multiplier `sum conj(r'_k) G_k / sum |r'_k|^2`; zero when `r'` vanishes on `x`.
pub fn fit_multiplier(problem: &ChargeProblem, r_prime: &RationalFn, x: &[Complex64]) -> Result<Complex64> {
    let g = complex_gradient(problem, x)?;
    let mut num = ZERO;
    let mut den = 0.0;
    for (&xk, gk) in x.iter().zip(g) {
        let rk = r_prime.try_eval(xk, ARRANGEMENT_SEPARATION)?;
        num += rk.conj() * gk;
        den += rk.norm_sqr();
    }
    Ok(if den > 0.0 { num / den } else { ZERO })
}

/// `value / size`, or `value` when every term vanished.
///
/// Purely relative, so points escaping to infinity never look converged.
fn relative(value: f64, size: f64) -> f64 {
    if size > 0.0 {
        value / size
    } else {
        value
    }
}

/// Largest relative residual `|G_k - lambda r'(x_k)| / (sum of term magnitudes)`.
pub fn equilibrium_residual(
    problem: &ChargeProblem,
    r_prime: Option<&RationalFn>,
    x: &[Complex64],
    lambda: Complex64,
) -> Result<f64> {
    let system = match r_prime {
        Some(r1) => System::with_r_prime(problem, r1.clone()),
        None => System::free(problem),
    };
    system.off_arrangement(x)?;
    Ok(system.evaluate(x, lambda).grad_scaled)
}

/// The square system handed to Newton.
#[derive(Clone)]
struct System<'a> {
    problem: &'a ChargeProblem,
    r: Option<RationalFn>,
    r1: Option<RationalFn>,
    r2: Option<RationalFn>,
    level: Option<Complex64>,
    fixed_lambda: Option<Complex64>,
    poles: Vec<Complex64>,
    /// Vanishes at every charge and pole, so `weight(x_k) F_k` has no denominators left.
    weight: ComplexPoly,
}

struct Evaluation {
    /// Gradient rows cleared by the weight, then the level row.
    residual: Vec<Complex64>,
    /// Uncleared gradient rows.
    raw: Vec<Complex64>,
    grad_scaled: f64,
    grad_abs: f64,
    constraint_scaled: f64,
    merit: f64,
}

impl<'a> System<'a> {
    fn free(problem: &'a ChargeProblem) -> Self {
        Self {
            problem,
            r: None,
            r1: None,
            r2: None,
            level: None,
            fixed_lambda: None,
            poles: Vec::new(),
            weight: clearing_weight(problem, &[]),
        }
    }

    fn with_r_prime(problem: &'a ChargeProblem, r1: RationalFn) -> Self {
        let r2 = r1.derivative();
        let pole_orders = r1.poles();
        let poles = pole_orders.iter().map(|&(p, _)| p).collect();
        let weight = clearing_weight(problem, &pole_orders);
        Self {
            problem,
            r: None,
            r1: Some(r1),
            r2: Some(r2),
            level: None,
            fixed_lambda: None,
            poles,
            weight,
        }
    }

    fn kind(&self) -> SolutionKind {
        match (self.r1.is_some(), self.level.is_some()) {
            (false, _) => SolutionKind::Unconstrained,
            (true, true) => SolutionKind::Constrained,
            (true, false) => SolutionKind::FixedMultiplier,
        }
    }

    fn solves_for_lambda(&self) -> bool {
        self.level.is_some()
    }

    fn off_arrangement(&self, x: &[Complex64]) -> Result<()> {
        check_off_arrangement(self.problem, x)?;
        for &xk in x {
            if self.poles.iter().any(|&p| (xk - p).norm() <= ARRANGEMENT_SEPARATION) {
                return Err(Error::PoleHit { point: xk });
            }
        }
        Ok(())
    }

    fn evaluate(&self, x: &[Complex64], lambda: Complex64) -> Evaluation {
        let terms = gradient_terms(self.problem, x);
        let mut residual = Vec::with_capacity(x.len() + 1);
        let mut raw = Vec::with_capacity(x.len());
        let (mut grad_scaled, mut grad_abs) = (0.0f64, 0.0f64);
        for (&xk, (g, size)) in x.iter().zip(terms) {
            let (f, size) = match &self.r1 {
                Some(r1) => {
                    let c = lambda * r1.eval(xk);
                    (g - c, size + c.norm())
                }
                None => (g, size),
            };
            grad_abs = grad_abs.max(f.norm());
            grad_scaled = grad_scaled.max(relative(f.norm(), size));
            residual.push(self.weight.eval(xk) * f);
            raw.push(f);
        }
        let mut constraint_scaled = 0.0;
        if let (Some(r), Some(level)) = (&self.r, self.level) {
            let mut total = ZERO;
            let mut size = level.norm();
            for &xk in x {
                let v = r.eval(xk);
                total += v;
                size += v.norm();
            }
            let c = total - level;
            constraint_scaled = c.norm() / (1.0 + size);
            residual.push(c);
        }
        let merit = residual.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        Evaluation {
            residual,
            raw,
            grad_scaled,
            grad_abs,
            constraint_scaled,
            merit,
        }
    }

    /// Jacobian of the cleared system.
    fn jacobian(&self, x: &[Complex64], lambda: Complex64, raw: &[Complex64]) -> DMatrix<Complex64> {
        let n = x.len();
        let dim = n + usize::from(self.solves_for_lambda());
        let mut j = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..n {
            let mut diag = ZERO;
            for c in &self.problem.charges {
                let d = x[k] - c.at;
                diag -= c.strength / (d * d);
            }
            for i in 0..n {
                if i != k {
                    let d = (x[k] - x[i]).inv();
                    let t = d * d;
                    diag -= t;
                    j[(k, i)] = t;
                }
            }
            if let Some(r2) = &self.r2 {
                diag -= lambda * r2.eval(x[k]);
            }
            j[(k, k)] = diag;
            let (w, dw) = self.weight.eval_with_derivative(x[k]);
            for i in 0..n {
                j[(k, i)] *= w;
            }
            j[(k, k)] += dw * raw[k];
            if self.solves_for_lambda() {
                let r1k = self.r1.as_ref().map_or(ZERO, |r1| r1.eval(x[k]));
                j[(k, n)] = -w * r1k;
                j[(n, k)] = r1k;
            }
        }
        j
    }

    /// Largest step fraction keeping every point a third of the way clear of its nearest obstacle.
    fn step_cap(&self, x: &[Complex64], dx: &[Complex64]) -> f64 {
        let mut cap = 1.0f64;
        for (k, (&xk, &d)) in x.iter().zip(dx).enumerate() {
            let len = d.norm();
            if len == 0.0 {
                continue;
            }
            let nearest = self
                .problem
                .charges
                .iter()
                .map(|c| c.at)
                .chain(self.poles.iter().copied())
                .chain(x.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &xi)| xi))
                .map(|p| (xk - p).norm())
                .fold(f64::INFINITY, f64::min);
            if nearest.is_finite() {
                cap = cap.min(nearest / (3.0 * len));
            }
        }
        cap
    }

    /// Full Newton steps past convergence, kept while they lower the merit.
    fn polish(&self, mut x: Vec<Complex64>, mut lambda: Complex64, mut eval: Evaluation) -> (Vec<Complex64>, Complex64, Evaluation) {
        let n = x.len();
        for _ in 0..if n == 0 { 0 } else { POLISH_STEPS } {
            let jac = self.jacobian(&x, lambda, &eval.raw);
            let rhs = DVector::from_iterator(eval.residual.len(), eval.residual.iter().map(|c| -c));
            let Some(step) = jac.lu().solve(&rhs) else { break };
            let trial: Vec<Complex64> = x.iter().zip(step.iter()).map(|(&xk, &d)| xk + d).collect();
            if self.off_arrangement(&trial).is_err() {
                break;
            }
            let tl = if self.solves_for_lambda() { lambda + step[n] } else { lambda };
            let te = self.evaluate(&trial, tl);
            if !(te.merit < eval.merit) {
                break;
            }
            (x, lambda, eval) = (trial, tl, te);
        }
        (x, lambda, eval)
    }

    /// Newton on the cleared rows, then on the raw rows if that stalls. Clearing
    /// lets the merit shrink by sliding a point onto a charge, where the weight vanishes.
    fn solve(&self, init: &[Complex64], opts: &SolveOptions) -> Result<EquilibriumSolution> {
        match self.newton(init, opts) {
            Err(e @ (Error::NonConvergence { .. } | Error::StepIntoArrangement)) if self.weight.degree_signed() > 0 => {
                let raw = Self {
                    weight: ComplexPoly::one(),
                    ..self.clone()
                };
                raw.newton(init, opts).map_err(|_| e)
            }
            other => other,
        }
    }

    fn newton(&self, init: &[Complex64], opts: &SolveOptions) -> Result<EquilibriumSolution> {
        self.off_arrangement(init)?;
        let n = init.len();
        let mut x = init.to_vec();
        let mut lambda = match (self.fixed_lambda, &self.r1) {
            (Some(l), _) => l,
            (None, Some(r1)) => fit_multiplier(self.problem, r1, &x)?,
            (None, None) => ZERO,
        };

        let mut eval = self.evaluate(&x, lambda);
        for iter in 0..=opts.max_iter {
            if eval.grad_scaled < opts.tol && eval.constraint_scaled < opts.tol {
                let (x, lambda, eval) = self.polish(x, lambda, eval);
                return Ok(EquilibriumSolution {
                    energy: energy(self.problem, &x)?,
                    x,
                    lambda,
                    grad_residual: eval.grad_scaled,
                    grad_residual_abs: eval.grad_abs,
                    constraint_residual: eval.constraint_scaled,
                    kind: self.kind(),
                    iterations: iter,
                });
            }
            if iter == opts.max_iter {
                break;
            }
            let jac = self.jacobian(&x, lambda, &eval.raw);
            let rhs = DVector::from_iterator(eval.residual.len(), eval.residual.iter().map(|c| -c));
            let step = jac.lu().solve(&rhs).ok_or(Error::NonConvergence {
                iterations: iter,
                residual: eval.grad_scaled.max(eval.constraint_scaled),
            })?;
            if step.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                break;
            }
            let dx: Vec<Complex64> = step.iter().take(n).copied().collect();
            let dl = if self.solves_for_lambda() { step[n] } else { ZERO };

            let current = eval.merit;
            let mut t = self.step_cap(&x, &dx);
            let mut accepted = None;
            let mut any_off = false;
            while t >= 1e-12 {
                let trial: Vec<Complex64> = x.iter().zip(&dx).map(|(&xk, &d)| xk + d * t).collect();
                if self.off_arrangement(&trial).is_ok() {
                    any_off = true;
                    let tl = lambda + dl * t;
                    let te = self.evaluate(&trial, tl);
                    let m = te.merit;
                    if m.is_finite() && m < current {
                        accepted = Some((trial, tl, te));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((nx, nl, ne)) => {
                    x = nx;
                    lambda = nl;
                    eval = ne;
                }
                None if !any_off => return Err(Error::StepIntoArrangement),
                None => break,
            }
        }
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            residual: eval.grad_scaled.max(eval.constraint_scaled),
        })
    }
}

/// `prod (x - t)^e` over charge locations and poles of `r'`, `e` the larger of
/// the pole order and one for a charge.
fn clearing_weight(problem: &ChargeProblem, poles: &[(Complex64, u32)]) -> ComplexPoly {
    let mut factors: Vec<(Complex64, u32)> = problem.charges.iter().map(|c| (c.at, 1)).collect();
    for &(p, order) in poles {
        match factors.iter_mut().find(|(t, _)| (*t - p).norm() <= 1e-8) {
            Some(f) => f.1 = f.1.max(order),
            None => factors.push((p, order)),
        }
    }
    factors
        .iter()
        .fold(ComplexPoly::one(), |acc, &(t, e)| &acc * &ComplexPoly::linear(t).pow(e as usize))
}

fn build_system<'a>(problem: &'a ChargeProblem, constraint: Option<&Constraint>) -> Result<System<'a>> {
    problem.validate()?;
    match constraint {
        None => Ok(System::free(problem)),
        Some(c) => {
            let level = c.level.ok_or_else(|| Error::InvalidInput("constraint level is unset".into()))?;
            let mut s = System::with_r_prime(problem, c.r.derivative());
            s.poles.extend(c.r.poles().into_iter().map(|(p, _)| p));
            s.weight = clearing_weight(problem, &c.r.derivative().poles());
            s.r = Some(c.r.clone());
            s.level = Some(level);
            Ok(s)
        }
    }
}

fn build_fixed<'a>(problem: &'a ChargeProblem, r_prime: &RationalFn, lambda: Complex64) -> Result<System<'a>> {
    problem.validate()?;
    let mut s = System::with_r_prime(problem, r_prime.clone());
    s.fixed_lambda = Some(lambda);
    Ok(s)
}

/// Damped Newton from `init`; with a constraint the level must be set and `lambda` is solved for.
pub fn solve_equilibrium(
    problem: &ChargeProblem,
    constraint: Option<&Constraint>,
    init: &[Complex64],
    opts: &SolveOptions,
) -> Result<EquilibriumSolution> {
    build_system(problem, constraint)?.solve(init, opts)
}

/// Damped Newton on `G_k = lambda r'(x_k)` with `lambda` held fixed.
pub fn solve_with_multiplier(
    problem: &ChargeProblem,
    r_prime: &RationalFn,
    lambda: Complex64,
    init: &[Complex64],
    opts: &SolveOptions,
) -> Result<EquilibriumSolution> {
    build_fixed(problem, r_prime, lambda)?.solve(init, opts)
}

/// Weak compositions of `n` into `parts` parts, in descending lexicographic order.
fn weak_compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    if parts == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .rev()
        .flat_map(|first| {
            weak_compositions(n - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// One start per assignment of the `n` points to the gaps between sorted real charges.
pub fn stieltjes_seeds(problem: &ChargeProblem, n: usize) -> Result<Vec<Vec<Complex64>>> {
    let off_axis = |z: Complex64| z.im.abs() > 1e-12 * (1.0 + z.re.abs());
    if problem
        .charges
        .iter()
        .any(|c| off_axis(c.at) || off_axis(c.strength) || c.strength.re <= 0.0)
    {
        return Err(Error::NotRealAxisProblem);
    }
    if n == 0 {
        return Ok(vec![Vec::new()]);
    }
    let mut locs: Vec<f64> = problem.charges.iter().map(|c| c.at.re).collect();
    locs.sort_by(f64::total_cmp);
    let gaps: Vec<(f64, f64)> = locs.windows(2).map(|w| (w[0], w[1])).collect();
    Ok(weak_compositions(n, gaps.len())
        .into_iter()
        .map(|comp| {
            comp.iter()
                .zip(&gaps)
                .flat_map(|(&k, &(a, b))| {
                    (0..k).map(move |i| {
                        let t = (1.0 - (PI * (2 * i + 1) as f64 / (2 * k) as f64).cos()) / 2.0;
                        Complex64::new(a + (b - a) * t, 0.0)
                    })
                })
                .collect()
        })
        .collect())
}

fn random_start(problem: &ChargeProblem, n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = problem.charges.len();
    let center = if p == 0 {
        ZERO
    } else {
        problem.charges.iter().map(|c| c.at).sum::<Complex64>() / p as f64
    };
    let radius = 2.0 * (1.0 + problem.charges.iter().map(|c| c.at.norm()).fold(0.0, f64::max));
    (0..n)
        .map(|_| {
            let rr = radius * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            center + Complex64::from_polar(rr, theta)
        })
        .collect()
}

/// True when `a` and `b` agree as multisets within `1e-6 (1 + |x|)`.
pub fn same_configuration(a: &[Complex64], b: &[Complex64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|&x| {
        let best = b
            .iter()
            .enumerate()
            .filter(|&(i, _)| !used[i])
            .min_by(|(_, p), (_, q)| (x - **p).norm().total_cmp(&(x - **q).norm()));
        match best {
            Some((i, &y)) if (x - y).norm() < 1e-6 * (1.0 + x.norm()) => {
                used[i] = true;
                true
            }
            _ => false,
        }
    })
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t: &usize| t > 0)
}

fn run_starts(system: &System, starts: &[Vec<Complex64>], opts: &SolveOptions) -> Vec<Option<EquilibriumSolution>> {
    let work = || -> Vec<Option<EquilibriumSolution>> {
        starts.par_iter().map(|s| system.solve(s, opts).ok()).collect()
    };
    match thread_cap().and_then(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build().ok()) {
        Some(pool) => pool.install(work),
        None => work(),
    }
}

fn enumerate(system: &System, n: usize, opts: &SolveOptions) -> Enumeration {
    let problem = system.problem;
    let mut starts = stieltjes_seeds(problem, n).unwrap_or_default();
    if n == 0 {
        starts = vec![Vec::new()];
    } else if problem.charges.len() < 2 {
        starts.clear();
    }
    if n > 0 {
        starts.extend((0..opts.random_starts as u64).map(|i| random_start(problem, n, opts.seed.wrapping_add(i))));
    }
    let results = run_starts(system, &starts, opts);

    let mut solutions: Vec<EquilibriumSolution> = Vec::new();
    let mut converged = 0;
    for mut sol in results.into_iter().flatten() {
        converged += 1;
        sol.x.sort_by(lex_cmp);
        if !solutions.iter().any(|s| same_configuration(&s.x, &sol.x)) {
            solutions.push(sol);
        }
    }
    solutions.sort_by(|a, b| {
        a.energy.total_cmp(&b.energy).then_with(|| {
            a.x.iter()
                .zip(&b.x)
                .map(|(p, q)| lex_cmp(p, q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let heine_bound = match system.kind() {
        SolutionKind::Unconstrained if problem.charges.len() >= 2 => {
            heine_count(n, problem.charges.len() - 1).ok()
        }
        _ => None,
    };
    Enumeration {
        starts: starts.len(),
        converged,
        failed: starts.len() - converged,
        solutions,
        heine_bound,
    }
}

/// Multistart search: Stieltjes placements when they apply, plus seeded random complex starts.
pub fn enumerate_equilibria(
    problem: &ChargeProblem,
    constraint: Option<&Constraint>,
    opts: &SolveOptions,
) -> Result<Enumeration> {
    let system = build_system(problem, constraint)?;
    Ok(enumerate(&system, problem.n, opts))
}

/// Multistart search for `G_k = lambda r'(x_k)` with `lambda` fixed.
pub fn enumerate_with_multiplier(
    problem: &ChargeProblem,
    r_prime: &RationalFn,
    lambda: Complex64,
    opts: &SolveOptions,
) -> Result<Enumeration> {
    let system = build_fixed(problem, r_prime, lambda)?;
    Ok(enumerate(&system, problem.n, opts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    LocalMin,
    Saddle,
    Degenerate,
}

/// Eigenvalue threshold separating definite from degenerate directions.
pub const HESSIAN_THRESHOLD: f64 = 1e-8;

/// Classifies a real equilibrium by the Hessian of the energy on the real line,
/// restricted to the constraint's tangent space when a multiplier is present.
///
/// Fixed charges may sit off the real line in conjugate pairs of equal real
/// strength, so that the energy stays real on real configurations.
pub fn classify_critical_point(
    problem: &ChargeProblem,
    constraint: Option<&Constraint>,
    sol: &EquilibriumSolution,
) -> Result<CriticalKind> {
    let tiny = 1e-12;
    let real_x = sol.x.iter().all(|x| x.im.abs() <= tiny * (1.0 + x.re.abs()));
    let real_charges = problem.charges.iter().all(|c| {
        c.strength.im.abs() <= tiny
            && (c.at.im == 0.0
                || problem.charges.iter().any(|d| {
                    (d.at - c.at.conj()).norm() <= tiny * (1.0 + c.at.norm()) && (d.strength - c.strength).norm() <= tiny
                }))
    });
    let constrained = sol.kind != SolutionKind::Unconstrained;
    let real_r = !constrained
        || constraint.is_some_and(|c| {
            c.r.poly_part().coeffs().iter().all(|z| z.im == 0.0)
                && c.r.pole_terms().iter().all(|t| t.pole.im == 0.0 && t.coeff.im == 0.0)
        });
    if !(real_x && real_charges && real_r && sol.lambda.im.abs() <= 1e-10 * (1.0 + sol.lambda.norm())) {
        return Err(Error::ComplexDataUnsupported);
    }

    let x: Vec<f64> = sol.x.iter().map(|z| z.re).collect();
    let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let r1 = match (constrained, constraint) {
        (true, Some(c)) => Some(c.r.derivative()),
        (true, None) => return Err(Error::InvalidInput("constrained solution needs its constraint".into())),
        _ => None,
    };

    let residual = match &r1 {
        Some(r1) => {
            let mut s = System::with_r_prime(problem, r1.clone());
            s.fixed_lambda = Some(sol.lambda);
            s
        }
        None => System::free(problem),
    };
    residual.off_arrangement(&xc)?;
    let ev = residual.evaluate(&xc, sol.lambda);
    if ev.grad_scaled > 1e-6 {
        return Err(Error::NotCritical {
            residual: ev.grad_scaled,
        });
    }

    let n = x.len();
    if n == 0 {
        return Ok(CriticalKind::LocalMin);
    }
    let lambda = sol.lambda.re;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let mut diag = 0.0;
        for c in &problem.charges {
            let d = xc[k] - c.at;
            diag += (c.strength / (d * d)).re;
        }
        for i in 0..n {
            if i != k {
                let t = 1.0 / (x[k] - x[i]).powi(2);
                diag += t;
                h[(k, i)] = -t;
            }
        }
        if let Some(r1) = &r1 {
            diag += lambda * r1.derivative().eval(xc[k]).re;
        }
        h[(k, k)] = diag;
    }

    let reduced = match &r1 {
        Some(r1) => {
            let g = DVector::from_iterator(n, xc.iter().map(|&z| r1.eval(z).re));
            match tangent_basis(&g) {
                Some(z) => z.transpose() * &h * &z,
                None => h,
            }
        }
        None => h,
    };
    if reduced.nrows() == 0 {
        return Ok(CriticalKind::LocalMin);
    }
    let eig = SymmetricEigen::new(reduced).eigenvalues;
    if eig.iter().any(|e| e.abs() <= HESSIAN_THRESHOLD) {
        Ok(CriticalKind::Degenerate)
    } else if eig.iter().all(|&e| e > HESSIAN_THRESHOLD) {
        Ok(CriticalKind::LocalMin)
    } else {
        Ok(CriticalKind::Saddle)
    }
}

/// Orthonormal basis of the complement of `g`, from a Householder reflection.
fn tangent_basis(g: &DVector<f64>) -> Option<DMatrix<f64>> {
    let n = g.len();
    let norm = g.norm();
    if norm == 0.0 {
        return None;
    }
    let mut w = g.clone();
    w[0] += norm.copysign(g[0]);
    let ww = w.norm_squared();
    let reflector = DMatrix::<f64>::identity(n, n) - (&w * w.transpose()) * (2.0 / ww);
    Some(reflector.columns(1, n - 1).into_owned())
}
