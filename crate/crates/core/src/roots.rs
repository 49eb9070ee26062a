//! All-roots solver: Aberth–Ehrlich simultaneous iteration with a companion
//! matrix fallback.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::ComplexPoly;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Accepted backward error `|p(z)| / sum |c_k||z|^k`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// Lexicographic (real, imaginary) order used for every root list.
pub fn lex_cmp(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn sort_lex(v: &mut [Complex64]) {
    v.sort_by(lex_cmp);
}

fn backward_error(p: &ComplexPoly, z: Complex64) -> f64 {
    let scale = p.abs_eval(z);
    if scale == 0.0 {
        0.0
    } else {
        p.eval(z).norm() / scale
    }
}

/// Every root of `p`, repeated by multiplicity and sorted lexicographically.
pub fn find_roots(p: &ComplexPoly, opts: &RootOptions) -> Result<Vec<Complex64>> {
    let degree = p.degree().unwrap_or(0);
    if degree == 0 {
        return Err(Error::InvalidInput(
            "root finding needs a polynomial of degree at least one".into(),
        ));
    }

    // exact zero roots are split off before iterating
    let lowest = p.coeffs().iter().position(|c| c.norm() != 0.0).unwrap_or(0);
    let mut roots = vec![Complex64::default(); lowest];
    let reduced = ComplexPoly::new(p.coeffs()[lowest..].to_vec()).monic();

    match reduced.degree().unwrap_or(0) {
        0 => {}
        1 => roots.push(-reduced.coeff(0)),
        _ => {
            let found = match aberth(&reduced, opts) {
                Some(z) => z,
                None => companion_roots(&reduced, opts)?,
            };
            roots.extend(found);
        }
    }
    sort_lex(&mut roots);
    Ok(roots)
}

fn initial_guesses(p: &ComplexPoly) -> Vec<Complex64> {
    let n = p.degree().unwrap_or(0);
    let lead = p.leading();
    let center = -p.coeff(n - 1) / (lead * n as f64);
    let shifted = p.taylor_shift(center);
    // geometric mean of root moduli around the centroid, bounded away from zero
    let c0 = shifted.coeff(0).norm();
    let mut radius = if c0 > 0.0 {
        (c0 / lead.norm()).powf(1.0 / n as f64)
    } else {
        // fall back to a Cauchy-type bound
        1.0 + shifted
            .coeffs()
            .iter()
            .take(n)
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max)
    };
    if !radius.is_finite() || radius == 0.0 {
        radius = 1.0;
    }
    (0..n)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n as f64 + 0.4;
            center + Complex64::from_polar(radius, theta)
        })
        .collect()
}

fn aberth(p: &ComplexPoly, opts: &RootOptions) -> Option<Vec<Complex64>> {
    let mut z = initial_guesses(p);
    let n = z.len();
    let mut done = vec![false; n];
    for _ in 0..opts.max_iter {
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (pv, dpv) = p.eval_with_derivative(z[k]);
            if pv.norm() == 0.0 {
                done[k] = true;
                continue;
            }
            let ratio = pv / dpv;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            z[k] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[k].norm().max(f64::MIN_POSITIVE) {
                done[k] = true;
            }
        }
        if done.iter().all(|&d| d) {
            break;
        }
    }
    z.iter()
        .all(|&r| backward_error(p, r) <= opts.tol)
        .then_some(z)
}

fn companion_roots(p: &ComplexPoly, opts: &RootOptions) -> Result<Vec<Complex64>> {
    let monic = p.monic();
    let n = monic.degree().unwrap_or(0);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic.coeff(i);
    }
    let schur = Schur::try_new(m, f64::EPSILON, opts.max_iter * n)
        .ok_or(Error::RootNonConvergence {
            iterations: opts.max_iter,
        })?;
    let eig = schur.eigenvalues().ok_or(Error::RootNonConvergence {
        iterations: opts.max_iter,
    })?;
    let mut roots: Vec<Complex64> = eig.iter().copied().collect();
    for r in roots.iter_mut() {
        // a few Newton polishing steps; harmless at multiple roots
        for _ in 0..3 {
            let (pv, dpv) = monic.eval_with_derivative(*r);
            if dpv.norm() == 0.0 {
                break;
            }
            let next = *r - pv / dpv;
            if backward_error(&monic, next) < backward_error(&monic, *r) {
                *r = next;
            } else {
                break;
            }
        }
    }
    if roots.iter().all(|&r| backward_error(&monic, r) <= opts.tol) {
        Ok(roots)
    } else {
        Err(Error::RootNonConvergence {
            iterations: opts.max_iter,
        })
    }
}

/// Groups computed roots into distinct roots with multiplicities.
///
/// Roots within `cluster_tol * (1 + |z|)` of each other are merged and
/// replaced by their mean. Nearby groups, up to `MERGE_RADIUS`, are merged
/// too when the refined point is a numerical root of `p` and its first
/// `m - 1` derivatives to `opts.tol` backward error. Exact zero roots are
/// always grouped exactly.
pub fn root_multiplicities(
    p: &ComplexPoly,
    opts: &RootOptions,
    cluster_tol: f64,
) -> Result<Vec<(Complex64, usize)>> {
    let roots = find_roots(p, opts)?;
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for r in roots {
        match groups.iter_mut().find(|g| {
            let m = mean(g);
            (m - r).norm() <= cluster_tol * (1.0 + m.norm())
        }) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    let mut out: Vec<(Complex64, usize)> = groups
        .iter()
        .map(|g| (refine_multiple(p, mean(g), g.len()), g.len()))
        .collect();
    while let Some((i, j, merged)) = certified_merge(p, &out, opts.tol) {
        out[i] = merged;
        out.swap_remove(j);
    }
    out.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    Ok(out)
}

/// Largest relative distance at which two groups may be merged.
const MERGE_RADIUS: f64 = 1e-3;

fn certified_merge(p: &ComplexPoly, groups: &[(Complex64, usize)], tol: f64) -> Option<(usize, usize, (Complex64, usize))> {
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let ((a, ma), (b, mb)) = (groups[i], groups[j]);
            if (a - b).norm() > MERGE_RADIUS * (1.0 + a.norm()) {
                continue;
            }
            let m = ma + mb;
            let guess = (a * ma as f64 + b * mb as f64) / m as f64;
            let z = refine_multiple(p, guess, m);
            let mut q = p.clone();
            let certified = (0..m).all(|_| {
                let ok = q.degree().unwrap_or(0) == 0 || backward_error(&q, z) <= tol;
                q = q.derivative();
                ok
            });
            if certified {
                return Some((i, j, (z, m)));
            }
        }
    }
    None
}

/// Newton on the `(m-1)`-th derivative, where a root of multiplicity `m` is simple.
///
/// Kept only if it stays inside the cluster radius and lowers `|p^(m-1)|`.
fn refine_multiple(p: &ComplexPoly, z: Complex64, m: usize) -> Complex64 {
    if m < 2 || z == Complex64::default() {
        return z;
    }
    let q = (1..m).fold(p.clone(), |acc, _| acc.derivative());
    let mut best = z;
    let mut best_val = q.eval(z).norm();
    let mut x = z;
    for _ in 0..8 {
        let (v, dv) = q.eval_with_derivative(x);
        if dv.norm() == 0.0 {
            break;
        }
        x -= v / dv;
        let val = q.eval(x).norm();
        if !(val < best_val) || (x - z).norm() > 1e-4 * (1.0 + z.norm()) {
            break;
        }
        (best, best_val) = (x, val);
    }
    best
}

fn mean(v: &[Complex64]) -> Complex64 {
    v.iter().sum::<Complex64>() / v.len() as f64
}
