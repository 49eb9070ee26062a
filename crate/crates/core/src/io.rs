//! File formats: canonical JSON documents, CSV point lists and plot data.
//!
//! Complex scalars are `[re, im]` pairs and polynomials are
//! `{"coeffs": [[re, im], ...]}` in ascending order.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constraint::{antidifferentiate, Charge, ChargeProblem, Constraint, Decomposition};
use crate::electrostatics::{EquilibriumSolution, Enumeration};
use crate::error::{Error, Result};
use crate::lame::LameOperator;
use crate::poly::{complex_pair, ComplexPoly};
use crate::rational::RationalFn;
use crate::stieltjes::VanVleckPair;

/// How the `B` field of an operator document is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Convention {
    /// The operator is `A y'' + 2B y'`.
    #[default]
    #[serde(rename = "2B")]
    Halved,
    /// The operator is `A y'' + B y'`.
    #[serde(rename = "B")]
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    #[serde(rename = "A")]
    pub a: ComplexPoly,
    #[serde(rename = "B")]
    pub b: ComplexPoly,
    #[serde(default)]
    pub convention: Convention,
}

impl OperatorDoc {
    pub fn from_operator(op: &LameOperator) -> Self {
        Self {
            a: op.a.clone(),
            b: op.b.clone(),
            convention: Convention::Halved,
        }
    }

    pub fn to_operator(&self) -> Result<LameOperator> {
        match self.convention {
            Convention::Halved => LameOperator::new(self.a.clone(), self.b.clone()),
            Convention::Full => LameOperator::from_ode(self.a.clone(), self.b.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionFlags {
    pub repeated_roots_of_a: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    #[serde(rename = "A")]
    pub a: ComplexPoly,
    #[serde(rename = "B")]
    pub b: ComplexPoly,
    pub charges: Vec<Charge>,
    pub r: RationalFn,
    pub r_prime: RationalFn,
    #[serde(rename = "D")]
    pub d: ComplexPoly,
    #[serde(rename = "Btilde")]
    pub btilde: ComplexPoly,
    pub flags: DecompositionFlags,
}

impl DecompositionDoc {
    pub fn from_decomposition(dec: &Decomposition) -> Result<Self> {
        Ok(Self {
            a: dec.a.clone(),
            b: dec.b.clone(),
            charges: dec.charges.clone(),
            r: antidifferentiate(dec)?.r,
            r_prime: dec.r_prime.clone(),
            d: dec.d.clone(),
            btilde: dec.btilde.clone(),
            flags: DecompositionFlags {
                repeated_roots_of_a: dec.repeated_roots_of_a,
            },
        })
    }

    /// Rebuilds the decomposition; the roots of `A` are not stored and stay empty.
    pub fn to_decomposition(&self) -> Decomposition {
        Decomposition {
            a: self.a.clone(),
            b: self.b.clone(),
            a_roots: Vec::new(),
            charges: self.charges.clone(),
            r_prime: self.r_prime.clone(),
            d: self.d.clone(),
            btilde: self.btilde.clone(),
            repeated_roots_of_a: self.flags.repeated_roots_of_a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub charges: Vec<Charge>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<Constraint>,
}

impl ProblemDoc {
    pub fn problem(&self) -> Result<ChargeProblem> {
        ChargeProblem::new(self.charges.clone(), self.n)
    }
}

/// One equilibrium with its monic polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    #[serde(flatten)]
    pub solution: EquilibriumSolution,
    pub y: ComplexPoly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionsDoc {
    pub n: usize,
    pub starts: usize,
    pub converged: usize,
    pub failed: usize,
    pub heine_bound: Option<u64>,
    pub solutions: Vec<SolutionRecord>,
}

impl SolutionsDoc {
    pub fn from_enumeration(n: usize, e: &Enumeration) -> Self {
        Self {
            n,
            starts: e.starts,
            converged: e.converged,
            failed: e.failed,
            heine_bound: e.heine_bound,
            solutions: e
                .solutions
                .iter()
                .map(|s| SolutionRecord {
                    y: ComplexPoly::from_roots(&s.x),
                    solution: s.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    #[serde(flatten)]
    pub pair: VanVleckPair,
    pub heine_bound: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsDoc {
    pub n: usize,
    pub heine_bound: Option<u64>,
    pub starts: usize,
    pub failed: usize,
    pub pairs: Vec<PairRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub degree: usize,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub v: Option<ComplexPoly>,
    /// `rho` in `A y'' + (2B~ - rho D) y' + V y = 0`.
    #[serde(with = "complex_pair")]
    pub rho_ode: Complex64,
    /// Multiplier implied by `rho_ode`.
    #[serde(with = "complex_pair")]
    pub lambda: Complex64,
    /// Least-squares multiplier of the equilibrium system at the roots.
    #[serde(with = "complex_pair")]
    pub lambda_fit: Complex64,
    pub multiplier_free: bool,
    pub ode_residual: Option<f64>,
    pub equilibrium_residual: Option<f64>,
    #[serde(with = "crate::poly::complex_pairs")]
    pub roots: Vec<Complex64>,
    #[serde(with = "optional_pair")]
    pub level: Option<Complex64>,
    pub off_arrangement: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
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

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Parses JSON, reporting line and column on failure.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::InvalidInput(format!(
            "{what}: {e} (line {}, column {})",
            e.line(),
            e.column()
        ))
    })
}

/// Blocks of `index,re,im` rows, each preceded by `#` lines carrying the diagnostics.
pub fn solutions_csv(doc: &SolutionsDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# n={} starts={} converged={} failed={} heine_bound={}",
        doc.n,
        doc.starts,
        doc.converged,
        doc.failed,
        doc.heine_bound.map_or("none".to_string(), |b| b.to_string())
    );
    for (s, rec) in doc.solutions.iter().enumerate() {
        let sol = &rec.solution;
        let _ = writeln!(
            out,
            "# solution={} lambda={:?},{:?} grad_residual={:?} constraint_residual={:?} energy={:?}",
            s, sol.lambda.re, sol.lambda.im, sol.grad_residual, sol.constraint_residual, sol.energy
        );
        out.push_str(&points_csv(&sol.x));
    }
    out
}

/// `index,re,im` header and rows.
pub fn points_csv(points: &[Complex64]) -> String {
    let mut out = String::from("index,re,im\n");
    for (k, z) in points.iter().enumerate() {
        let _ = writeln!(out, "{k},{:?},{:?}", z.re, z.im);
    }
    out
}

/// Whitespace-separated columns under a `#` header.
pub fn plotdata(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("# {}\n", header.join(" "));
    for row in rows {
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
