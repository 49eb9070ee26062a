//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numeric failure, 2 input error.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::constraint::{antidifferentiate, constraint_level, determine_multiplier, extract, Constraint, Decomposition, OPERATOR_MULTIPLIER};
use crate::electrostatics::{
    enumerate_equilibria, enumerate_with_multiplier, equilibrium_residual, fit_multiplier, Enumeration, SolveOptions,
    ARRANGEMENT_SEPARATION,
};
use crate::error::Error;
use crate::io::{
    from_json, plotdata, points_csv, solutions_csv, to_json, DecompositionDoc, OperatorDoc, PairRecord, PairsDoc,
    ProblemDoc, SolutionsDoc, VerifyReport,
};
use crate::lame::scaled_residual;
use crate::oracles::{hermite, relativistic_hermite, Branch, OracleFamily};
use crate::poly::ComplexPoly;
use crate::roots::{find_roots, sort_lex, RootOptions};
use crate::settings::NumericSettings;
use crate::stieltjes::{heine_count, solve_fuchs0, solve_heine_stieltjes};

#[derive(Debug, Parser)]
#[command(name = "lame-forge", version, about = "Lamé equations, Van Vleck polynomials and electrostatic equilibria")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Solver tolerance in (0, 1e-2); for verify, the residual threshold.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 200)]
    pub max_iter: usize,
    /// Random multistart count in [1, 100000].
    #[arg(long, global = true, default_value_t = 32)]
    pub starts: usize,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plotdata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Hermite,
    Laguerre,
    Jacobi,
    RelativisticHermite,
    HermitePower,
    LaguerrePower,
    LaguerrePalindromic,
    Schrodinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Even,
    Odd,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split an operator into fixed charges and a constraint.
    Extract {
        /// Operator JSON, or `-` for standard input.
        input: PathBuf,
    },
    /// Enumerate equilibria of a problem or a decomposition.
    Solve {
        input: PathBuf,
        /// Number of movable charges; required for a decomposition.
        #[arg(long)]
        n: Option<usize>,
        /// Constraint level `re` or `re,im`; the multiplier is then solved for.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        level: Option<Complex64>,
    },
    /// Check that a polynomial solves an operator and report the round trip.
    Verify {
        operator: PathBuf,
        /// Polynomial JSON, or a solutions document from `solve`.
        y: PathBuf,
        /// Which solution of a solutions document to check.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Find Van Vleck and Stieltjes polynomials of an operator.
    SolveLame {
        input: PathBuf,
        #[arg(long)]
        n: usize,
        /// Use the coefficient recurrence (Fuchs index zero only).
        #[arg(long)]
        recurrence: bool,
    },
    /// Emit a polynomial family member with its zeros and equation.
    Oracle {
        #[arg(value_enum)]
        family: FamilyName,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long = "big-n", default_value_t = 1.0)]
        big_n: f64,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, value_enum, default_value_t = BranchArg::Even)]
        branch: BranchArg,
    },
    /// Positive zeros of relativistic Hermite polynomials across a grid of N.
    SweepN {
        #[arg(long)]
        n: usize,
        /// Comma-separated values, or `pow2:a:b` for 2^a, ..., 2^b.
        #[arg(long, default_value = "")]
        grid: String,
    },
    /// The Heine bound binom(n + p - 1, n).
    HeineCount {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_)
            | Error::NotFuchs0(_)
            | Error::NonMonomialConstraint
            | Error::CountOverflow { .. }
            | Error::PochhammerPole { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t}: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got {s}")),
    }
}

/// `pow2:a:b` or a comma list; the values must be positive and increasing.
pub fn parse_grid(grid: &str) -> CliResult<Vec<f64>> {
    let grid = grid.trim();
    let values: Vec<f64> = if grid.is_empty() {
        Vec::new()
    } else if let Some(rest) = grid.strip_prefix("pow2:") {
        let bounds: Vec<i32> = rest
            .split(':')
            .map(|t| t.trim().parse::<i32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::input(format!("grid {grid}: {e}")))?;
        let [a, b] = bounds[..] else {
            return Err(CliError::input(format!("grid {grid}: expected pow2:a:b")));
        };
        (a..=b).map(|k| 2f64.powi(k)).collect()
    } else {
        grid.split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::input(format!("grid {grid}: {e}")))?
    };
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::input("grid values must be positive and increasing"));
    }
    Ok(values)
}

fn read_input(path: &Path) -> CliResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::input(format!("standard input: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }
}

fn has_key(text: &str, key: &str) -> CliResult<bool> {
    let value: serde_json::Value = from_json(text, "input")?;
    Ok(value.get(key).is_some())
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(to_json(value)?)
}

fn unsupported(format: Format, command: &str) -> CliError {
    CliError::input(format!("format {format:?} is not available for {command}"))
}

impl Cli {
    fn solve_options(&self) -> CliResult<SolveOptions> {
        let defaults = SolveOptions::default();
        let tol = self.tol.unwrap_or(defaults.tol);
        if !(tol > 0.0 && tol < 1e-2) {
            return Err(CliError::input(format!("--tol {tol} must lie in (0, 1e-2)")));
        }
        if !(1..=100_000).contains(&self.starts) {
            return Err(CliError::input(format!("--starts {} must lie in [1, 100000]", self.starts)));
        }
        Ok(SolveOptions {
            tol,
            max_iter: self.max_iter,
            random_starts: self.starts,
            seed: self.seed,
        })
    }

    /// Runs the command and returns the text to emit.
    pub fn execute(&self) -> CliResult<String> {
        let opts = self.solve_options()?;
        let settings = NumericSettings::default();
        match &self.command {
            Command::Extract { input } => {
                let op = from_json::<OperatorDoc>(&read_input(input)?, "operator")?.to_operator()?;
                let dec = extract(&op, &settings)?;
                match self.format.unwrap_or(Format::Json) {
                    Format::Json => json(&DecompositionDoc::from_decomposition(&dec)?),
                    f => Err(unsupported(f, "extract")),
                }
            }
            Command::Solve { input, n, level } => self.solve(&read_input(input)?, *n, *level, &opts, &settings),
            Command::Verify { operator, y, index } => self.verify(&read_input(operator)?, &read_input(y)?, *index, &settings),
            Command::SolveLame { input, n, recurrence } => {
                let op = from_json::<OperatorDoc>(&read_input(input)?, "operator")?.to_operator()?;
                let doc = if *recurrence {
                    let pair = solve_fuchs0(&op, *n)?;
                    PairsDoc {
                        n: *n,
                        heine_bound: None,
                        starts: 0,
                        failed: 0,
                        pairs: vec![PairRecord { pair, heine_bound: None }],
                    }
                } else {
                    let hs = solve_heine_stieltjes(&op, *n, &opts, &settings)?;
                    PairsDoc {
                        n: *n,
                        heine_bound: hs.heine_bound,
                        starts: hs.starts,
                        failed: hs.failed,
                        pairs: hs
                            .pairs
                            .into_iter()
                            .map(|pair| PairRecord {
                                pair,
                                heine_bound: hs.heine_bound,
                            })
                            .collect(),
                    }
                };
                match self.format.unwrap_or(Format::Json) {
                    Format::Json => json(&doc),
                    f => Err(unsupported(f, "solve-lame")),
                }
            }
            Command::Oracle {
                family,
                n,
                alpha,
                beta,
                m,
                big_n,
                d,
                branch,
            } => {
                let (n, alpha, beta, m, big_n, d) = (*n, *alpha, *beta, *m, *big_n, *d);
                let fam = match family {
                    FamilyName::Hermite => OracleFamily::Hermite { n },
                    FamilyName::Laguerre => OracleFamily::Laguerre { n, alpha },
                    FamilyName::Jacobi => OracleFamily::Jacobi { n, alpha, beta },
                    FamilyName::RelativisticHermite => OracleFamily::RelativisticHermite { n, big_n },
                    FamilyName::HermitePower => OracleFamily::HermitePower { n, m },
                    FamilyName::LaguerrePower => OracleFamily::LaguerrePower { n, m, alpha },
                    FamilyName::LaguerrePalindromic => OracleFamily::LaguerrePalindromic { n, alpha },
                    FamilyName::Schrodinger => OracleFamily::Schrodinger1F1 {
                        m,
                        d,
                        branch: match branch {
                            BranchArg::Even => Branch::Even,
                            BranchArg::Odd => Branch::Odd,
                        },
                    },
                };
                self.oracle(fam, &settings)
            }
            Command::SweepN { n, grid } => self.sweep_n(*n, &parse_grid(grid)?, &settings),
            Command::HeineCount { n, p } => {
                let count = heine_count(*n, *p)?;
                match self.format.unwrap_or(Format::Json) {
                    Format::Json => json(&serde_json::json!({ "n": n, "p": p, "count": count })),
                    Format::Csv => Ok(format!("n,p,count\n{n},{p},{count}\n")),
                    f => Err(unsupported(f, "heine-count")),
                }
            }
        }
    }

    fn solve(
        &self,
        text: &str,
        n: Option<usize>,
        level: Option<Complex64>,
        opts: &SolveOptions,
        settings: &NumericSettings,
    ) -> CliResult<String> {
        let (n, found): (usize, Enumeration) = if has_key(text, "Btilde")? {
            let doc: DecompositionDoc = from_json(text, "decomposition")?;
            let n = n.ok_or_else(|| CliError::input("--n is required when solving a decomposition"))?;
            let dec = doc.to_decomposition();
            let problem = dec.problem(n);
            problem.validate()?;
            let found = match level {
                Some(level) => enumerate_equilibria(&problem, Some(&Constraint::new(doc.r.clone(), Some(level))), opts)?,
                None if dec.is_unconstrained() => enumerate_equilibria(&problem, None, opts)?,
                None => enumerate_with_multiplier(&problem, &dec.r_prime, OPERATOR_MULTIPLIER, opts)?,
            };
            (n, found)
        } else {
            let mut doc: ProblemDoc = from_json(text, "problem")?;
            if let Some(n) = n {
                doc.n = n;
            }
            if let Some(level) = level {
                match doc.constraint.as_mut() {
                    Some(c) => c.level = Some(level),
                    None => return Err(CliError::input("--level needs a constraint in the problem")),
                }
            }
            let problem = doc.problem()?;
            (doc.n, enumerate_equilibria(&problem, doc.constraint.as_ref(), opts)?)
        };
        let _ = settings;
        if n > 0 && found.converged == 0 {
            return Err(CliError::numeric(format!("none of {} starts converged", found.starts)));
        }
        let doc = SolutionsDoc::from_enumeration(n, &found);
        match self.format.unwrap_or(Format::Json) {
            Format::Json => json(&doc),
            Format::Csv => Ok(solutions_csv(&doc)),
            f => Err(unsupported(f, "solve")),
        }
    }

    fn verify(&self, op_text: &str, y_text: &str, index: usize, settings: &NumericSettings) -> CliResult<String> {
        let dec: Decomposition = if has_key(op_text, "Btilde")? {
            from_json::<DecompositionDoc>(op_text, "decomposition")?.to_decomposition()
        } else {
            extract(&from_json::<OperatorDoc>(op_text, "operator")?.to_operator()?, settings)?
        };
        let y: ComplexPoly = if has_key(y_text, "solutions")? {
            let doc: SolutionsDoc = from_json(y_text, "solutions")?;
            doc.solutions
                .get(index)
                .map(|s| s.y.clone())
                .ok_or_else(|| CliError::input(format!("no solution with index {index}")))?
        } else {
            from_json(y_text, "polynomial")?
        };
        if y.is_zero() {
            return Err(CliError::input("the zero polynomial is not a candidate solution"));
        }
        let report = verify_report(&dec, &y, self.tol.unwrap_or(1e-8), settings)?;
        let text = match self.format.unwrap_or(Format::Json) {
            Format::Json => json(&report)?,
            f => return Err(unsupported(f, "verify")),
        };
        if report.pass {
            Ok(text)
        } else {
            // the report still goes out, with a failing exit code
            Err(CliError {
                code: 1,
                message: text,
            })
        }
    }

    fn oracle(&self, fam: OracleFamily, settings: &NumericSettings) -> CliResult<String> {
        fam.validate()?;
        let y = fam.solution();
        let ode = fam.ode();
        let zeros = if y.degree().unwrap_or(0) > 0 {
            find_roots(&y, &root_options(settings))?
        } else {
            Vec::new()
        };
        match self.format.unwrap_or(Format::Json) {
            Format::Json => json(&serde_json::json!({
                "family": fam,
                "y": y,
                "zeros": zeros.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "A": ode.op.a,
                "B": ode.op.b,
                "V": ode.v,
            })),
            Format::Csv => Ok(points_csv(&zeros)),
            Format::Plotdata => Ok(plotdata(
                &["re", "im"],
                &zeros.iter().map(|z| vec![format!("{:?}", z.re), format!("{:?}", z.im)]).collect::<Vec<_>>(),
            )),
        }
    }

    fn sweep_n(&self, n: usize, grid: &[f64], settings: &NumericSettings) -> CliResult<String> {
        if n < 2 {
            return Err(CliError::input("sweep-n needs n >= 2"));
        }
        let opts = root_options(settings);
        let positive = |p: &ComplexPoly| -> CliResult<Vec<f64>> {
            let mut z: Vec<f64> = find_roots(p, &opts)?
                .into_iter()
                .filter(|z| z.re > 0.0 && z.im.abs() <= 1e-8 * (1.0 + z.re))
                .map(|z| z.re)
                .collect();
            z.sort_by(f64::total_cmp);
            Ok(z)
        };
        let tracks = n / 2;
        let mut rows: Vec<(String, Vec<f64>)> = Vec::with_capacity(grid.len() + 1);
        for &big_n in grid {
            let z = positive(&relativistic_hermite(n, big_n))?;
            if z.len() != tracks {
                return Err(CliError::numeric(format!("N = {big_n}: found {} positive zeros, expected {tracks}", z.len())));
            }
            rows.push((format!("{big_n:?}"), z));
        }
        let limit = if grid.is_empty() { None } else { Some(positive(&hermite(n))?) };

        match self.format.unwrap_or(Format::Plotdata) {
            Format::Plotdata => {
                let names: Vec<String> = std::iter::once("N".to_string())
                    .chain((1..=tracks).map(|k| format!("zero_{k}")))
                    .collect();
                let mut table: Vec<Vec<String>> = rows
                    .iter()
                    .map(|(label, z)| std::iter::once(label.clone()).chain(z.iter().map(|v| format!("{v:?}"))).collect())
                    .collect();
                if let Some(l) = &limit {
                    table.push(std::iter::once("inf".to_string()).chain(l.iter().map(|v| format!("{v:?}"))).collect());
                }
                Ok(plotdata(&names.iter().map(String::as_str).collect::<Vec<_>>(), &table))
            }
            Format::Json => json(&serde_json::json!({
                "n": n,
                "N": grid,
                "zeros": rows.iter().map(|(_, z)| z.clone()).collect::<Vec<_>>(),
                "limit": limit,
            })),
            f => Err(unsupported(f, "sweep-n")),
        }
    }
}

fn root_options(settings: &NumericSettings) -> RootOptions {
    RootOptions {
        tol: settings.root_tol,
        max_iter: settings.root_max_iter,
    }
}

/// Full round trip for a candidate `y`: multiplier, `V`, residuals, level and arrangement.
pub fn verify_report(
    dec: &Decomposition,
    y: &ComplexPoly,
    threshold: f64,
    settings: &NumericSettings,
) -> crate::error::Result<VerifyReport> {
    let degree = y.degree().unwrap_or(0);
    let mut roots = if degree > 0 { find_roots(y, &root_options(settings))? } else { Vec::new() };
    sort_lex(&mut roots);
    let problem = dec.problem(degree);
    let off_arrangement = roots.iter().enumerate().all(|(k, &x)| {
        roots[..k].iter().all(|&z| (x - z).norm() > ARRANGEMENT_SEPARATION)
            && dec.charges.iter().all(|c| (x - c.at).norm() > ARRANGEMENT_SEPARATION)
    });

    let (fit, error) = match determine_multiplier(dec, y, settings) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let ode_residual = fit
        .as_ref()
        .map(|f| scaled_residual(&dec.parametric(f.rho_ode), &f.van_vleck, y));
    let pass = ode_residual.is_some_and(|r| r < threshold);

    let r_prime = (!dec.r_prime.is_zero()).then_some(&dec.r_prime);
    let (lambda_fit, equilibrium_residual) = if off_arrangement {
        let lambda = match r_prime {
            Some(r1) => fit_multiplier(&problem, r1, &roots)?,
            None => Complex64::default(),
        };
        (lambda, equilibrium_residual(&problem, r_prime, &roots, lambda).ok())
    } else {
        (Complex64::default(), None)
    };
    let level = match r_prime {
        Some(_) => constraint_level(&antidifferentiate(dec)?.r, &roots).ok(),
        None => None,
    };
    let rho_ode = fit.as_ref().map_or(Complex64::default(), |f| f.rho_ode);
    Ok(VerifyReport {
        pass,
        degree,
        v: fit.as_ref().map(|f| f.van_vleck.clone()),
        rho_ode,
        lambda: rho_ode / 2.0,
        lambda_fit,
        multiplier_free: fit.as_ref().is_some_and(|f| f.degenerate),
        ode_residual,
        equilibrium_residual,
        roots,
        level,
        off_arrangement,
        error,
    })
}

/// Parses arguments, runs, writes output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (text, code) = match cli.execute() {
        Ok(text) => (Some(text), 0),
        Err(e) if e.code == 1 && e.message.starts_with('{') => (Some(e.message), 1),
        Err(e) => {
            eprintln!("error: {}", e.message);
            (None, e.code)
        }
    };
    if let Some(text) = text {
        let written = match &cli.output {
            Some(path) => fs::write(path, text.as_bytes()),
            None => io::stdout().write_all(text.as_bytes()),
        };
        if let Err(e) = written {
            eprintln!("error: writing output: {e}");
            return 2;
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("lame-forge").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("pow2:0:3").unwrap(), vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(parse_grid("1, 10,100").unwrap(), vec![1.0, 10.0, 100.0]);
        assert!(parse_grid("").unwrap().is_empty());
        assert_eq!(parse_grid("2,1").unwrap_err().code, 2);
        assert_eq!(parse_grid("pow2:1").unwrap_err().code, 2);
    }

    #[test]
    fn levels_parse() {
        assert_eq!(parse_complex("4").unwrap(), Complex64::new(4.0, 0.0));
        assert_eq!(parse_complex("-1,2.5").unwrap(), Complex64::new(-1.0, 2.5));
        assert!(parse_complex("1,2,3").is_err());
    }

    #[test]
    fn settings_validated() {
        assert_eq!(cli(&["--tol", "0.5", "heine-count", "--n", "2", "--p", "2"]).execute().unwrap_err().code, 2);
        assert_eq!(cli(&["--starts", "0", "heine-count", "--n", "2", "--p", "2"]).execute().unwrap_err().code, 2);
        let out = cli(&["heine-count", "--n", "2", "--p", "2"]).execute().unwrap();
        assert!(out.contains("\"count\": 3"));
    }

    #[test]
    fn sweep_two_has_closed_form() {
        let out = cli(&["sweep-n", "--n", "2", "--grid", "1,3"]).execute().unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "# N zero_1");
        let z: f64 = lines[2].split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!((z - (3.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!(lines[3].starts_with("inf "));
        let empty = cli(&["sweep-n", "--n", "4", "--grid", ""]).execute().unwrap();
        assert_eq!(empty, "# N zero_1 zero_2\n");
    }

    #[test]
    fn oracle_json() {
        let out = cli(&["oracle", "laguerre", "--n", "2", "--alpha", "0"]).execute().unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["family"]["family"], "laguerre");
        assert_eq!(v["zeros"].as_array().unwrap().len(), 2);
    }
}
