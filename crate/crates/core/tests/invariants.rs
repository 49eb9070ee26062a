use lame_forge::constraint::{antidifferentiate, constraint_level, extract, Charge, ChargeProblem};
use lame_forge::electrostatics::{
    classify_critical_point, enumerate_equilibria, equilibrium_residual, solve_equilibrium, stieltjes_seeds,
    CriticalKind, EquilibriumSolution, SolutionKind, SolveOptions,
};
use lame_forge::io::{from_json, to_json, PairRecord, PairsDoc, SolutionsDoc};
use lame_forge::lame::{scaled_residual, van_vleck_from_solution, LameOperator, ParametricLame};
use lame_forge::oracles::{Branch, OracleFamily};
use lame_forge::roots::{find_roots, RootOptions};
use lame_forge::stieltjes::{heine_count, solve_fuchs0, solve_heine_stieltjes};
use lame_forge::{Complex64, ComplexPoly, NumericSettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zeros(p: &ComplexPoly) -> Vec<Complex64> {
    find_roots(p, &RootOptions::default()).unwrap()
}

fn example_families() -> Vec<OracleFamily> {
    vec![
        OracleFamily::Hermite { n: 5 },
        OracleFamily::Laguerre { n: 4, alpha: 0.5 },
        OracleFamily::Jacobi { n: 4, alpha: 0.5, beta: 1.5 },
        OracleFamily::RelativisticHermite { n: 6, big_n: 10.0 },
        OracleFamily::HermitePower { n: 4, m: 2 },
        OracleFamily::LaguerrePower { n: 3, m: 3, alpha: 0.5 },
        OracleFamily::LaguerrePalindromic { n: 4, alpha: 2.0 },
        OracleFamily::Schrodinger1F1 { m: 2, d: 2, branch: Branch::Even },
    ]
}

#[test]
fn decomposition_rebuilds_every_example_operator() {
    let settings = NumericSettings::default();
    for fam in example_families() {
        let op = fam.ode().op;
        let dec = extract(&op, &settings).unwrap();
        assert!(dec.rebuild_b().max_coeff_distance(&op.b) < 1e-10, "{fam:?}");
        let d = dec.r_prime.times_poly(&op.a, 1e-10).unwrap();
        assert!(d.max_coeff_distance(&dec.d) < 1e-10, "{fam:?}");
        assert!(dec.btilde.degree_signed() < op.a.degree_signed(), "{fam:?}");
    }
}

#[test]
fn levels_agree_with_closed_forms() {
    let settings = NumericSettings::default();
    for m in 1..=3 {
        for n in 1..=8 {
            for fam in [
                OracleFamily::HermitePower { n, m },
                OracleFamily::LaguerrePower { n, m, alpha: 0.5 },
            ] {
                let (r, level) = fam.closed_form_level().unwrap();
                let x = zeros(&fam.solution());
                let total = constraint_level(&r, &x).unwrap();
                assert!((total.re - level).abs() <= 1e-8 * level.abs().max(1.0), "{fam:?}: {total}");
                // the extracted constraint is a fixed multiple of the closed form
                let extracted = constraint_level(&antidifferentiate(&extract(&fam.ode().op, &settings).unwrap()).unwrap().r, &x).unwrap();
                assert!((extracted * 2.0 + total).norm() <= 1e-8 * (1.0 + level.abs()), "{fam:?}: {extracted}");
            }
        }
    }
}

#[test]
fn recovered_van_vleck_respects_the_fuchs_index() {
    let settings = NumericSettings::default();
    for fam in example_families() {
        let ode = fam.ode();
        let pl = ParametricLame::plain(ode.op.clone());
        let v = van_vleck_from_solution(&pl, &fam.solution(), &settings).unwrap();
        assert!(v.degree_signed() <= ode.op.fuchs_index(), "{fam:?}");
        assert!(scaled_residual(&pl, &v, &fam.solution()) < 1e-9, "{fam:?}");
    }
}

#[test]
fn palindromic_zeros_lie_on_the_half_line_or_semicircle() {
    for alpha in [0.0, 0.5, 2.0] {
        for n in 1..=5 {
            for z in zeros(&OracleFamily::LaguerrePalindromic { n, alpha }.solution()) {
                let on_half_line = z.im.abs() <= 1e-8 && z.re > 0.0;
                let on_arc = (z.norm() - 1.0).abs() <= 1e-8 && z.re > -1e-8;
                assert!(on_half_line || on_arc, "n={n} alpha={alpha}: {z}");
            }
        }
    }
}

#[test]
fn relativistic_hermite_zeros_are_local_minima() {
    let settings = NumericSettings::default();
    for big_n in [1.0, 10.0, 100.0] {
        for n in 1..=8 {
            let fam = OracleFamily::RelativisticHermite { n, big_n };
            let dec = extract(&fam.ode().op, &settings).unwrap();
            assert!(dec.is_unconstrained());
            let x: Vec<Complex64> = zeros(&fam.solution()).into_iter().map(|z| Complex64::new(z.re, 0.0)).collect();
            let problem = dec.problem(n);
            let residual = equilibrium_residual(&problem, None, &x, Complex64::default()).unwrap();
            assert!(residual < 1e-9, "n={n} N={big_n}: {residual:e}");
            let sol = EquilibriumSolution {
                x,
                lambda: Complex64::default(),
                grad_residual: residual,
                grad_residual_abs: 0.0,
                constraint_residual: 0.0,
                energy: 0.0,
                kind: SolutionKind::Unconstrained,
                iterations: 0,
            };
            assert_eq!(classify_critical_point(&problem, None, &sol).unwrap(), CriticalKind::LocalMin);
        }
    }
}

#[test]
fn recurrence_agrees_with_equilibrium_route() {
    let settings = NumericSettings::default();
    let opts = SolveOptions::default();
    for n in 1..=5 {
        for fam in [
            OracleFamily::Hermite { n },
            OracleFamily::Laguerre { n, alpha: 0.5 },
            OracleFamily::Jacobi { n, alpha: 0.0, beta: 0.0 },
            OracleFamily::RelativisticHermite { n, big_n: 10.0 },
        ] {
            let op = fam.ode().op;
            let rec = solve_fuchs0(&op, n).unwrap();
            let hs = solve_heine_stieltjes(&op, n, &opts, &settings).unwrap();
            assert_eq!(hs.pairs.len(), 1, "{fam:?}");
            let pair = &hs.pairs[0];
            assert!(pair.y.max_coeff_distance(&rec.y) < 1e-8, "{fam:?}");
            assert!(pair.v.max_coeff_distance(&rec.v) < 1e-8, "{fam:?}");
            assert!(pair.v.max_coeff_distance(&fam.ode().v) < 1e-8, "{fam:?}");
        }
    }
}

fn random_positive_charges(rng: &mut ChaCha8Rng, count: usize) -> Vec<Charge> {
    let mut at: Vec<f64> = Vec::new();
    while at.len() < count {
        let t: f64 = rng.gen_range(-4.0..4.0);
        if at.iter().all(|&s| (s - t).abs() > 0.4) {
            at.push(t);
        }
    }
    at.iter().map(|&a| Charge::real(a, rng.gen_range(0.2..2.0))).collect()
}

#[test]
fn each_stieltjes_seed_reaches_its_own_equilibrium() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolveOptions::default();
    for p in 1..=3 {
        for n in 1..=4 {
            let problem = ChargeProblem::new(random_positive_charges(&mut rng, p + 1), n).unwrap();
            let seeds = stieltjes_seeds(&problem, n).unwrap();
            assert_eq!(seeds.len() as u64, heine_count(n, p).unwrap());
            let found: Vec<Vec<Complex64>> = seeds
                .iter()
                .map(|s| {
                    solve_equilibrium(&problem, None, s, &opts)
                        .unwrap_or_else(|e| panic!("p={p} n={n} seed {s:?} charges {:?}: {e}", problem.charges))
                        .x
                })
                .collect();
            for (i, a) in found.iter().enumerate() {
                for b in &found[..i] {
                    assert!(!lame_forge::electrostatics::same_configuration(a, b), "p={p} n={n}");
                }
            }
        }
    }
}

#[test]
fn positive_charge_operators_reach_the_heine_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let settings = NumericSettings::default();
    let opts = SolveOptions::default();
    for _ in 0..5 {
        let charges = random_positive_charges(&mut rng, 3);
        let problem = ChargeProblem::new(charges, 1).unwrap();
        let op = problem.operator().unwrap();
        for n in 1..=3 {
            let hs = solve_heine_stieltjes(&op, n, &opts, &settings).unwrap();
            assert_eq!(hs.pairs.len() as u64, heine_count(n, 2).unwrap(), "n={n}");
            assert_eq!(hs.heine_bound, Some(heine_count(n, 2).unwrap()));
            for pair in &hs.pairs {
                assert!(pair.v.degree_signed() <= 1);
                assert!(pair.residual < 1e-9);
            }
        }
    }
}

#[test]
fn documents_reemit_identically() {
    let problem = ChargeProblem::new(vec![Charge::real(-1.0, 0.5), Charge::real(1.0, 0.75), Charge::real(2.5, 1.0)], 3).unwrap();
    let found = enumerate_equilibria(&problem, None, &SolveOptions::default()).unwrap();
    let doc = SolutionsDoc::from_enumeration(3, &found);
    let text = to_json(&doc).unwrap();
    let back: SolutionsDoc = from_json(&text, "solutions").unwrap();
    assert_eq!(back, doc);
    assert_eq!(to_json(&back).unwrap(), text);

    let op = LameOperator::from_ode(ComplexPoly::one(), ComplexPoly::from_real(&[0.0, -2.0])).unwrap();
    let pair = solve_fuchs0(&op, 4).unwrap();
    let pairs = PairsDoc {
        n: 4,
        heine_bound: None,
        starts: 0,
        failed: 0,
        pairs: vec![PairRecord { pair, heine_bound: None }],
    };
    let text = to_json(&pairs).unwrap();
    assert_eq!(to_json(&from_json::<PairsDoc>(&text, "pairs").unwrap()).unwrap(), text);
}
