use lame_forge::constraint::{antidifferentiate, extract, Charge, ChargeProblem};
use lame_forge::electrostatics::{complex_gradient, energy, equilibrium_residual, finite_difference_gradient};
use lame_forge::io::{from_json, to_json, DecompositionDoc};
use lame_forge::lame::LameOperator;
use lame_forge::rational::{partial_fractions, rational_antiderivative};
use lame_forge::roots::{find_roots, RootOptions};
use lame_forge::{Complex64, ComplexPoly, NumericSettings, PoleTerm, RationalFn};
use proptest::prelude::*;

fn complex(radius: f64) -> impl Strategy<Value = Complex64> {
    (-radius..radius, -radius..radius).prop_map(|(re, im)| Complex64::new(re, im))
}

fn poly(max_degree: usize) -> impl Strategy<Value = ComplexPoly> {
    (proptest::collection::vec(complex(2.0), 0..=max_degree), complex(2.0))
        .prop_filter("leading coefficient away from zero", |(_, lead)| lead.norm() > 0.5)
        .prop_map(|(mut c, lead)| {
            c.push(lead);
            ComplexPoly::new(c)
        })
}

fn poly_of_degree(degree: usize) -> impl Strategy<Value = ComplexPoly> {
    (proptest::collection::vec(complex(2.0), degree), complex(2.0).prop_filter("leading coefficient away from zero", |c| c.norm() > 0.5))
        .prop_map(|(mut c, lead)| {
            c.push(lead);
            ComplexPoly::new(c)
        })
}

fn separated(points: &[Complex64], gap: f64) -> bool {
    points
        .iter()
        .enumerate()
        .all(|(k, &z)| points[..k].iter().all(|&w| (z - w).norm() > gap))
}

fn distinct_points(count: std::ops::RangeInclusive<usize>, radius: f64, gap: f64) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec(complex(radius), count).prop_filter("separated points", move |p| separated(p, gap))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divrem_recombines((p, q) in (1usize..=8).prop_flat_map(|dp| (poly_of_degree(dp), (0..=dp).prop_flat_map(poly_of_degree)))) {
        let (quot, rem) = p.divrem(&q).unwrap();
        prop_assert!(rem.degree_signed() < q.degree_signed());
        let back = &(&q * &quot) + &rem;
        prop_assert!(back.max_coeff_distance(&p) <= 1e-10 * (1.0 + p.max_abs_coeff()));
    }

    #[test]
    fn roots_of_product_are_recovered(roots in distinct_points(1..=10, 3.0, 0.3)) {
        let found = find_roots(&ComplexPoly::from_roots(&roots), &RootOptions::default()).unwrap();
        prop_assert_eq!(found.len(), roots.len());
        let mut unused = found.clone();
        for &z in &roots {
            let (k, d) = unused
                .iter()
                .enumerate()
                .map(|(k, &w)| (k, (w - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            prop_assert!(d < 1e-8, "root {} missed by {}", z, d);
            unused.swap_remove(k);
        }
    }

    #[test]
    fn partial_fractions_reassemble(
        poles in distinct_points(1..=4, 2.0, 0.5),
        mults in proptest::collection::vec(1usize..=3, 4),
        extra in 0usize..=3,
        lead in complex(2.0).prop_filter("nonzero", |c| c.norm() > 0.5),
        numer_coeffs in proptest::collection::vec(complex(2.0), 11),
        samples in proptest::collection::vec(complex(3.0), 20),
    ) {
        let roots: Vec<(Complex64, usize)> = poles.iter().zip(&mults).map(|(&a, &m)| (a, m)).collect();
        let degree: usize = roots.iter().map(|r| r.1).sum();
        prop_assume!(degree <= 10);
        let extra = extra.min(10 - degree);
        let denom = roots.iter().fold(ComplexPoly::constant(lead), |acc, &(a, m)| &acc * &ComplexPoly::linear(a).pow(m));
        let numer = ComplexPoly::new(numer_coeffs[..=degree + extra].to_vec());
        let pf = partial_fractions(&numer, &denom, &roots, &NumericSettings::default()).unwrap();
        for &x in samples.iter().filter(|&&x| poles.iter().all(|&a| (x - a).norm() > 0.3)) {
            // factored denominator: the expanded one loses digits near clustered poles
            let factored: Complex64 = roots.iter().fold(lead, |acc, &(a, m)| acc * (x - a).powu(m as u32));
            let direct = numer.eval(x) / factored;
            // relative to the magnitudes summed, since the terms may cancel to zero
            let r = pf.to_rational();
            let size = r.poly_part().eval(x).norm() + r.pole_terms().iter().map(|t| t.eval(x).norm()).sum::<f64>();
            let err = (pf.eval(x) - direct).norm();
            prop_assert!(err <= 1e-10 * (size + direct.norm()), "at {}: {} vs {}", x, pf.eval(x), direct);
        }
    }

    #[test]
    fn antiderivative_differentiates_back(
        p in poly(5),
        poles in distinct_points(0..=3, 2.0, 0.5),
        orders in proptest::collection::vec(2u32..=4, 3),
        coeffs in proptest::collection::vec(complex(2.0), 3),
        samples in proptest::collection::vec(complex(3.0), 10),
    ) {
        let terms = poles
            .iter()
            .zip(&orders)
            .zip(&coeffs)
            .map(|((&pole, &order), &coeff)| PoleTerm { pole, order, coeff })
            .collect();
        let f = RationalFn::new(p, terms).unwrap();
        let back = rational_antiderivative(&f).unwrap().derivative();
        for &x in samples.iter().filter(|&&x| poles.iter().all(|&a| (x - a).norm() > 0.3)) {
            prop_assert!(rel(back.eval(x), f.eval(x)) < 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences(
        (p, points) in (0usize..=3, 1usize..=6).prop_flat_map(|(p, n)| (Just(p), distinct_points(p + 1 + n..=p + 1 + n, 3.0, 0.2))),
        strengths in proptest::collection::vec((0.05f64..2.0, any::<bool>()).prop_map(|(s, neg)| if neg { -s } else { s }), 4),
    ) {
        let charges = points[..=p].iter().zip(&strengths).map(|(&at, &s)| Charge::new(at, Complex64::new(s, 0.0))).collect();
        let x = &points[p + 1..];
        let problem = ChargeProblem::new(charges, x.len()).unwrap();
        let g = complex_gradient(&problem, x).unwrap();
        let fd = finite_difference_gradient(&problem, x, 1e-6).unwrap();
        let scale = g.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        let err = g.iter().zip(&fd).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-6 * scale, "error {} at scale {}", err, scale);
    }

    #[test]
    fn permutation_invariance(
        points in distinct_points(3..=8, 3.0, 0.2),
        shift in 1usize..7,
        lambda in complex(1.0),
    ) {
        let charges = vec![Charge::new(points[0], Complex64::new(0.75, 0.0)), Charge::new(points[1], Complex64::new(-0.5, 0.0))];
        let x = points[2..].to_vec();
        let mut y = x.clone();
        y.rotate_left(shift % x.len());
        y.reverse();
        let problem = ChargeProblem::new(charges, x.len()).unwrap();
        let r_prime = RationalFn::polynomial(ComplexPoly::from_real(&[0.5, -1.0]));
        let (ex, ey) = (energy(&problem, &x).unwrap(), energy(&problem, &y).unwrap());
        prop_assert!((ex - ey).abs() <= 1e-12 * (1.0 + ex.abs()));
        for r1 in [None, Some(&r_prime)] {
            let a = equilibrium_residual(&problem, r1, &x, lambda).unwrap();
            let b = equilibrium_residual(&problem, r1, &y, lambda).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }

    #[test]
    fn extraction_rebuilds_operator(
        roots in distinct_points(1..=4, 2.0, 0.3),
        double_first in any::<bool>(),
        b_coeffs in proptest::collection::vec(complex(2.0), 7),
        b_extra in 0usize..=2,
    ) {
        let mut a_roots = roots.clone();
        if double_first {
            a_roots.push(roots[0]);
        }
        let a = ComplexPoly::from_roots(&a_roots);
        let deg_a = a_roots.len();
        let b = ComplexPoly::new(b_coeffs[..(deg_a + b_extra).min(7)].to_vec());
        let op = LameOperator::new(a.clone(), b.clone()).unwrap();
        prop_assume!(op.fuchs_index() >= 0);
        let dec = extract(&op, &NumericSettings::default()).unwrap();
        prop_assert!(dec.btilde.degree_signed() < a.degree_signed());
        prop_assert!(dec.rebuild_b().max_coeff_distance(&b) <= 1e-10 * (1.0 + b.max_abs_coeff()));
        // A r' is a polynomial, and equals D
        let d = dec.r_prime.times_poly(&a, 1e-8).unwrap();
        prop_assert!(d.max_coeff_distance(&dec.d) <= 1e-10 * (1.0 + d.max_abs_coeff()));
        prop_assert_eq!(dec.repeated_roots_of_a, double_first);
        if !double_first {
            prop_assert!(antidifferentiate(&dec).is_ok());
        }
        let text = to_json(&DecompositionDoc::from_decomposition(&dec).unwrap()).unwrap();
        let again: DecompositionDoc = from_json(&text, "decomposition").unwrap();
        prop_assert_eq!(to_json(&again).unwrap(), text);
    }
}
