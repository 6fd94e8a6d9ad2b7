use std::sync::OnceLock;

use famprim::cech::*;
use famprim::expr::*;
use famprim::exterior::*;
use famprim::fixtures::*;
use famprim::foliation::{leafwise_d, LeafwiseForm};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(coefficient, exponents of y1..y3)` for each monomial.
fn monomials() -> impl Strategy<Value = Vec<(f64, [i32; 3])>> {
    prop::collection::vec((-3.0..3.0f64, [0..4i32, 0..4i32, 0..4i32]), 1..6)
}

fn poly(terms: &[(f64, [i32; 3])]) -> Expr {
    Expr::sum(terms.iter().map(|(c, k)| {
        Expr::product([Expr::constant(*c), Expr::y(0).powi(k[0]), Expr::y(1).powi(k[1]), Expr::y(2).powi(k[2])])
    }))
}

fn point3() -> impl Strategy<Value = [f64; 3]> {
    [-1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64]
}

fn zero_form(w: &Form) -> bool {
    w.terms().all(|(_, c)| symbolic_zero(c))
}

fn max_at(w: &Form, pts: &[Vec<f64>], x: &[f64]) -> f64 {
    let c = w.compile().unwrap();
    pts.iter().map(|y| c.max_abs(&Point::new(y.clone(), x.to_vec())).unwrap()).fold(0.0, f64::max)
}

fn cube_points(rng: &mut ChaCha8Rng, dim: usize, n: usize, r: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-r..r)).collect()).collect()
}

/// Random form whose coefficients are polynomials times `sin` or `exp` of
/// a coordinate, so that the homotopy needs quadrature.
fn transcendental_form(rng: &mut ChaCha8Rng, dim: usize, degree: usize) -> Form {
    let w = random_form(rng, dim, degree, 1, 2);
    w.map_coeffs(|c| {
        let k = rng.gen_range(0..dim);
        let g = if rng.gen_bool(0.5) { Expr::y(k).sin() } else { (Expr::y(k) * 0.5).exp() };
        c * g
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivatives_match_central_differences(terms in monomials(), y in point3(), k in 0usize..3) {
        let e = poly(&terms);
        let d = diff(&e, Symbol::Y(k as u8)).unwrap();
        let h = 1e-5;
        let at = |v: f64| {
            let mut p = y.to_vec();
            p[k] = v;
            e.eval(&Point::new(p, vec![])).unwrap()
        };
        let fd = (at(y[k] + h) - at(y[k] - h)) / (2.0 * h);
        let got = d.eval(&Point::new(y.to_vec(), vec![])).unwrap();
        prop_assert!((got - fd).abs() <= 1e-6 * got.abs().max(1.0), "{} vs {}", got, fd);
    }

    #[test]
    fn bump_vanishes_outside_the_unit_interval(s in 1.0..1e6f64, neg in any::<bool>()) {
        let s = if neg { -s } else { s };
        prop_assert_eq!(bump(s), 0.0);
        prop_assert_eq!(Expr::constant(s).bump().eval(&Point::default()).unwrap(), 0.0);
        let e = Expr::y(0).bump();
        let d2 = diff(&diff(&e, Symbol::Y(0)).unwrap(), Symbol::Y(0)).unwrap();
        prop_assert_eq!(d2.eval(&Point::new(vec![s], vec![])).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn leibniz_rule_for_polynomial_bodies(coeffs in prop::collection::vec(monomials(), 1..4), k in 0usize..3) {
        let body = Expr::sum(coeffs.iter().enumerate().map(|(i, c)| poly(c) * Expr::t().powi(i as i32)));
        let s = Symbol::Y(k as u8);
        let lhs = diff(&integrate_t(&body), s).unwrap();
        let rhs = integrate_t(&diff(&body, s).unwrap());
        prop_assert!(symbolic_eq(&lhs, &rhs));
    }

    #[test]
    fn d_squared_is_zero(seed in any::<u64>(), dim in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in 0..=dim - 2 {
            let w = random_form(&mut rng, dim, p, 1, 4);
            prop_assert!(zero_form(&ext_d(&ext_d(&w).unwrap()).unwrap()));
        }
    }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), p in 0usize..=3, q in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, 3, p, 1, 2);
        let b = random_form(&mut rng, 3, q, 1, 2);
        let ab = wedge(&a, &b).unwrap();
        let ba = wedge(&b, &a).unwrap();
        let ba = if (p * q) % 2 == 1 { ba.neg() } else { ba };
        prop_assert!(zero_form(&ab.sub(&ba).unwrap()));
    }

    #[test]
    fn wedge_of_a_one_form_with_itself_vanishes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, 3, 1, 0, 3);
        prop_assert!(zero_form(&wedge(&a, &a).unwrap()));
    }

    #[test]
    fn homotopy_formula_on_polynomial_forms(seed in any::<u64>(), dim in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in 1..=dim {
            let w = random_form(&mut rng, dim, p, 1, 3);
            let mut lhs = ext_d(&homotopy(&w, None).unwrap()).unwrap();
            if p < dim {
                lhs = lhs.add(&homotopy(&ext_d(&w).unwrap(), None).unwrap()).unwrap();
            }
            prop_assert!(zero_form(&lhs.sub(&w).unwrap()), "p = {}", p);
        }
    }

    #[test]
    fn pullback_is_natural(seed in any::<u64>(), p in 0usize..=1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = SmoothMap::new(3, (0..3).map(|_| random_poly(&mut rng, 3, 0, 2, 3)).collect());
        let w = random_form(&mut rng, 3, p, 0, 2);
        let lhs = pullback(&phi, &ext_d(&w).unwrap()).unwrap();
        let rhs = ext_d(&pullback(&phi, &w).unwrap()).unwrap();
        let pts = cube_points(&mut rng, 3, 100, 1.5);
        let gap = max_at(&lhs.sub(&rhs).unwrap(), &pts, &[]);
        let scale = max_at(&lhs, &pts, &[]).max(1.0);
        prop_assert!(gap <= 1e-12 * scale, "{} (scale {})", gap, scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homotopy_formula_with_quadrature(seed in any::<u64>(), dim in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = cube_points(&mut rng, dim, 100, 1.5);
        for p in 1..=dim {
            let w = transcendental_form(&mut rng, dim, p);
            let mut lhs = ext_d(&homotopy(&w, None).unwrap()).unwrap();
            if p < dim {
                lhs = lhs.add(&homotopy(&ext_d(&w).unwrap(), None).unwrap()).unwrap();
            }
            let gap = max_at(&lhs.sub(&w).unwrap(), &pts, &[0.4]);
            prop_assert!(gap < 1e-9, "p = {}: {}", p, gap);
        }
    }

    #[test]
    fn chart_homotopy_inverts_d_on_closed_forms(
        seed in any::<u64>(),
        scale in [0.3..3.0f64, 0.3..3.0f64],
        centre in [-1.0..1.0f64, -1.0..1.0f64],
        p in 1usize..=2,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let forward: Vec<Expr> = (0..2).map(|i| (Expr::y(i) - centre[i]) * scale[i]).collect();
        let inverse: Vec<Expr> = (0..2).map(|i| Expr::y(i) / scale[i] + centre[i]).collect();
        let u = SmoothMap::new(2, forward).with_inverse(SmoothMap::new(2, inverse));
        let w = ext_d(&transcendental_form(&mut rng, 2, p - 1)).unwrap();
        let h = homotopy(&w, Some(&u)).unwrap();
        let pts = cube_points(&mut rng, 2, 50, 1.5);
        let gap = max_at(&ext_d(&h).unwrap().sub(&w).unwrap(), &pts, &[-0.3]);
        prop_assert!(gap < 1e-8, "{}", gap);
    }

    #[test]
    fn leafwise_d_squared_is_zero(seed in any::<u64>(), base in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fiber = 3;
        for p in 0..=fiber - 2 {
            // a total-space form with legs along the fiber only
            let wf = random_form(&mut rng, fiber, p, base, 3);
            let shifted = Form::from_terms(
                base + fiber,
                p,
                wf.terms().map(|(i, c)| {
                    let c = c.subst(&|s| match s {
                        Symbol::Y(k) => Some(Expr::y(k as usize + base)),
                        Symbol::X(k) => Some(Expr::y(k as usize)),
                        _ => None,
                    });
                    (i.iter().map(|k| k + base).collect(), c)
                }),
            )
            .unwrap();
            let w = LeafwiseForm::new(shifted, base).unwrap();
            let dd = leafwise_d(&leafwise_d(&w).unwrap()).unwrap();
            prop_assert!(zero_form(dd.form()));
        }
    }
}

fn squares() -> &'static GoodCover {
    static C: OnceLock<GoodCover> = OnceLock::new();
    C.get_or_init(|| four_square_cover(0))
}

fn intervals() -> &'static GoodCover {
    static C: OnceLock<GoodCover> = OnceLock::new();
    C.get_or_init(|| three_interval_cover(0))
}

fn cover_by_index(i: usize) -> &'static GoodCover {
    if i == 0 {
        squares()
    } else {
        intervals()
    }
}

fn cochain_zero(c: &Cochain) -> bool {
    c.components().all(|(_, w)| zero_form(w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn delta_squared_is_zero(seed in any::<u64>(), which in 0usize..2, q in 0usize..=1) {
        let cover = cover_by_index(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in 0..cover.nerve_dim() {
            let xi = random_cochain(&mut rng, cover, p, q.min(cover.dim), 1, 3);
            let dd = coboundary(&coboundary(&xi, cover).unwrap(), cover).unwrap();
            prop_assert!(cochain_zero(&dd));
        }
    }

    #[test]
    fn d_and_delta_commute(seed in any::<u64>(), which in 0usize..2) {
        let cover = cover_by_index(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in 0..=cover.nerve_dim() {
            let xi = random_cochain(&mut rng, cover, p, 0, 1, 3);
            let a = coboundary(&xi.d().unwrap(), cover).unwrap();
            let b = coboundary(&xi, cover).unwrap().d().unwrap();
            prop_assert!(cochain_zero(&a.sub(&b).unwrap()));
        }
    }

    #[test]
    fn k_is_a_contracting_homotopy(seed in any::<u64>(), which in 0usize..2, q in 0usize..=1) {
        let cover = cover_by_index(which);
        let rho = partition_of_unity(cover);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in 1..=cover.nerve_dim().min(3) {
            let xi = random_cochain(&mut rng, cover, p, q.min(cover.dim), 1, 2);
            let dxi = coboundary(&xi, cover).unwrap();
            let lhs = coboundary(&mv_homotopy_k(&xi, cover, &rho).unwrap(), cover)
                .unwrap()
                .add(&mv_homotopy_k(&dxi, cover, &rho).unwrap())
                .unwrap();
            let x = [rng.gen_range(-1.0..1.0)];
            let gap = lhs.sub(&xi).unwrap().abs_at_samples(cover, &[x.to_vec()]).unwrap().max;
            prop_assert!(gap < 1e-9, "degree {}: {}", p, gap);
        }
    }

    #[test]
    fn partition_is_supported_and_normalized(seed in any::<u64>(), which in 0usize..2) {
        let cover = cover_by_index(which);
        let rho = partition_of_unity(cover);
        let tape = Compiled::new(&rho).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (vec![-2.5; cover.dim], vec![2.5; cover.dim]);
        for y in sample_region(&cover.region, &lo, &hi, 50, &mut rng) {
            let vals = tape.eval(&Point::new(y.clone(), vec![])).unwrap();
            prop_assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (a, v) in vals.iter().enumerate() {
                prop_assert!(*v >= 0.0);
                if !cover.contains(a, &y) {
                    prop_assert_eq!(*v, 0.0);
                }
            }
        }
    }
}
