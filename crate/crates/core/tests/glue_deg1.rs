use std::collections::BTreeMap;
use std::f64::consts::PI;

use famprim::cech::*;
use famprim::expr::{parse, symbolic_eq, Expr, ParseContext, Point};
use famprim::exterior::{ext_d, Form};
use famprim::fixtures::*;
use famprim::glue::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn e(s: &str, dim: usize, params: usize) -> Expr {
    parse(s, ParseContext::new(dim, params)).unwrap()
}

fn scalar0(dim: usize, entries: Vec<Expr>) -> Cochain {
    let mut c = Cochain::new(dim, 0, 0);
    for (a, f) in entries.into_iter().enumerate() {
        c.insert(vec![a], Form::scalar(dim, f)).unwrap();
    }
    c
}

fn interval_family(n: usize) -> FamilySpec {
    let omega = Form::dy(1, 0).scale(&Expr::x(0));
    FamilySpec::new(omega, 1, Grid::new(vec![-1.0], vec![1.0], n)).unwrap()
}

#[test]
fn linear_family_on_the_line() {
    let cover = single_set_cover(1, 0);
    let tau = local_primitives(&Form::dy(1, 0).scale(&Expr::x(0)), &cover).unwrap();
    assert!(symbolic_eq(&tau.get(&[0]).unwrap().scalar_part(), &(Expr::x(0) * Expr::y(0))));
}

#[test]
fn zero_family_has_zero_primitives() {
    let cover = three_interval_cover(0);
    let tau = local_primitives(&Form::zero(1, 1), &cover).unwrap();
    assert!(tau.components().all(|(_, w)| w.is_zero()));
}

#[test]
fn tan_charts_give_local_primitives() {
    let cover = three_interval_cover(0);
    let f = interval_family(5);
    let tau = local_primitives(&f.omega, &cover).unwrap();
    for (s, w) in tau.components() {
        let dw = ext_d(w).unwrap();
        for y in cover.simplex_points(s) {
            for x in f.param_grid.points() {
                let p = Point::new(y.clone(), x.clone());
                let got = dw.coeff(&[0]).eval(&p).unwrap();
                assert!((got - x[0]).abs() < 1e-8);
                // oracle: x1 y1 plus a constant
                let off = w.scalar_part().eval(&p).unwrap() - x[0] * y[0];
                let off0 = w.scalar_part().eval(&Point::new(cover.simplex_points(s)[0].clone(), x.clone())).unwrap()
                    - x[0] * cover.simplex_points(s)[0][0];
                assert!((off - off0).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn overlap_constant_is_a_difference() {
    let cover = two_interval_cover(0);
    let t1 = e("x1*y1", 1, 1);
    let tau = scalar0(1, vec![t1.clone(), &t1 + 3.0 * Expr::x(0)]);
    let (c, spread) = overlap_constants(&tau, &cover, &[vec![0.3], vec![-1.0]], 1e-9).unwrap();
    assert!(symbolic_eq(&c[&(0, 1)], &(3.0 * Expr::x(0))));
    assert!(spread < 1e-12);

    let same = scalar0(1, vec![t1.clone(), t1]);
    let (c, _) = overlap_constants(&same, &cover, &[vec![0.3]], 1e-9).unwrap();
    assert!(c[&(0, 1)].is_zero());
}

#[test]
fn overlap_constant_must_be_constant() {
    let cover = two_interval_cover(0);
    let tau = scalar0(1, vec![Expr::zero(), Expr::y(0)]);
    assert!(matches!(overlap_constants(&tau, &cover, &[vec![]], 1e-9), Err(GlueError::NotConstant { .. })));
}

/// `U1 = (-2.5, -0.5)`, `U2 = (-1, 1)`, `U3 = (0.5, 2.5)`: a path graph.
fn chain_cover() -> GoodCover {
    let iv = |a: f64, b: f64| Shape::Box { lo: vec![a], hi: vec![b] };
    let sets = vec![shape_set("U1", &iv(-2.5, -0.5)), shape_set("U2", &iv(-1.0, 1.0)), shape_set("U3", &iv(0.5, 2.5))];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let declared = vec![(vec![0, 1], DeclaredSimplex::default()), (vec![1, 2], DeclaredSimplex::default())];
    assemble_cover(1, box_region(&[-2.0], &[2.0]), vec![vec![0.0]], sets, declared, (&[-2.5], &[2.5]), 8, &mut rng)
        .unwrap()
}

#[test]
fn chain_constants_add_along_paths() {
    let cover = chain_cover();
    let edges = BTreeMap::from([((0, 1), Expr::constant(2.0)), ((1, 2), Expr::constant(5.0))]);
    let ext = extend_constants(&edges, &cover, &[vec![]], 1e-8).unwrap();
    assert_eq!(ext.constants[2].as_const(), Some(7.0));
    assert_eq!(ext.base, vec![0, 0, 0]);
    assert!(ext.defects.is_empty());
    assert_eq!(ext.max_defect, 0.0);
}

#[test]
fn cycle_defect_detects_inconsistent_constants() {
    let cover = four_square_cover(0);
    let mut edges = BTreeMap::new();
    for s in cover.simplices(1) {
        edges.insert((s[0], s[1]), Expr::constant((s[1] - s[0]) as f64));
    }
    // consistent: C^{ab} = b - a
    assert!(extend_constants(&edges, &cover, &[vec![]], 1e-8).unwrap().max_defect < 1e-15);
    edges.insert((2, 3), Expr::constant(4.0));
    match extend_constants(&edges, &cover, &[vec![]], 1e-8) {
        Err(GlueError::NotExact { defect, location }) => {
            assert_eq!(defect, 3.0);
            assert_eq!(location, "(3,4)");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn angular_form_is_not_exact() {
    let cover = annulus_cover(0);
    let r2 = "(y1^2+y2^2)";
    let omega = Form::from_terms(2, 1, [(vec![0], e(&format!("-y2/{r2}"), 2, 0)), (vec![1], e(&format!("y1/{r2}"), 2, 0))])
        .unwrap();
    let fam = FamilySpec::new(omega, 0, Grid::empty()).unwrap();
    let ys = region_grid(&cover, &[-2.0, -2.0], &[2.0, 2.0], 10).unwrap();
    match reconstruct_deg1(&fam, &cover, Deg1Mode::Chain, &ys, &Tolerances::default()) {
        Err(GlueError::NotExact { defect, .. }) => assert!((defect - 2.0 * PI).abs() < 1e-6, "{defect}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn interval_chain_mode() {
    let cover = three_interval_cover(0);
    let fam = interval_family(20);
    let ys = region_grid(&cover, &[-2.0], &[2.0], 20).unwrap();
    let rec = reconstruct_deg1(&fam, &cover, Deg1Mode::Chain, &ys, &Tolerances::default()).unwrap();
    assert!(rec.passed(), "{:#?}", rec.checks);
    assert!(!rec.output.has_step());
    let xs = fam.param_grid.points();
    let spread = oracle_spread(&rec.output, &(Expr::x(0) * Expr::y(0)), &cover, &ys, &xs).unwrap();
    assert!(spread.max < 1e-8, "{spread:?}");
    // the base set is centred at 0, so the glued primitive is exactly x1 y1
    let g = rec.glued(&cover).unwrap();
    for y in &ys {
        let v = g.eval(y, &[0.7]).unwrap()[0];
        assert!((v - 0.7 * y[0]).abs() < 1e-9);
    }
}

#[test]
fn paper_mode_with_jitter_differs_by_a_constant() {
    let cover = three_interval_cover(0);
    let fam = interval_family(20);
    let ys = region_grid(&cover, &[-2.0], &[2.0], 20).unwrap();
    let eta = Form::scalar(1, e("x1*y1", 1, 1));
    let jitter = Provider::Jittered { eta, param: 0, threshold: 0.0, term: Form::scalar(1, Expr::constant(5.0)) };
    let tols = Tolerances::default();
    let chain = reconstruct_deg1(&fam, &cover, Deg1Mode::Chain, &ys, &tols).unwrap();
    let paper = reconstruct_deg1(&fam, &cover, Deg1Mode::Paper(&jitter), &ys, &tols).unwrap();
    assert!(paper.passed(), "{:#?}", paper.checks);
    let (gc, gp) = (chain.glued(&cover).unwrap(), paper.glued(&cover).unwrap());
    for x in fam.param_grid.points() {
        let offs: Vec<f64> = ys.iter().map(|y| gp.eval(y, &x).unwrap()[0] - gc.eval(y, &x).unwrap()[0]).collect();
        let (lo, hi) = offs.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo < 1e-9);
    }
}

#[test]
fn annulus_chain_mode_matches_oracle() {
    let cover = annulus_cover(0);
    let f = e("x1*y1 + sin(x2)*y2", 2, 2);
    let omega = ext_d(&Form::scalar(2, f.clone())).unwrap();
    let fam = FamilySpec::new(omega, 2, Grid::new(vec![-1.0, -1.0], vec![1.0, 1.0], 20)).unwrap();
    let ys = region_grid(&cover, &[-2.0, -2.0], &[2.0, 2.0], 20).unwrap();
    let start = std::time::Instant::now();
    let rec = reconstruct_deg1(&fam, &cover, Deg1Mode::Chain, &ys, &Tolerances::default()).unwrap();
    eprintln!("annulus chain: {:?}", start.elapsed());
    assert!(rec.passed(), "{:#?}", rec.checks);
    assert!(!rec.output.has_step());
    let spread = oracle_spread(&rec.output, &f, &cover, &ys, &fam.param_grid.points()).unwrap();
    assert!(spread.max < 1e-8, "{spread:?}");
}
