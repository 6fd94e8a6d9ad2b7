use std::time::Instant;

use famprim::expr::{parse, Expr, ParseContext};
use famprim::exterior::{ext_d, homotopy, wedge, Form};
use famprim::fixtures::*;
use famprim::glue::*;

fn e(s: &str) -> Expr {
    parse(s, ParseContext::new(2, 1)).unwrap()
}

fn annulus_family(n: usize) -> (FamilySpec, Form) {
    let eta = Form::from_terms(2, 1, [(vec![0], e("x1*y2"))]).unwrap();
    let omega = ext_d(&eta).unwrap();
    (FamilySpec::new(omega, 1, Grid::new(vec![-1.0], vec![1.0], n)).unwrap(), eta)
}

fn angular() -> Form {
    let r2 = "(y1^2+y2^2)";
    Form::from_terms(2, 1, [(vec![0], e(&format!("-y2/{r2}"))), (vec![1], e(&format!("y1/{r2}")))]).unwrap()
}

#[test]
fn paper_direct_on_annulus() {
    let cover = annulus_cover(0);
    let (fam, eta) = annulus_family(4);
    let ys = region_grid(&cover, &[-2.0, -2.0], &[2.0, 2.0], 8).unwrap();
    let t = Instant::now();
    let rec = reconstruct_paper_direct(&fam, &cover, &Provider::Symbolic { eta }, &ys, &[], &Tolerances::for_degree(2)).unwrap();
    eprintln!("paper-direct: {:?}", t.elapsed());
    assert!(rec.passed(), "{:#?}", rec.checks);
}

#[test]
fn zigzag_on_annulus() {
    let cover = annulus_cover(0);
    let (fam, _) = annulus_family(4);
    let ys = region_grid(&cover, &[-2.0, -2.0], &[2.0, 2.0], 8).unwrap();
    let t = Instant::now();
    let rec = reconstruct_zigzag(&fam, &cover, &ys, &Tolerances::for_degree(2)).unwrap();
    eprintln!("zigzag: {:?}", t.elapsed());
    assert!(rec.passed(), "{:#?}", rec.checks);
    assert!(!rec.output.has_step());
}

#[test]
fn zigzag_with_one_set_is_the_homotopy_operator() {
    let cover = single_set_cover(2, 0);
    let (fam, _) = annulus_family(3);
    let ys = region_grid(&cover, &[-2.0, -2.0], &[2.0, 2.0], 5).unwrap();
    let rec = reconstruct_zigzag(&fam, &cover, &ys, &Tolerances::for_degree(2)).unwrap();
    let Output::Symbolic(c) = &rec.output else { panic!() };
    let h = homotopy(&fam.omega, None).unwrap();
    assert_eq!(c.get(&[0]).unwrap().with_domain(Default::default()), h);
}

#[test]
fn jittered_paper_direct_still_glues() {
    let cover = annulus_cover(0);
    let (fam, eta) = annulus_family(4);
    let ys = region_grid(&cover, &[-2.0, -2.0], &[2.0, 2.0], 6).unwrap();
    let provider = Provider::Jittered { eta, param: 0, threshold: 0.0, term: angular() };
    let probe = ProbeSpec { points: vec![vec![1.5, 0.2]], centers: vec![vec![0.0]], h: 0.2, levels: 4 };
    let t = Instant::now();
    let rec =
        reconstruct_paper_direct(&fam, &cover, &provider, &ys, &probe.stencil(), &Tolerances::for_degree(2)).unwrap();
    eprintln!("jittered paper-direct: {:?}", t.elapsed());
    assert!(rec.passed(), "{:#?}", rec.checks);
    let report = probe_reconstruction(&rec, &cover, &probe, 10.0).unwrap();
    eprintln!("paper-direct smoothness flagged: {} ratio {}", report.flagged, report.max_ratio);
    let prov = probe_provider(&provider, &probe, 10.0).unwrap();
    assert!(prov.flagged);
}

#[test]
fn torus_class_is_not_exact_for_zigzag() {
    let cover = annulus_product_cover(0);
    assert!(famprim::cech::validate_cover(&cover).passed);
    // dθ1 ∧ dθ2 on the product of two annuli
    let p = ParseContext::new(4, 0);
    let a = |s: &str| parse(s, p).unwrap();
    let th1 = Form::from_terms(4, 1, [(vec![0], a("-y2/(y1^2+y2^2)")), (vec![1], a("y1/(y1^2+y2^2)"))]).unwrap();
    let th2 = Form::from_terms(4, 1, [(vec![2], a("-y4/(y3^2+y4^2)")), (vec![3], a("y3/(y3^2+y4^2)"))]).unwrap();
    let omega = wedge(&th1, &th2).unwrap();
    let fam = FamilySpec::new(omega, 0, Grid::empty()).unwrap();
    let t = Instant::now();
    match reconstruct_zigzag(&fam, &cover, &[], &Tolerances::for_degree(2)) {
        Err(GlueError::NotExact { defect, location }) => {
            eprintln!("torus defect {defect} on {location}: {:?}", t.elapsed());
            assert!(defect > 1e-3);
        }
        other => panic!("{other:?}"),
    }
}
