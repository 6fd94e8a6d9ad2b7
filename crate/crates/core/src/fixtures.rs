//! Built-in covers and random polynomial forms used by the self-check and
//! the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cech::{assemble_cover, sample_region, Cochain, CoverSet, DeclaredSimplex, GoodCover, Shape};
use crate::expr::Expr;
use crate::exterior::Form;

/// Default number of extra samples per nerve simplex.
pub const SAMPLES: usize = 8;

pub fn shape_set(name: &str, shape: &Shape) -> CoverSet {
    let r = shape.realize();
    CoverSet { name: name.to_string(), membership: r.membership, chart: r.chart, bump: r.bump }
}

fn with_chart(shape: &Shape) -> DeclaredSimplex {
    DeclaredSimplex { chart: Some(shape.realize().chart), ..Default::default() }
}

fn interval(lo: f64, hi: f64) -> Shape {
    Shape::Box { lo: vec![lo], hi: vec![hi] }
}

/// Predicates of the open box `Π (lo_i, hi_i)`.
pub fn box_region(lo: &[f64], hi: &[f64]) -> Vec<Expr> {
    lo.iter()
        .zip(hi)
        .enumerate()
        .map(|(i, (&a, &b))| (Expr::y(i) - a) * (b - Expr::y(i)))
        .collect()
}

/// Predicates of the annulus `r0 < |y| < r1` in the plane.
pub fn annulus_region(r0: f64, r1: f64) -> Vec<Expr> {
    let r2 = Expr::y(0).powi(2) + Expr::y(1).powi(2);
    vec![&r2 - r0 * r0, r1 * r1 - r2]
}

fn build(
    dim: usize,
    region: Vec<Expr>,
    sets: Vec<CoverSet>,
    declared: Vec<(Vec<usize>, DeclaredSimplex)>,
    lo: &[f64],
    hi: &[f64],
    seed: u64,
) -> GoodCover {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = sample_region(&region, lo, hi, 64, &mut rng);
    assemble_cover(dim, region, samples, sets, declared, (lo, hi), SAMPLES, &mut rng).expect("fixture cover assembles")
}

// Outer sets reach past the region so that no bump underflows to zero
// anywhere in it.

/// `(-2, 2)` covered by `(-2.5, 0.5)` and `(-0.5, 2.5)`.
pub fn two_interval_cover(seed: u64) -> GoodCover {
    let (a, b) = (interval(-2.5, 0.5), interval(-0.5, 2.5));
    build(
        1,
        box_region(&[-2.0], &[2.0]),
        vec![shape_set("U1", &a), shape_set("U2", &b)],
        vec![(vec![0, 1], with_chart(&interval(-0.5, 0.5)))],
        &[-2.5],
        &[2.5],
        seed,
    )
}

/// `(-2, 2)` covered by the chain `(-2.5, -0.5)`, `(-1, 1)`, `(0.5, 2.5)`
/// listed middle first: `U1 = (-1, 1)`, `U2 = (0.5, 2.5)`, `U3 = (-2.5, -0.5)`.
pub fn three_interval_cover(seed: u64) -> GoodCover {
    build(
        1,
        box_region(&[-2.0], &[2.0]),
        vec![
            shape_set("U1", &interval(-1.0, 1.0)),
            shape_set("U2", &interval(0.5, 2.5)),
            shape_set("U3", &interval(-2.5, -0.5)),
        ],
        vec![
            (vec![0, 1], with_chart(&interval(0.5, 1.0))),
            (vec![0, 2], with_chart(&interval(-1.0, -0.5))),
        ],
        &[-2.5],
        &[2.5],
        seed,
    )
}

/// Three sectors of `0.5 < |y| < 2.5` with half width 80° centred at 0°,
/// 120° and 240°, covering the annulus `1 < |y| < 2`. Pairwise overlaps are
/// 40° sectors; there are no triple intersections.
pub fn annulus_sectors() -> Vec<Shape> {
    [0.0, 120.0, 240.0]
        .into_iter()
        .map(|c| Shape::Sector { r: ANNULUS_SET_RADII, center: c, half_width: 80.0 })
        .collect()
}

pub const ANNULUS_SET_RADII: [f64; 2] = [0.5, 2.5];

pub fn annulus_cover(seed: u64) -> GoodCover {
    let sets: Vec<CoverSet> =
        annulus_sectors().iter().enumerate().map(|(i, s)| shape_set(&format!("U{}", i + 1), s)).collect();
    let overlap = |c: f64| with_chart(&Shape::Sector { r: ANNULUS_SET_RADII, center: c, half_width: 20.0 });
    build(
        2,
        annulus_region(1.0, 2.0),
        sets,
        vec![(vec![0, 1], overlap(60.0)), (vec![1, 2], overlap(180.0)), (vec![0, 2], overlap(300.0))],
        &[-2.5, -2.5],
        &[2.5, 2.5],
        seed,
    )
}

/// Four boxes `(a, a + 4) × (b, b + 4)` with `a, b ∈ {-3, -1}` covering
/// `(-2, 2)^2`, all meeting in `(-1, 1)^2`: the nerve is the full 3-simplex.
pub fn four_square_cover(seed: u64) -> GoodCover {
    let corners = [(-3.0, -3.0), (-1.0, -3.0), (-3.0, -1.0), (-1.0, -1.0)];
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = corners.iter().map(|&(a, b)| (vec![a, b], vec![a + 4.0, b + 4.0])).collect();
    let sets: Vec<CoverSet> = boxes
        .iter()
        .enumerate()
        .map(|(i, (lo, hi))| shape_set(&format!("U{}", i + 1), &Shape::Box { lo: lo.clone(), hi: hi.clone() }))
        .collect();
    let mut declared = Vec::new();
    for mask in 1u32..16 {
        let s: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        if s.len() < 2 {
            continue;
        }
        let lo: Vec<f64> = (0..2).map(|k| s.iter().map(|&i| boxes[i].0[k]).fold(f64::MIN, f64::max)).collect();
        let hi: Vec<f64> = (0..2).map(|k| s.iter().map(|&i| boxes[i].1[k]).fold(f64::MAX, f64::min)).collect();
        declared.push((s, with_chart(&Shape::Box { lo, hi })));
    }
    build(2, box_region(&[-2.0, -2.0], &[2.0, 2.0]), sets, declared, &[-3.0, -3.0], &[3.0, 3.0], seed)
}

/// Nine products `A_i × A_j` of the annulus sectors covering the product
/// of two annuli in `R^4`. Every nonempty intersection is declared with the
/// product of the factor intersections as its chart; the nerve carries the
/// second cohomology of a torus.
pub fn annulus_product_cover(seed: u64) -> GoodCover {
    let sectors = annulus_sectors();
    let mid = |i: usize, j: usize| -> Shape {
        if i == j {
            sectors[i].clone()
        } else {
            // (0,1) -> 60°, (1,2) -> 180°, (0,2) -> 300°
            let c = match (i.min(j), i.max(j)) {
                (0, 1) => 60.0,
                (1, 2) => 180.0,
                _ => 300.0,
            };
            Shape::Sector { r: ANNULUS_SET_RADII, center: c, half_width: 20.0 }
        }
    };
    let pairs: Vec<(usize, usize)> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
    let sets: Vec<CoverSet> = pairs
        .iter()
        .map(|&(i, j)| {
            shape_set(&format!("U{}{}", i + 1, j + 1), &Shape::Product { blocks: vec![sectors[i].clone(), sectors[j].clone()] })
        })
        .collect();
    let mut declared = Vec::new();
    for mask in 1u32..(1 << 9) {
        let s: Vec<usize> = (0..9).filter(|a| mask & (1 << a) != 0).collect();
        if s.len() < 2 {
            continue;
        }
        let mut firsts: Vec<usize> = s.iter().map(|&a| pairs[a].0).collect();
        let mut seconds: Vec<usize> = s.iter().map(|&a| pairs[a].1).collect();
        firsts.sort();
        firsts.dedup();
        seconds.sort();
        seconds.dedup();
        if firsts.len() > 2 || seconds.len() > 2 {
            continue;
        }
        let pick = |v: &[usize]| mid(v[0], *v.last().expect("nonempty"));
        declared.push((s, with_chart(&Shape::Product { blocks: vec![pick(&firsts), pick(&seconds)] })));
    }
    let mut region = annulus_region(1.0, 2.0);
    let r2 = Expr::y(2).powi(2) + Expr::y(3).powi(2);
    region.extend([&r2 - 1.0, 4.0 - r2]);
    build(4, region, sets, declared, &[-2.5; 4], &[2.5; 4], seed)
}

/// `R^dim` as a single set with the identity chart, sampled in `(-2, 2)^dim`.
pub fn single_set_cover(dim: usize, seed: u64) -> GoodCover {
    let lo = vec![-2.0; dim];
    let hi = vec![2.0; dim];
    build(dim, vec![], vec![shape_set("U1", &Shape::Whole { dim })], vec![], &lo, &hi, seed)
}

/// Random polynomial in `y1..y{dim}` and `x1..x{params}` with `terms`
/// monomials of total degree at most `max_deg` and coefficients in `[-2, 2]`.
pub fn random_poly<R: Rng>(rng: &mut R, dim: usize, params: usize, max_deg: u32, terms: usize) -> Expr {
    let vars: Vec<Expr> = (0..dim).map(Expr::y).chain((0..params).map(Expr::x)).collect();
    Expr::sum((0..terms).map(|_| {
        let deg = rng.gen_range(0..=max_deg);
        let mut factors = vec![Expr::constant((rng.gen_range(-2.0..2.0f64) * 8.0).round() / 8.0)];
        for _ in 0..deg {
            factors.push(vars[rng.gen_range(0..vars.len())].clone());
        }
        Expr::product(factors)
    }))
}

/// Random `degree`-form on `R^dim` with polynomial coefficients.
pub fn random_form<R: Rng>(rng: &mut R, dim: usize, degree: usize, params: usize, max_deg: u32) -> Form {
    let mut terms = Vec::new();
    for i in crate::cech::multi_indices(dim, degree) {
        if rng.gen_bool(0.8) {
            terms.push((i, random_poly(rng, dim, params, max_deg, 3)));
        }
    }
    Form::from_terms(dim, degree, terms).expect("valid indices")
}

/// Random Čech `p`-cochain of polynomial `q`-forms over the nerve of `cover`.
pub fn random_cochain<R: Rng>(rng: &mut R, cover: &GoodCover, p: usize, q: usize, params: usize, max_deg: u32) -> Cochain {
    let mut c = Cochain::new(cover.dim, p, q);
    let simplices: Vec<Vec<usize>> = cover.simplices(p).cloned().collect();
    for s in simplices {
        c.insert(s, random_form(rng, cover.dim, q, params, max_deg)).expect("nerve simplices are sorted");
    }
    c
}
