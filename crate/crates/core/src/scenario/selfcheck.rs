//! Invariant suites on built-in fixtures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cech::{check_partition, coboundary, mv_homotopy_k, partition_of_unity, validate_cover, CechError, GoodCover};
use crate::expr::Point;
use crate::exterior::{ext_d, homotopy, Form};
use crate::fixtures::{annulus_cover, four_square_cover, random_cochain, random_form, single_set_cover, three_interval_cover};
use crate::glue::Check;
use crate::stats::Stat;

/// Largest residual of the exterior and Čech identities.
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Largest residual of `dH + Hd - id`.
pub const HOMOTOPY_TOL: f64 = 1e-10;
/// Largest residual of `δK + Kδ - id`.
pub const CONTRACTION_TOL: f64 = 1e-9;

pub struct Fixture {
    pub name: String,
    pub cover: GoodCover,
}

pub fn default_fixtures() -> Vec<Fixture> {
    let f = |name: &str, cover| Fixture { name: name.into(), cover };
    vec![
        f("single-set", single_set_cover(2, 0)),
        f("three-interval", three_interval_cover(0)),
        f("annulus", annulus_cover(0)),
        f("four-square", four_square_cover(0)),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfCheckReport {
    pub command: String,
    pub status: String,
    pub exit_code: i32,
    pub checks: Vec<Check>,
    pub errors: Vec<String>,
}

impl SelfCheckReport {
    /// Whether the named check exists and passed.
    pub fn check_passed(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c.name == name && c.passed)
    }
}

pub fn self_check() -> SelfCheckReport {
    self_check_with(&default_fixtures())
}

fn form_at(w: &Form, points: &[Vec<f64>]) -> Result<Stat, CechError> {
    let mut stat = Stat::default();
    if w.is_zero() {
        stat.extend(points.iter().map(|_| 0.0));
        return Ok(stat);
    }
    let c = w.compile()?;
    for y in points {
        stat.push(c.max_abs(&Point::new(y.clone(), vec![]))?);
    }
    Ok(stat)
}

fn d_squared(f: &Fixture, rng: &mut ChaCha8Rng) -> Result<Stat, CechError> {
    let mut stat = Stat::default();
    for p in 0..f.cover.dim {
        for _ in 0..3 {
            let w = random_form(rng, f.cover.dim, p, 0, 3);
            stat.merge(&form_at(&ext_d(&ext_d(&w)?)?, &f.cover.region_samples)?);
        }
    }
    Ok(stat)
}

/// `dH_α w + H_α dw - w` with the chart of every set.
fn homotopy_identity(f: &Fixture, rng: &mut ChaCha8Rng) -> Result<Stat, CechError> {
    let mut stat = Stat::default();
    let c = &f.cover;
    for a in 0..c.len() {
        let chart = c.homotopy_chart(&[a]).expect("every set has a chart");
        let pts = c.simplex_points(&[a]);
        for p in 1..=c.dim {
            let w = random_form(rng, c.dim, p, 0, 2);
            let mut lhs = ext_d(&homotopy(&w, Some(&chart))?)?;
            if p < c.dim {
                lhs = lhs.add(&homotopy(&ext_d(&w)?, Some(&chart))?)?;
            }
            stat.merge(&form_at(&lhs.with_domain(Default::default()).sub(&w)?, &pts)?);
        }
    }
    Ok(stat)
}

/// `δδ`, `dδ - δd` and `δK + Kδ - id` on random cochains.
fn cech_identities(f: &Fixture, rng: &mut ChaCha8Rng) -> Result<[Stat; 3], CechError> {
    let c = &f.cover;
    let rho = partition_of_unity(c);
    let (mut dd, mut comm, mut contr) = (Stat::default(), Stat::default(), Stat::default());
    let top = c.nerve_dim();
    for q in 0..=top {
        for p in 0..c.dim {
            let xi = random_cochain(rng, c, q, p, 0, 2);
            let dxi = coboundary(&xi, c)?;
            dd.merge(&coboundary(&dxi, c)?.abs_at_samples(c, &[vec![]])?);
            comm.merge(&coboundary(&xi.d()?, c)?.sub(&dxi.d()?)?.abs_at_samples(c, &[vec![]])?);
            if (1..=3).contains(&q) {
                let lhs = coboundary(&mv_homotopy_k(&xi, c, &rho)?, c)?.add(&mv_homotopy_k(&dxi, c, &rho)?)?;
                contr.merge(&lhs.sub(&xi)?.abs_at_samples(c, &[vec![]])?);
            }
        }
    }
    Ok([dd, comm, contr])
}

/// Run every suite on `fixtures`: identities of `d`, `δ`, `H` and `K`,
/// and the cover validation (bump sign and support, positive sum).
pub fn self_check_with(fixtures: &[Fixture]) -> SelfCheckReport {
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for f in fixtures {
        let name = |suite: &str| format!("{suite}[{}]", f.name);
        match d_squared(f, &mut rng) {
            Ok(s) => checks.push(Check::new(&name("d-squared"), s, "algebra", ALGEBRA_TOL)),
            Err(e) => errors.push(format!("{}: {e}", name("d-squared"))),
        }
        match homotopy_identity(f, &mut rng) {
            Ok(s) => checks.push(Check::new(&name("homotopy"), s, "homotopy", HOMOTOPY_TOL)),
            Err(e) => errors.push(format!("{}: {e}", name("homotopy"))),
        }
        if f.cover.nerve_dim() >= 1 {
            match cech_identities(f, &mut rng) {
                Ok([dd, comm, contr]) => {
                    checks.push(Check::new(&name("delta-squared"), dd, "algebra", ALGEBRA_TOL));
                    checks.push(Check::new(&name("d-delta-commute"), comm, "algebra", ALGEBRA_TOL));
                    checks.push(Check::new(&name("contraction"), contr, "contraction", CONTRACTION_TOL));
                }
                Err(e) => errors.push(format!("{}: {e}", name("cech"))),
            }
        }
        let v = validate_cover(&f.cover);
        let mut count = Stat::default();
        count.push(v.violations.len() as f64);
        checks.push(Check::new(&name("partition"), count, "violations", 0.0));
        for violation in v.violations.iter().take(5) {
            errors.push(format!("{}: {} at {}", name("partition"), violation.kind, violation.location));
        }
        if let Err(e) = check_partition(&f.cover) {
            errors.push(format!("{}: {e}", name("partition")));
        }
    }
    let ok = errors.is_empty() && checks.iter().all(|c| c.passed);
    SelfCheckReport {
        command: "self-check".into(),
        status: if ok { "pass" } else { "fail" }.into(),
        exit_code: if ok { 0 } else { 1 },
        checks,
        errors,
    }
}
