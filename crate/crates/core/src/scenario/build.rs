//! Turning scenario blocks into covers, families and providers.

use rand::Rng;

use super::schema::*;
use super::ScenarioError;
use crate::cech::{assemble_cover, sample_region, CoverSet, DeclaredSimplex, GoodCover};
use crate::expr::{parse, Expr, ParseContext};
use crate::exterior::{Form, SmoothMap};
use crate::fixtures::shape_set;
use crate::glue::{FamilySpec, Grid, Provider};

fn config(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Config(msg.into())
}

pub(crate) fn expr(text: &str, dim: usize, params: usize, what: &str) -> Result<Expr, ScenarioError> {
    parse(text, ParseContext::new(dim, params)).map_err(|e| config(format!("{what}: {e}")))
}

fn exprs(texts: &[String], dim: usize, params: usize, what: &str) -> Result<Vec<Expr>, ScenarioError> {
    texts.iter().map(|t| expr(t, dim, params, what)).collect()
}

/// A form from 1-based index lists.
pub(crate) fn form(terms: &[TermBlock], dim: usize, degree: usize, params: usize, what: &str) -> Result<Form, ScenarioError> {
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        if t.indices.len() != degree {
            return Err(config(format!("{what}: term {:?} is not of degree {degree}", t.indices)));
        }
        if let Some(bad) = t.indices.iter().find(|&&i| i == 0 || i > dim) {
            return Err(config(format!("{what}: index {bad} outside 1..={dim}")));
        }
        let idx = t.indices.iter().map(|i| i - 1).collect();
        out.push((idx, expr(&t.coeff, dim, params, what)?));
    }
    Form::from_terms(dim, degree, out).map_err(|e| config(format!("{what}: {e}")))
}

fn check_box(lo: &[f64], hi: &[f64], dim: usize, what: &str) -> Result<(), ScenarioError> {
    if lo.len() != dim || hi.len() != dim {
        return Err(config(format!("{what}: bounds must have length {dim}")));
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return Err(config(format!("{what}: empty box")));
    }
    Ok(())
}

pub(crate) fn grid(g: &BoxGrid, dim: usize, what: &str) -> Result<Grid, ScenarioError> {
    check_box(&g.lo, &g.hi, dim, what)?;
    if g.n == 0 {
        return Err(config(format!("{what}: n must be positive")));
    }
    Ok(Grid::new(g.lo.clone(), g.hi.clone(), g.n))
}

fn chart(block: &ChartBlock, dim: usize, what: &str) -> Result<SmoothMap, ScenarioError> {
    match (&block.shape, &block.forward, &block.inverse) {
        (Some(shape), None, None) => {
            shape.check().map_err(|e| config(format!("{what}: {e}")))?;
            if shape.dim() != dim {
                return Err(config(format!("{what}: chart shape has dimension {}", shape.dim())));
            }
            Ok(shape.realize().chart)
        }
        (None, Some(fwd), inv) => {
            if fwd.len() != dim {
                return Err(config(format!("{what}: chart needs {dim} components")));
            }
            let map = SmoothMap::new(dim, exprs(fwd, dim, 0, what)?);
            match inv {
                Some(inv) if inv.len() == dim => Ok(map.with_inverse(SmoothMap::new(dim, exprs(inv, dim, 0, what)?))),
                Some(_) => Err(config(format!("{what}: inverse needs {dim} components"))),
                None => Ok(map),
            }
        }
        _ => Err(config(format!("{what}: give either a shape or forward components"))),
    }
}

fn cover_set(block: &SetBlock, index: usize, dim: usize) -> Result<CoverSet, ScenarioError> {
    let name = block.name.clone().unwrap_or_else(|| format!("U{}", index + 1));
    let what = format!("set {name}");
    if let Some(shape) = &block.shape {
        if block.membership.is_some() || block.chart.is_some() || block.bump.is_some() {
            return Err(config(format!("{what}: a shape excludes membership, chart and bump")));
        }
        shape.check().map_err(|e| config(format!("{what}: {e}")))?;
        if shape.dim() != dim {
            return Err(config(format!("{what}: shape has dimension {}", shape.dim())));
        }
        return Ok(shape_set(&name, shape));
    }
    let (Some(membership), Some(c), Some(bump)) = (&block.membership, &block.chart, &block.bump) else {
        return Err(config(format!("{what}: needs a shape, or membership, chart and bump")));
    };
    Ok(CoverSet {
        membership: exprs(membership, dim, 0, &what)?,
        chart: chart(c, dim, &what)?,
        bump: expr(bump, dim, 0, &what)?,
        name,
    })
}

pub(crate) fn region(m: &ManifoldBlock) -> Result<Vec<Expr>, ScenarioError> {
    if m.dim == 0 {
        return Err(config("manifold dimension must be positive"));
    }
    check_box(&m.sample_box.lo, &m.sample_box.hi, m.dim, "manifold sample box")?;
    exprs(&m.region, m.dim, 0, "manifold region")
}

pub(crate) fn cover<R: Rng>(block: &CoverBlock, m: &ManifoldBlock, rng: &mut R) -> Result<GoodCover, ScenarioError> {
    let region = region(m)?;
    if block.sets.is_empty() {
        return Err(config("cover has no sets"));
    }
    let sets = block.sets.iter().enumerate().map(|(i, s)| cover_set(s, i, m.dim)).collect::<Result<Vec<_>, _>>()?;
    let mut declared = Vec::with_capacity(block.nerve.len());
    for s in &block.nerve {
        let what = format!("simplex {:?}", s.simplex);
        if s.simplex.is_empty() || s.simplex.iter().any(|&a| a == 0 || a > sets.len()) {
            return Err(config(format!("{what}: set indices must lie in 1..={}", sets.len())));
        }
        let point_ok = |p: &Vec<f64>| p.len() == m.dim;
        if !s.witness.iter().all(point_ok) || !s.samples.iter().flatten().all(point_ok) {
            return Err(config(format!("{what}: points must have length {}", m.dim)));
        }
        let chart = s.chart.as_ref().map(|c| chart(c, m.dim, &what)).transpose()?;
        let d = DeclaredSimplex { witness: s.witness.clone(), samples: s.samples.clone(), chart };
        declared.push((s.simplex.iter().map(|a| a - 1).collect(), d));
    }
    let (lo, hi) = (&m.sample_box.lo[..], &m.sample_box.hi[..]);
    let samples = sample_region(&region, lo, hi, m.region_samples, rng);
    if samples.len() < m.region_samples {
        return Err(config("could not sample the manifold region inside its sample box"));
    }
    assemble_cover(m.dim, region, samples, sets, declared, (lo, hi), block.samples, rng)
        .map_err(|e| config(format!("cover: {e}")))
}

pub(crate) fn family(block: &FamilyBlock, dim: usize) -> Result<FamilySpec, ScenarioError> {
    if block.degree == 0 || block.degree > dim {
        return Err(config(format!("family degree must lie in 1..={dim}")));
    }
    let omega = form(&block.form, dim, block.degree, block.params, "family")?;
    let params = match (&block.grid, block.params) {
        (Some(g), n) => grid(g, n, "family grid")?,
        (None, 0) => Grid::empty(),
        (None, _) => return Err(config("family with parameters needs a grid")),
    };
    FamilySpec::new(omega, block.params, params).map_err(|e| config(format!("family: {e}")))
}

pub(crate) fn provider(block: &ProviderBlock, fam: &FamilySpec) -> Result<Provider, ScenarioError> {
    let (dim, degree, params) = (fam.dim(), fam.degree() - 1, fam.params);
    let eta = form(&block.eta, dim, degree, params, "provider")?;
    match (block.mode, &block.jitter) {
        (ProviderMode::Symbolic, None) => Ok(Provider::Symbolic { eta }),
        (ProviderMode::Jittered, Some(j)) => {
            if j.at.param == 0 || j.at.param > params {
                return Err(config(format!("jitter parameter must lie in 1..={params}")));
            }
            let term = form(&j.term, dim, degree, 0, "jitter term")?;
            Ok(Provider::Jittered { eta, param: j.at.param - 1, threshold: j.at.threshold, term })
        }
        (ProviderMode::Symbolic, Some(_)) => Err(config("symbolic provider takes no jitter block")),
        (ProviderMode::Jittered, None) => Err(config("jittered provider needs a jitter block")),
    }
}
