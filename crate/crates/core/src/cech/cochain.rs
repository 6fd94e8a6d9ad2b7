use std::collections::BTreeMap;

use super::cover::{label, GoodCover};
use super::CechError;
use crate::expr::{Compiled, Expr, Point};
use crate::exterior::{ext_d, Domain, Form};
use crate::stats::Stat;

/// Strictly increasing `q`-element subsets of `0..d`, in lexicographic order.
pub fn multi_indices(d: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, q, &mut Vec::new(), &mut out);
    out
}

/// Čech `p`-cochain of `q`-forms: one form per declared `p`-simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub dim: usize,
    pub cech_degree: usize,
    pub form_degree: usize,
    components: BTreeMap<Vec<usize>, Form>,
}

impl Cochain {
    pub fn new(dim: usize, cech_degree: usize, form_degree: usize) -> Cochain {
        Cochain { dim, cech_degree, form_degree, components: BTreeMap::new() }
    }

    /// The zero cochain with an explicit zero form on every `p`-simplex.
    pub fn zero_on(cover: &GoodCover, cech_degree: usize, form_degree: usize) -> Cochain {
        let mut c = Cochain::new(cover.dim, cech_degree, form_degree);
        for s in cover.simplices(cech_degree) {
            c.components.insert(s.clone(), Form::zero(cover.dim, form_degree).with_domain(Domain::Simplex(s.clone())));
        }
        c
    }

    /// Set the component on the sorted simplex `s`.
    pub fn insert(&mut self, s: Vec<usize>, w: Form) -> Result<(), CechError> {
        if s.len() != self.cech_degree + 1 || s.windows(2).any(|p| p[0] >= p[1]) {
            return Err(CechError::BadSimplex(s));
        }
        if w.degree() != self.form_degree || w.dim() != self.dim {
            return Err(CechError::Degree { expected: self.form_degree, found: w.degree() });
        }
        let tagged = w.with_domain(Domain::Simplex(s.clone()));
        self.components.insert(s, tagged);
        Ok(())
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Form)> {
        self.components.iter()
    }

    /// Component for any ordering of a simplex, with the permutation sign.
    pub fn get(&self, tuple: &[usize]) -> Option<Form> {
        let mut s = tuple.to_vec();
        let sign = crate::exterior::sort_sign(&mut s);
        if sign == 0 {
            return None;
        }
        let w = self.components.get(&s)?;
        Some(if sign < 0 { w.neg() } else { w.clone() })
    }

    pub fn map_forms<E>(&self, mut f: impl FnMut(&[usize], &Form) -> Result<Form, E>) -> Result<Cochain, E>
    where
        E: From<CechError>,
    {
        let mut out = Cochain::new(self.dim, self.cech_degree, self.form_degree);
        let mut first = true;
        for (s, w) in &self.components {
            let v = f(s, w)?;
            if first {
                out.form_degree = v.degree();
                first = false;
            }
            out.insert(s.clone(), v)?;
        }
        Ok(out)
    }

    /// Componentwise exterior derivative.
    pub fn d(&self) -> Result<Cochain, CechError> {
        let mut out = self.map_forms(|_, w| ext_d(w).map_err(CechError::from))?;
        out.form_degree = self.form_degree + 1;
        Ok(out)
    }

    fn zip(&self, o: &Cochain, sign: f64) -> Result<Cochain, CechError> {
        if self.cech_degree != o.cech_degree || self.form_degree != o.form_degree {
            return Err(CechError::Degree { expected: self.form_degree, found: o.form_degree });
        }
        let mut out = self.clone();
        for (s, w) in &o.components {
            let w = if sign < 0.0 { w.neg() } else { w.clone() };
            let sum = match out.components.get(s) {
                Some(a) => a.add(&w)?,
                None => w,
            };
            out.components.insert(s.clone(), sum);
        }
        Ok(out)
    }

    pub fn add(&self, o: &Cochain) -> Result<Cochain, CechError> {
        self.zip(o, 1.0)
    }

    pub fn sub(&self, o: &Cochain) -> Result<Cochain, CechError> {
        self.zip(o, -1.0)
    }

    /// Largest tree size over all coefficients.
    pub fn max_tree_size(&self) -> u64 {
        self.components.values().map(Form::max_tree_size).max().unwrap_or(0)
    }

    /// Statistics of `|coefficient|` over every component, evaluated at the
    /// witness and samples of its simplex for every parameter point.
    pub fn abs_at_samples(&self, cover: &GoodCover, params: &[Vec<f64>]) -> Result<Stat, CechError> {
        let mut stat = Stat::default();
        for (s, w) in &self.components {
            if w.is_zero() {
                continue;
            }
            let c = w.compile()?;
            for y in cover.simplex_points(s) {
                for x in params {
                    let vals = c.eval(&Point::new(y.clone(), x.clone()))?;
                    stat.push(vals.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
                }
            }
        }
        Ok(stat)
    }
}

/// `(δc)_{α0..α_{p+1}} = Σ_i (-1)^i c_{α0..α̂_i..α_{p+1}}`, restricted.
pub fn coboundary(c: &Cochain, cover: &GoodCover) -> Result<Cochain, CechError> {
    let mut out = Cochain::new(c.dim, c.cech_degree + 1, c.form_degree);
    for s in cover.simplices(c.cech_degree + 1) {
        let dom = Domain::Simplex(s.clone());
        let mut acc = Form::zero(c.dim, c.form_degree).with_domain(dom.clone());
        for i in 0..s.len() {
            let mut face = s.clone();
            face.remove(i);
            let w = c.components.get(&face).ok_or_else(|| CechError::MissingSimplex(label(&face)))?;
            let w = w.clone().with_domain(dom.clone());
            acc = if i % 2 == 0 { acc.add(&w)? } else { acc.sub(&w)? };
        }
        out.insert(s.clone(), acc)?;
    }
    Ok(out)
}

/// `ρ_α = ψ_α / Σ_β ψ_β`.
pub fn partition_of_unity(cover: &GoodCover) -> Vec<Expr> {
    let total = Expr::sum(cover.sets.iter().map(|s| s.bump.clone()));
    let inv = total.recip();
    cover.sets.iter().map(|s| &s.bump * &inv).collect()
}

/// Check `Σψ > 0` at the region samples, as required before dividing.
pub fn check_partition(cover: &GoodCover) -> Result<(), CechError> {
    let total = Expr::sum(cover.sets.iter().map(|s| s.bump.clone()));
    let tape = Compiled::new(&[total])?;
    for y in &cover.region_samples {
        let v = tape.eval(&Point::new(y.clone(), vec![]))?[0];
        if v <= 0.0 {
            return Err(CechError::PartitionVanishes(y.clone()));
        }
    }
    Ok(())
}

/// Mayer–Vietoris contraction:
/// `(Kξ)_{α0..α_{p-1}} = Σ_β ρ_β ξ_{β α0..α_{p-1}}`. Each term is guarded
/// by the membership predicates of `U_β`, outside of which `ρ_β` vanishes
/// and `ξ_{β..}` is undefined.
pub fn mv_homotopy_k(c: &Cochain, cover: &GoodCover, rho: &[Expr]) -> Result<Cochain, CechError> {
    if c.cech_degree == 0 {
        return Err(CechError::Degree { expected: 1, found: 0 });
    }
    let mut out = Cochain::new(c.dim, c.cech_degree - 1, c.form_degree);
    for s in cover.simplices(c.cech_degree - 1) {
        let mut terms: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for beta in 0..cover.len() {
            if s.contains(&beta) {
                continue;
            }
            let pos = s.iter().filter(|&&a| a < beta).count();
            let mut up = s.clone();
            up.insert(pos, beta);
            let Some(xi) = c.components.get(&up) else { continue };
            let weight = if pos % 2 == 1 { -rho[beta].clone() } else { rho[beta].clone() };
            for (idx, coef) in xi.terms() {
                let term = cover.guard_simplex(&[beta], &weight * coef);
                terms.entry(idx.clone()).or_default().push(term);
            }
        }
        let w = Form::from_terms(c.dim, c.form_degree, terms.into_iter().map(|(k, v)| (k, Expr::sum(v))))?;
        out.insert(s.clone(), w)?;
    }
    Ok(out)
}

/// A global form assembled from a δ-closed 0-cochain: at each point the
/// component of the smallest-index set containing it.
#[derive(Debug)]
pub struct GluedForm {
    pub dim: usize,
    pub degree: usize,
    /// Coefficient order of evaluation results.
    pub indices: Vec<Vec<usize>>,
    members: Vec<Compiled>,
    branches: Vec<Compiled>,
}

impl GluedForm {
    /// Build without checking the cocycle condition.
    pub fn new(c: &Cochain, cover: &GoodCover) -> Result<GluedForm, CechError> {
        if c.cech_degree != 0 {
            return Err(CechError::Degree { expected: 0, found: c.cech_degree });
        }
        let indices = multi_indices(c.dim, c.form_degree);
        let mut members = Vec::new();
        let mut branches = Vec::new();
        for a in 0..cover.len() {
            members.push(Compiled::new(&cover.sets[a].membership)?);
            let w = c.components.get(&vec![a]);
            let exprs: Vec<Expr> = indices.iter().map(|i| w.map_or_else(Expr::zero, |w| w.coeff(i))).collect();
            branches.push(Compiled::new(&exprs)?);
        }
        Ok(GluedForm { dim: c.dim, degree: c.form_degree, indices, members, branches })
    }

    fn containing(&self, y: &[f64]) -> Vec<usize> {
        let p = Point::new(y.to_vec(), vec![]);
        (0..self.members.len())
            .filter(|&a| self.members[a].eval(&p).map(|v| v.iter().all(|&m| m > 0.0)).unwrap_or(false))
            .collect()
    }

    /// Coefficients (in `indices` order) at `(y, x)`.
    pub fn eval(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>, CechError> {
        let a = *self.containing(y).first().ok_or_else(|| CechError::OutsideCover(y.to_vec()))?;
        Ok(self.branches[a].eval(&Point::new(y.to_vec(), x.to_vec()))?)
    }

    /// Values of every branch whose set contains `y`.
    pub fn branch_values(&self, y: &[f64], x: &[f64]) -> Result<Vec<(usize, Vec<f64>)>, CechError> {
        let p = Point::new(y.to_vec(), x.to_vec());
        self.containing(y).into_iter().map(|a| Ok((a, self.branches[a].eval(&p)?))).collect()
    }

    /// Largest coefficient difference between any two branches at `y`.
    pub fn mismatch(&self, y: &[f64], x: &[f64]) -> Result<f64, CechError> {
        let vals = self.branch_values(y, x)?;
        let mut m: f64 = 0.0;
        for (i, (_, a)) in vals.iter().enumerate() {
            for (_, b) in &vals[i + 1..] {
                for (u, v) in a.iter().zip(b) {
                    m = m.max((u - v).abs());
                }
            }
        }
        Ok(m)
    }
}

/// Glue a 0-cochain after checking `δc = 0` within `tol` at every edge
/// sample and parameter point.
pub fn glue_cochain0(c: &Cochain, cover: &GoodCover, params: &[Vec<f64>], tol: f64) -> Result<GluedForm, CechError> {
    let delta = coboundary(c, cover)?;
    for (s, w) in delta.components() {
        if w.is_zero() {
            continue;
        }
        let compiled = w.compile()?;
        for y in cover.simplex_points(s) {
            for x in params {
                let m = compiled.max_abs(&Point::new(y.clone(), x.clone()))?;
                if !(m <= tol) {
                    return Err(CechError::NotCocycle { simplex: label(s), value: m });
                }
            }
        }
    }
    GluedForm::new(c, cover)
}
