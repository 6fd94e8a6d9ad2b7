use std::collections::BTreeMap;

use super::{wedge, ExteriorError, Form};
use crate::expr::{diff, Compiled, Expr, ExprError, Point, Symbol};

/// A smooth map `R^src -> R^dst` given by component expressions in the
/// source coordinates `y1..y{src}` (and possibly parameters).
#[derive(Clone, Debug)]
pub struct SmoothMap {
    pub src_dim: usize,
    pub dst_dim: usize,
    pub components: Vec<Expr>,
    pub inverse: Option<Box<SmoothMap>>,
}

impl SmoothMap {
    pub fn new(src_dim: usize, components: Vec<Expr>) -> SmoothMap {
        SmoothMap { src_dim, dst_dim: components.len(), components, inverse: None }
    }

    pub fn identity(dim: usize) -> SmoothMap {
        let id = SmoothMap::new(dim, (0..dim).map(Expr::y).collect());
        SmoothMap { inverse: Some(Box::new(id.clone())), ..id }
    }

    pub fn with_inverse(mut self, inverse: SmoothMap) -> SmoothMap {
        self.inverse = Some(Box::new(inverse));
        self
    }

    pub fn inverse(&self) -> Option<&SmoothMap> {
        self.inverse.as_deref()
    }

    /// Whether every component is the matching coordinate.
    pub fn is_identity(&self) -> bool {
        self.src_dim == self.dst_dim && self.components.iter().enumerate().all(|(i, c)| *c == Expr::y(i))
    }

    /// Substitute the components for `y1..y{dst}` in `e`.
    pub fn compose(&self, e: &Expr) -> Expr {
        let comps = &self.components;
        e.subst(&|s| match s {
            Symbol::Y(i) => comps.get(i as usize).cloned(),
            _ => None,
        })
    }

    pub fn apply(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>, ExprError> {
        Compiled::new(&self.components)?.eval(&Point::new(y.to_vec(), x.to_vec()))
    }

    /// `max_i |inv(map(y))_i - y_i|`.
    pub fn round_trip_error(&self, y: &[f64], x: &[f64]) -> Result<f64, ExteriorError> {
        let inv = self.inverse().ok_or(ExteriorError::MissingInverse)?;
        let v = self.apply(y, x)?;
        let back = inv.apply(&v, x)?;
        Ok(back.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Differentials `dφ_i` as 1-forms on the source.
    fn differentials(&self) -> Result<Vec<Form>, ExteriorError> {
        self.components
            .iter()
            .map(|c| {
                let terms = (0..self.src_dim)
                    .map(|j| Ok((vec![j], diff(c, Symbol::Y(j as u8))?)))
                    .collect::<Result<Vec<_>, ExprError>>()?;
                Form::from_terms(self.src_dim, 1, terms)
            })
            .collect()
    }
}

/// `φ^* w`: coefficients composed with `φ`, each `dy_i` replaced by `dφ_i`.
pub fn pullback(phi: &SmoothMap, w: &Form) -> Result<Form, ExteriorError> {
    if phi.dst_dim != w.dim() {
        return Err(ExteriorError::Dimension(phi.dst_dim, w.dim()));
    }
    if phi.is_identity() {
        return Ok(w.clone());
    }
    let dphi = phi.differentials()?;
    // dφ_I for every index set, shared across terms with common prefixes
    let mut basis: BTreeMap<Vec<usize>, Form> = BTreeMap::new();
    basis.insert(Vec::new(), Form::scalar(phi.src_dim, Expr::one()));
    let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
    for (idx, c) in w.terms() {
        for n in 1..=idx.len() {
            if !basis.contains_key(&idx[..n]) {
                let prev = &basis[&idx[..n - 1]];
                let next = wedge(prev, &dphi[idx[n - 1]])?;
                basis.insert(idx[..n].to_vec(), next);
            }
        }
        let composed = phi.compose(c);
        for (j, b) in basis[idx].terms() {
            acc.entry(j.clone()).or_default().push(&composed * b);
        }
    }
    let terms = acc.into_iter().map(|(k, cs)| (k, Expr::sum(cs)));
    Ok(Form::from_terms(phi.src_dim, w.degree(), terms)?.with_domain(w.domain().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::ext_d;
    use crate::expr::{parse, symbolic_eq, ParseContext};
    use rand::{Rng, SeedableRng};

    fn e(s: &str) -> Expr {
        parse(s, ParseContext::new(2, 0)).unwrap()
    }

    #[test]
    fn chain_rule_in_one_dimension() {
        let phi = SmoothMap::new(1, vec![e("y1^2")]);
        let w = pullback(&phi, &Form::dy(1, 0)).unwrap();
        assert!(symbolic_eq(&w.coeff(&[0]), &e("2*y1")));
    }

    #[test]
    fn identity_pullback_is_noop() {
        let w = Form::from_terms(2, 1, [(vec![0], e("sin(y2)")), (vec![1], e("y1"))]).unwrap();
        assert_eq!(pullback(&SmoothMap::identity(2), &w).unwrap(), w);
    }

    #[test]
    fn pullback_commutes_with_d() {
        let phi = SmoothMap::new(2, vec![e("y1 + y2"), e("y1*y2")]);
        let w = Form::from_terms(2, 1, [(vec![1], e("y1"))]).unwrap();
        let lhs = pullback(&phi, &ext_d(&w).unwrap()).unwrap();
        let rhs = ext_d(&pullback(&phi, &w).unwrap()).unwrap();
        assert!(symbolic_eq(&lhs.coeff(&[0, 1]), &rhs.coeff(&[0, 1])));
        let (l, r) = (lhs.compile().unwrap(), rhs.compile().unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = Point::new(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)], vec![]);
            assert!((l.eval(&p).unwrap()[0] - r.eval(&p).unwrap()[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_needs_inverse() {
        let phi = SmoothMap::new(1, vec![e("2*y1 + 1")]);
        assert_eq!(phi.round_trip_error(&[0.3], &[]), Err(ExteriorError::MissingInverse));
        let phi = phi.with_inverse(SmoothMap::new(1, vec![e("(y1 - 1)/2")]));
        assert!(phi.round_trip_error(&[0.3], &[]).unwrap() < 1e-15);
    }
}
