//! Differential forms on open subsets of `R^d` with symbolic coefficients.
//!
//! A [`Form`] stores one [`Expr`] per strictly increasing multi-index
//! (0-based internally). Coefficients may mention the coordinates
//! `y1..yd` and any parameters `x1..xn`; parameters are constants for `d`.

mod homotopy;
mod map;

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{diff, Compiled, Expr, ExprError, Point, Symbol};

pub use homotopy::{homotopy, homotopy_identity, interior_radial};
pub use map::{pullback, SmoothMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExteriorError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("degree mismatch: {0} vs {1}")]
    Degree(usize, usize),
    #[error("incompatible domains {0} and {1}")]
    Domain(Domain, Domain),
    #[error("operator undefined on 0-forms")]
    DegreeZero,
    #[error("chart has no declared inverse")]
    MissingInverse,
    #[error("index {0} out of range for dimension {1}")]
    Index(usize, usize),
    #[error("too many nested time integrals")]
    LevelsExhausted,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Region a form lives on: all of the ambient space, or a nerve simplex
/// (sorted 0-based cover indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Domain {
    #[default]
    Global,
    Simplex(Vec<usize>),
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Global => write!(f, "M"),
            Domain::Simplex(s) => {
                write!(f, "U")?;
                for (i, a) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a + 1)?;
                }
                Ok(())
            }
        }
    }
}

fn join_domains(a: &Domain, b: &Domain) -> Result<Domain, ExteriorError> {
    match (a, b) {
        (Domain::Global, d) | (d, Domain::Global) => Ok(d.clone()),
        (x, y) if x == y => Ok(x.clone()),
        _ => Err(ExteriorError::Domain(a.clone(), b.clone())),
    }
}

/// Sort `idx` in place; returns the permutation sign, or 0 on a repeat.
pub fn sort_sign(idx: &mut [usize]) -> i32 {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

/// A differential form of fixed degree on a region of `R^dim`.
#[derive(Clone, PartialEq)]
pub struct Form {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
    domain: Domain,
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Form {
        Form { dim, degree, terms: BTreeMap::new(), domain: Domain::Global }
    }

    /// The 0-form `f`.
    pub fn scalar(dim: usize, f: Expr) -> Form {
        let mut w = Form::zero(dim, 0);
        if !f.is_zero() {
            w.terms.insert(Vec::new(), f);
        }
        w
    }

    /// `dy_{i+1}`.
    pub fn dy(dim: usize, i: usize) -> Form {
        let mut w = Form::zero(dim, 1);
        w.terms.insert(vec![i], Expr::one());
        w
    }

    /// Build from possibly unsorted multi-indices; repeated indices vanish
    /// and permutations contribute their sign.
    pub fn from_terms<I>(dim: usize, degree: usize, terms: I) -> Result<Form, ExteriorError>
    where
        I: IntoIterator<Item = (Vec<usize>, Expr)>,
    {
        let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for (mut idx, c) in terms {
            if idx.len() != degree {
                return Err(ExteriorError::Degree(idx.len(), degree));
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= dim) {
                return Err(ExteriorError::Index(bad, dim));
            }
            let s = sort_sign(&mut idx);
            if s == 0 {
                continue;
            }
            acc.entry(idx).or_default().push(if s < 0 { -c } else { c });
        }
        let mut w = Form::zero(dim, degree);
        for (idx, cs) in acc {
            w.insert(idx, Expr::sum(cs));
        }
        Ok(w)
    }

    fn insert(&mut self, idx: Vec<usize>, c: Expr) {
        if !c.is_zero() {
            self.terms.insert(idx, c);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Same form, tagged with another region (restriction).
    pub fn with_domain(mut self, domain: Domain) -> Form {
        self.domain = domain;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `dy_I`; `idx` may be unsorted.
    pub fn coeff(&self, idx: &[usize]) -> Expr {
        let mut sorted = idx.to_vec();
        match sort_sign(&mut sorted) {
            0 => Expr::zero(),
            s => {
                let c = self.terms.get(&sorted).cloned().unwrap_or_else(Expr::zero);
                if s < 0 {
                    -c
                } else {
                    c
                }
            }
        }
    }

    /// Coefficient of the 0-form.
    pub fn scalar_part(&self) -> Expr {
        self.coeff(&[])
    }

    fn check_same(&self, o: &Form) -> Result<Domain, ExteriorError> {
        if self.dim != o.dim {
            return Err(ExteriorError::Dimension(self.dim, o.dim));
        }
        if self.degree != o.degree {
            return Err(ExteriorError::Degree(self.degree, o.degree));
        }
        join_domains(&self.domain, &o.domain)
    }

    pub fn add(&self, o: &Form) -> Result<Form, ExteriorError> {
        let domain = self.check_same(o)?;
        let mut out = Form { domain, ..Form::zero(self.dim, self.degree) };
        let mut keys: Vec<&Vec<usize>> = self.terms.keys().chain(o.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let c = match (self.terms.get(k), o.terms.get(k)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            };
            out.insert(k.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Form) -> Result<Form, ExteriorError> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale(&Expr::constant(-1.0))
    }

    /// Multiply every coefficient by the function `f`.
    pub fn scale(&self, f: &Expr) -> Form {
        self.map_coeffs(|c| c * f)
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(&Expr) -> Expr) -> Form {
        let mut out = Form { domain: self.domain.clone(), ..Form::zero(self.dim, self.degree) };
        for (k, c) in &self.terms {
            out.insert(k.clone(), f(c));
        }
        out
    }

    /// Fallible coefficient map.
    pub fn try_map_coeffs<E>(&self, mut f: impl FnMut(&Expr) -> Result<Expr, E>) -> Result<Form, E> {
        let mut out = Form { domain: self.domain.clone(), ..Form::zero(self.dim, self.degree) };
        for (k, c) in &self.terms {
            out.insert(k.clone(), f(c)?);
        }
        Ok(out)
    }

    /// Whether any coefficient contains a `step` node.
    pub fn has_step(&self) -> bool {
        self.terms.values().any(Expr::has_step)
    }

    /// Largest tree size among the coefficients.
    pub fn max_tree_size(&self) -> u64 {
        self.terms.values().map(Expr::tree_size).max().unwrap_or(0)
    }

    /// Compile all coefficients into one tape.
    pub fn compile(&self) -> Result<CompiledForm, ExprError> {
        let indices: Vec<Vec<usize>> = self.terms.keys().cloned().collect();
        let exprs: Vec<Expr> = self.terms.values().cloned().collect();
        Ok(CompiledForm { indices, tape: Compiled::new(&exprs)? })
    }

    /// Coefficient values at `p`, keyed by multi-index.
    pub fn eval(&self, p: &Point) -> Result<BTreeMap<Vec<usize>, f64>, ExprError> {
        let c = self.compile()?;
        Ok(c.indices.iter().cloned().zip(c.tape.eval(p)?).collect())
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form[{}; deg {} on {}](", self.dim, self.degree, self.domain)?;
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for j in k {
                write!(f, " dy{}", j + 1)?;
            }
        }
        write!(f, ")")
    }
}

/// A form's coefficients compiled for repeated evaluation.
#[derive(Debug)]
pub struct CompiledForm {
    pub indices: Vec<Vec<usize>>,
    pub tape: Compiled,
}

impl CompiledForm {
    /// Coefficient values in the order of `indices`.
    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, ExprError> {
        self.tape.eval(p)
    }

    /// Largest absolute coefficient at `p`; 0 for the zero form.
    pub fn max_abs(&self, p: &Point) -> Result<f64, ExprError> {
        Ok(self.eval(p)?.into_iter().fold(0.0, |m, v| m.max(v.abs())))
    }
}

/// `a ∧ b`.
pub fn wedge(a: &Form, b: &Form) -> Result<Form, ExteriorError> {
    if a.dim != b.dim {
        return Err(ExteriorError::Dimension(a.dim, b.dim));
    }
    let domain = join_domains(&a.domain, &b.domain)?;
    let degree = a.degree + b.degree;
    let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
    if degree <= a.dim {
        for (ia, ca) in &a.terms {
            for (ib, cb) in &b.terms {
                let mut idx: Vec<usize> = ia.iter().chain(ib).copied().collect();
                let s = sort_sign(&mut idx);
                if s == 0 {
                    continue;
                }
                let c = ca * cb;
                acc.entry(idx).or_default().push(if s < 0 { -c } else { c });
            }
        }
    }
    let mut out = Form { domain, ..Form::zero(a.dim, degree) };
    for (idx, cs) in acc {
        out.insert(idx, Expr::sum(cs));
    }
    Ok(out)
}

/// Exterior derivative in the coordinates `y1..yd`; degree `d` forms map to
/// the (empty) zero form of degree `d + 1`.
pub fn ext_d(w: &Form) -> Result<Form, ExteriorError> {
    ext_d_along(w, 0..w.dim)
}

/// `d` restricted to the coordinate directions in `dirs` (all other
/// coordinates are treated as parameters).
pub(crate) fn ext_d_along(w: &Form, dirs: impl Iterator<Item = usize> + Clone) -> Result<Form, ExteriorError> {
    let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
    for (idx, c) in &w.terms {
        for j in dirs.clone() {
            if idx.contains(&j) {
                continue;
            }
            let dc = diff(c, Symbol::Y(j as u8))?;
            if dc.is_zero() {
                continue;
            }
            // dy_j ∧ dy_I: move dy_j past the indices smaller than j
            let before = idx.iter().filter(|&&i| i < j).count();
            let mut new_idx = idx.clone();
            new_idx.insert(before, j);
            acc.entry(new_idx).or_default().push(if before % 2 == 1 { -dc } else { dc });
        }
    }
    let mut out = Form { domain: w.domain.clone(), ..Form::zero(w.dim, w.degree + 1) };
    for (idx, cs) in acc {
        out.insert(idx, Expr::sum(cs));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, symbolic_eq, symbolic_zero, ParseContext};

    fn e(s: &str) -> Expr {
        parse(s, ParseContext::new(3, 2)).unwrap()
    }

    fn same(a: &Form, b: &Form) -> bool {
        a.sub(b).unwrap().terms().all(|(_, c)| symbolic_zero(c))
    }

    #[test]
    fn wedge_signs() {
        let (d1, d2) = (Form::dy(2, 0), Form::dy(2, 1));
        assert!(wedge(&d1, &d1).unwrap().is_zero());
        let w = wedge(&d2, &d1).unwrap();
        assert_eq!(w.coeff(&[0, 1]), Expr::constant(-1.0));
        assert_eq!(w.coeff(&[1, 0]), Expr::one());
        let a = Form::from_terms(2, 1, [(vec![0], e("y1"))]).unwrap();
        let b = Form::from_terms(2, 1, [(vec![1], e("y2"))]).unwrap();
        assert!(symbolic_eq(&wedge(&a, &b).unwrap().coeff(&[0, 1]), &e("y1*y2")));
        // degree overflow
        assert!(wedge(&wedge(&d1, &d2).unwrap(), &d1).unwrap().is_zero());
    }

    #[test]
    fn exterior_derivative_examples() {
        let w = Form::from_terms(2, 1, [(vec![0], e("y1*y2"))]).unwrap();
        let dw = ext_d(&w).unwrap();
        assert!(symbolic_eq(&dw.coeff(&[0, 1]), &e("-y1")));

        let f = Form::scalar(2, e("y1^2*y2 + sin(y2)"));
        let ddf = ext_d(&ext_d(&f).unwrap()).unwrap();
        assert!(ddf.terms().all(|(_, c)| symbolic_zero(c)));

        let w = Form::from_terms(2, 1, [(vec![1], e("x1*y1"))]).unwrap();
        assert!(same(&ext_d(&w).unwrap(), &Form::from_terms(2, 2, [(vec![0, 1], e("x1"))]).unwrap()));

        let top = Form::from_terms(2, 2, [(vec![0, 1], e("y1"))]).unwrap();
        let d = ext_d(&top).unwrap();
        assert_eq!((d.degree(), d.is_zero()), (3, true));
    }

    #[test]
    fn from_terms_sorts_with_sign() {
        let w = Form::from_terms(3, 2, [(vec![2, 0], e("y1")), (vec![0, 2], e("y2")), (vec![1, 1], e("5"))]).unwrap();
        assert_eq!(w.terms().count(), 1);
        assert!(symbolic_eq(&w.coeff(&[0, 2]), &e("y2 - y1")));
        assert!(matches!(Form::from_terms(2, 1, [(vec![2], e("1"))]), Err(ExteriorError::Index(2, 2))));
    }

    #[test]
    fn domain_tags_must_agree() {
        let a = Form::dy(1, 0).with_domain(Domain::Simplex(vec![0]));
        let b = Form::dy(1, 0).with_domain(Domain::Simplex(vec![1]));
        assert!(matches!(a.add(&b), Err(ExteriorError::Domain(..))));
        let g = Form::dy(1, 0);
        assert_eq!(a.add(&g).unwrap().domain(), &Domain::Simplex(vec![0]));
        assert!(matches!(wedge(&Form::dy(1, 0), &Form::dy(2, 0)), Err(ExteriorError::Dimension(1, 2))));
    }
}
