//! Polynomial views of expressions.
//!
//! `t_polynomial` extracts coefficients in one time level (the exact path of
//! time integration). `expand` multiplies everything out into a sum of
//! monomials over *atoms* (symbols and normalized non-polynomial nodes), which
//! decides symbolic equality for polynomial expressions.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::{integrate_level, Expr, Node, Symbol};

const MAX_T_DEGREE: u32 = 64;
const MAX_TERMS: usize = 50_000;

fn t_degree(e: &Expr, k: u8, memo: &mut HashMap<usize, Option<u32>>) -> Option<u32> {
    if !e.depends_on(Symbol::T(k)) {
        return Some(0);
    }
    if let Some(d) = memo.get(&e.ptr()) {
        return *d;
    }
    let d = match e.node() {
        Node::Sym(_) => Some(1),
        Node::Add(ts) => ts.iter().try_fold(0, |m, t| t_degree(t, k, memo).map(|d| m.max(d))),
        Node::Mul(fs) => fs.iter().try_fold(0, |m, f| t_degree(f, k, memo).map(|d| m + d)),
        Node::Pow(b, n) if *n > 0 => t_degree(b, k, memo).map(|d| d * (*n as u32)),
        _ => None,
    };
    let d = d.filter(|&d| d <= MAX_T_DEGREE);
    memo.insert(e.ptr(), d);
    d
}

fn convolve(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let mut acc: Vec<Vec<Expr>> = vec![Vec::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                acc[i + j].push(x * y);
            }
        }
    }
    acc.into_iter().map(Expr::sum).collect()
}

fn t_coeffs(e: &Expr, k: u8, memo: &mut HashMap<usize, Rc<Vec<Expr>>>) -> Rc<Vec<Expr>> {
    if !e.depends_on(Symbol::T(k)) {
        return Rc::new(vec![e.clone()]);
    }
    if let Some(c) = memo.get(&e.ptr()) {
        return c.clone();
    }
    let c = match e.node() {
        Node::Sym(_) => vec![Expr::zero(), Expr::one()],
        Node::Add(ts) => {
            let parts: Vec<_> = ts.iter().map(|t| t_coeffs(t, k, memo)).collect();
            let len = parts.iter().map(|p| p.len()).max().unwrap_or(1);
            (0..len)
                .map(|i| Expr::sum(parts.iter().filter_map(|p| p.get(i).cloned())))
                .collect()
        }
        Node::Mul(fs) => {
            let mut acc = vec![Expr::one()];
            for f in fs {
                acc = convolve(&acc, &t_coeffs(f, k, memo));
            }
            acc
        }
        Node::Pow(b, n) => {
            let base = t_coeffs(b, k, memo);
            let mut acc = vec![Expr::one()];
            for _ in 0..*n {
                acc = convolve(&acc, &base);
            }
            acc
        }
        _ => unreachable!("t_degree admitted a non-polynomial node"),
    };
    let c = Rc::new(c);
    memo.insert(e.ptr(), c.clone());
    c
}

/// Coefficients of `e` as a polynomial in the time level `k`, lowest degree
/// first; `None` if `e` is not polynomial in it.
pub(crate) fn t_polynomial(e: &Expr, k: u8) -> Option<Vec<Expr>> {
    t_degree(e, k, &mut HashMap::new())?;
    Some(t_coeffs(e, k, &mut HashMap::new()).as_ref().clone())
}

type Monomial = Vec<(Expr, i32)>;

/// Sum of monomials over atoms with real coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    fn constant(c: f64) -> Poly {
        let mut p = Poly::default();
        if c != 0.0 {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    fn atom(a: Expr, power: i32) -> Poly {
        let mut p = Poly::default();
        p.terms.insert(vec![(a, power)], 1.0);
        p
    }

    fn add_assign(&mut self, o: &Poly) {
        for (m, c) in &o.terms {
            *self.terms.entry(m.clone()).or_insert(0.0) += c;
        }
    }

    fn mul(&self, o: &Poly) -> Option<Poly> {
        if self.terms.len().saturating_mul(o.terms.len()) > MAX_TERMS * 4 {
            return None;
        }
        let mut out = Poly::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let m = merge_monomials(ma, mb);
                *out.terms.entry(m).or_insert(0.0) += ca * cb;
            }
        }
        if out.terms.len() > MAX_TERMS {
            return None;
        }
        Some(out)
    }

    /// Largest coefficient magnitude.
    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn to_expr(&self) -> Expr {
        Expr::sum(self.terms.iter().filter(|(_, c)| **c != 0.0).map(|(m, c)| {
            Expr::product(std::iter::once(Expr::constant(*c)).chain(m.iter().map(|(a, p)| Expr::pow(a.clone(), *p))))
        }))
    }
}

fn merge_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out: Monomial = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i].clone());
            i += 1;
        } else if take_b {
            out.push(b[j].clone());
            j += 1;
        } else {
            let p = a[i].1 + b[j].1;
            if p != 0 {
                out.push((a[i].0.clone(), p));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Fully expanded polynomial form, or `None` when expansion exceeds the term
/// budget.
pub fn expand(e: &Expr) -> Option<Poly> {
    expand_rec(e, &mut HashMap::new())
}

fn expand_rec(e: &Expr, memo: &mut HashMap<usize, Option<Rc<Poly>>>) -> Option<Poly> {
    if let Some(p) = memo.get(&e.ptr()) {
        return p.as_ref().map(|p| p.as_ref().clone());
    }
    let p = match e.node() {
        Node::Const(c) => Some(Poly::constant(*c)),
        Node::Sym(_) => Some(Poly::atom(e.clone(), 1)),
        Node::Add(ts) => {
            let mut acc = Poly::default();
            let mut ok = true;
            for t in ts {
                match expand_rec(t, memo) {
                    Some(p) => acc.add_assign(&p),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            ok.then_some(acc)
        }
        Node::Mul(fs) => {
            let mut acc = Some(Poly::constant(1.0));
            for f in fs {
                acc = match (acc, expand_rec(f, memo)) {
                    (Some(a), Some(b)) => a.mul(&b),
                    _ => None,
                };
            }
            acc
        }
        Node::Pow(b, n) if *n > 0 => {
            let base = expand_rec(b, memo);
            base.and_then(|base| {
                let mut acc = Some(Poly::constant(1.0));
                for _ in 0..*n {
                    acc = acc.and_then(|a| a.mul(&base));
                }
                acc
            })
        }
        Node::Pow(b, n) => Some(Poly::atom(normalize_with(b, memo), *n)),
        Node::Func(f, a) => Some(Poly::atom(Expr::func(*f, normalize_with(a, memo)), 1)),
        Node::Guard(c, b) => Some(Poly::atom(Expr::guard(normalize_with(c, memo), normalize_with(b, memo)), 1)),
        Node::Integral(k, b) => {
            let r = integrate_level(&normalize_with(b, memo), *k);
            if matches!(r.node(), Node::Integral(..)) {
                Some(Poly::atom(r, 1))
            } else {
                expand_rec(&r, memo)
            }
        }
    };
    let p = p.map(|mut p| {
        p.terms.retain(|_, c| *c != 0.0);
        p
    });
    memo.insert(e.ptr(), p.clone().map(Rc::new));
    p
}

fn normalize_with(e: &Expr, memo: &mut HashMap<usize, Option<Rc<Poly>>>) -> Expr {
    match expand_rec(e, memo) {
        Some(p) => p.to_expr(),
        None => e.clone(),
    }
}

/// Whether `e` expands to the zero polynomial (coefficients below 1e-11).
pub fn symbolic_zero(e: &Expr) -> bool {
    match expand(e) {
        Some(p) => p.terms.values().all(|c| c.abs() <= 1e-11),
        None => false,
    }
}

/// Normalize-and-compare equality: both sides are expanded and their
/// coefficients compared relative to the larger side.
pub fn symbolic_eq(a: &Expr, b: &Expr) -> bool {
    let (Some(pa), Some(pb)) = (expand(a), expand(b)) else {
        return false;
    };
    let scale = pa.max_coefficient().max(pb.max_coefficient()).max(1.0);
    let mut diff = pa;
    for (m, c) in pb.terms {
        *diff.terms.entry(m).or_insert(0.0) -= c;
    }
    diff.terms.values().all(|c| c.abs() <= 1e-12 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::integrate_t;

    #[test]
    fn integrate_polynomial_in_time() {
        let y = Expr::y(0);
        assert!(symbolic_eq(&integrate_t(&(Expr::t() * &y)), &(0.5 * y.clone())));
        let c = Expr::x(0).sin();
        assert_eq!(integrate_t(&(Expr::t().powi(0) * &c)), c);
        let e = integrate_t(&Expr::t().exp());
        assert!(matches!(e.node(), Node::Integral(..)));
    }

    #[test]
    fn expansion_decides_polynomial_identities() {
        let (a, b) = (Expr::y(0), Expr::y(1));
        let lhs = (&a + &b).powi(2);
        let rhs = a.clone().powi(2) + 2.0 * &a * &b + b.clone().powi(2);
        assert!(symbolic_eq(&lhs, &rhs));
        assert!(!symbolic_eq(&lhs, &(a.clone().powi(2) + b.clone().powi(2))));
        // atoms are normalized inside functions
        let s1 = ((&a + &b) * (&a - &b)).sin();
        let s2 = (a.clone().powi(2) - b.clone().powi(2)).sin();
        assert!(symbolic_zero(&(s1 - s2)));
    }

    #[test]
    fn time_polynomial_of_substituted_monomial() {
        let t = Expr::sym(Symbol::T(2));
        let e = (&t * Expr::y(0)).powi(2) * Expr::x(0) * &t;
        let c = t_polynomial(&e, 2).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c[0].is_zero() && c[1].is_zero() && c[2].is_zero());
        assert!(symbolic_eq(&c[3], &(Expr::y(0).powi(2) * Expr::x(0))));
    }
}
