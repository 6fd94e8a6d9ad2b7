use std::collections::BTreeMap;

use super::{pullback, ExteriorError, Form, SmoothMap};
use crate::expr::{fresh_level_of, integrate_level, Expr, Symbol, MAX_LEVELS};

/// Contraction with the radial field `Σ y_i ∂/∂y_i`.
pub fn interior_radial(w: &Form) -> Result<Form, ExteriorError> {
    if w.degree() == 0 {
        return Err(ExteriorError::DegreeZero);
    }
    let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
    for (idx, c) in w.terms() {
        for (j, &i) in idx.iter().enumerate() {
            let mut rest = idx.clone();
            rest.remove(j);
            let term = c * Expr::y(i);
            acc.entry(rest).or_default().push(if j % 2 == 1 { -term } else { term });
        }
    }
    let terms = acc.into_iter().map(|(k, cs)| (k, Expr::sum(cs)));
    Ok(Form::from_terms(w.dim(), w.degree() - 1, terms)?.with_domain(w.domain().clone()))
}

/// Poincaré homotopy operator for the straight-line contraction of `R^d` to
/// the origin. With `λ_t(y) = t·y`, the operator `∫₀¹ t⁻¹ λ_t^* ι w dt` has
/// the regular integrand `t^{p-1} f_I(t·y)` for a `p`-form, so no singular
/// quadrature is involved.
pub fn homotopy_identity(w: &Form) -> Result<Form, ExteriorError> {
    let p = w.degree();
    if p == 0 {
        return Err(ExteriorError::DegreeZero);
    }
    let mask = w.terms().fold(0u32, |m, (_, c)| m | c.meta().t_all);
    let k = fresh_level_of(mask);
    if k >= MAX_LEVELS {
        return Err(ExteriorError::LevelsExhausted);
    }
    let t = Expr::sym(Symbol::T(k));
    let dim = w.dim();
    let scaled = |e: &Expr| {
        e.subst(&|s| match s {
            Symbol::Y(i) if (i as usize) < dim => Some(&t * Expr::sym(s)),
            _ => None,
        })
    };
    let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
    for (idx, c) in w.terms() {
        let integrand = Expr::product([t.clone().powi(p as i32 - 1), scaled(c)]);
        let integral = integrate_level(&integrand, k);
        for (j, &i) in idx.iter().enumerate() {
            let mut rest = idx.clone();
            rest.remove(j);
            let term = Expr::y(i) * &integral;
            acc.entry(rest).or_default().push(if j % 2 == 1 { -term } else { term });
        }
    }
    let terms = acc.into_iter().map(|(k, cs)| (k, Expr::sum(cs)));
    Ok(Form::from_terms(dim, p - 1, terms)?.with_domain(w.domain().clone()))
}

/// Homotopy operator relative to a chart `u` onto `R^d`:
/// `u^* H (u^{-1})^* w`. `None` means the identity chart.
pub fn homotopy(w: &Form, chart: Option<&SmoothMap>) -> Result<Form, ExteriorError> {
    let Some(u) = chart.filter(|u| !u.is_identity()) else {
        return homotopy_identity(w);
    };
    if w.degree() == 0 {
        return Err(ExteriorError::DegreeZero);
    }
    let inv = u.inverse().ok_or(ExteriorError::MissingInverse)?;
    let flat = pullback(inv, w)?;
    let h = homotopy_identity(&flat)?;
    Ok(pullback(u, &h)?.with_domain(w.domain().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, symbolic_zero, ParseContext, Point};
    use crate::exterior::ext_d;

    fn e(s: &str) -> Expr {
        parse(s, ParseContext::new(3, 1)).unwrap()
    }

    fn zero(w: &Form) -> bool {
        w.terms().all(|(_, c)| symbolic_zero(c))
    }

    #[test]
    fn radial_contraction() {
        let i1 = interior_radial(&Form::dy(2, 0)).unwrap();
        assert_eq!(i1.scalar_part(), Expr::y(0));
        let area = Form::from_terms(2, 2, [(vec![0, 1], Expr::one())]).unwrap();
        let i2 = interior_radial(&area).unwrap();
        assert_eq!(i2.coeff(&[1]), Expr::y(0));
        assert_eq!(i2.coeff(&[0]), -Expr::y(1));
        assert!(interior_radial(&i2).unwrap().terms().all(|(_, c)| symbolic_zero(c)));
        assert_eq!(interior_radial(&Form::scalar(2, Expr::one())), Err(ExteriorError::DegreeZero));
    }

    #[test]
    fn homotopy_of_constant_forms() {
        let h = homotopy(&Form::dy(1, 0), None).unwrap();
        assert_eq!(h.scalar_part(), Expr::y(0));
        let area = Form::from_terms(2, 2, [(vec![0, 1], Expr::one())]).unwrap();
        let h = homotopy(&area, None).unwrap();
        assert!(symbolic_zero(&(h.coeff(&[1]) - 0.5 * Expr::y(0))));
        assert!(symbolic_zero(&(h.coeff(&[0]) + 0.5 * Expr::y(1))));
        assert!(zero(&ext_d(&h).unwrap().sub(&area).unwrap()));
    }

    #[test]
    fn homotopy_formula_on_non_closed_form() {
        let w = Form::from_terms(2, 1, [(vec![0], e("y2"))]).unwrap();
        let h = homotopy(&w, None).unwrap();
        assert!(symbolic_zero(&(h.scalar_part() - e("0.5*y1*y2"))));
        let dh = ext_d(&h).unwrap();
        let hd = homotopy(&ext_d(&w).unwrap(), None).unwrap();
        assert!(zero(&dh.add(&hd).unwrap().sub(&w).unwrap()));
    }

    #[test]
    fn non_polynomial_coefficients_use_quadrature() {
        // w = exp(y1) dy1 has primitive exp(y1) - 1 through the origin
        let w = Form::from_terms(1, 1, [(vec![0], e("exp(y1)"))]).unwrap();
        let h = homotopy(&w, None).unwrap();
        for y in [-1.0, 0.3, 2.0] {
            let v = h.scalar_part().eval(&Point::new(vec![y], vec![])).unwrap();
            assert!((v - (y.exp() - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_relative_homotopy() {
        // u = tan(π y / 4) maps (-2, 2) onto R
        let u = SmoothMap::new(1, vec![e("tan(0.7853981633974483*y1)")])
            .with_inverse(SmoothMap::new(1, vec![e("1.2732395447351628*atan(y1)")]));
        let w = Form::from_terms(1, 1, [(vec![0], e("x1*cos(y1)"))]).unwrap();
        let h = homotopy(&w, Some(&u)).unwrap();
        let r = ext_d(&h).unwrap().sub(&w).unwrap();
        let c = r.compile().unwrap();
        for y in [-1.9, -0.5, 0.0, 0.7, 1.95] {
            assert!(c.max_abs(&Point::new(vec![y], vec![1.3])).unwrap() < 1e-8);
        }
        let bare = SmoothMap::new(1, vec![e("2*y1")]);
        assert_eq!(homotopy(&w, Some(&bare)), Err(ExteriorError::MissingInverse));
    }
}
