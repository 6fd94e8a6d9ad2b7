use std::collections::HashMap;

use super::{integrate_level, Expr, ExprError, Func, Node, Symbol};

/// Symbolic partial derivative of `e` with respect to `s`.
///
/// Integral nodes follow the Leibniz rule (bounds are constant). A `step`
/// node is an error only when its argument depends on `s`.
pub fn diff(e: &Expr, s: Symbol) -> Result<Expr, ExprError> {
    let mut memo = HashMap::new();
    diff_rec(e, s, &mut memo)
}

fn diff_rec(e: &Expr, s: Symbol, memo: &mut HashMap<usize, Expr>) -> Result<Expr, ExprError> {
    if !e.depends_on(s) {
        return Ok(Expr::zero());
    }
    if let Some(d) = memo.get(&e.ptr()) {
        return Ok(d.clone());
    }
    let d = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Sym(v) => {
            if *v == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(ts) => {
            let mut parts = Vec::with_capacity(ts.len());
            for t in ts {
                parts.push(diff_rec(t, s, memo)?);
            }
            Expr::sum(parts)
        }
        Node::Mul(fs) => {
            let mut parts = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                if !f.depends_on(s) {
                    continue;
                }
                let df = diff_rec(f, s, memo)?;
                if df.is_zero() {
                    continue;
                }
                let others = fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone());
                parts.push(Expr::product(others.chain(std::iter::once(df))));
            }
            Expr::sum(parts)
        }
        Node::Pow(b, n) => {
            let db = diff_rec(b, s, memo)?;
            Expr::product([Expr::constant(f64::from(*n)), Expr::pow(b.clone(), n - 1), db])
        }
        Node::Func(f, a) => {
            let da = diff_rec(a, s, memo)?;
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Log => a.clone().recip(),
                Func::Sin => a.clone().cos(),
                Func::Cos => -a.clone().sin(),
                Func::Tan => Expr::one() + e.clone().powi(2),
                Func::Atan => (Expr::one() + a.clone().powi(2)).recip(),
                Func::Sqrt => 0.5 * e.clone().recip(),
                Func::Bump => {
                    // bump'(a) = bump(a) · (-2a / (1-a²)²), the rational factor
                    // masked outside |a| < 1 where bump vanishes flatly
                    let gap = Expr::one() - a.clone().powi(2);
                    let rational = -2.0 * a.clone() * gap.clone().powi(-2);
                    Expr::product([e.clone(), Expr::guard(gap, rational)])
                }
                Func::Step => {
                    return Err(ExprError::StepDifferentiation { arg: a.to_string(), var: s });
                }
            };
            Expr::product([outer, da])
        }
        Node::Guard(c, b) => Expr::guard(c.clone(), diff_rec(b, s, memo)?),
        Node::Integral(k, b) => {
            if s == Symbol::T(*k) {
                Expr::zero()
            } else {
                integrate_level(&diff_rec(b, s, memo)?, *k)
            }
        }
    };
    memo.insert(e.ptr(), d.clone());
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{integrate_t, symbolic_eq, Point};

    fn at(e: &Expr, y: &[f64]) -> f64 {
        e.eval(&Point::new(y.to_vec(), vec![])).unwrap()
    }

    #[test]
    fn polynomial_rule() {
        let e = Expr::y(0).powi(2) * Expr::x(0);
        let d = diff(&e, Symbol::Y(0)).unwrap();
        assert!(symbolic_eq(&d, &(2.0 * Expr::y(0) * Expr::x(0))));
    }

    #[test]
    fn bump_is_even_so_derivative_vanishes_at_zero() {
        let d = diff(&Expr::y(0).bump(), Symbol::Y(0)).unwrap();
        assert_eq!(at(&d, &[0.0]), 0.0);
        // continuous across the support boundary
        assert_eq!(at(&d, &[1.0]), 0.0);
        assert_eq!(at(&d, &[-3.0]), 0.0);
        let d2 = diff(&d, Symbol::Y(0)).unwrap();
        assert_eq!(at(&d2, &[1.0]), 0.0);
        assert!(at(&d2, &[0.999]).abs() < 1e-100);
    }

    #[test]
    fn step_is_not_differentiable() {
        let e = Expr::y(0).step();
        assert!(matches!(diff(&e, Symbol::Y(0)), Err(ExprError::StepDifferentiation { .. })));
        // a step in a parameter is constant for coordinate derivatives
        let j = Expr::x(0).step() * Expr::y(0);
        assert_eq!(diff(&j, Symbol::Y(0)).unwrap(), Expr::x(0).step());
    }

    #[test]
    fn leibniz_rule_through_integral() {
        let e = Expr::integral_node(0, (Expr::t() * Expr::y(0)).exp());
        let d = diff(&e, Symbol::Y(0)).unwrap();
        // closed form (e^y - 1)/y differentiated by central differences at y = 1
        let closed = |y: f64| (y.exp() - 1.0) / y;
        let h = 1e-5;
        let fd = (closed(1.0 + h) - closed(1.0 - h)) / (2.0 * h);
        let v = at(&d, &[1.0]);
        assert!((v - fd).abs() < 1e-8, "{v} vs {fd}");
        assert!((v - 1.0).abs() < 1e-10);
        // polynomial bodies: d∫ = ∫d
        let body = Expr::t().powi(2) * Expr::y(0).powi(3) + Expr::t() * Expr::y(1);
        let lhs = diff(&integrate_t(&body), Symbol::Y(0)).unwrap();
        let rhs = integrate_t(&diff(&body, Symbol::Y(0)).unwrap());
        assert!(symbolic_eq(&lhs, &rhs));
    }
}
