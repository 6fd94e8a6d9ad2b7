//! Precedence-aware printing. Output of grammar nodes parses back to an
//! equal expression; `guard(..)` and `int[..](..)` are printed for
//! inspection only.

use std::fmt::{self, Write};

use super::{Expr, Node};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const BASE: u8 = 3;

fn number(c: f64) -> String {
    let s = format!("{c:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// Coefficient and remaining factors of a product term.
fn split(e: &Expr) -> (f64, Vec<Expr>) {
    match e.node() {
        Node::Const(c) => (*c, vec![]),
        Node::Mul(fs) => match fs[0].as_const() {
            Some(c) => (c, fs[1..].to_vec()),
            None => (1.0, fs.clone()),
        },
        _ => (1.0, vec![e.clone()]),
    }
}

/// Binding strength of the printed form of `e`.
fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) if *c < 0.0 => PRODUCT,
        Node::Add(_) => SUM,
        Node::Mul(_) => PRODUCT,
        Node::Pow(_, n) if *n < 0 => PRODUCT,
        _ => BASE,
    }
}

fn write_at(e: &Expr, out: &mut String, min: u8) {
    if level(e) < min {
        out.push('(');
        write_node(e, out);
        out.push(')');
    } else {
        write_node(e, out);
    }
}

fn write_product(c: f64, fs: &[Expr], out: &mut String) {
    let (num, den): (Vec<&Expr>, Vec<&Expr>) =
        fs.iter().partition(|f| !matches!(f.node(), Node::Pow(_, n) if *n < 0));
    let mut first = true;
    if c == -1.0 && !num.is_empty() {
        // a leading '-' binds to the next base only, so negate a whole group
        out.push_str("-(");
        write_product(1.0, fs, out);
        out.push(')');
        return;
    }
    if c != 1.0 || num.is_empty() {
        out.push_str(&number(c));
        first = false;
    }
    for f in num {
        if !first {
            out.push('*');
        }
        write_at(f, out, BASE);
        first = false;
    }
    for f in den {
        let Node::Pow(b, n) = f.node() else { unreachable!() };
        out.push('/');
        write_at(&Expr::pow(b.clone(), -n), out, BASE);
    }
}

fn write_node(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Const(c) => out.push_str(&number(*c)),
        Node::Sym(s) => write!(out, "{s}").unwrap(),
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                let (c, rest) = split(t);
                if i == 0 {
                    write_at(t, out, PRODUCT);
                } else if c < 0.0 {
                    out.push_str(" - ");
                    write_product(-c, &rest, out);
                } else {
                    out.push_str(" + ");
                    write_at(t, out, PRODUCT);
                }
            }
        }
        Node::Mul(_) => {
            let (c, rest) = split(e);
            write_product(c, &rest, out);
        }
        Node::Pow(_, n) if *n < 0 => write_product(1.0, std::slice::from_ref(e), out),
        Node::Pow(b, n) => {
            write_at(b, out, BASE);
            write!(out, "^{n}").unwrap();
        }
        Node::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_node(a, out);
            out.push(')');
        }
        Node::Guard(c, b) => {
            out.push_str("guard(");
            write_node(c, out);
            out.push_str(", ");
            write_node(b, out);
            out.push(')');
        }
        Node::Integral(k, b) => {
            write!(out, "int[{}](", super::Symbol::T(*k)).unwrap();
            write_node(b, out);
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_node(self, &mut s);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, ParseContext};

    fn round_trip(src: &str) {
        let ctx = ParseContext::new(3, 2).with_t();
        let e = parse(src, ctx).unwrap();
        let printed = e.to_string();
        let back = parse(&printed, ctx).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(back, e, "{src} printed as {printed}");
    }

    #[test]
    fn printed_form_parses_back() {
        for s in [
            "x1*y1^2",
            "-y1^2",
            "0 - y1^2",
            "y1 - 2*y2 + 3",
            "-(y1*y2)",
            "y1/(y2 + 1)^2",
            "1/y1",
            "-3/y2",
            "bump((y1-1)/2)",
            "exp(t*y1)*sin(x1) - cos(x2)/y3",
            "(y1 + y2)^3 - (y1 - y2)^2",
            "1.5e-20*y1",
            "-(y1+y2)",
            "step(x1 - 0.5)*sqrt(y1^2 + 1)",
        ] {
            round_trip(s);
        }
    }

    #[test]
    fn readable_output() {
        let ctx = ParseContext::new(2, 1);
        assert_eq!(parse("y1 - y2", ctx).unwrap().to_string(), "y1 - y2");
        assert_eq!(parse("x1*y1^2", ctx).unwrap().to_string(), "x1*y1^2");
    }
}
