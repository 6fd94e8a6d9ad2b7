//! Recursive-descent parser for the scalar expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | symbol | func '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! Offsets in errors are 0-based byte positions.

use super::{Expr, ExprError, Func, Symbol, MAX_SYMBOLS};

/// Which symbols an expression may mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParseContext {
    /// Coordinates `y1..y{dim}`.
    pub dim: usize,
    /// Parameters `x1..x{params}`.
    pub params: usize,
    /// Whether the time variable `t` is accepted.
    pub allow_t: bool,
}

impl ParseContext {
    pub fn new(dim: usize, params: usize) -> Self {
        ParseContext { dim, params, allow_t: false }
    }

    pub fn with_t(mut self) -> Self {
        self.allow_t = true;
        self
    }
}

/// Parse `text` against the symbols declared in `ctx`.
pub fn parse(text: &str, ctx: ParseContext) -> Result<Expr, ExprError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, ctx };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax(p.pos, "unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ctx: ParseContext,
}

impl Parser<'_> {
    fn syntax(&self, offset: usize, message: &str) -> ExprError {
        ExprError::Syntax { offset, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(self.pos, &format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    terms.push(-self.term()?);
                }
                _ => return Ok(Expr::sum(terms)),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    factors.push(self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    factors.push(self.factor()?.recip());
                }
                _ => return Ok(Expr::product(factors)),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let b = self.base()?;
        if self.peek() != Some(b'^') {
            return Ok(b);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax(start, "expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let n: i32 = digits.parse().map_err(|_| self.syntax(start, "exponent out of range"))?;
        Ok(b.powi(n))
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        let start = match self.peek() {
            None => return Err(self.syntax(self.pos, "unexpected end of input")),
            Some(_) => self.pos,
        };
        let c = self.src[start];
        match c {
            b'-' => {
                self.pos += 1;
                Ok(-self.base()?)
            }
            b'(' => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            b'0'..=b'9' | b'.' => self.number(),
            c if c.is_ascii_alphabetic() => self.word(),
            _ => Err(self.syntax(start, &format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(self.syntax(start, "malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(self.syntax(save, "malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| self.syntax(start, "malformed number"))?;
        if !v.is_finite() {
            return Err(self.syntax(start, "number out of range"));
        }
        Ok(Expr::constant(v))
    }

    fn word(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(f) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::func(f, arg));
        }
        self.symbol(name, start).map(Expr::sym)
    }

    fn symbol(&self, name: &str, offset: usize) -> Result<Symbol, ExprError> {
        let unknown = || ExprError::UnknownSymbol { offset, name: name.to_string() };
        if name == "t" {
            return if self.ctx.allow_t { Ok(Symbol::T(0)) } else { Err(unknown()) };
        }
        let (head, idx) = name.split_at(1);
        let idx: usize = match idx.parse() {
            Ok(i) if (1..=MAX_SYMBOLS).contains(&i) && !idx.starts_with('0') => i,
            _ => return Err(unknown()),
        };
        match head {
            "y" if idx <= self.ctx.dim => Ok(Symbol::Y(idx as u8 - 1)),
            "x" if idx <= self.ctx.params => Ok(Symbol::X(idx as u8 - 1)),
            _ => Err(unknown()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Node, Point};

    fn ctx() -> ParseContext {
        ParseContext::new(3, 2).with_t()
    }

    #[test]
    fn product_with_power() {
        let e = parse("x1*y1^2", ctx()).unwrap();
        assert!(matches!(e.node(), Node::Mul(_)));
        let syms: Vec<String> = e.free_symbols().iter().map(|s| s.to_string()).collect();
        assert_eq!(syms, ["y1", "x1"]);
    }

    #[test]
    fn bump_at_center() {
        let e = parse("bump((y1-1)/2)", ctx()).unwrap();
        let v = e.eval(&Point::new(vec![1.0, 0.0, 0.0], vec![])).unwrap();
        assert!((v - 0.3678794412).abs() < 1e-10);
    }

    #[test]
    fn syntax_error_offset() {
        assert_eq!(
            parse("y1+*2", ctx()).unwrap_err(),
            ExprError::Syntax { offset: 3, message: "unexpected `*`".into() }
        );
        assert!(matches!(parse("(y1", ctx()), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("y1^-2", ctx()), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("1e", ctx()), Err(ExprError::Syntax { offset: 1, .. })));
        assert!(matches!(parse("sin y1", ctx()), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn unknown_symbols() {
        for s in ["y4", "x3", "z", "y0", "y10", "foo(y1)"] {
            assert!(matches!(parse(s, ctx()), Err(ExprError::UnknownSymbol { .. })), "{s}");
        }
        assert!(matches!(
            parse("1 + t", ParseContext::new(1, 0)),
            Err(ExprError::UnknownSymbol { offset: 4, .. })
        ));
    }

    #[test]
    fn unary_minus_binds_to_base() {
        // '-' base: -y1^2 is (-y1)^2
        let p = Point::new(vec![3.0, 0.0, 0.0], vec![]);
        assert_eq!(parse("-y1^2", ctx()).unwrap().eval(&p).unwrap(), 9.0);
        assert_eq!(parse("0-y1^2", ctx()).unwrap().eval(&p).unwrap(), -9.0);
        assert_eq!(parse("2^3^2", ctx()).ok(), None);
    }

    #[test]
    fn literals() {
        let p = Point::new(vec![], vec![]);
        let c = ParseContext::new(0, 0);
        for (s, v) in [("1.5e2", 150.0), (".25", 0.25), ("3.", 3.0), ("2E-1", 0.2), (" 1 + 2 * 3 ", 7.0)] {
            assert_eq!(parse(s, c).unwrap().eval(&p).unwrap(), v, "{s}");
        }
    }
}
