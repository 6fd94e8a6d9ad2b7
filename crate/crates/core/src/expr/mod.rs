//! Smooth scalar expressions over chart coordinates `y1..y9`, parameters
//! `x1..x9` and homotopy time variables.
//!
//! An [`Expr`] is an immutable, reference-counted DAG. Every node caches a
//! structural hash together with the sets of symbols it mentions, so
//! dependency queries are O(1) and structurally equal subtrees can be shared
//! during evaluation. Smart constructors keep expressions in a light canonical
//! form: sums and products are flattened, constants folded, operands sorted by
//! a fixed total order and like terms merged.
//!
//! Integrals over `[0, 1]` are represented by [`Node::Integral`], which binds
//! a time *level*. The parser only knows level 0 (written `t`); the homotopy
//! operator allocates fresh levels so that nested integrals never capture one
//! another's variable.

mod diff;
mod eval;
mod parse;
mod poly;
mod print;
pub mod quad;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

pub use eval::{Compiled, Point};
pub use parse::{parse, ParseContext};
pub use poly::{expand, symbolic_eq, symbolic_zero, Poly};

/// Most coordinate or parameter symbols an expression may mention.
pub const MAX_SYMBOLS: usize = 9;
/// Most distinct integration levels in one expression.
pub const MAX_LEVELS: u8 = 32;

/// Errors raised while parsing, differentiating or evaluating expressions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{name}` at offset {offset}")]
    UnknownSymbol { offset: usize, name: String },
    #[error("cannot differentiate step({arg}) with respect to {var}")]
    StepDifferentiation { arg: String, var: Symbol },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge (estimated error {error:e})")]
    Quadrature { error: f64 },
    #[error("symbol {0} is not assigned")]
    Unbound(Symbol),
    #[error("integration level t{0} is bound twice")]
    LevelCapture(u8),
}

/// A free variable of an expression. Indices are zero based: `Y(0)` prints
/// as `y1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Y(u8),
    X(u8),
    T(u8),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Y(i) => write!(f, "y{}", i + 1),
            Symbol::X(i) => write!(f, "x{}", i + 1),
            Symbol::T(0) => write!(f, "t"),
            Symbol::T(k) => write!(f, "t{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Atan,
    Sqrt,
    /// `exp(-1/(1-s^2))` on `|s| < 1`, zero elsewhere.
    Bump,
    /// Heaviside step with `step(0) = 1`. Evaluable, never differentiable.
    Step,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Sqrt => "sqrt",
            Func::Bump => "bump",
            Func::Step => "step",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "sqrt" => Func::Sqrt,
            "bump" => Func::Bump,
            "step" => Func::Step,
            _ => return None,
        })
    }

    /// Pointwise value; `None` outside the function's domain.
    pub fn apply(self, a: f64) -> Option<f64> {
        let v = match self {
            Func::Exp => a.exp(),
            Func::Log => {
                if a <= 0.0 {
                    return None;
                }
                a.ln()
            }
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan(),
            Func::Atan => a.atan(),
            Func::Sqrt => {
                if a < 0.0 {
                    return None;
                }
                a.sqrt()
            }
            Func::Bump => bump(a),
            Func::Step => {
                if a >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        Some(v)
    }
}

/// Smooth compactly supported bump `exp(-1/(1-s^2))`.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Expression node. Construct through the smart constructors on [`Expr`];
/// they maintain the canonical-form invariants the rest of the crate relies
/// on (no nested sums, at most one leading constant, exponents not in
/// `{0, 1}`).
#[derive(Debug)]
pub enum Node {
    Const(f64),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i32),
    Func(Func, Expr),
    /// `body` where `cond > 0`, zero elsewhere. Differentiates as
    /// `Guard(cond, d body)`, which is only sound when `body` vanishes to all
    /// orders on the boundary `cond = 0`.
    Guard(Expr, Expr),
    /// `∫₀¹ body dt_level`.
    Integral(u8, Expr),
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Meta {
    pub y: u16,
    pub x: u16,
    /// Free time levels.
    pub t_free: u32,
    /// Every level mentioned, free or bound.
    pub t_all: u32,
    pub step: bool,
    /// Node count of the fully unshared tree, saturating.
    pub tree_size: u64,
}

impl Meta {
    fn join(mut self, o: Meta) -> Meta {
        self.y |= o.y;
        self.x |= o.x;
        self.t_free |= o.t_free;
        self.t_all |= o.t_all;
        self.step |= o.step;
        self.tree_size = self.tree_size.saturating_add(o.tree_size);
        self
    }
}

pub(crate) struct Inner {
    pub node: Node,
    pub hash: u64,
    pub meta: Meta,
}

/// Immutable shared expression.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(h: u64, v: u64) -> u64 {
    splitmix(h.rotate_left(17) ^ v)
}

fn const_bits(c: f64) -> u64 {
    if c == 0.0 {
        0
    } else {
        c.to_bits()
    }
}

impl Expr {
    fn make(node: Node) -> Expr {
        let (hash, meta) = match &node {
            Node::Const(c) => (mix(1, const_bits(*c)), Meta { tree_size: 1, ..Meta::default() }),
            Node::Sym(s) => {
                let mut m = Meta { tree_size: 1, ..Meta::default() };
                let code = match *s {
                    Symbol::Y(i) => {
                        m.y = 1 << i;
                        u64::from(i)
                    }
                    Symbol::X(i) => {
                        m.x = 1 << i;
                        100 + u64::from(i)
                    }
                    Symbol::T(k) => {
                        m.t_free = 1 << k;
                        m.t_all = 1 << k;
                        200 + u64::from(k)
                    }
                };
                (mix(2, code), m)
            }
            Node::Add(ts) | Node::Mul(ts) => {
                let tag = if matches!(node, Node::Add(_)) { 3 } else { 4 };
                let mut h = tag;
                let mut m = Meta { tree_size: 1, ..Meta::default() };
                for t in ts {
                    h = mix(h, t.0.hash);
                    m = m.join(t.0.meta);
                }
                (h, m)
            }
            Node::Pow(b, n) => {
                let mut m = b.0.meta;
                m.tree_size = m.tree_size.saturating_add(1);
                (mix(mix(5, b.0.hash), *n as u64), m)
            }
            Node::Func(f, a) => {
                let mut m = a.0.meta;
                m.tree_size = m.tree_size.saturating_add(1);
                m.step |= *f == Func::Step;
                (mix(mix(6, *f as u64), a.0.hash), m)
            }
            Node::Guard(c, b) => {
                let mut m = c.0.meta.join(b.0.meta);
                m.tree_size = m.tree_size.saturating_add(1);
                (mix(mix(7, c.0.hash), b.0.hash), m)
            }
            Node::Integral(k, b) => {
                let mut m = b.0.meta;
                m.t_free &= !(1u32 << k);
                m.t_all |= 1 << k;
                m.tree_size = m.tree_size.saturating_add(1);
                (mix(mix(8, u64::from(*k)), b.0.hash), m)
            }
        };
        Expr(Arc::new(Inner { node, hash, meta }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub(crate) fn meta(&self) -> Meta {
        self.0.meta
    }

    pub(crate) fn ptr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub(crate) fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    // ----- leaves -----

    pub fn constant(c: f64) -> Expr {
        Expr::make(Node::Const(if c == 0.0 { 0.0 } else { c }))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn sym(s: Symbol) -> Expr {
        Expr::make(Node::Sym(s))
    }

    /// Coordinate `y{i+1}`.
    pub fn y(i: usize) -> Expr {
        Expr::sym(Symbol::Y(i as u8))
    }

    /// Parameter `x{i+1}`.
    pub fn x(i: usize) -> Expr {
        Expr::sym(Symbol::X(i as u8))
    }

    /// Homotopy time variable of level 0 (`t` in the grammar).
    pub fn t() -> Expr {
        Expr::sym(Symbol::T(0))
    }

    // ----- queries -----

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn depends_on(&self, s: Symbol) -> bool {
        let m = self.0.meta;
        match s {
            Symbol::Y(i) => m.y & (1 << i) != 0,
            Symbol::X(i) => m.x & (1 << i) != 0,
            Symbol::T(k) => m.t_free & (1 << k) != 0,
        }
    }

    pub fn depends_on_any_y(&self) -> bool {
        self.0.meta.y != 0
    }

    pub fn depends_on_any_x(&self) -> bool {
        self.0.meta.x != 0
    }

    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let m = self.0.meta;
        let mut out = BTreeSet::new();
        for i in 0..16u8 {
            if m.y & (1 << i) != 0 {
                out.insert(Symbol::Y(i));
            }
            if m.x & (1 << i) != 0 {
                out.insert(Symbol::X(i));
            }
        }
        for k in 0..MAX_LEVELS {
            if m.t_free & (1 << k) != 0 {
                out.insert(Symbol::T(k));
            }
        }
        out
    }

    /// Whether a `step` node occurs anywhere.
    pub fn has_step(&self) -> bool {
        self.0.meta.step
    }

    /// A time level not mentioned anywhere in `self`.
    pub fn fresh_level(&self) -> u8 {
        fresh_level_of(self.0.meta.t_all)
    }

    /// Node count of the expression written out as a tree.
    pub fn tree_size(&self) -> u64 {
        self.0.meta.tree_size
    }

    // ----- smart constructors -----

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut flat = Vec::new();
        let mut c = 0.0;
        for t in terms {
            match t.node() {
                Node::Const(v) => c += v,
                Node::Add(inner) => {
                    for u in inner {
                        if let Some(v) = u.as_const() {
                            c += v;
                        } else {
                            flat.push(u.clone());
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        // split off numeric coefficients and merge like terms
        let mut parts: Vec<(Expr, f64)> = flat.into_iter().map(split_coefficient).collect();
        parts.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Expr, f64)> = Vec::with_capacity(parts.len());
        for (rest, k) in parts {
            match merged.last_mut() {
                Some((r, acc)) if *r == rest => *acc += k,
                _ => merged.push((rest, k)),
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(merged.len() + 1);
        if c != 0.0 {
            out.push(Expr::constant(c));
        }
        for (rest, k) in merged {
            if k == 0.0 {
                continue;
            }
            out.push(if k == 1.0 { rest } else { scale_term(k, rest) });
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::make(Node::Add(out)),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut c = 1.0;
        let mut powers: Vec<(Expr, i32)> = Vec::new();
        let push = |f: &Expr, c: &mut f64, powers: &mut Vec<(Expr, i32)>| match f.node() {
            Node::Const(v) => *c *= v,
            Node::Pow(b, n) => powers.push((b.clone(), *n)),
            _ => powers.push((f.clone(), 1)),
        };
        for f in factors {
            if let Node::Mul(inner) = f.node() {
                for g in inner {
                    push(g, &mut c, &mut powers);
                }
            } else {
                push(&f, &mut c, &mut powers);
            }
        }
        if c == 0.0 {
            return Expr::zero();
        }
        powers.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Expr, i32)> = Vec::with_capacity(powers.len());
        for (b, n) in powers {
            match merged.last_mut() {
                Some((mb, mn)) if *mb == b => *mn += n,
                _ => merged.push((b, n)),
            }
        }
        let mut out = Vec::with_capacity(merged.len() + 1);
        for (b, n) in merged {
            if n == 0 {
                continue;
            }
            let p = Expr::pow(b, n);
            match p.node() {
                Node::Const(v) => c *= v,
                Node::Mul(inner) => {
                    // (c·r)^n produced a coefficient
                    for g in inner {
                        if let Some(v) = g.as_const() {
                            c *= v;
                        } else {
                            out.push(g.clone());
                        }
                    }
                }
                _ => out.push(p),
            }
        }
        if c == 0.0 {
            return Expr::zero();
        }
        out.sort();
        if c != 1.0 {
            out.insert(0, Expr::constant(c));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::make(Node::Mul(out)),
        }
    }

    pub fn pow(base: Expr, n: i32) -> Expr {
        match n {
            0 => return Expr::one(),
            1 => return base,
            _ => {}
        }
        match base.node() {
            Node::Const(c) => {
                let v = c.powi(n);
                if v.is_finite() {
                    return Expr::constant(v);
                }
                Expr::make(Node::Pow(base, n))
            }
            Node::Pow(b, m) => Expr::pow(b.clone(), m * n),
            Node::Mul(fs) => {
                let has_coeff = fs.iter().any(|f| f.as_const().is_some());
                if has_coeff || n > 0 {
                    Expr::product(fs.iter().map(|f| Expr::pow(f.clone(), n)))
                } else {
                    Expr::make(Node::Pow(base, n))
                }
            }
            _ => Expr::make(Node::Pow(base, n)),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if let Some(a) = arg.as_const() {
            if let Some(v) = f.apply(a) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        Expr::make(Node::Func(f, arg))
    }

    /// `body` on `cond > 0`, zero elsewhere.
    pub fn guard(cond: Expr, body: Expr) -> Expr {
        if body.is_zero() {
            return body;
        }
        if let Some(c) = cond.as_const() {
            return if c > 0.0 { body } else { Expr::zero() };
        }
        Expr::make(Node::Guard(cond, body))
    }

    /// Raw integral node over level `k`; see [`integrate_level`] for the
    /// exact polynomial path.
    pub(crate) fn integral_node(k: u8, body: Expr) -> Expr {
        if !body.depends_on(Symbol::T(k)) {
            return body;
        }
        Expr::make(Node::Integral(k, body))
    }

    // convenience

    pub fn exp(self) -> Expr {
        Expr::func(Func::Exp, self)
    }
    pub fn ln(self) -> Expr {
        Expr::func(Func::Log, self)
    }
    pub fn sin(self) -> Expr {
        Expr::func(Func::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::func(Func::Cos, self)
    }
    pub fn tan(self) -> Expr {
        Expr::func(Func::Tan, self)
    }
    pub fn atan(self) -> Expr {
        Expr::func(Func::Atan, self)
    }
    pub fn sqrt(self) -> Expr {
        Expr::func(Func::Sqrt, self)
    }
    pub fn bump(self) -> Expr {
        Expr::func(Func::Bump, self)
    }
    pub fn step(self) -> Expr {
        Expr::func(Func::Step, self)
    }
    pub fn powi(self, n: i32) -> Expr {
        Expr::pow(self, n)
    }
    pub fn recip(self) -> Expr {
        Expr::pow(self, -1)
    }

    /// Simultaneous substitution of free symbols. Bound integration levels
    /// are never substituted.
    pub fn subst(&self, f: &dyn Fn(Symbol) -> Option<Expr>) -> Expr {
        let mut memo = std::collections::HashMap::new();
        subst_rec(self, f, 0, &mut memo)
    }

    /// Replace `y_i` by `values[i]` and `x_j` by `params[j]` (where given).
    pub fn substitute_values(&self, ys: Option<&[f64]>, xs: Option<&[f64]>) -> Expr {
        self.subst(&|s| match s {
            Symbol::Y(i) => ys.and_then(|v| v.get(i as usize)).map(|&c| Expr::constant(c)),
            Symbol::X(j) => xs.and_then(|v| v.get(j as usize)).map(|&c| Expr::constant(c)),
            Symbol::T(_) => None,
        })
    }

    /// Rebuild this node with new children through the smart constructors.
    pub(crate) fn rebuild(&self, kids: Vec<Expr>) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Sym(_) => self.clone(),
            Node::Add(_) => Expr::sum(kids),
            Node::Mul(_) => Expr::product(kids),
            Node::Pow(_, n) => Expr::pow(kids.into_iter().next().unwrap(), *n),
            Node::Func(f, _) => Expr::func(*f, kids.into_iter().next().unwrap()),
            Node::Guard(_, _) => {
                let mut it = kids.into_iter();
                let c = it.next().unwrap();
                Expr::guard(c, it.next().unwrap())
            }
            Node::Integral(k, _) => integrate_level(&kids.into_iter().next().unwrap(), *k),
        }
    }

    pub(crate) fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Const(_) | Node::Sym(_) => vec![],
            Node::Add(v) | Node::Mul(v) => v.iter().collect(),
            Node::Pow(b, _) => vec![b],
            Node::Func(_, a) => vec![a],
            Node::Guard(c, b) => vec![c, b],
            Node::Integral(_, b) => vec![b],
        }
    }
}

pub fn fresh_level_of(mask: u32) -> u8 {
    if mask == 0 {
        0
    } else {
        (32 - mask.leading_zeros()) as u8
    }
}

fn subst_rec(
    e: &Expr,
    f: &dyn Fn(Symbol) -> Option<Expr>,
    bound: u32,
    memo: &mut std::collections::HashMap<(usize, u32), Expr>,
) -> Expr {
    let m = e.meta();
    if m.y == 0 && m.x == 0 && (m.t_free & !bound) == 0 {
        return e.clone();
    }
    let key = (e.ptr(), bound);
    if let Some(r) = memo.get(&key) {
        return r.clone();
    }
    let out = match e.node() {
        Node::Sym(s) => {
            let is_bound = matches!(s, Symbol::T(k) if bound & (1 << k) != 0);
            if is_bound {
                e.clone()
            } else {
                f(*s).unwrap_or_else(|| e.clone())
            }
        }
        Node::Integral(k, b) => {
            let nb = subst_rec(b, f, bound | (1 << k), memo);
            if nb.ptr_eq(b) {
                e.clone()
            } else {
                integrate_level(&nb, *k)
            }
        }
        _ => {
            let kids: Vec<Expr> = e.children().into_iter().map(|c| subst_rec(c, f, bound, memo)).collect();
            let same = kids.iter().zip(e.children()).all(|(a, b)| a.ptr_eq(b));
            if same {
                e.clone()
            } else {
                e.rebuild(kids)
            }
        }
    };
    memo.insert(key, out.clone());
    out
}

/// Split `c·r` into `(r, c)`; plain terms get coefficient 1.
fn split_coefficient(e: Expr) -> (Expr, f64) {
    if let Node::Mul(fs) = e.node() {
        if let Some(c) = fs[0].as_const() {
            let rest: Vec<Expr> = fs[1..].to_vec();
            let r = if rest.len() == 1 { rest.into_iter().next().unwrap() } else { Expr::make(Node::Mul(rest)) };
            return (r, c);
        }
    }
    (e, 1.0)
}

fn scale_term(k: f64, rest: Expr) -> Expr {
    let mut fs = vec![Expr::constant(k)];
    match rest.node() {
        Node::Mul(inner) => fs.extend(inner.iter().cloned()),
        _ => fs.push(rest),
    }
    Expr::make(Node::Mul(fs))
}

/// `∫₀¹ e dt_k`: exact when `e` is polynomial in `t_k`, otherwise an
/// integral node evaluated by adaptive quadrature.
pub fn integrate_level(e: &Expr, k: u8) -> Expr {
    if !e.depends_on(Symbol::T(k)) {
        return e.clone();
    }
    match poly::t_polynomial(e, k) {
        Some(coeffs) => Expr::sum(
            coeffs
                .into_iter()
                .enumerate()
                .map(|(i, c)| Expr::product([Expr::constant(1.0 / (i as f64 + 1.0)), c])),
        ),
        None => Expr::integral_node(k, e.clone()),
    }
}

/// `∫₀¹ e dt` over the level-0 time variable.
pub fn integrate_t(e: &Expr) -> Expr {
    integrate_level(e, 0)
}

pub use diff::diff;

// ----- equality and ordering -----

fn rank(n: &Node) -> u8 {
    match n {
        Node::Const(_) => 0,
        Node::Sym(_) => 1,
        Node::Pow(..) => 2,
        Node::Mul(_) => 3,
        Node::Add(_) => 4,
        Node::Func(..) => 5,
        Node::Guard(..) => 6,
        Node::Integral(..) => 7,
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        if self.0.hash != other.0.hash {
            return false;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Sym(a), Node::Sym(b)) => a == b,
            (Node::Add(a), Node::Add(b)) | (Node::Mul(a), Node::Mul(b)) => a == b,
            (Node::Pow(a, n), Node::Pow(b, m)) => n == m && a == b,
            (Node::Func(f, a), Node::Func(g, b)) => f == g && a == b,
            (Node::Guard(c, a), Node::Guard(d, b)) => c == d && a == b,
            (Node::Integral(k, a), Node::Integral(j, b)) => k == j && a == b,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Expr) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        let (a, b) = (self.node(), other.node());
        let r = rank(a).cmp(&rank(b));
        if r != Ordering::Equal {
            return r;
        }
        match (a, b) {
            (Node::Const(x), Node::Const(y)) => return x.total_cmp(y),
            (Node::Sym(x), Node::Sym(y)) => return x.cmp(y),
            _ => {}
        }
        let h = self.0.hash.cmp(&other.0.hash);
        if h != Ordering::Equal {
            return h;
        }
        match (a, b) {
            (Node::Add(x), Node::Add(y)) | (Node::Mul(x), Node::Mul(y)) => x.cmp(y),
            (Node::Pow(x, n), Node::Pow(y, m)) => n.cmp(m).then_with(|| x.cmp(y)),
            (Node::Func(f, x), Node::Func(g, y)) => f.cmp(g).then_with(|| x.cmp(y)),
            (Node::Guard(c, x), Node::Guard(d, y)) => c.cmp(d).then_with(|| x.cmp(y)),
            (Node::Integral(k, x), Node::Integral(j, y)) => k.cmp(j).then_with(|| x.cmp(y)),
            _ => Ordering::Equal,
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Expr) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}

// ----- operators -----

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl ops::$tr<&Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::constant(self), rhs.clone())
            }
        }
        impl ops::$tr<f64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), Expr::constant(rhs))
            }
        }
        impl ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::constant(rhs))
            }
        }
        impl ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b| Expr::sum([a, Expr::product([Expr::constant(-1.0), b])]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, |a, b| Expr::product([a, Expr::pow(b, -1)]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::constant(-1.0), self])
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn like_terms_merge() {
        let y = Expr::y(0);
        let e = &y + &y;
        assert_eq!(e, 2.0 * y.clone());
        assert!((&y - &y).is_zero());
        assert_eq!(&y * &y, y.clone().powi(2));
        assert!((&y / &y).is_one());
    }

    #[test]
    fn canonical_order_is_independent_of_input_order() {
        let a = Expr::y(0) * Expr::x(0) + Expr::y(1).sin();
        let b = Expr::y(1).sin() + Expr::x(0) * Expr::y(0);
        assert_eq!(a, b);
        assert_eq!(a.structural_hash(), b.structural_hash());
    }

    #[test]
    fn constant_folding_of_functions() {
        let e = Expr::constant(0.0).bump();
        assert!((e.as_const().unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(Expr::constant(-0.5).step().as_const(), Some(0.0));
        assert_eq!(Expr::constant(0.0).step().as_const(), Some(1.0));
    }

    #[test]
    fn metadata_tracks_levels() {
        let body = Expr::t() * Expr::y(0).sin();
        let i = Expr::integral_node(0, body.clone());
        assert!(!i.depends_on(Symbol::T(0)));
        assert_eq!(i.fresh_level(), 1);
        assert!(body.depends_on(Symbol::T(0)));
    }

    #[test]
    fn substitution_skips_bound_levels() {
        let inner = Expr::integral_node(0, (Expr::t() * Expr::y(0)).sin());
        let e = inner.subst(&|s| match s {
            Symbol::T(0) => Some(Expr::constant(5.0)),
            Symbol::Y(0) => Some(Expr::constant(2.0)),
            _ => None,
        });
        // the bound t survives, y1 is replaced
        assert!(!e.depends_on(Symbol::Y(0)));
        assert!(matches!(e.node(), Node::Integral(0, _)));
    }
}
