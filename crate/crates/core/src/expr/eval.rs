//! Pointwise evaluation.
//!
//! Expressions are compiled into a register tape. Structurally equal
//! subexpressions share one register, and every instruction is placed in the
//! innermost integral scope whose time variable it actually reads, so the
//! quadrature loop of an integral only re-runs the time-dependent part of its
//! body.
//!
//! Domain failures (log of a non-positive number, division by zero, failed
//! quadrature) produce NaN inside the tape; a guard whose condition is not
//! positive discards such values. A NaN or infinite output is reported as
//! the first error recorded during the run.

use std::collections::{HashMap, HashSet};

use super::quad::{self, QuadError};
use super::{Expr, ExprError, Func, Node, Symbol};

/// Assignment of values to coordinates, parameters and (optionally) the
/// level-0 time variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub t: Option<f64>,
}

impl Point {
    pub fn new(y: Vec<f64>, x: Vec<f64>) -> Point {
        Point { y, x, t: None }
    }

    pub fn with_t(mut self, t: f64) -> Point {
        self.t = Some(t);
        self
    }
}

type Reg = u32;

#[derive(Debug)]
enum Op {
    Const(f64),
    Y(usize),
    X(usize),
    PointT,
    Add(Box<[Reg]>),
    Mul(Box<[Reg]>),
    Pow(Reg, i32),
    Func(Func, Reg),
    Guard(Reg, Reg),
}

impl Op {
    fn inputs(&self) -> Vec<Reg> {
        match self {
            Op::Add(rs) | Op::Mul(rs) => rs.to_vec(),
            Op::Pow(r, _) | Op::Func(_, r) => vec![*r],
            Op::Guard(c, b) => vec![*c, *b],
            Op::Const(_) | Op::Y(_) | Op::X(_) | Op::PointT => vec![],
        }
    }
}

#[derive(Debug)]
enum Instr {
    Scalar(Reg, Op),
    /// Integrals over one time level sharing their quadrature nodes: the
    /// body writes each `(dst, inner)` pair's integrand to `inner`.
    Integral { t: Reg, body: Block, outs: Box<[(Reg, Reg)]> },
}

#[derive(Debug, Default)]
struct Block {
    code: Vec<Instr>,
}

/// A batch of expressions compiled into one tape.
#[derive(Debug)]
pub struct Compiled {
    root: Block,
    outputs: Vec<Reg>,
    registers: usize,
    needs_y: usize,
    needs_x: usize,
    needs_t: bool,
}

struct Scope {
    level: Option<u8>,
    t_reg: Reg,
    ops: Vec<(Reg, Op)>,
    groups: Vec<usize>,
    /// Open integral group per (level, wave).
    open: HashMap<(u8, u32), usize>,
    cache: HashMap<Expr, Reg>,
}

impl Scope {
    fn new(level: Option<u8>, t_reg: Reg) -> Scope {
        Scope { level, t_reg, ops: Vec::new(), groups: Vec::new(), open: HashMap::new(), cache: HashMap::new() }
    }
}

struct Group {
    wave: u32,
    scope: usize,
    outs: Vec<(Reg, Reg)>,
}

/// Integrals in one scope are fused when they bind the same level and sit
/// at the same wave: the wave of an integral is one more than the largest
/// wave of the scope's registers its body reads, and a plain op inherits
/// the largest wave of its inputs. Integrals of equal wave never depend on
/// each other, so scheduling a scope wave by wave (integral groups first)
/// respects every dependency.
struct Compiler {
    scopes: Vec<Scope>,
    stack: Vec<usize>,
    groups: Vec<Group>,
    wave: Vec<u32>,
    home: Vec<usize>,
    point_t: Option<Reg>,
    needs_y: usize,
    needs_x: usize,
}

impl Compiler {
    fn alloc(&mut self, scope: usize, wave: u32) -> Reg {
        self.wave.push(wave);
        self.home.push(scope);
        (self.wave.len() - 1) as Reg
    }

    fn emit(&mut self, scope: usize, op: Op) -> Reg {
        let w = op.inputs().into_iter().filter(|&r| self.home[r as usize] == scope).map(|r| self.wave[r as usize]).max();
        let r = self.alloc(scope, w.unwrap_or(0));
        self.scopes[scope].ops.push((r, op));
        r
    }

    fn compile(&mut self, e: &Expr) -> Result<Reg, ExprError> {
        if let Node::Sym(Symbol::T(k)) = e.node() {
            return self.time_register(*k);
        }
        let free = e.meta().t_free;
        let target = self
            .stack
            .iter()
            .rev()
            .copied()
            .find(|&i| self.scopes[i].level.is_some_and(|k| free & (1 << k) != 0))
            .unwrap_or(0);
        if let Some(&r) = self.scopes[target].cache.get(e) {
            return Ok(r);
        }
        let reg = match e.node() {
            Node::Const(c) => self.emit(target, Op::Const(*c)),
            Node::Sym(Symbol::Y(i)) => {
                self.needs_y = self.needs_y.max(*i as usize + 1);
                self.emit(target, Op::Y(*i as usize))
            }
            Node::Sym(Symbol::X(i)) => {
                self.needs_x = self.needs_x.max(*i as usize + 1);
                self.emit(target, Op::X(*i as usize))
            }
            Node::Sym(Symbol::T(_)) => unreachable!(),
            Node::Add(ts) => {
                let regs = ts.iter().map(|t| self.compile(t)).collect::<Result<Vec<_>, _>>()?;
                self.emit(target, Op::Add(regs.into_boxed_slice()))
            }
            Node::Mul(fs) => {
                let regs = fs.iter().map(|t| self.compile(t)).collect::<Result<Vec<_>, _>>()?;
                self.emit(target, Op::Mul(regs.into_boxed_slice()))
            }
            Node::Pow(b, n) => {
                let rb = self.compile(b)?;
                self.emit(target, Op::Pow(rb, *n))
            }
            Node::Func(f, a) => {
                let ra = self.compile(a)?;
                self.emit(target, Op::Func(*f, ra))
            }
            Node::Guard(c, b) => {
                let rc = self.compile(c)?;
                let rb = self.compile(b)?;
                self.emit(target, Op::Guard(rc, rb))
            }
            Node::Integral(k, body) => self.integral(target, *k, body)?,
        };
        self.scopes[target].cache.insert(e.clone(), reg);
        Ok(reg)
    }

    fn integral(&mut self, target: usize, k: u8, body: &Expr) -> Result<Reg, ExprError> {
        if self.stack.iter().any(|&s| self.scopes[s].level == Some(k)) {
            return Err(ExprError::LevelCapture(k));
        }
        // compile the parts of the body that do not see level k first, so
        // the wave of this integral is known before its group is chosen
        let mut seen = HashSet::new();
        let mut reads = 0;
        self.hoist(body, 1 << k, target, &mut seen, &mut reads)?;
        let wave = reads + 1;
        let g = match self.scopes[target].open.get(&(k, wave)) {
            Some(&g) => g,
            None => {
                let child = self.scopes.len();
                let t_reg = self.alloc(child, 0);
                self.scopes.push(Scope::new(Some(k), t_reg));
                self.groups.push(Group { wave, scope: child, outs: Vec::new() });
                let g = self.groups.len() - 1;
                self.scopes[target].open.insert((k, wave), g);
                self.scopes[target].groups.push(g);
                g
            }
        };
        self.stack.push(self.groups[g].scope);
        let inner = self.compile(body);
        self.stack.pop();
        let inner = inner?;
        let dst = self.alloc(target, wave);
        self.groups[g].outs.push((dst, inner));
        Ok(dst)
    }

    /// Compile every maximal subexpression of `e` free of the levels in
    /// `bound`, tracking the largest wave among those living in `target`.
    fn hoist(
        &mut self,
        e: &Expr,
        bound: u32,
        target: usize,
        seen: &mut HashSet<(usize, u32)>,
        reads: &mut u32,
    ) -> Result<(), ExprError> {
        if !seen.insert((e.addr(), bound)) {
            return Ok(());
        }
        if e.meta().t_free & bound == 0 {
            let r = self.compile(e)?;
            if self.home[r as usize] == target {
                *reads = (*reads).max(self.wave[r as usize]);
            }
            return Ok(());
        }
        match e.node() {
            Node::Add(ts) | Node::Mul(ts) => {
                for t in ts.iter() {
                    self.hoist(t, bound, target, seen, reads)?;
                }
            }
            Node::Pow(a, _) | Node::Func(_, a) => self.hoist(a, bound, target, seen, reads)?,
            Node::Guard(c, b) => {
                self.hoist(c, bound, target, seen, reads)?;
                self.hoist(b, bound, target, seen, reads)?;
            }
            Node::Integral(j, b) => self.hoist(b, bound | (1 << j), target, seen, reads)?,
            Node::Const(_) | Node::Sym(_) => {}
        }
        Ok(())
    }

    fn time_register(&mut self, k: u8) -> Result<Reg, ExprError> {
        if let Some(&s) = self.stack.iter().rev().find(|&&s| self.scopes[s].level == Some(k)) {
            return Ok(self.scopes[s].t_reg);
        }
        if k != 0 {
            return Err(ExprError::Unbound(Symbol::T(k)));
        }
        if let Some(r) = self.point_t {
            return Ok(r);
        }
        let r = self.emit(0, Op::PointT);
        self.point_t = Some(r);
        Ok(r)
    }

    /// Order a scope's code wave by wave.
    fn finish(&mut self, scope: usize) -> Block {
        let ops = std::mem::take(&mut self.scopes[scope].ops);
        let groups = std::mem::take(&mut self.scopes[scope].groups);
        let top = ops
            .iter()
            .map(|(r, _)| self.wave[*r as usize])
            .chain(groups.iter().map(|&g| self.groups[g].wave))
            .max()
            .unwrap_or(0) as usize;
        let mut by_wave: Vec<Vec<Instr>> = (0..=top).map(|_| Vec::new()).collect();
        for g in groups {
            let child = self.groups[g].scope;
            let body = self.finish(child);
            let outs = std::mem::take(&mut self.groups[g].outs).into_boxed_slice();
            let instr = Instr::Integral { t: self.scopes[child].t_reg, body, outs };
            by_wave[self.groups[g].wave as usize].push(instr);
        }
        let mut plain: Vec<Vec<Instr>> = (0..=top).map(|_| Vec::new()).collect();
        for (r, op) in ops {
            plain[self.wave[r as usize] as usize].push(Instr::Scalar(r, op));
        }
        let mut code = Vec::new();
        for (integrals, ops) in by_wave.into_iter().zip(plain) {
            code.extend(integrals);
            code.extend(ops);
        }
        Block { code }
    }
}

impl Compiled {
    pub fn new(exprs: &[Expr]) -> Result<Compiled, ExprError> {
        let mut c = Compiler {
            scopes: vec![Scope::new(None, 0)],
            stack: vec![0],
            groups: Vec::new(),
            wave: Vec::new(),
            home: Vec::new(),
            point_t: None,
            needs_y: 0,
            needs_x: 0,
        };
        let outputs = exprs.iter().map(|e| c.compile(e)).collect::<Result<Vec<_>, _>>()?;
        let root = c.finish(0);
        Ok(Compiled {
            root,
            outputs,
            registers: c.wave.len(),
            needs_y: c.needs_y,
            needs_x: c.needs_x,
            needs_t: c.point_t.is_some(),
        })
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluate every output at `p`.
    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, ExprError> {
        let mut out = vec![0.0; self.outputs.len()];
        let mut regs = Vec::new();
        self.eval_into(p, &mut out, &mut regs)?;
        Ok(out)
    }

    /// Evaluate into `out`, reusing `regs` as scratch space.
    pub fn eval_into(&self, p: &Point, out: &mut [f64], regs: &mut Vec<f64>) -> Result<(), ExprError> {
        if p.y.len() < self.needs_y {
            return Err(ExprError::Unbound(Symbol::Y(p.y.len() as u8)));
        }
        if p.x.len() < self.needs_x {
            return Err(ExprError::Unbound(Symbol::X(p.x.len() as u8)));
        }
        if self.needs_t && p.t.is_none() {
            return Err(ExprError::Unbound(Symbol::T(0)));
        }
        regs.clear();
        regs.resize(self.registers, 0.0);
        let mut first_error = None;
        run(&self.root, regs, p, 0, &mut first_error);
        for (slot, &r) in out.iter_mut().zip(&self.outputs) {
            let v = regs[r as usize];
            if !v.is_finite() {
                return Err(first_error.unwrap_or_else(|| ExprError::Domain("non-finite value".into())));
            }
            *slot = v;
        }
        Ok(())
    }
}

fn note(first: &mut Option<ExprError>, e: ExprError) {
    if first.is_none() {
        *first = Some(e);
    }
}

fn run(block: &Block, regs: &mut [f64], p: &Point, depth: usize, first: &mut Option<ExprError>) {
    for instr in &block.code {
        let (dst, op) = match instr {
            Instr::Scalar(dst, op) => (dst, op),
            Instr::Integral { t, body, outs } => {
                let results = {
                    let mut f = |s: f64, vals: &mut [f64]| {
                        regs[*t as usize] = s;
                        run(body, regs, p, depth + 1, first);
                        for (v, (_, inner)) in vals.iter_mut().zip(outs.iter()) {
                            *v = regs[*inner as usize];
                        }
                    };
                    quad::unit_interval_many(&mut f, outs.len(), depth)
                };
                for ((dst, _), r) in outs.iter().zip(results) {
                    regs[*dst as usize] = match r {
                        Ok(v) => v,
                        Err(QuadError::NotConverged(error)) => {
                            note(first, ExprError::Quadrature { error });
                            f64::NAN
                        }
                        Err(QuadError::NonFinite) => f64::NAN,
                    };
                }
                continue;
            }
        };
        let v = match op {
            Op::Const(c) => *c,
            Op::Y(i) => p.y[*i],
            Op::X(i) => p.x[*i],
            Op::PointT => p.t.unwrap_or(f64::NAN),
            Op::Add(rs) => rs.iter().map(|&r| regs[r as usize]).sum(),
            Op::Mul(rs) => rs.iter().map(|&r| regs[r as usize]).product(),
            Op::Pow(b, n) => {
                let base = regs[*b as usize];
                if base == 0.0 && *n < 0 {
                    note(first, ExprError::Domain("division by zero".into()));
                    f64::NAN
                } else {
                    base.powi(*n)
                }
            }
            Op::Func(f, a) => match f.apply(regs[*a as usize]) {
                Some(v) => v,
                None => {
                    note(first, ExprError::Domain(format!("{} outside its domain", f.name())));
                    f64::NAN
                }
            },
            Op::Guard(c, b) => {
                if regs[*c as usize] > 0.0 {
                    regs[*b as usize]
                } else {
                    0.0
                }
            }
        };
        regs[*dst as usize] = v;
    }
}

impl Expr {
    /// Evaluate at a point. Compiles a one-off tape; use [`Compiled`] when
    /// evaluating many points.
    pub fn eval(&self, p: &Point) -> Result<f64, ExprError> {
        Ok(Compiled::new(std::slice::from_ref(self))?.eval(p)?[0])
    }
}
