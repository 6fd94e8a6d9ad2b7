use std::collections::{BTreeMap, VecDeque};

use super::family::max_over;
use super::verify::{common_checks, Check, CommonTols, Output, Reconstruction};
use super::{FamilySpec, GlueError, Provider, Tolerances};
use crate::cech::{Cochain, GoodCover};
use crate::expr::{Compiled, Expr, Point};
use crate::exterior::{ext_d, homotopy, Form};
use crate::stats::Stat;

fn label(s: &[usize]) -> String {
    let names: Vec<String> = s.iter().map(|a| (a + 1).to_string()).collect();
    format!("({})", names.join(","))
}

/// `τ^α = H_α(ω)` with the chart of each set.
pub fn local_primitives(omega: &Form, cover: &GoodCover) -> Result<Cochain, GlueError> {
    let mut tau = Cochain::new(cover.dim, 0, omega.degree().saturating_sub(1));
    for a in 0..cover.len() {
        let chart = cover.homotopy_chart(&[a]).expect("every set has a chart");
        tau.insert(vec![a], homotopy(omega, Some(&chart))?)?;
    }
    Ok(tau)
}

/// `|dτ^α - ω|` at the points of each vertex, for every `x`.
pub(crate) fn local_residual(tau: &Cochain, omega: &Form, cover: &GoodCover, xs: &[Vec<f64>]) -> Result<Stat, GlueError> {
    let mut stat = Stat::default();
    for (s, t) in tau.components() {
        let r = ext_d(t)?.with_domain(Default::default()).sub(omega)?;
        stat.merge(&max_over(&r, &cover.simplex_points(s), xs)?);
    }
    Ok(stat)
}

/// Evaluate `e` at the first point, keeping `x` symbolic, and check that
/// the values at the remaining points agree for every `x`.
fn constant_of(e: &Expr, pts: &[Vec<f64>], xs: &[Vec<f64>], what: &str, location: String, tol: f64) -> Result<(Expr, f64), GlueError> {
    let Some(first) = pts.first() else {
        return Err(GlueError::Config(format!("no points on {location}")));
    };
    let c = e.substitute_values(Some(first), None);
    let tape = Compiled::new(&[e - &c])?;
    let mut spread: f64 = 0.0;
    for y in &pts[1..] {
        for x in xs {
            let v = tape.eval(&Point::new(y.clone(), x.clone()))?[0].abs();
            spread = if v.is_nan() { f64::NAN } else { spread.max(v) };
        }
    }
    if !(spread <= tol) {
        return Err(GlueError::NotConstant { what: what.into(), location, spread, tol });
    }
    Ok((c, spread))
}

/// Edge constants `C^{ab}(x) = τ^b - τ^a` read at the edge witness, with
/// constancy checked at the edge samples. Returns the constants and the
/// largest spread seen.
pub fn overlap_constants(
    tau: &Cochain,
    cover: &GoodCover,
    xs: &[Vec<f64>],
    tol: f64,
) -> Result<(BTreeMap<(usize, usize), Expr>, f64), GlueError> {
    if tau.form_degree != 0 || tau.cech_degree != 0 {
        return Err(GlueError::Config("overlap constants need a 0-cochain of functions".into()));
    }
    let mut out = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for s in cover.simplices(1) {
        let f = |a: usize| tau.get(&[a]).map(|w| w.scalar_part()).unwrap_or_else(Expr::zero);
        let diff = f(s[1]) - f(s[0]);
        let (c, spread) = constant_of(&diff, &cover.simplex_points(s), xs, "overlap constant", label(s), tol)?;
        worst = worst.max(spread);
        out.insert((s[0], s[1]), c);
    }
    Ok((out, worst))
}

/// Edge constants propagated along breadth-first trees of the overlap
/// graph, one tree per connected component rooted at its smallest index.
#[derive(Clone, Debug)]
pub struct Extension {
    /// Root of the component of each set.
    pub base: Vec<usize>,
    /// `C^{α0 α}` for each set `α`.
    pub constants: Vec<Expr>,
    /// Largest `|C^{α0 a} + C^{ab} - C^{α0 b}|` over `x` for each non-tree
    /// edge.
    pub defects: Vec<(String, f64)>,
    pub max_defect: f64,
}

pub fn extend_constants(
    edges: &BTreeMap<(usize, usize), Expr>,
    cover: &GoodCover,
    xs: &[Vec<f64>],
    tol: f64,
) -> Result<Extension, GlueError> {
    let n = cover.len();
    let edge = |a: usize, b: usize| -> Option<Expr> {
        if a < b {
            edges.get(&(a, b)).cloned()
        } else {
            edges.get(&(b, a)).map(|c| -c)
        }
    };
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges.keys() {
        adj[a].push(b);
        adj[b].push(a);
    }
    for l in &mut adj {
        l.sort();
    }
    let mut base = vec![usize::MAX; n];
    let mut constants = vec![Expr::zero(); n];
    let mut tree = BTreeMap::new();
    for root in 0..n {
        if base[root] != usize::MAX {
            continue;
        }
        base[root] = root;
        let mut queue = VecDeque::from([root]);
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if base[b] == usize::MAX {
                    base[b] = root;
                    constants[b] = &constants[a] + &edge(a, b).expect("adjacent");
                    tree.insert((a.min(b), a.max(b)), ());
                    queue.push_back(b);
                }
            }
        }
    }
    let mut defects = Vec::new();
    let mut max_defect: f64 = 0.0;
    let mut worst_edge = String::new();
    for (&(a, b), c) in edges {
        if tree.contains_key(&(a, b)) {
            continue;
        }
        let cycle = &constants[a] + c - &constants[b];
        let tape = Compiled::new(&[cycle])?;
        let mut m: f64 = 0.0;
        for x in xs {
            let v = tape.eval(&Point::new(vec![0.0; cover.dim], x.clone()))?[0].abs();
            m = if v.is_nan() { f64::NAN } else { m.max(v) };
        }
        if !(m <= max_defect) {
            worst_edge = label(&[a, b]);
        }
        max_defect = if m.is_nan() || max_defect.is_nan() { f64::NAN } else { max_defect.max(m) };
        defects.push((label(&[a, b]), m));
    }
    if !(max_defect <= tol) {
        return Err(GlueError::NotExact { defect: max_defect, location: worst_edge });
    }
    Ok(Extension { base, constants, defects, max_defect })
}

/// Gluing strategy for families of 1-forms.
#[derive(Clone, Copy, Debug)]
pub enum Deg1Mode<'a> {
    /// Constants from the overlap graph; output symbolic and step-free.
    Chain,
    /// Constants read off a reference primitive.
    Paper(&'a Provider),
}

/// Glue local primitives of a family of 1-forms into a global function.
///
/// `ys` are verification points in the region; the parameter grid of the
/// family supplies `x`.
pub fn reconstruct_deg1(
    family: &FamilySpec,
    cover: &GoodCover,
    mode: Deg1Mode<'_>,
    ys: &[Vec<f64>],
    tols: &Tolerances,
) -> Result<Reconstruction, GlueError> {
    if family.degree() != 1 {
        return Err(GlueError::Config(format!("degree-1 pipeline given a {}-form family", family.degree())));
    }
    let xs = family.param_grid.points();
    let omega = &family.omega;
    let mut checks = vec![Check::new("closed", family.check_closed(cover, tols.closed)?, "closed", tols.closed)];
    let tau = local_primitives(omega, cover)?;
    checks.push(Check::new("local", local_residual(&tau, omega, cover, &xs)?, "local", tols.local));

    let (shift, defect, name) = match mode {
        Deg1Mode::Chain => {
            let (edges, spread) = overlap_constants(&tau, cover, &xs, tols.constancy)?;
            checks.push(Check::new("overlap-constancy", stat_of(spread), "constancy", tols.constancy));
            let ext = extend_constants(&edges, cover, &xs, tols.exactness)?;
            checks.push(Check::new("cycle-defect", stat_of(ext.max_defect), "exactness", tols.exactness));
            (ext.constants, Some(ext.max_defect), "deg1-chain")
        }
        Deg1Mode::Paper(provider) => {
            checks.push(Check::new("provider", provider.check(family, cover, tols.provider)?, "provider", tols.provider));
            let eta = provider.form().scalar_part();
            let mut tilde = Vec::new();
            let mut worst: f64 = 0.0;
            for a in 0..cover.len() {
                let diff = tau.get(&[a]).expect("vertex").scalar_part() - &eta;
                let (c, spread) = constant_of(&diff, &cover.simplex_points(&[a]), &xs, "τ - η", label(&[a]), tols.constancy)?;
                worst = worst.max(spread);
                tilde.push(c);
            }
            checks.push(Check::new("provider-constancy", stat_of(worst), "constancy", tols.constancy));
            let roots: Vec<usize> = root_of_components(cover);
            let shift = (0..cover.len()).map(|a| &tilde[a] - &tilde[roots[a]]).collect();
            (shift, None, "deg1-paper")
        }
    };

    let mut out = Cochain::new(cover.dim, 0, 0);
    for a in 0..cover.len() {
        let t = tau.get(&[a]).expect("vertex").scalar_part() - &shift[a];
        out.insert(vec![a], Form::scalar(cover.dim, t))?;
    }
    let output = Output::Symbolic(out);
    let common = CommonTols { residual: tols.residual, mismatch: tols.mismatch, delta: tols.delta };
    checks.extend(common_checks(&output, omega, cover, ys, &xs, common)?);
    Ok(Reconstruction { mode: name.into(), output, checks, defect })
}

/// Smallest index of the overlap-graph component of each set.
pub(crate) fn root_of_components(cover: &GoodCover) -> Vec<usize> {
    let mut roots = vec![0; cover.len()];
    for comp in cover.components() {
        for &a in &comp {
            roots[a] = comp[0];
        }
    }
    roots
}

pub(crate) fn stat_of(v: f64) -> Stat {
    let mut s = Stat::default();
    s.push(v);
    s
}
