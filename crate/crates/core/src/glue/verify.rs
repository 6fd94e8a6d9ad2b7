use serde::Serialize;

use super::GlueError;
use crate::cech::{coboundary, Cochain, GluedForm, GoodCover};
use crate::expr::{Compiled, Expr, Point};
use crate::exterior::{ext_d, Form};
use crate::stats::Stat;

/// One tolerance comparison, naming the tolerance key it used.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub tolerance: String,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, stat: Stat, key: &str, tol: f64) -> Check {
        Check {
            name: name.to_string(),
            max: stat.max,
            mean: stat.mean,
            count: stat.count,
            tolerance: key.to_string(),
            tol,
            passed: stat.within(tol),
        }
    }
}

/// Glued primitives: symbolic in `x`, or one cochain per parameter value.
#[derive(Clone, Debug)]
pub enum Output {
    Symbolic(Cochain),
    PerParam(Vec<(Vec<f64>, Cochain)>),
}

impl Output {
    /// The cochain to evaluate at parameter `x` (exact match for per-x
    /// output).
    pub fn at(&self, x: &[f64]) -> Option<&Cochain> {
        match self {
            Output::Symbolic(c) => Some(c),
            Output::PerParam(v) => v.iter().find(|(p, _)| p == x).map(|(_, c)| c),
        }
    }

    /// Parameter values a per-x output was computed at.
    pub fn params(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            Output::Symbolic(_) => None,
            Output::PerParam(v) => Some(v.iter().map(|(p, _)| p.clone()).collect()),
        }
    }

    pub fn has_step(&self) -> bool {
        let any = |c: &Cochain| c.components().any(|(_, w)| w.has_step());
        match self {
            Output::Symbolic(c) => any(c),
            Output::PerParam(v) => v.iter().any(|(_, c)| any(c)),
        }
    }

    /// Apply `f` to every cochain.
    pub fn try_map(&self, mut f: impl FnMut(&Cochain) -> Result<Cochain, GlueError>) -> Result<Output, GlueError> {
        Ok(match self {
            Output::Symbolic(c) => Output::Symbolic(f(c)?),
            Output::PerParam(v) => {
                Output::PerParam(v.iter().map(|(p, c)| Ok((p.clone(), f(c)?))).collect::<Result<_, GlueError>>()?)
            }
        })
    }
}

/// Result of a reconstruction pipeline.
#[derive(Debug)]
pub struct Reconstruction {
    pub mode: String,
    pub output: Output,
    pub checks: Vec<Check>,
    /// Largest cycle defect or constants-solve residual.
    pub defect: Option<f64>,
}

impl Reconstruction {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Evaluator of the glued primitive.
    pub fn glued(&self, cover: &GoodCover) -> Result<Glued, GlueError> {
        Glued::new(&self.output, cover)
    }

    /// Evaluator of `d` of the glued primitive.
    pub fn glued_d(&self, cover: &GoodCover) -> Result<Glued, GlueError> {
        let d = self.output.try_map(|c| Ok(c.d()?))?;
        Glued::new(&d, cover)
    }
}

/// Glued evaluator over a symbolic or per-x output.
pub struct Glued {
    symbolic: Option<GluedForm>,
    per_param: Vec<(Vec<f64>, GluedForm)>,
    pub indices: Vec<Vec<usize>>,
}

impl Glued {
    pub fn new(out: &Output, cover: &GoodCover) -> Result<Glued, GlueError> {
        match out {
            Output::Symbolic(c) => {
                let g = GluedForm::new(c, cover)?;
                Ok(Glued { indices: g.indices.clone(), symbolic: Some(g), per_param: vec![] })
            }
            Output::PerParam(v) => {
                let per_param: Vec<(Vec<f64>, GluedForm)> =
                    v.iter().map(|(p, c)| Ok((p.clone(), GluedForm::new(c, cover)?))).collect::<Result<_, GlueError>>()?;
                let indices = per_param.first().map(|(_, g)| g.indices.clone()).unwrap_or_default();
                Ok(Glued { symbolic: None, per_param, indices })
            }
        }
    }

    fn form(&self, x: &[f64]) -> Result<&GluedForm, GlueError> {
        match &self.symbolic {
            Some(g) => Ok(g),
            None => self
                .per_param
                .iter()
                .find(|(p, _)| p == x)
                .map(|(_, g)| g)
                .ok_or_else(|| GlueError::Config(format!("no reconstruction at parameter {x:?}"))),
        }
    }

    /// Coefficients at `(y, x)` in `indices` order.
    pub fn eval(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>, GlueError> {
        Ok(self.form(x)?.eval(y, x)?)
    }

    pub fn mismatch(&self, y: &[f64], x: &[f64]) -> Result<f64, GlueError> {
        Ok(self.form(x)?.mismatch(y, x)?)
    }
}

/// Points of a tensor grid over `[lo, hi]` that lie in the cover's region.
pub fn region_grid(cover: &GoodCover, lo: &[f64], hi: &[f64], n: usize) -> Result<Vec<Vec<f64>>, GlueError> {
    let grid = super::Grid::new(lo.to_vec(), hi.to_vec(), n).points();
    let tape = Compiled::new(&cover.region)?;
    Ok(grid
        .into_iter()
        .filter(|y| tape.eval(&Point::new(y.clone(), vec![])).map(|v| v.iter().all(|&m| m > 0.0)).unwrap_or(false))
        .collect())
}

/// The family at one parameter value, or the symbolic family.
fn omega_for(omega: &Form, out: &Output, x: &[f64]) -> Form {
    match out {
        Output::Symbolic(_) => omega.clone(),
        Output::PerParam(_) => omega.map_coeffs(|c| c.substitute_values(None, Some(x))),
    }
}

/// `dτ - ω` of the glued primitive on `ys × xs`, using at each point the
/// branch of the smallest set containing it.
pub fn residual(out: &Output, omega: &Form, cover: &GoodCover, ys: &[Vec<f64>], xs: &[Vec<f64>]) -> Result<Stat, GlueError> {
    let owner: Vec<Option<usize>> = ys.iter().map(|y| cover.first_containing(y)).collect();
    let mut stat = Stat::default();
    let groups: Vec<Vec<Vec<f64>>> = match out {
        Output::Symbolic(_) => vec![xs.to_vec()],
        Output::PerParam(_) => xs.iter().map(|x| vec![x.clone()]).collect(),
    };
    for group in groups {
        let c = out.at(&group[0]).ok_or_else(|| GlueError::Config(format!("no reconstruction at {:?}", group[0])))?;
        let w = omega_for(omega, out, &group[0]);
        let mut tapes = Vec::new();
        for a in 0..cover.len() {
            let comp = c.get(&[a]).unwrap_or_else(|| Form::zero(cover.dim, omega.degree() - 1));
            tapes.push(ext_d(&comp)?.with_domain(Default::default()).sub(&w)?.compile()?);
        }
        for (y, a) in ys.iter().zip(&owner) {
            let Some(a) = a else {
                stat.push(f64::NAN);
                continue;
            };
            for x in &group {
                stat.push(tapes[*a].max_abs(&Point::new(y.clone(), x.clone()))?);
            }
        }
    }
    Ok(stat)
}

/// Largest difference between branches of the glued primitive at `ys`.
pub fn mismatch(out: &Output, cover: &GoodCover, ys: &[Vec<f64>], xs: &[Vec<f64>]) -> Result<Stat, GlueError> {
    let g = Glued::new(out, cover)?;
    let mut stat = Stat::default();
    for y in ys {
        for x in xs {
            stat.push(g.mismatch(y, x)?);
        }
    }
    Ok(stat)
}

/// `|δτ|` at the nerve samples of every edge.
pub fn delta_closed(out: &Output, cover: &GoodCover, xs: &[Vec<f64>]) -> Result<Stat, GlueError> {
    let mut stat = Stat::default();
    match out {
        Output::Symbolic(c) => stat.merge(&coboundary(c, cover)?.abs_at_samples(cover, xs)?),
        Output::PerParam(v) => {
            for x in xs {
                if let Some((_, c)) = v.iter().find(|(p, _)| p == x) {
                    stat.merge(&coboundary(c, cover)?.abs_at_samples(cover, std::slice::from_ref(x))?);
                }
            }
        }
    }
    Ok(stat)
}

/// Spread in `y` of `τ_x - f_x` for a scalar oracle `f`, as a statistic
/// over `x`.
pub fn oracle_spread(out: &Output, oracle: &Expr, cover: &GoodCover, ys: &[Vec<f64>], xs: &[Vec<f64>]) -> Result<Stat, GlueError> {
    let g = Glued::new(out, cover)?;
    let f = Compiled::new(std::slice::from_ref(oracle))?;
    let mut stat = Stat::default();
    for x in xs {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for y in ys {
            let v = g.eval(y, x)?.first().copied().unwrap_or(0.0) - f.eval(&Point::new(y.clone(), x.clone()))?[0];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        stat.push(if ys.is_empty() { 0.0 } else { hi - lo });
    }
    Ok(stat)
}

/// Tolerances of the checks shared by every pipeline.
#[derive(Clone, Copy, Debug)]
pub struct CommonTols {
    pub residual: f64,
    pub mismatch: f64,
    pub delta: f64,
}

/// Residual, branch mismatch (at grid points and nerve samples) and
/// δ-closedness of an output.
pub(crate) fn common_checks(
    out: &Output,
    omega: &Form,
    cover: &GoodCover,
    ys: &[Vec<f64>],
    xs: &[Vec<f64>],
    tols: CommonTols,
) -> Result<Vec<Check>, GlueError> {
    let mut sample_points: Vec<Vec<f64>> = ys.to_vec();
    for s in cover.simplices(1) {
        sample_points.extend(cover.simplex_points(s));
    }
    Ok(vec![
        Check::new("residual", residual(out, omega, cover, ys, xs)?, "residual", tols.residual),
        Check::new("mismatch", mismatch(out, cover, &sample_points, xs)?, "mismatch", tols.mismatch),
        Check::new("delta", delta_closed(out, cover, xs)?, "delta", tols.delta),
    ])
}
