use super::GlueError;
use crate::cech::GoodCover;
use crate::expr::{Expr, Point};
use crate::exterior::{ext_d, Form};
use crate::stats::Stat;

/// `n` cell centres of `[lo, hi]`.
pub fn linspace_cells(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

/// Tensor grid of cell centres, `n` per axis. A zero-dimensional grid has
/// the single empty point.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: usize,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: usize) -> Grid {
        Grid { lo, hi, n }
    }

    pub fn empty() -> Grid {
        Grid { lo: vec![], hi: vec![], n: 1 }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self.lo.iter().zip(&self.hi).map(|(&a, &b)| linspace_cells(a, b, self.n)).collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// A family `ω_x` of closed `p`-forms on the cover's region, parametrized
/// by `x` in a box sampled on `param_grid`.
#[derive(Clone, Debug)]
pub struct FamilySpec {
    pub omega: Form,
    pub params: usize,
    pub param_grid: Grid,
}

impl FamilySpec {
    pub fn new(omega: Form, params: usize, param_grid: Grid) -> Result<FamilySpec, GlueError> {
        if param_grid.dim() != params {
            return Err(GlueError::Config(format!(
                "parameter grid has {} axes for {} parameters",
                param_grid.dim(),
                params
            )));
        }
        if omega.degree() == 0 || omega.degree() > omega.dim() {
            return Err(GlueError::Config(format!(
                "form degree {} outside 1..={}",
                omega.degree(),
                omega.dim()
            )));
        }
        Ok(FamilySpec { omega, params, param_grid })
    }

    pub fn degree(&self) -> usize {
        self.omega.degree()
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    /// `ω` at a fixed parameter value.
    pub fn at(&self, x: &[f64]) -> Form {
        self.omega.map_coeffs(|c| c.substitute_values(None, Some(x)))
    }

    /// `|dω|` at the region samples and every nerve point, for every grid
    /// parameter; fails above `tol`.
    pub fn check_closed(&self, cover: &GoodCover, tol: f64) -> Result<Stat, GlueError> {
        let d = ext_d(&self.omega)?;
        let stat = max_over(&d, &cover_points(cover), &self.param_grid.points())?;
        if !stat.within(tol) {
            return Err(GlueError::NotClosed(stat.max));
        }
        Ok(stat)
    }
}

/// Region samples followed by every witness and sample of the nerve.
pub(crate) fn cover_points(cover: &GoodCover) -> Vec<Vec<f64>> {
    let mut pts = cover.region_samples.clone();
    for s in cover.nerve.keys() {
        pts.extend(cover.simplex_points(s));
    }
    pts
}

/// Statistics of the largest coefficient of `w` over `ys × xs`.
pub(crate) fn max_over(w: &Form, ys: &[Vec<f64>], xs: &[Vec<f64>]) -> Result<Stat, GlueError> {
    let mut stat = Stat::default();
    if w.is_zero() {
        stat.count = ys.len() * xs.len();
        return Ok(stat);
    }
    let c = w.compile()?;
    for y in ys {
        for x in xs {
            stat.push(c.max_abs(&Point::new(y.clone(), x.clone()))?);
        }
    }
    Ok(stat)
}

/// Reference primitives `η_x` with `dη_x = ω_x`, as consumed by the
/// paper-mode pipelines.
#[derive(Clone, Debug)]
pub enum Provider {
    Symbolic { eta: Form },
    /// `η + step(x_param - threshold) ζ` for a closed form `ζ`: still a
    /// primitive for every `x`, but discontinuous in `x`.
    Jittered { eta: Form, param: usize, threshold: f64, term: Form },
}

impl Provider {
    pub fn form(&self) -> Form {
        match self {
            Provider::Symbolic { eta } => eta.clone(),
            Provider::Jittered { eta, param, threshold, term } => {
                let jump = (Expr::x(*param) - *threshold).step();
                eta.add(&term.scale(&jump)).expect("provider terms share dimension and degree")
            }
        }
    }

    /// `η_x` at one parameter value.
    pub fn at(&self, x: &[f64]) -> Form {
        self.form().map_coeffs(|c| c.substitute_values(None, Some(x)))
    }

    /// The jump location, if any.
    pub fn jitter(&self) -> Option<(usize, f64)> {
        match self {
            Provider::Symbolic { .. } => None,
            Provider::Jittered { param, threshold, .. } => Some((*param, *threshold)),
        }
    }

    /// `|dη_x - ω_x|` over the cover's points and the grid parameters.
    pub fn check(&self, family: &FamilySpec, cover: &GoodCover, tol: f64) -> Result<Stat, GlueError> {
        let eta = self.form();
        if eta.degree() + 1 != family.degree() || eta.dim() != family.dim() {
            return Err(GlueError::Config(format!(
                "reference primitive has degree {} for a family of degree {}",
                eta.degree(),
                family.degree()
            )));
        }
        let r = ext_d(&eta)?.sub(&family.omega)?;
        let stat = max_over(&r, &cover_points(cover), &family.param_grid.points())?;
        if !stat.within(tol) {
            return Err(GlueError::ProviderResidual(stat.max));
        }
        Ok(stat)
    }
}
