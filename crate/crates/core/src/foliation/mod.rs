//! Leafwise primitives on product bundles `B × R^f`.
//!
//! Total coordinates are `y1..yb` on the base followed by `y{b+1}..y{b+f}`
//! on the fiber. A leafwise form only carries fiber differentials; its
//! coefficients may depend on every coordinate. Fiber primitives come from
//! the homotopy operator in the fiber variables with the base point as
//! parameter, one per base set (each set may centre its fiber chart
//! elsewhere), and are glued with the base partition of unity.

use serde::Serialize;

use crate::cech::{partition_of_unity, CechError, GoodCover};
use crate::expr::{Expr, ExprError, Point, Symbol};
use crate::exterior::{ext_d, ext_d_along, homotopy, ExteriorError, Form, SmoothMap};
use crate::stats::Stat;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FoliationError {
    #[error("index {0:?} involves a base differential")]
    NotLeafwise(Vec<usize>),
    #[error("form mentions parameter x{0}; leafwise forms depend on coordinates only")]
    Parameter(usize),
    #[error("form is not leafwise closed: |d_F w| = {0:e}")]
    NotClosed(f64),
    #[error("leafwise defect {max:e} exceeds {tol:e}")]
    Defect { max: f64, tol: f64 },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Cech(#[from] CechError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `B × R^f` with a good cover of `B` and one fiber chart per base set.
#[derive(Clone, Debug)]
pub struct ProductBundle {
    pub base: GoodCover,
    pub fiber_dim: usize,
    pub fiber_charts: Vec<SmoothMap>,
}

impl ProductBundle {
    /// Identity fiber charts on every base set.
    pub fn new(base: GoodCover, fiber_dim: usize) -> ProductBundle {
        let fiber_charts = vec![SmoothMap::identity(fiber_dim); base.len()];
        ProductBundle { base, fiber_dim, fiber_charts }
    }

    /// Fiber chart `v = y_fib - c_α` on base set `α`.
    pub fn with_fiber_centers(mut self, centers: &[Vec<f64>]) -> Result<ProductBundle, FoliationError> {
        if centers.len() != self.base.len() || centers.iter().any(|c| c.len() != self.fiber_dim) {
            return Err(FoliationError::Config(format!(
                "need one fiber centre of length {} per base set",
                self.fiber_dim
            )));
        }
        self.fiber_charts = centers
            .iter()
            .map(|c| crate::cech::Shape::Translate { offset: c.clone() }.realize().chart)
            .collect();
        Ok(self)
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim
    }

    pub fn dim(&self) -> usize {
        self.base.dim + self.fiber_dim
    }
}

/// A form on `B × R^f` whose indices only involve fiber coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafwiseForm {
    form: Form,
    base_dim: usize,
}

impl LeafwiseForm {
    pub fn new(form: Form, base_dim: usize) -> Result<LeafwiseForm, FoliationError> {
        if let Some((idx, _)) = form.terms().find(|(idx, _)| idx.iter().any(|&i| i < base_dim)) {
            return Err(FoliationError::NotLeafwise(idx.clone()));
        }
        Ok(LeafwiseForm { form, base_dim })
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn degree(&self) -> usize {
        self.form.degree()
    }

    pub fn fiber_dim(&self) -> usize {
        self.form.dim() - self.base_dim
    }
}

/// Exterior derivative along the fibers only.
pub fn leafwise_d(w: &LeafwiseForm) -> Result<LeafwiseForm, FoliationError> {
    if w.degree() >= w.fiber_dim() {
        return Err(FoliationError::Config(format!(
            "leafwise d of a {}-form on {}-dimensional fibers",
            w.degree(),
            w.fiber_dim()
        )));
    }
    let form = ext_d_along(&w.form, w.base_dim..w.form.dim())?;
    Ok(LeafwiseForm { form, base_dim: w.base_dim })
}

/// Rename symbols of a total-space expression so that the fiber becomes
/// `y1..yf` and the base point becomes the parameters `x1..xb`, or back.
fn to_fiber(e: &Expr, b: usize) -> Expr {
    e.subst(&|s| match s {
        Symbol::Y(i) if (i as usize) < b => Some(Expr::x(i as usize)),
        Symbol::Y(i) => Some(Expr::y(i as usize - b)),
        _ => None,
    })
}

fn from_fiber(e: &Expr, b: usize) -> Expr {
    e.subst(&|s| match s {
        Symbol::X(i) => Some(Expr::y(i as usize)),
        Symbol::Y(i) => Some(Expr::y(i as usize + b)),
        _ => None,
    })
}

/// Primitive of a leafwise-closed form on every fiber over base set `α`,
/// one per base set: the homotopy operator of the fiber chart with the base
/// point as parameter.
pub fn fiber_primitives(w: &LeafwiseForm, bundle: &ProductBundle) -> Result<Vec<LeafwiseForm>, FoliationError> {
    let (b, f) = (bundle.base_dim(), bundle.fiber_dim);
    if w.form.dim() != bundle.dim() || w.base_dim != b {
        return Err(FoliationError::Config("form and bundle dimensions differ".into()));
    }
    if w.degree() == 0 {
        return Err(FoliationError::Config("leafwise primitives need a form of degree at least 1".into()));
    }
    if let Some(i) = w.form.terms().find_map(|(_, c)| (c.meta().x != 0).then(|| c.meta().x.trailing_zeros() as usize)) {
        return Err(FoliationError::Parameter(i + 1));
    }
    let fiber_terms = w.form.terms().map(|(idx, c)| (idx.iter().map(|i| i - b).collect::<Vec<_>>(), to_fiber(c, b)));
    let on_fiber = Form::from_terms(f, w.degree(), fiber_terms)?;
    let mut out = Vec::with_capacity(bundle.fiber_charts.len());
    for chart in &bundle.fiber_charts {
        let h = homotopy(&on_fiber, Some(chart))?;
        let terms = h.terms().map(|(idx, c)| (idx.iter().map(|i| i + b).collect::<Vec<_>>(), from_fiber(c, b)));
        out.push(LeafwiseForm { form: Form::from_terms(b + f, h.degree(), terms)?, base_dim: b });
    }
    Ok(out)
}

/// `τ = Σ_α ρ_α(y_base) τ^(α)`. Vectors enter `τ` through their fiber
/// components only, since `τ` carries no base differentials.
pub fn assemble_global(prims: &[LeafwiseForm], bundle: &ProductBundle) -> Result<LeafwiseForm, FoliationError> {
    if prims.len() != bundle.base.len() {
        return Err(FoliationError::Config("need one fiber primitive per base set".into()));
    }
    let rho = partition_of_unity(&bundle.base);
    let degree = prims.first().map(LeafwiseForm::degree).unwrap_or(0);
    let mut tau = Form::zero(bundle.dim(), degree);
    for (a, (p, r)) in prims.iter().zip(&rho).enumerate() {
        let guarded = bundle.base.guard_simplex(&[a], r.clone());
        tau = tau.add(&p.form.scale(&guarded))?;
    }
    Ok(LeafwiseForm { form: tau, base_dim: bundle.base_dim() })
}

/// Verification of an assembled leafwise primitive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafwiseReport {
    /// `|d_F w|` at the samples.
    pub closedness: Stat,
    /// `|d_F τ^(α) - d_F τ^(β)|` at samples over `U_α ∩ U_β`.
    pub consistency: Stat,
    /// `|i_b^*(dτ - w)|`.
    pub leafwise_defect: Stat,
    /// `|dτ - w|` including base differentials (informational).
    pub full_residual: Stat,
}

/// Points `(b, v)` with `b` from `base_points` and `v` from `fiber_points`.
pub fn sample_points(base_points: &[Vec<f64>], fiber_points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    base_points
        .iter()
        .flat_map(|b| fiber_points.iter().map(move |v| b.iter().chain(v).copied().collect()))
        .collect()
}

fn max_abs_over(w: &Form, points: &[Vec<f64>]) -> Result<Stat, FoliationError> {
    let tape = w.compile()?;
    let mut stat = Stat::default();
    for p in points {
        stat.push(tape.max_abs(&Point::new(p.clone(), vec![]))?);
    }
    Ok(stat)
}

/// Primitives, assembly and checks at `points` (total coordinates).
pub fn verify(
    w: &LeafwiseForm,
    prims: &[LeafwiseForm],
    tau: &LeafwiseForm,
    bundle: &ProductBundle,
    points: &[Vec<f64>],
) -> Result<LeafwiseReport, FoliationError> {
    let closedness = if w.degree() < w.fiber_dim() {
        max_abs_over(leafwise_d(w)?.form(), points)?
    } else {
        let mut zero = Stat::default();
        zero.extend(points.iter().map(|_| 0.0));
        zero
    };
    let b = bundle.base_dim();
    let in_base = |a: usize, p: &[f64]| bundle.base.contains(a, &p[..b]);
    let dprims: Vec<Form> = prims.iter().map(|p| Ok(ext_d_along(&p.form, b..bundle.dim())?)).collect::<Result<_, FoliationError>>()?;
    let mut consistency = Stat::default();
    for s in bundle.base.simplices(1) {
        let diff = dprims[s[0]].sub(&dprims[s[1]])?;
        let pts: Vec<Vec<f64>> = points.iter().filter(|p| in_base(s[0], p) && in_base(s[1], p)).cloned().collect();
        consistency.merge(&max_abs_over(&diff, &pts)?);
    }
    let d_tau = ext_d(&tau.form)?;
    let leaf = ext_d_along(&tau.form, b..bundle.dim())?.sub(&w.form)?;
    let leafwise_defect = max_abs_over(&leaf, points)?;
    let full_residual = max_abs_over(&d_tau.sub(&w.form)?, points)?;
    Ok(LeafwiseReport { closedness, consistency, leafwise_defect, full_residual })
}

/// Tolerances of [`solve`].
#[derive(Clone, Copy, Debug)]
pub struct FoliationTols {
    pub closed: f64,
    pub leafwise: f64,
}

/// Outcome of [`solve`].
#[derive(Clone, Debug)]
pub struct FoliationResult {
    pub primitives: Vec<LeafwiseForm>,
    pub tau: LeafwiseForm,
    pub report: LeafwiseReport,
}

/// Check closedness, build the fiber primitives, glue them and verify the
/// leafwise defect at `points`.
pub fn solve(
    w: &LeafwiseForm,
    bundle: &ProductBundle,
    points: &[Vec<f64>],
    tols: FoliationTols,
) -> Result<FoliationResult, FoliationError> {
    if w.degree() < w.fiber_dim() {
        let closed = max_abs_over(leafwise_d(w)?.form(), points)?;
        if !closed.within(tols.closed) {
            return Err(FoliationError::NotClosed(closed.max));
        }
    }
    let primitives = fiber_primitives(w, bundle)?;
    let tau = assemble_global(&primitives, bundle)?;
    let report = verify(w, &primitives, &tau, bundle, points)?;
    if !report.leafwise_defect.within(tols.leafwise) {
        return Err(FoliationError::Defect { max: report.leafwise_defect.max, tol: tols.leafwise });
    }
    Ok(FoliationResult { primitives, tau, report })
}
