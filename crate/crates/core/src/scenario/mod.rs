//! Scenario files in, JSON reports out.
//!
//! A run validates the cover, runs the pipeline of the scenario's mode and
//! collects diagnostics. Exit codes: 0 when every asserted check passes,
//! 2 when the family is closed but not exact, 1 otherwise.

mod build;
mod schema;
mod selfcheck;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use schema::*;
pub use selfcheck::{default_fixtures, self_check, self_check_with, Fixture, SelfCheckReport};

use crate::cech::{validate_cover, GoodCover, ValidationReport};
use crate::foliation::{self, FoliationError, LeafwiseForm, LeafwiseReport, ProductBundle};
use crate::glue::{
    oracle_spread, probe_provider, probe_reconstruction, reconstruct_deg1, reconstruct_paper_direct, reconstruct_zigzag,
    region_grid, Check, Deg1Mode, FamilySpec, GlueError, Grid, ProbeSpec, Provider, Reconstruction, SmoothnessReport, Tolerances,
};
use crate::stats::Stat;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Config(String),
    #[error("cover failed validation with {0} violations")]
    Validation(usize),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Glue(#[from] GlueError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
}

impl ScenarioError {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioError::Config(_) | ScenarioError::Io { .. } => "config",
            ScenarioError::Validation(_) => "validation",
            ScenarioError::Glue(e) => match e {
                GlueError::NotExact { .. } => "not_exact",
                GlueError::NotConstant { .. } => "not_constant",
                GlueError::NotClosed(_) => "not_closed",
                GlueError::ProviderResidual(_) => "provider_residual",
                GlueError::Config(_) | GlueError::MissingChart(_) => "config",
                GlueError::Cech(_) | GlueError::Exterior(_) | GlueError::Expr(_) => "numerical",
            },
            ScenarioError::Foliation(e) => match e {
                FoliationError::NotLeafwise(_) | FoliationError::Parameter(_) | FoliationError::Config(_) => "config",
                FoliationError::NotClosed(_) => "not_closed",
                FoliationError::Defect { .. } => "leafwise_defect",
                _ => "numerical",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.kind() == "not_exact" {
            2
        } else {
            1
        }
    }
}

/// Read and parse a scenario file.
pub fn load(path: &std::path::Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Config(format!("scenario: {e}")))
}

/// SHA-256 of the scenario re-serialized with fixed field order.
pub fn digest(s: &Scenario) -> String {
    let canonical = serde_json::to_vec(s).expect("scenarios serialize");
    hex::encode(Sha256::digest(canonical))
}

/// Command-line adjustments applied on top of the scenario file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerances: Vec<(String, f64)>,
    pub timings: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorObject {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Monodromy {
    pub defect: f64,
    /// Edge closing the worst cycle, when the family is not exact.
    pub location: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessEntry {
    /// Whether a flag fails the run. The provider and paper-mode outputs are
    /// only recorded.
    pub asserted: bool,
    pub tolerance: String,
    #[serde(flatten)]
    pub report: SmoothnessReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub scenario: String,
    pub digest: String,
    pub mode: Mode,
    pub seed: u64,
    pub overrides: BTreeMap<String, f64>,
    pub tolerances: Option<Tolerances>,
    pub status: String,
    pub exit_code: i32,
    pub validation: Option<ValidationReport>,
    pub checks: Vec<Check>,
    pub residual: Option<Stat>,
    pub monodromy: Option<Monodromy>,
    pub smoothness: Vec<SmoothnessEntry>,
    pub step_free: Option<bool>,
    pub foliation: Option<LeafwiseReport>,
    pub error: Option<ErrorObject>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

impl Report {
    fn new(command: &str, s: &Scenario, ov: &Overrides) -> Report {
        let mut overrides: BTreeMap<String, f64> = ov.tolerances.iter().cloned().collect();
        if let Some(seed) = ov.seed {
            overrides.insert("seed".into(), seed as f64);
        }
        Report {
            command: command.into(),
            scenario: s.name.clone(),
            digest: digest(s),
            mode: s.mode,
            seed: ov.seed.unwrap_or(s.seed),
            overrides,
            tolerances: None,
            status: "pass".into(),
            exit_code: 0,
            validation: None,
            checks: Vec::new(),
            residual: None,
            monodromy: None,
            smoothness: Vec::new(),
            step_free: None,
            foliation: None,
            error: None,
            timings: ov.timings.then(Vec::new),
        }
    }

    /// Whether every asserted comparison passed.
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.validation.as_ref().is_none_or(|v| v.passed)
            && self.checks.iter().all(|c| c.passed)
            && self.smoothness.iter().all(|s| !s.asserted || !s.report.flagged)
            && (!matches!(self.mode, Mode::Deg1Chain | Mode::Zigzag) || self.step_free != Some(false))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn settle(&mut self) {
        let ok = self.passed();
        self.status = if ok { "pass" } else { "fail" }.into();
        self.exit_code = if ok { 0 } else { 1 };
    }

    fn fail(&mut self, e: ScenarioError) {
        if let ScenarioError::Glue(GlueError::NotExact { defect, location }) = &e {
            self.monodromy = Some(Monodromy { defect: *defect, location: Some(location.clone()) });
        }
        self.status = match e.kind() {
            "not_exact" => "not_exact",
            "config" | "validation" => "invalid",
            _ => "fail",
        }
        .into();
        self.exit_code = e.exit_code();
        self.error = Some(ErrorObject { kind: e.kind().into(), message: e.to_string() });
    }
}

struct Clock {
    last: Instant,
}

impl Clock {
    fn lap(&mut self, r: &mut Report, stage: &str) {
        let now = Instant::now();
        if let Some(t) = r.timings.as_mut() {
            t.push(Timing { stage: stage.into(), seconds: (now - self.last).as_secs_f64() });
        }
        self.last = now;
    }
}

fn tolerances(s: &Scenario, ov: &Overrides) -> Result<Tolerances, ScenarioError> {
    let degree = match s.mode {
        Mode::Foliation => s.bundle.as_ref().map_or(1, |b| b.degree),
        _ => s.family.as_ref().map_or(1, |f| f.degree),
    };
    let mut t = Tolerances::for_degree(degree);
    for (k, v) in s.tolerances.iter().map(|(k, v)| (k.as_str(), *v)).chain(ov.tolerances.iter().map(|(k, v)| (k.as_str(), *v))) {
        t.set(k, v).map_err(|e| ScenarioError::Config(e.to_string()))?;
    }
    Ok(t)
}

fn required<'a, T>(block: &'a Option<T>, name: &str, mode: Mode) -> Result<&'a T, ScenarioError> {
    block.as_ref().ok_or_else(|| ScenarioError::Config(format!("mode {} needs a {name} block", mode.name())))
}

/// Mode-required blocks and mode-specific restrictions.
fn check_blocks(s: &Scenario) -> Result<(), ScenarioError> {
    required(&s.cover, "cover", s.mode)?;
    match s.mode {
        Mode::Foliation => {
            required(&s.bundle, "bundle", s.mode)?;
        }
        _ => {
            let fam = required(&s.family, "family", s.mode)?;
            if s.mode.needs_provider() {
                required(&s.provider, "provider", s.mode)?;
            }
            let deg1 = matches!(s.mode, Mode::Deg1Chain | Mode::Deg1Paper);
            if deg1 != (fam.degree == 1) {
                return Err(ScenarioError::Config(format!(
                    "mode {} does not take a family of degree {}",
                    s.mode.name(),
                    fam.degree
                )));
            }
            if s.oracle.is_some() && fam.degree != 1 {
                return Err(ScenarioError::Config("an oracle primitive needs a family of degree 1".into()));
            }
        }
    }
    Ok(())
}

/// Parse, validate the cover and stop: the `validate` command.
pub fn validate(s: &Scenario, ov: &Overrides) -> Report {
    let mut r = Report::new("validate", s, ov);
    let outcome = (|| {
        let p = prepare(s, ov)?;
        r.tolerances = Some(p.tolerances);
        r.validation = Some(validate_cover(&p.cover));
        Ok(())
    })();
    match outcome {
        Ok(()) => r.settle(),
        Err(e) => r.fail(e),
    }
    r
}

/// Run a scenario end to end.
pub fn run(s: &Scenario, ov: &Overrides) -> Report {
    let mut r = Report::new("run", s, ov);
    let mut clock = Clock { last: Instant::now() };
    match execute(s, ov, &mut r, &mut clock) {
        Ok(()) => r.settle(),
        Err(e) => r.fail(e),
    }
    r
}

/// The objects a scenario describes, before any pipeline runs.
pub struct Prepared {
    pub cover: GoodCover,
    /// Verification points: the scenario grid clipped to the region.
    pub ys: Vec<Vec<f64>>,
    pub tolerances: Tolerances,
    pub family: Option<FamilySpec>,
    pub provider: Option<Provider>,
    pub probe: Option<ProbeSpec>,
}

/// Check the blocks and build cover, grids, family and provider, sampling
/// with `seed`.
pub fn prepare(s: &Scenario, ov: &Overrides) -> Result<Prepared, ScenarioError> {
    check_blocks(s)?;
    let tolerances = tolerances(s, ov)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ov.seed.unwrap_or(s.seed));
    let cover = build::cover(required(&s.cover, "cover", s.mode)?, &s.manifold, &mut rng)?;
    let default_grid = BoxGrid { lo: s.manifold.sample_box.lo.clone(), hi: s.manifold.sample_box.hi.clone(), n: 10 };
    let g = build::grid(s.grid.as_ref().unwrap_or(&default_grid), s.manifold.dim, "grid")?;
    let ys = region_grid(&cover, &g.lo, &g.hi, g.n)?;
    let family = s.family.as_ref().map(|f| build::family(f, s.manifold.dim)).transpose()?;
    let provider = match (&s.provider, &family) {
        (Some(p), Some(fam)) => Some(build::provider(p, fam)?),
        (Some(_), None) => return Err(ScenarioError::Config("a provider needs a family block".into())),
        _ => None,
    };
    let params = family.as_ref().map_or(0, |f| f.params);
    let probe = s
        .probe
        .as_ref()
        .map(|p| {
            if p.centers.iter().any(|c| c.len() != params) || p.points.iter().any(|y| y.len() != s.manifold.dim) {
                return Err(ScenarioError::Config("probe points or centres have the wrong length".into()));
            }
            if !(p.h > 0.0) || p.levels == 0 {
                return Err(ScenarioError::Config("probe needs a positive step and at least one level".into()));
            }
            Ok(ProbeSpec { points: p.points.clone(), centers: p.centers.clone(), h: p.h, levels: p.levels })
        })
        .transpose()?;
    Ok(Prepared { cover, ys, tolerances, family, provider, probe })
}

fn execute(s: &Scenario, ov: &Overrides, r: &mut Report, clock: &mut Clock) -> Result<(), ScenarioError> {
    let Prepared { cover, ys, tolerances: tols, family, provider, probe } = prepare(s, ov)?;
    r.tolerances = Some(tols);
    clock.lap(r, "setup");

    let validation = validate_cover(&cover);
    let violations = validation.violations.len();
    r.validation = Some(validation);
    clock.lap(r, "validate");
    if violations > 0 {
        return Err(ScenarioError::Validation(violations));
    }

    if s.mode == Mode::Foliation {
        return run_foliation(s, cover, &ys, &tols, r, clock);
    }

    let fam = family.ok_or_else(|| ScenarioError::Config("missing family".into()))?;
    let oracle = s.oracle.as_ref().map(|o| build::expr(&o.primitive, fam.dim(), fam.params, "oracle")).transpose()?;

    let missing = || ScenarioError::Config(format!("mode {} needs a provider block", s.mode.name()));
    let rec: Reconstruction = match s.mode {
        Mode::Deg1Chain => reconstruct_deg1(&fam, &cover, Deg1Mode::Chain, &ys, &tols)?,
        Mode::Deg1Paper => reconstruct_deg1(&fam, &cover, Deg1Mode::Paper(provider.as_ref().ok_or_else(missing)?), &ys, &tols)?,
        Mode::PaperDirect => {
            let extra = probe.as_ref().map(ProbeSpec::stencil).unwrap_or_default();
            reconstruct_paper_direct(&fam, &cover, provider.as_ref().ok_or_else(missing)?, &ys, &extra, &tols)?
        }
        Mode::Zigzag => reconstruct_zigzag(&fam, &cover, &ys, &tols)?,
        Mode::Foliation => unreachable!("handled above"),
    };
    clock.lap(r, "pipeline");

    r.checks = rec.checks.clone();
    r.residual = rec.check("residual").map(|c| Stat { max: c.max, mean: c.mean, count: c.count });
    r.monodromy = rec.defect.map(|defect| Monodromy { defect, location: None });
    r.step_free = Some(!rec.output.has_step());
    if let Some(o) = &oracle {
        let xs = rec.output.params().unwrap_or_else(|| fam.param_grid.points());
        let stat = oracle_spread(&rec.output, o, &cover, &ys, &xs)?;
        r.checks.push(Check::new("oracle", stat, "oracle", tols.oracle));
    }
    if let Some(spec) = &probe {
        let asserted = matches!(s.mode, Mode::Deg1Chain | Mode::Zigzag);
        let report = probe_reconstruction(&rec, &cover, spec, tols.jump_ratio)?;
        r.smoothness.push(SmoothnessEntry { asserted, tolerance: "jump_ratio".into(), report });
        if let Some(p) = &provider {
            let report = probe_provider(p, spec, tols.jump_ratio)?;
            r.smoothness.push(SmoothnessEntry { asserted: false, tolerance: "jump_ratio".into(), report });
        }
    }
    clock.lap(r, "diagnostics");
    Ok(())
}

fn run_foliation(
    s: &Scenario,
    base: GoodCover,
    base_points: &[Vec<f64>],
    tols: &Tolerances,
    r: &mut Report,
    clock: &mut Clock,
) -> Result<(), ScenarioError> {
    let b = required(&s.bundle, "bundle", s.mode)?;
    let total = s.manifold.dim + b.fiber_dim;
    if b.fiber_dim == 0 || b.degree == 0 || b.degree > b.fiber_dim {
        return Err(ScenarioError::Config("bundle degree must lie in 1..=fiber_dim".into()));
    }
    let w = LeafwiseForm::new(build::form(&b.form, total, b.degree, 0, "bundle form")?, s.manifold.dim)?;
    let mut bundle = ProductBundle::new(base, b.fiber_dim);
    if let Some(c) = &b.fiber_centers {
        bundle = bundle.with_fiber_centers(c)?;
    }
    let fiber: Grid = build::grid(&b.fiber_grid, b.fiber_dim, "fiber grid")?;
    let points = foliation::sample_points(base_points, &fiber.points());
    clock.lap(r, "setup-bundle");

    let prims = foliation::fiber_primitives(&w, &bundle)?;
    let tau = foliation::assemble_global(&prims, &bundle)?;
    clock.lap(r, "pipeline");
    let report = foliation::verify(&w, &prims, &tau, &bundle, &points)?;
    r.checks = vec![
        Check::new("closed", report.closedness, "closed", tols.closed),
        Check::new("consistency", report.consistency, "mismatch", tols.mismatch),
        Check::new("leafwise", report.leafwise_defect, "leafwise", tols.leafwise),
    ];
    r.residual = Some(report.leafwise_defect);
    r.step_free = Some(!tau.form().has_step());
    r.foliation = Some(report);
    clock.lap(r, "diagnostics");
    Ok(())
}
