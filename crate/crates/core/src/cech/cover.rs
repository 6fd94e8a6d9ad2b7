use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::OnceLock;

use rand::Rng;
use serde::Serialize;

use super::CechError;
use crate::expr::{Compiled, Expr, Point};
use crate::exterior::SmoothMap;

/// Fewest extra sample points a nerve simplex must declare.
pub const MIN_SAMPLES: usize = 8;
/// Chart round-trip tolerance used by validation.
pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// Largest bump value tolerated outside its set.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct CoverSet {
    pub name: String,
    /// `U` is where every predicate is positive.
    pub membership: Vec<Expr>,
    pub chart: SmoothMap,
    pub bump: Expr,
}

/// Declared data of a nerve simplex.
#[derive(Clone, Debug, Default)]
pub struct SimplexInfo {
    pub witness: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    /// Chart of the intersection onto `R^d` (needed by the zig-zag).
    pub chart: Option<SmoothMap>,
}

/// A finite cover with a declared nerve. Simplices are sorted tuples of
/// 0-based set indices; vertices are 1-tuples.
#[derive(Debug)]
pub struct GoodCover {
    pub dim: usize,
    /// Predicates of the ambient region `M` (all positive).
    pub region: Vec<Expr>,
    /// Points of `M` used for partition checks.
    pub region_samples: Vec<Vec<f64>>,
    pub sets: Vec<CoverSet>,
    pub nerve: BTreeMap<Vec<usize>, SimplexInfo>,
    members: OnceLock<Vec<Compiled>>,
}

impl Clone for GoodCover {
    fn clone(&self) -> Self {
        GoodCover::new(self.dim, self.region.clone(), self.region_samples.clone(), self.sets.clone(), self.nerve.clone())
    }
}

/// `body` where every predicate is positive, zero elsewhere.
pub fn guard_all(conds: &[Expr], body: Expr) -> Expr {
    conds.iter().rev().fold(body, |b, c| Expr::guard(c.clone(), b))
}

impl GoodCover {
    pub fn new(
        dim: usize,
        region: Vec<Expr>,
        region_samples: Vec<Vec<f64>>,
        sets: Vec<CoverSet>,
        nerve: BTreeMap<Vec<usize>, SimplexInfo>,
    ) -> GoodCover {
        GoodCover { dim, region, region_samples, sets, nerve, members: OnceLock::new() }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Declared simplices of dimension `p` (tuples of length `p + 1`).
    pub fn simplices(&self, p: usize) -> impl Iterator<Item = &Vec<usize>> {
        self.nerve.keys().filter(move |s| s.len() == p + 1)
    }

    pub fn has_simplex(&self, s: &[usize]) -> bool {
        self.nerve.contains_key(s)
    }

    /// Highest simplex dimension in the nerve.
    pub fn nerve_dim(&self) -> usize {
        self.nerve.keys().map(|s| s.len().saturating_sub(1)).max().unwrap_or(0)
    }

    fn compiled_members(&self) -> &[Compiled] {
        self.members.get_or_init(|| {
            self.sets
                .iter()
                .map(|s| Compiled::new(&s.membership).expect("membership predicates compile"))
                .collect()
        })
    }

    /// Whether `y` lies in `U_α` (predicates that fail to evaluate count as
    /// outside).
    pub fn contains(&self, alpha: usize, y: &[f64]) -> bool {
        let c = &self.compiled_members()[alpha];
        match c.eval(&Point::new(y.to_vec(), vec![])) {
            Ok(v) => v.iter().all(|&m| m > 0.0),
            Err(_) => false,
        }
    }

    pub fn in_simplex(&self, s: &[usize], y: &[f64]) -> bool {
        s.iter().all(|&a| self.contains(a, y))
    }

    /// Smallest index whose set contains `y`.
    pub fn first_containing(&self, y: &[f64]) -> Option<usize> {
        (0..self.sets.len()).find(|&a| self.contains(a, y))
    }

    /// Chart of a simplex: the set chart for vertices, the declared
    /// intersection chart otherwise.
    pub fn simplex_chart(&self, s: &[usize]) -> Option<&SmoothMap> {
        if s.len() == 1 {
            return Some(&self.sets[s[0]].chart);
        }
        self.nerve.get(s).and_then(|i| i.chart.as_ref())
    }

    /// [`simplex_chart`](Self::simplex_chart) with its forward components
    /// set to zero outside `U_s`. Homotopy integrals evaluated at points
    /// outside the set then follow the constant path at the chart centre
    /// instead of whatever the chart formula does out there.
    pub fn homotopy_chart(&self, s: &[usize]) -> Option<SmoothMap> {
        let chart = self.simplex_chart(s)?;
        if chart.is_identity() || s.iter().all(|&a| self.sets[a].membership.is_empty()) {
            return Some(chart.clone());
        }
        let fwd = chart.components.iter().map(|c| self.guard_simplex(s, c.clone())).collect();
        let guarded = SmoothMap::new(chart.src_dim, fwd);
        Some(match chart.inverse() {
            Some(inv) => guarded.with_inverse(inv.clone()),
            None => guarded,
        })
    }

    /// Witness followed by the extra samples of a simplex.
    pub fn simplex_points(&self, s: &[usize]) -> Vec<Vec<f64>> {
        match self.nerve.get(s) {
            Some(info) => std::iter::once(info.witness.clone()).chain(info.samples.iter().cloned()).collect(),
            None => Vec::new(),
        }
    }

    /// Guard `body` by the membership predicates of every set in `s`.
    pub fn guard_simplex(&self, s: &[usize], body: Expr) -> Expr {
        let conds: Vec<Expr> = s.iter().flat_map(|&a| self.sets[a].membership.iter().cloned()).collect();
        guard_all(&conds, body)
    }

    /// Connected components of the overlap graph (vertices and edges of the
    /// nerve), each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.sets.len();
        let mut adj = vec![BTreeSet::new(); n];
        for e in self.simplices(1) {
            adj[e[0]].insert(e[1]);
            adj[e[1]].insert(e[0]);
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(a) = queue.pop_front() {
                comp.push(a);
                for &b in &adj[a] {
                    if !seen[b] {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }
}

/// Rejection-sample `n` points of `U_s` from the box `[lo, hi]`.
pub fn sample_simplex<R: Rng>(
    cover: &GoodCover,
    s: &[usize],
    lo: &[f64],
    hi: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, CechError> {
    let mut out = Vec::with_capacity(n);
    let budget = 200_000usize.max(n * 2000);
    for _ in 0..budget {
        if out.len() == n {
            break;
        }
        let y: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
        if cover.in_simplex(s, &y) {
            out.push(y);
        }
    }
    if out.len() < n {
        return Err(CechError::Sampling(s.to_vec()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: String,
    pub location: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub points_checked: usize,
    pub violations: Vec<Violation>,
}

pub(crate) fn label(s: &[usize]) -> String {
    let names: Vec<String> = s.iter().map(|a| (a + 1).to_string()).collect();
    format!("({})", names.join(","))
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, kind: &str, location: String, point: Option<&[f64]>, value: Option<f64>) {
        self.0.push(Violation { kind: kind.into(), location, point: point.map(<[f64]>::to_vec), value });
    }
}

/// Check the cover by sampling: nerve closure and sample counts, witness and
/// sample membership, bump sign, support and positivity of the sum, and
/// chart round trips.
pub fn validate_cover(c: &GoodCover) -> ValidationReport {
    let mut v = Collector(Vec::new());
    let mut points = 0usize;

    for (s, info) in &c.nerve {
        if s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&a| a >= c.sets.len()) {
            v.push("nerve-index", label(s), None, None);
            continue;
        }
        if s.len() > 1 {
            for i in 0..s.len() {
                let mut face = s.clone();
                face.remove(i);
                if !c.nerve.contains_key(&face) {
                    v.push("nerve-closure", format!("{} missing face {}", label(s), label(&face)), None, None);
                }
            }
        }
        if info.samples.len() < MIN_SAMPLES {
            v.push("sample-count", label(s), None, Some(info.samples.len() as f64));
        }
        for (i, y) in std::iter::once(&info.witness).chain(&info.samples).enumerate() {
            points += 1;
            if y.len() != c.dim {
                v.push("point-dimension", label(s), Some(y), None);
            } else if !c.in_simplex(s, y) {
                let kind = if i == 0 { "nerve-witness" } else { "nerve-sample" };
                v.push(kind, label(s), Some(y), None);
            }
        }
    }
    for a in 0..c.sets.len() {
        if !c.nerve.contains_key(&vec![a]) {
            v.push("nerve-closure", format!("vertex {} undeclared", label(&[a])), None, None);
        }
    }

    // bumps: sign and support everywhere sampled, positive sum on M
    let bumps: Vec<Expr> = c.sets.iter().map(|s| s.bump.clone()).collect();
    let tape = Compiled::new(&bumps).expect("bumps compile");
    let mut all_points: Vec<(&Vec<f64>, bool)> = c.region_samples.iter().map(|y| (y, true)).collect();
    for info in c.nerve.values() {
        all_points.push((&info.witness, false));
        all_points.extend(info.samples.iter().map(|y| (y, false)));
    }
    for (y, in_region) in all_points {
        if y.len() != c.dim {
            continue;
        }
        points += 1;
        let vals = match tape.eval(&Point::new(y.clone(), vec![])) {
            Ok(vals) => vals,
            Err(e) => {
                v.push("bump-evaluation", e.to_string(), Some(y), None);
                continue;
            }
        };
        for (a, &psi) in vals.iter().enumerate() {
            if psi < 0.0 {
                v.push("bump-negative", c.sets[a].name.clone(), Some(y), Some(psi));
            }
            if psi.abs() > SUPPORT_TOL && !c.contains(a, y) {
                v.push("bump-support", c.sets[a].name.clone(), Some(y), Some(psi));
            }
        }
        if in_region && vals.iter().sum::<f64>() <= 0.0 {
            v.push("bump-sum", "M".into(), Some(y), Some(vals.iter().sum()));
        }
    }

    // chart round trips at the points of each simplex that carries a chart
    for (s, info) in &c.nerve {
        let Some(chart) = c.simplex_chart(s) else { continue };
        if chart.inverse().is_none() {
            v.push("chart-inverse", label(s), None, None);
            continue;
        }
        for y in std::iter::once(&info.witness).chain(&info.samples) {
            if y.len() != c.dim {
                continue;
            }
            match chart.round_trip_error(y, &[]) {
                Ok(err) if err <= ROUND_TRIP_TOL => {}
                Ok(err) => v.push("chart-round-trip", label(s), Some(y), Some(err)),
                Err(e) => v.push("chart-evaluation", format!("{} {e}", label(s)), Some(y), None),
            }
        }
    }

    ValidationReport { passed: v.0.is_empty(), points_checked: points, violations: v.0 }
}

/// User-declared data of a nerve simplex before sampling fills the gaps.
#[derive(Clone, Debug, Default)]
pub struct DeclaredSimplex {
    pub witness: Option<Vec<f64>>,
    pub samples: Option<Vec<Vec<f64>>>,
    pub chart: Option<SmoothMap>,
}

/// Assemble a cover. Every set becomes a vertex of the nerve; missing
/// witnesses and samples are drawn by rejection sampling in `[lo, hi]`
/// (the witness defaults to the chart preimage of the origin when a chart
/// is declared, else to the first sample).
pub fn assemble_cover<R: Rng>(
    dim: usize,
    region: Vec<Expr>,
    region_samples: Vec<Vec<f64>>,
    sets: Vec<CoverSet>,
    declared: Vec<(Vec<usize>, DeclaredSimplex)>,
    (lo, hi): (&[f64], &[f64]),
    n_samples: usize,
    rng: &mut R,
) -> Result<GoodCover, CechError> {
    let mut all: BTreeMap<Vec<usize>, DeclaredSimplex> = BTreeMap::new();
    for a in 0..sets.len() {
        all.insert(vec![a], DeclaredSimplex::default());
    }
    for (mut s, d) in declared {
        s.sort();
        all.insert(s, d);
    }
    let mut cover = GoodCover::new(dim, region, region_samples, sets, BTreeMap::new());
    let mut nerve = BTreeMap::new();
    for (s, d) in all {
        if s.iter().any(|&a| a >= cover.len()) || s.windows(2).any(|w| w[0] == w[1]) {
            return Err(CechError::BadSimplex(s));
        }
        let chart = if s.len() == 1 { None } else { d.chart };
        let chart_ref = if s.len() == 1 { Some(&cover.sets[s[0]].chart) } else { chart.as_ref() };
        let origin_preimage = chart_ref
            .and_then(|c| c.inverse())
            .and_then(|inv| inv.apply(&vec![0.0; dim], &[]).ok())
            .filter(|y| cover.in_simplex(&s, y));
        let samples = match d.samples {
            Some(v) => v,
            None => sample_simplex(&cover, &s, lo, hi, n_samples, rng)?,
        };
        let witness = d.witness.or(origin_preimage).or_else(|| samples.first().cloned()).unwrap_or_default();
        nerve.insert(s, SimplexInfo { witness, samples, chart });
    }
    cover.nerve = nerve;
    Ok(cover)
}

/// Rejection-sample `n` points of the region `M` from `[lo, hi]`.
pub fn sample_region<R: Rng>(region: &[Expr], lo: &[f64], hi: &[f64], n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let tape = Compiled::new(region).expect("region predicates compile");
    let mut out = Vec::with_capacity(n);
    for _ in 0..n.saturating_mul(1000).max(1000) {
        if out.len() == n {
            break;
        }
        let y: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
        if tape.eval(&Point::new(y.clone(), vec![])).map(|v| v.iter().all(|&m| m > 0.0)).unwrap_or(false) {
            out.push(y);
        }
    }
    out
}
