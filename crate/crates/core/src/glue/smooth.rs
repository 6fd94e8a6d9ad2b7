use serde::Serialize;

use super::verify::Glued;
use super::{GlueError, Provider, Reconstruction};
use crate::cech::GoodCover;
use crate::expr::Point;

/// Below this size a first difference quotient is treated as zero and
/// never flagged.
const QUOTIENT_FLOOR: f64 = 1e-6;

/// Where and how to probe `x ↦ τ_x(e_I)(m)`: at each point `m`, around
/// each parameter centre, along each parameter axis, with steps
/// `h, h/2, …, h/2^levels`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeSpec {
    pub points: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
    pub h: f64,
    pub levels: usize,
}

impl ProbeSpec {
    pub fn steps(&self) -> Vec<f64> {
        (0..=self.levels).map(|l| self.h / f64::powi(2.0, l as i32)).collect()
    }

    /// Every parameter value the probe evaluates at.
    pub fn stencil(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut push = |x: Vec<f64>| {
            if !out.contains(&x) {
                out.push(x);
            }
        };
        for c in &self.centers {
            push(c.clone());
            for j in 0..c.len() {
                for h in self.steps() {
                    for s in [-1.0, 1.0] {
                        let mut x = c.clone();
                        x[j] += s * h;
                        push(x);
                    }
                }
            }
        }
        out
    }
}

/// Difference quotients of one coefficient along one parameter axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisProbe {
    pub point: Vec<f64>,
    pub center: Vec<f64>,
    /// 1-based parameter index.
    pub axis: usize,
    /// 1-based multi-index of the probed coefficient.
    pub index: Vec<usize>,
    /// First central differences at each step.
    pub first: Vec<f64>,
    /// Second central differences at each step.
    pub second: Vec<f64>,
    /// `|first(finest)| / |first(coarsest)|`.
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub subject: String,
    pub jump_ratio: f64,
    pub max_ratio: f64,
    pub max_second: f64,
    pub flagged: bool,
    pub probes: Vec<AxisProbe>,
}

/// Probe a function `(y, x) ↦ coefficients` (in `indices` order).
pub fn smoothness_report(
    subject: &str,
    f: &dyn Fn(&[f64], &[f64]) -> Result<Vec<f64>, GlueError>,
    indices: &[Vec<usize>],
    spec: &ProbeSpec,
    jump_ratio: f64,
) -> Result<SmoothnessReport, GlueError> {
    if spec.levels < 1 || !(spec.h > 0.0) {
        return Err(GlueError::Config("probe needs a positive step and at least one halving (3 points per axis)".into()));
    }
    let steps = spec.steps();
    let mut probes = Vec::new();
    for m in &spec.points {
        for c in &spec.centers {
            let f0 = f(m, c)?;
            for j in 0..c.len() {
                let mut plus = Vec::new();
                let mut minus = Vec::new();
                for &h in &steps {
                    let mut xp = c.clone();
                    xp[j] += h;
                    let mut xm = c.clone();
                    xm[j] -= h;
                    plus.push(f(m, &xp)?);
                    minus.push(f(m, &xm)?);
                }
                for (i, idx) in indices.iter().enumerate() {
                    let first: Vec<f64> =
                        steps.iter().enumerate().map(|(l, h)| (plus[l][i] - minus[l][i]) / (2.0 * h)).collect();
                    let second: Vec<f64> = steps
                        .iter()
                        .enumerate()
                        .map(|(l, h)| (plus[l][i] - 2.0 * f0[i] + minus[l][i]) / (h * h))
                        .collect();
                    let (coarse, fine) = (first[0].abs(), first[first.len() - 1].abs());
                    let ratio = if fine <= QUOTIENT_FLOOR { 0.0 } else { fine / coarse.max(f64::MIN_POSITIVE) };
                    let flagged = !(ratio < jump_ratio);
                    probes.push(AxisProbe {
                        point: m.clone(),
                        center: c.clone(),
                        axis: j + 1,
                        index: idx.iter().map(|a| a + 1).collect(),
                        first,
                        second,
                        ratio,
                        flagged,
                    });
                }
            }
        }
    }
    let max_ratio = probes.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let max_second =
        probes.iter().flat_map(|p| p.second.iter().map(|v| v.abs())).fold(0.0, |a: f64, b| if b.is_nan() { b } else { a.max(b) });
    let flagged = probes.iter().any(|p| p.flagged);
    Ok(SmoothnessReport { subject: subject.into(), jump_ratio, max_ratio, max_second, flagged, probes })
}

/// Probe the glued output of a reconstruction.
pub fn probe_reconstruction(
    rec: &Reconstruction,
    cover: &GoodCover,
    spec: &ProbeSpec,
    jump_ratio: f64,
) -> Result<SmoothnessReport, GlueError> {
    let g: Glued = rec.glued(cover)?;
    let indices = g.indices.clone();
    smoothness_report(&rec.mode, &|y, x| g.eval(y, x), &indices, spec, jump_ratio)
}

/// Probe a reference primitive.
pub fn probe_provider(provider: &Provider, spec: &ProbeSpec, jump_ratio: f64) -> Result<SmoothnessReport, GlueError> {
    let form = provider.form();
    let dim = form.dim();
    let indices = crate::cech::multi_indices(dim, form.degree());
    let exprs: Vec<_> = indices.iter().map(|i| form.coeff(i)).collect();
    let tape = crate::expr::Compiled::new(&exprs)?;
    smoothness_report("provider", &|y, x| Ok(tape.eval(&Point::new(y.to_vec(), x.to_vec()))?), &indices, spec, jump_ratio)
}
