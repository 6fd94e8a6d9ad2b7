//! Adaptive Gauss–Legendre quadrature with 15-point panels.

use std::sync::LazyLock;

/// Absolute target for an outermost time integral.
pub const TOLERANCE: f64 = 1e-12;
/// Tolerance factor per level of nesting. An inner integral is only
/// piecewise smooth in the outer time (its panel layout changes with it),
/// so it has to be resolved well below the outer tolerance.
pub const NESTING: f64 = 1e-2;
/// Most bisections spent on one integral before giving up.
pub const MAX_SUBDIVISIONS: usize = 100;
/// Deepest bisection level.
const MAX_DEPTH: u32 = 48;
/// Fraction of the tolerance treated as evaluation noise.
const NOISE: f64 = 1e-6;

const ORDER: usize = 15;

/// Nodes and weights on `[-1, 1]`.
static RULE: LazyLock<[(f64, f64); ORDER]> = LazyLock::new(|| {
    let n = ORDER;
    let mut rule = [(0.0, 0.0); ORDER];
    for (i, slot) in rule.iter_mut().enumerate() {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    rule
});

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("quadrature did not converge (estimated error {0:e})")]
    NotConverged(f64),
    #[error("non-finite integrand")]
    NonFinite,
}

/// One panel: integral estimates and integrals of `|f|`, per component.
fn panel(f: &mut dyn FnMut(f64, &mut [f64]), buf: &mut [f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let n = buf.len();
    let (mut s, mut abs) = (vec![0.0; n], vec![0.0; n]);
    for &(x, w) in RULE.iter() {
        f(mid + half * x, buf);
        for i in 0..n {
            s[i] += w * buf[i];
            abs[i] += w * buf[i].abs();
        }
    }
    for i in 0..n {
        s[i] *= half;
        abs[i] *= half;
    }
    (s, abs)
}

/// Fixed 15-point rule on `[a, b]`.
pub fn gauss_legendre(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    panel(&mut |t, out: &mut [f64]| out[0] = f(t), &mut [0.0], a, b).0[0]
}

/// Adaptive bisection: a panel is accepted once its two halves agree with
/// it to the local tolerance. The acceptance threshold never drops below
/// the rounding floor of the panel sum. Once the budget or the depth is
/// exhausted, an estimate below `NOISE * tol` is still accepted: such
/// residue comes from evaluation noise that bisection cannot remove.
pub fn adaptive(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_subdivisions: usize,
) -> Result<f64, QuadError> {
    let mut g = |t: f64, out: &mut [f64]| out[0] = f(t);
    adaptive_many(&mut g, 1, a, b, tol, max_subdivisions).remove(0)
}

/// [`adaptive`] for `n` integrands sharing their nodes: `f(t, out)` fills
/// all `n` values. Each component keeps its own acceptance test and
/// subdivision budget, so the results equal `n` separate scalar runs.
pub fn adaptive_many(
    f: &mut dyn FnMut(f64, &mut [f64]),
    n: usize,
    a: f64,
    b: f64,
    tol: f64,
    max_subdivisions: usize,
) -> Vec<Result<f64, QuadError>> {
    let mut buf = vec![0.0; n];
    let whole = panel(f, &mut buf, a, b);
    let mut out = vec![Ok(0.0); n];
    let mut active = Vec::with_capacity(n);
    for i in 0..n {
        if whole.0[i].is_finite() {
            active.push(i);
        } else {
            out[i] = Err(QuadError::NonFinite);
        }
    }
    let mut budget = vec![max_subdivisions; n];
    let mut run = Run { f, buf: &mut buf, budget: &mut budget, out: &mut out, noise: NOISE * tol };
    run.refine(a, b, &whole.0, tol, 0, &active);
    out
}

struct Run<'a> {
    f: &'a mut dyn FnMut(f64, &mut [f64]),
    buf: &'a mut [f64],
    budget: &'a mut [usize],
    noise: f64,
    out: &'a mut [Result<f64, QuadError>],
}

impl Run<'_> {
    fn refine(&mut self, a: f64, b: f64, whole: &[f64], tol: f64, depth: u32, active: &[usize]) {
        let m = 0.5 * (a + b);
        let left = panel(self.f, self.buf, a, m);
        let right = panel(self.f, self.buf, m, b);
        let mut deeper = Vec::new();
        for &i in active {
            let sum = left.0[i] + right.0[i];
            if !sum.is_finite() {
                self.out[i] = Err(QuadError::NonFinite);
                continue;
            }
            let err = (sum - whole[i]).abs();
            let floor = 64.0 * f64::EPSILON * (left.1[i] + right.1[i]);
            let stuck = self.budget[i] == 0 || depth == MAX_DEPTH;
            if err <= tol.max(floor) || (stuck && err <= self.noise) {
                if let Ok(v) = &mut self.out[i] {
                    *v += sum;
                }
            } else if stuck {
                self.out[i] = Err(QuadError::NotConverged(err));
            } else {
                self.budget[i] -= 1;
                deeper.push(i);
            }
        }
        if deeper.is_empty() {
            return;
        }
        self.refine(a, m, &left.0, 0.5 * tol, depth + 1, &deeper);
        deeper.retain(|&i| self.out[i].is_ok());
        if !deeper.is_empty() {
            self.refine(m, b, &right.0, 0.5 * tol, depth + 1, &deeper);
        }
    }
}

/// Integral over `[0, 1]` with the crate-wide tolerance.
pub fn unit_interval(f: &mut dyn FnMut(f64) -> f64) -> Result<f64, QuadError> {
    adaptive(f, 0.0, 1.0, TOLERANCE, MAX_SUBDIVISIONS)
}

/// `n` integrals over `[0, 1]` evaluated together, nested inside `depth`
/// other integrals.
pub fn unit_interval_many(f: &mut dyn FnMut(f64, &mut [f64]), n: usize, depth: usize) -> Vec<Result<f64, QuadError>> {
    let tol = TOLERANCE * NESTING.powi(depth as i32);
    adaptive_many(f, n, 0.0, 1.0, tol, MAX_SUBDIVISIONS)
}
