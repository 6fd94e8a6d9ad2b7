use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::deg1::{local_primitives, local_residual, stat_of};
use super::verify::{common_checks, Check, CommonTols, Output, Reconstruction};
use super::{FamilySpec, GlueError, Tolerances};
use crate::cech::{coboundary, mv_homotopy_k, partition_of_unity, Cochain, GoodCover};
use crate::expr::{Compiled, Expr, Point};
use crate::exterior::{homotopy, Form};
use crate::stats::Stat;

fn label(s: &[usize]) -> String {
    let names: Vec<String> = s.iter().map(|a| (a + 1).to_string()).collect();
    format!("({})", names.join(","))
}

/// Minimal-norm solution operator of the coboundary `δ: C^q → C^{q+1}` on
/// real cochains, with `rows` the `(q+1)`-simplices and `cols` the
/// `q`-simplices of the nerve.
#[derive(Clone, Debug)]
pub struct LinearSolve {
    pub rows: Vec<Vec<usize>>,
    pub cols: Vec<Vec<usize>>,
    pub matrix: DMatrix<f64>,
    /// Moore–Penrose pseudo-inverse of `matrix`.
    pub pinv: DMatrix<f64>,
    pub rank: usize,
}

/// Build the coboundary matrix from Čech degree `q` and its pseudo-inverse
/// via the SVD.
pub fn min_norm_solve(cover: &GoodCover, q: usize) -> LinearSolve {
    let rows: Vec<Vec<usize>> = cover.simplices(q + 1).cloned().collect();
    let cols: Vec<Vec<usize>> = cover.simplices(q).cloned().collect();
    let col_of: BTreeMap<&Vec<usize>, usize> = cols.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut matrix = DMatrix::zeros(rows.len(), cols.len());
    for (r, s) in rows.iter().enumerate() {
        for i in 0..s.len() {
            let mut face = s.clone();
            face.remove(i);
            if let Some(&c) = col_of.get(&face) {
                matrix[(r, c)] += if i % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
    }
    if rows.is_empty() || cols.is_empty() {
        let pinv = DMatrix::zeros(cols.len(), rows.len());
        return LinearSolve { rows, cols, matrix, pinv, rank: 0 };
    }
    let svd = matrix.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    let rank = svd.rank(eps);
    let pinv = svd.pseudo_inverse(eps).expect("both factors were computed");
    LinearSolve { rows, cols, matrix, pinv, rank }
}

impl LinearSolve {
    /// `c = A⁺ z` and the residual `A c - z`, as linear combinations of the
    /// right-hand side.
    pub fn apply(&self, z: &[Expr]) -> (Vec<Expr>, Vec<Expr>) {
        let combine = |m: &DMatrix<f64>, i: usize| {
            Expr::sum((0..z.len()).filter(|&j| m[(i, j)].abs() > 1e-15).map(|j| m[(i, j)] * &z[j]))
        };
        let c = (0..self.cols.len()).map(|i| combine(&self.pinv, i)).collect();
        let proj = &self.matrix * &self.pinv - DMatrix::identity(self.rows.len(), self.rows.len());
        let r = (0..self.rows.len()).map(|i| combine(&proj, i)).collect();
        (c, r)
    }
}

/// Per-simplex homotopy of every component, with the simplex charts.
fn homotopy_cochain(c: &Cochain, cover: &GoodCover) -> Result<Cochain, GlueError> {
    let mut out = Cochain::new(c.dim, c.cech_degree, c.form_degree - 1);
    for (s, w) in c.components() {
        let chart = cover.homotopy_chart(s).ok_or_else(|| GlueError::MissingChart(label(s)))?;
        out.insert(s.clone(), homotopy(w, Some(&chart))?)?;
    }
    Ok(out)
}

/// Largest `|value(y) - value(witness)|` per simplex of a 0-form cochain,
/// with the witness values kept symbolic in `x`.
fn witness_constants(z: &Cochain, cover: &GoodCover, xs: &[Vec<f64>]) -> Result<(Vec<(Vec<usize>, Expr)>, f64), GlueError> {
    let mut out = Vec::new();
    let mut spread: f64 = 0.0;
    for (s, w) in z.components() {
        let e = w.scalar_part();
        let pts = cover.simplex_points(s);
        let c = e.substitute_values(pts.first().map(Vec::as_slice), None);
        let tape = Compiled::new(&[&e - &c])?;
        for y in pts.iter().skip(1) {
            for x in xs {
                let v = tape.eval(&Point::new(y.clone(), x.clone()))?[0].abs();
                spread = if v.is_nan() { f64::NAN } else { spread.max(v) };
            }
        }
        out.push((s.clone(), c));
    }
    Ok((out, spread))
}

/// Reconstruction by descending the double complex and ascending with the
/// Mayer–Vietoris contraction; needs charts on every nerve simplex of
/// dimension below the family degree.
pub fn reconstruct_zigzag(
    family: &FamilySpec,
    cover: &GoodCover,
    ys: &[Vec<f64>],
    tols: &Tolerances,
) -> Result<Reconstruction, GlueError> {
    let p = family.degree();
    if p < 2 {
        return Err(GlueError::Config("zig-zag pipeline needs a family of degree at least 2".into()));
    }
    let k = p - 1;
    for j in 1..=k {
        if let Some(s) = cover.simplices(j).find(|s| cover.simplex_chart(s).is_none()) {
            return Err(GlueError::MissingChart(label(s)));
        }
    }
    let xs = family.param_grid.points();
    let mut checks = vec![Check::new("closed", family.check_closed(cover, tols.closed)?, "closed", tols.closed)];

    // descend: dξ^j = δξ^{j-1}
    let mut xi = vec![local_primitives(&family.omega, cover)?];
    checks.push(Check::new("local", local_residual(&xi[0], &family.omega, cover, &xs)?, "local", tols.local));
    let mut s_chase = Stat::default();
    for j in 1..=k {
        let target = coboundary(&xi[j - 1], cover)?;
        let next = homotopy_cochain(&target, cover)?;
        s_chase.merge(&next.d()?.sub(&target)?.abs_at_samples(cover, &xs)?);
        xi.push(next);
    }
    checks.push(Check::new("d-xi=delta-xi", s_chase, "identity", tols.identity));

    // constants: δc = z with z = δξ^k locally constant
    let z = coboundary(&xi[k], cover)?;
    let (z_vals, spread) = witness_constants(&z, cover, &xs)?;
    if !(spread <= tols.constancy) {
        return Err(GlueError::NotConstant { what: "δξ".into(), location: format!("degree {}", k + 1), spread, tol: tols.constancy });
    }
    checks.push(Check::new("z-constancy", stat_of(spread), "constancy", tols.constancy));
    let solve = min_norm_solve(cover, k);
    let z_exprs: Vec<Expr> = solve
        .rows
        .iter()
        .map(|s| z_vals.iter().find(|(t, _)| t == s).map(|(_, e)| e.clone()).unwrap_or_else(Expr::zero))
        .collect();
    let (c, r) = solve.apply(&z_exprs);
    let mut residual: f64 = 0.0;
    let mut worst = String::from("-");
    if !r.is_empty() {
        let tape = Compiled::new(&r)?;
        for x in &xs {
            let vals = tape.eval(&Point::new(vec![0.0; cover.dim], x.clone()))?;
            for (i, v) in vals.iter().enumerate() {
                if !(v.abs() <= residual) {
                    residual = v.abs();
                    worst = label(&solve.rows[i]);
                }
            }
        }
    }
    if !(residual <= tols.exactness) {
        return Err(GlueError::NotExact { defect: residual, location: worst });
    }
    checks.push(Check::new("solve-residual", stat_of(residual), "exactness", tols.exactness));

    // ascend: μ^{j-1} = ξ^{j-1} - d K μ^j keeps δμ = 0
    let rho = partition_of_unity(cover);
    let mut mu = xi[k].clone();
    for (s, cv) in solve.cols.iter().zip(c) {
        let w = mu.get(s).unwrap_or_else(|| Form::zero(cover.dim, 0));
        mu.insert(s.clone(), w.sub(&Form::scalar(cover.dim, cv).with_domain(w.domain().clone()))?)?;
    }
    let mut s_mu = coboundary(&mu, cover)?.abs_at_samples(cover, &xs)?;
    for j in (1..=k).rev() {
        let dk = mv_homotopy_k(&mu, cover, &rho)?.d()?;
        mu = xi[j - 1].sub(&dk)?;
        if j > 1 {
            s_mu.merge(&coboundary(&mu, cover)?.abs_at_samples(cover, &xs)?);
        }
    }
    checks.push(Check::new("delta-mu", s_mu, "identity", tols.identity));
    let output = Output::Symbolic(mu);
    let common = CommonTols { residual: tols.residual, mismatch: tols.mismatch, delta: tols.delta };
    checks.extend(common_checks(&output, &family.omega, cover, ys, &xs, common)?);
    Ok(Reconstruction { mode: "zigzag".into(), output, checks, defect: Some(residual) })
}
