//! Open sets with a membership predicate, a chart onto `R^d` and a bump.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Symbol};
use crate::exterior::SmoothMap;

/// A parametrized open set. Angles are in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// All of `R^dim` with the identity chart.
    Whole { dim: usize },
    /// All of `R^dim`, chart `y - offset`.
    Translate { offset: Vec<f64> },
    /// Open box `Π (lo_i, hi_i)`, chart `tan(π (y - mid) / width)` per axis.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Planar annular sector `r0 < |y| < r1` within `half_width` of the
    /// direction `center`. Requires `half_width < 90`.
    Sector { r: [f64; 2], center: f64, half_width: f64 },
    /// Cartesian product; each block acts on the next `dim()` coordinates.
    Product { blocks: Vec<Shape> },
}

/// Membership predicates (all must be positive), chart and bump of a set.
#[derive(Clone, Debug)]
pub struct Realized {
    pub membership: Vec<Expr>,
    pub chart: SmoothMap,
    pub bump: Expr,
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Whole { dim } => *dim,
            Shape::Translate { offset } => offset.len(),
            Shape::Box { lo, .. } => lo.len(),
            Shape::Sector { .. } => 2,
            Shape::Product { blocks } => blocks.iter().map(Shape::dim).sum(),
        }
    }

    /// Structural problems (empty intervals, wide sectors).
    pub fn check(&self) -> Result<(), String> {
        match self {
            Shape::Whole { .. } | Shape::Translate { .. } => Ok(()),
            Shape::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err("box bounds differ in length".into());
                }
                match lo.iter().zip(hi).position(|(a, b)| !(a < b)) {
                    Some(i) => Err(format!("box axis {} is empty", i + 1)),
                    None => Ok(()),
                }
            }
            Shape::Sector { r, half_width, .. } => {
                if !(0.0 <= r[0] && r[0] < r[1]) {
                    Err("sector radii must satisfy 0 <= r0 < r1".into())
                } else if !(0.0 < *half_width && *half_width < 90.0) {
                    Err("sector half width must lie in (0, 90) degrees".into())
                } else {
                    Ok(())
                }
            }
            Shape::Product { blocks } => blocks.iter().try_for_each(Shape::check),
        }
    }

    /// Build the predicates, chart (with inverse) and bump on coordinates
    /// `y1..y{dim}`.
    pub fn realize(&self) -> Realized {
        match self {
            Shape::Whole { dim } => Realized { membership: vec![], chart: SmoothMap::identity(*dim), bump: Expr::one() },
            Shape::Translate { offset } => {
                let n = offset.len();
                let fwd = SmoothMap::new(n, (0..n).map(|i| Expr::y(i) - offset[i]).collect());
                let inv = SmoothMap::new(n, (0..n).map(|i| Expr::y(i) + offset[i]).collect());
                Realized { membership: vec![], chart: fwd.with_inverse(inv), bump: Expr::one() }
            }
            Shape::Box { lo, hi } => {
                let n = lo.len();
                let mut membership = Vec::new();
                let mut fwd = Vec::new();
                let mut inv = Vec::new();
                let mut bumps = Vec::new();
                for i in 0..n {
                    let (mid, width) = (0.5 * (lo[i] + hi[i]), hi[i] - lo[i]);
                    let y = Expr::y(i);
                    let s = (&y - mid) * (2.0 / width);
                    membership.push(Expr::one() - s.clone().powi(2));
                    fwd.push(((&y - mid) * (PI / width)).tan());
                    inv.push(mid + (width / PI) * y.atan());
                    bumps.push(s.bump());
                }
                Realized {
                    membership,
                    chart: SmoothMap::new(n, fwd).with_inverse(SmoothMap::new(n, inv)),
                    bump: Expr::product(bumps),
                }
            }
            Shape::Sector { r, center, half_width } => sector(r[0], r[1], center.to_radians(), half_width.to_radians()),
            Shape::Product { blocks } => {
                let mut membership = Vec::new();
                let (mut fwd, mut inv, mut bumps) = (Vec::new(), Vec::new(), Vec::new());
                let mut offset = 0usize;
                for b in blocks {
                    let part = b.realize();
                    let shift = |e: &Expr| {
                        e.subst(&|s| match s {
                            Symbol::Y(i) => Some(Expr::y(i as usize + offset)),
                            _ => None,
                        })
                    };
                    membership.extend(part.membership.iter().map(shift));
                    fwd.extend(part.chart.components.iter().map(shift));
                    let pinv = part.chart.inverse().expect("realized charts carry inverses");
                    inv.extend(pinv.components.iter().map(shift));
                    bumps.push(shift(&part.bump));
                    offset += b.dim();
                }
                Realized {
                    membership,
                    chart: SmoothMap::new(offset, fwd).with_inverse(SmoothMap::new(offset, inv)),
                    bump: Expr::product(bumps),
                }
            }
        }
    }

    /// A point inside the set (chart preimage of the origin).
    pub fn center(&self) -> Vec<f64> {
        match self {
            Shape::Whole { dim } => vec![0.0; *dim],
            Shape::Translate { offset } => offset.clone(),
            Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            Shape::Sector { r, center, .. } => {
                let rm = 0.5 * (r[0] + r[1]);
                let th = center.to_radians();
                vec![rm * th.cos(), rm * th.sin()]
            }
            Shape::Product { blocks } => blocks.iter().flat_map(Shape::center).collect(),
        }
    }
}

fn sector(r0: f64, r1: f64, center: f64, h: f64) -> Realized {
    let (y1, y2) = (Expr::y(0), Expr::y(1));
    let rho = (y1.clone().powi(2) + y2.clone().powi(2)).sqrt();
    let (cc, sc) = (center.cos(), center.sin());
    // rotated coordinates: cr along the center direction
    let cr = cc * &y1 + sc * &y2;
    let sr = cc * &y2 - sc * &y1;
    let rm = 0.5 * (r0 + r1);
    let width = r1 - r0;
    let radial = (&rho - rm) * (2.0 / width);
    let cos_ratio = &cr / &rho;
    let membership = vec![
        Expr::one() - radial.clone().powi(2),
        &cos_ratio - h.cos(),
    ];
    let fwd = vec![
        ((&rho - rm) * (PI / width)).tan(),
        ((&sr / (&rho + &cr)).atan() * (PI / h)).tan(),
    ];
    let (v1, v2) = (Expr::y(0), Expr::y(1));
    let big_r = rm + (width / PI) * v1.atan();
    let phi = center + (2.0 * h / PI) * v2.atan();
    let inv = vec![&big_r * phi.clone().cos(), big_r * phi.sin()];
    let angular = (Expr::one() - cos_ratio) * (1.0 / (1.0 - h.cos()));
    Realized {
        membership,
        chart: SmoothMap::new(2, fwd).with_inverse(SmoothMap::new(2, inv)),
        bump: radial.bump() * angular.bump(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Compiled, Point};

    fn eval_all(es: &[Expr], y: &[f64]) -> Vec<f64> {
        Compiled::new(es).unwrap().eval(&Point::new(y.to_vec(), vec![])).unwrap()
    }

    #[test]
    fn box_chart_round_trip_and_membership() {
        let s = Shape::Box { lo: vec![-2.0], hi: vec![0.5] };
        let r = s.realize();
        for y in [-1.99, -1.0, 0.0, 0.49] {
            assert!(r.chart.round_trip_error(&[y], &[]).unwrap() < 1e-12);
            assert!(eval_all(&r.membership, &[y])[0] > 0.0);
            assert!(eval_all(std::slice::from_ref(&r.bump), &[y])[0] > 0.0);
        }
        assert!(eval_all(&r.membership, &[0.6])[0] < 0.0);
        assert_eq!(eval_all(std::slice::from_ref(&r.bump), &[0.6])[0], 0.0);
    }

    #[test]
    fn sector_chart_round_trip() {
        let s = Shape::Sector { r: [1.0, 2.0], center: 120.0, half_width: 80.0 };
        let r = s.realize();
        let center = s.center();
        assert!(eval_all(&r.chart.components, &center).iter().all(|v| v.abs() < 1e-12));
        for (rad, deg) in [(1.01, 45.0), (1.5, 120.0), (1.99, 195.0), (1.2, 41.0)] {
            let th: f64 = f64::to_radians(deg);
            let y = [rad * th.cos(), rad * th.sin()];
            assert!(eval_all(&r.membership, &y).iter().all(|&m| m > 0.0), "{rad} {deg}");
            assert!(r.chart.round_trip_error(&y, &[]).unwrap() < 1e-9);
        }
        let th: f64 = f64::to_radians(30.0);
        let outside = [1.5 * th.cos(), 1.5 * th.sin()];
        assert!(eval_all(&r.membership, &outside)[1] < 0.0);
        assert_eq!(eval_all(std::slice::from_ref(&r.bump), &outside)[0], 0.0);
    }

    #[test]
    fn product_shifts_coordinates() {
        let s = Shape::Product {
            blocks: vec![Shape::Box { lo: vec![0.0], hi: vec![1.0] }, Shape::Whole { dim: 1 }],
        };
        let r = s.realize();
        assert_eq!(r.chart.components.len(), 2);
        assert_eq!(r.chart.components[1], Expr::y(1));
        assert!(r.chart.round_trip_error(&[0.25, 7.0], &[]).unwrap() < 1e-12);
        assert_eq!(s.center(), vec![0.5, 0.0]);
    }
}
