//! Comparison surfaces: tilted half-cylinders, nodoid barriers and their
//! lower envelopes, plus the horizontal-cylinder upper bounds.

use std::sync::Arc;

use rayon::prelude::*;

use crate::boundary_geometry::{
    check_uniform_under_condition, convexity_check, lower_support_height, point_gap,
    touch_tolerance, BoundaryFunction, Convexity, Side, Verdict,
};
use crate::error::{positive, Error, Result};
use crate::field::{Grid, ScalarField};
use crate::nodoid::{self, NodoidProfile};
use crate::solver::Case;

const PROFILE_SAMPLES: usize = 2001;

/// `z = −(1/cos θ)·√(1/(4H²) − y²) + (x − x0)·tan θ + z0` on `|y| ≤ 1/(2H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfCylinder {
    pub slope: f64,
    pub x0: f64,
    pub z0: f64,
    pub curvature: f64,
}

impl HalfCylinder {
    pub fn new(slope: f64, x0: f64, z0: f64, curvature: f64) -> Result<Self> {
        positive("H", curvature)?;
        if !slope.is_finite() {
            return Err(Error::InvalidParameter {
                name: "slope",
                value: slope,
                reason: "tilt slope must be finite",
            });
        }
        Ok(HalfCylinder { slope, x0, z0, curvature })
    }

    pub fn from_angle(theta: f64, x0: f64, z0: f64, curvature: f64) -> Result<Self> {
        if !(theta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "tilt angle must lie in (−π/2, π/2)",
            });
        }
        Self::new(theta.tan(), x0, z0, curvature)
    }

    pub fn half_width(&self) -> f64 {
        0.5 / self.curvature
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let r = self.half_width();
        if y.abs() > r * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { query: y, lo: -r, hi: r });
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        let r = self.half_width();
        let secant = (1.0 + self.slope * self.slope).sqrt();
        -secant * (r * r - y * y).max(0.0).sqrt() + (x - self.x0) * self.slope + self.z0
    }
}

pub fn half_cylinder_eval(x: f64, y: f64, theta: f64, x0: f64, z0: f64, curvature: f64) -> Result<f64> {
    HalfCylinder::from_angle(theta, x0, z0, curvature)?.eval(x, y)
}

/// Midpoint of the one-sided difference quotients at `x0`.
fn subgradient_midpoint(f: &BoundaryFunction, x0: f64) -> f64 {
    let delta = f.spacing().min(1e-5 * x0.abs().max(1.0));
    let f0 = f.eval(x0);
    let (lo, hi) = f.window();
    let right = (x0 + delta <= hi).then(|| (f.eval(x0 + delta) - f0) / delta);
    let left = (x0 - delta >= lo).then(|| (f0 - f.eval(x0 - delta)) / delta);
    match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(s), None) | (None, Some(s)) => s,
        (None, None) => 0.0,
    }
}

fn require_convex(f: &BoundaryFunction) -> Result<()> {
    match convexity_check(f)? {
        Convexity::Convex => Ok(()),
        Convexity::NotConvex { witness, .. } => Err(Error::NotConvex {
            x0: witness[0],
            x1: witness[1],
            x2: witness[2],
        }),
    }
}

/// Slope `tan θ0` of a support line of the convex function `f` at `x0`.
pub fn support_line(f: &BoundaryFunction, x0: f64) -> Result<f64> {
    if !f.contains(x0) {
        let (lo, hi) = f.window();
        return Err(Error::OutOfRange { query: x0, lo, hi });
    }
    require_convex(f)?;
    Ok(subgradient_midpoint(f, x0))
}

/// Upper sheet of a nodoid whose axis is parallel to the y-axis through
/// `(center.0, ·, center.1)`.
#[derive(Debug, Clone)]
pub struct NodoidBarrier {
    pub profile: Arc<NodoidProfile>,
    pub center: (f64, f64),
}

impl NodoidBarrier {
    pub fn eval(&self, x: f64, y: f64) -> Option<f64> {
        nodoid_barrier_eval(&self.profile, self.center, x, y)
    }
}

pub fn nodoid_barrier_eval(profile: &NodoidProfile, center: (f64, f64), x: f64, y: f64) -> Option<f64> {
    let r = profile.radius_at(y).ok()?;
    let dx = x - center.0;
    if dx.abs() > r {
        return None;
    }
    Some(center.1 + (r * r - dx * dx).sqrt())
}

fn grid_nodes_with_margin(grid: &Grid, margin: f64) -> Vec<f64> {
    let dx = grid.dx();
    let extra = (margin / dx).ceil() as usize;
    let first = grid.x(0) - extra as f64 * dx;
    (0..grid.nx + 2 * extra).map(|k| first + k as f64 * dx).collect()
}

/// Pointwise maximum of the barrier family placed under `f`; every solution
/// with boundary values `f` on `y = ±l` and side data above the field
/// dominates it.
pub fn lower_envelope(f: &BoundaryFunction, case: Case, curvature: f64, grid: &Grid) -> Result<ScalarField> {
    positive("H", curvature)?;
    match case {
        Case::Collin => collin_envelope(f, curvature, grid),
        Case::Lopez { neck } => lopez_envelope(f, curvature, neck, grid),
    }
}

fn check_covers(f: &BoundaryFunction, lo: f64, hi: f64) -> Result<()> {
    if f.contains(lo) && f.contains(hi) {
        Ok(())
    } else {
        let (a, b) = f.window();
        Err(Error::OutOfRange {
            query: if f.contains(lo) { hi } else { lo },
            lo: a,
            hi: b,
        })
    }
}

fn collin_envelope(f: &BoundaryFunction, curvature: f64, grid: &Grid) -> Result<ScalarField> {
    let r = 0.5 / curvature;
    if grid.y_lo < -r * (1.0 + 1e-12) || grid.y_hi > r * (1.0 + 1e-12) {
        return Err(Error::InfeasibleWidth {
            width: grid.y_hi - grid.y_lo,
            limit: 2.0 * r,
        });
    }
    check_covers(f, grid.x_lo, grid.x_hi)?;
    require_convex(f)?;
    let cylinders: Vec<HalfCylinder> = (0..grid.nx)
        .map(|i| {
            let x0 = grid.x(i);
            HalfCylinder {
                slope: subgradient_midpoint(f, x0),
                x0,
                z0: f.eval(x0),
                curvature,
            }
        })
        .collect();
    let values = envelope_values(grid, |i, j| {
        let (x, y) = (grid.x(i), grid.y(j));
        cylinders
            .iter()
            .map(|c| c.eval_unchecked(x, y))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    ScalarField::new(*grid, curvature, values)
}

fn lopez_envelope(f: &BoundaryFunction, curvature: f64, neck: f64, grid: &Grid) -> Result<ScalarField> {
    let params = nodoid::params_from_t(curvature, neck)?;
    let h = params.half_height;
    if grid.y_lo < -h * (1.0 + 1e-9) || grid.y_hi > h * (1.0 + 1e-9) {
        return Err(Error::InfeasibleWidth {
            width: grid.y_hi - grid.y_lo,
            limit: 2.0 * h,
        });
    }
    let rho = params.max_radius;
    check_covers(f, grid.x_lo - 2.0 * rho, grid.x_hi + 2.0 * rho)?;
    let report = check_uniform_under_condition(f, rho, None)?;
    if report.verdict != Verdict::Holds {
        return Err(Error::Uncertified {
            reason: format!("uniform {rho}-circle under condition is {:?}", report.verdict),
            witness: report.witness,
        });
    }
    let profile = nodoid::profile(&params, PROFILE_SAMPLES)?;
    let centers = grid_nodes_with_margin(grid, rho);
    let heights: Vec<f64> = centers
        .par_iter()
        .map(|&a| lower_support_height(f, a, rho).map(|c| c.height))
        .collect::<Result<_>>()?;
    let radii: Vec<f64> = (0..grid.ny)
        .map(|j| profile.radius_at(grid.y(j)))
        .collect::<Result<_>>()?;
    let dx = grid.dx();
    let first = centers[0];
    let values = envelope_values(grid, |i, j| {
        let x = grid.x(i);
        let r = radii[j];
        let lo = (((x - r - first) / dx) - 1e-9).ceil().max(0.0) as usize;
        let hi = ((((x + r - first) / dx) + 1e-9).floor() as usize).min(centers.len() - 1);
        let mut best = f64::NEG_INFINITY;
        for k in lo..=hi {
            let d = x - centers[k];
            if d.abs() <= r {
                best = best.max(heights[k] + (r * r - d * d).sqrt());
            }
        }
        best
    });
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::OutsideHull {
            x: grid.x(k % grid.nx),
            y: grid.y(k / grid.nx),
        });
    }
    ScalarField::new(*grid, curvature, values)
}

fn envelope_values(grid: &Grid, value: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|n| value(n % grid.nx, n / grid.nx))
        .collect()
}

/// Hypothesis under which a horizontal cylinder of radius `1/(2H)` bounds
/// the solution from above on the cross-section at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CylinderMode {
    /// `f` nondecreasing on `[x0, x]` and `x ≥ x0 + 1/H`.
    Monotone { x0: f64 },
    /// Mirror image: `f` nonincreasing on `[x, x0]` and `x ≤ x0 − 1/H`.
    MonotoneLeft { x0: f64 },
    /// `f` satisfies a `1/(2H)`-circle upper condition at `x`.
    UpperCircle,
}

fn monotone_on(f: &BoundaryFunction, a: f64, b: f64, sign: f64) -> Option<f64> {
    let mut pts: Vec<f64> = vec![a];
    let step = f.spacing();
    let mut x = a + step;
    while x < b {
        pts.push(x);
        x += step;
    }
    pts.push(b);
    pts.windows(2)
        .find(|w| sign * (f.eval(w[1]) - f.eval(w[0])) < -1e-12 * (1.0 + f.eval(w[0]).abs()))
        .map(|w| w[0])
}

pub fn horizontal_cylinder_bound(f: &BoundaryFunction, x: f64, curvature: f64, mode: CylinderMode) -> Result<f64> {
    positive("H", curvature)?;
    let r = 0.5 / curvature;
    match mode {
        CylinderMode::Monotone { x0 } | CylinderMode::MonotoneLeft { x0 } => {
            let right = matches!(mode, CylinderMode::Monotone { .. });
            let reach = if right { x - x0 } else { x0 - x };
            if reach < 2.0 * r {
                return Err(Error::Uncertified {
                    reason: format!("abscissa {x} is closer than 1/H to {x0}"),
                    witness: Some(x),
                });
            }
            let (a, b, sign) = if right { (x0, x, 1.0) } else { (x, x0, -1.0) };
            check_covers(f, a, b)?;
            if let Some(w) = monotone_on(f, a, b, sign) {
                return Err(Error::Uncertified {
                    reason: format!("f is not monotone on [{a}, {b}]"),
                    witness: Some(w),
                });
            }
            Ok(f.eval(x) + r)
        }
        CylinderMode::UpperCircle => {
            let (gap, _) = point_gap(f, Side::Upper, x, r)?;
            if gap <= touch_tolerance(f, r) {
                Ok(f.eval(x))
            } else {
                Err(Error::Uncertified {
                    reason: format!("no {r}-circle upper condition at {x} (gap {gap:e})"),
                    witness: Some(x),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_geometry::Expr;
    use approx::assert_abs_diff_eq;

    #[test]
    fn half_cylinder_closed_form() {
        assert_eq!(half_cylinder_eval(3.0, 0.0, 0.0, 0.0, 0.0, 0.5).unwrap(), -1.0);
        assert_eq!(half_cylinder_eval(7.0, 1.0, 0.0, 0.0, 2.5, 0.5).unwrap(), 2.5);
        let v = half_cylinder_eval(1.0, 0.0, std::f64::consts::FRAC_PI_4, 1.0, 0.3, 2.0).unwrap();
        assert_abs_diff_eq!(v, 0.3 - 2f64.sqrt() / 4.0, epsilon = 1e-15);
        assert!(half_cylinder_eval(0.0, 1.01, 0.0, 0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn support_slopes() {
        let sq = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.0, 1.0]), (-3.0, 3.0), 0.01).unwrap();
        assert_abs_diff_eq!(support_line(&sq, 1.0).unwrap(), 2.0, epsilon = 1e-8);
        let abs = BoundaryFunction::closed(Expr::Abs { center: 0.0, slope: 1.0 }, (-1.0, 1.0), 0.01).unwrap();
        assert_eq!(support_line(&abs, 0.0).unwrap(), 0.0);
        let aff = BoundaryFunction::closed(Expr::Affine { slope: -0.7, intercept: 2.0 }, (-1.0, 1.0), 0.01).unwrap();
        for x in [-0.5, 0.0, 0.9] {
            assert_abs_diff_eq!(support_line(&aff, x).unwrap(), -0.7, epsilon = 1e-9);
        }
        let cos = BoundaryFunction::closed(Expr::Sine { amplitude: 1.0, frequency: 1.0, phase: 0.0 }, (-3.0, 3.0), 0.01).unwrap();
        assert!(matches!(support_line(&cos, 0.0), Err(Error::NotConvex { .. })));
    }

    #[test]
    fn nodoid_sheet_values() {
        let params = nodoid::params_from_t(1.0, 1.0).unwrap();
        let p = nodoid::profile(&params, 801).unwrap();
        let c = (0.5, -2.0);
        assert_abs_diff_eq!(nodoid_barrier_eval(&p, c, 0.5, 0.0).unwrap(), -2.0 + params.neck, epsilon = 1e-12);
        let h = p.half_height();
        assert_abs_diff_eq!(nodoid_barrier_eval(&p, c, 0.5, h).unwrap(), -2.0 + params.max_radius, epsilon = 1e-9);
        let r = p.radius_at(0.2).unwrap();
        assert_abs_diff_eq!(nodoid_barrier_eval(&p, c, 0.5 + r, 0.2).unwrap(), -2.0, epsilon = 1e-12);
        assert!(nodoid_barrier_eval(&p, c, 0.5 + r + 1e-6, 0.2).is_none());
        assert!(nodoid_barrier_eval(&p, c, 0.5, h * 1.01).is_none());
    }

    #[test]
    fn collin_envelope_flat_and_affine() {
        let grid = Grid::new((-2.0, 2.0), (-1.0, 1.0), 21, 11).unwrap();
        let zero = BoundaryFunction::closed(Expr::Constant(0.0), (-3.0, 3.0), 0.05).unwrap();
        let env = lower_envelope(&zero, Case::Collin, 0.5, &grid).unwrap();
        for i in 0..grid.nx {
            assert_abs_diff_eq!(env.at(i, 5), -1.0, epsilon = 1e-14);
        }
        let aff = BoundaryFunction::closed(Expr::Affine { slope: 0.4, intercept: 1.0 }, (-3.0, 3.0), 0.05).unwrap();
        let env = lower_envelope(&aff, Case::Collin, 0.5, &grid).unwrap();
        let c = HalfCylinder::new(0.4, 0.0, 1.0, 0.5).unwrap();
        for n in 0..grid.len() {
            let (x, y) = (grid.x(n % grid.nx), grid.y(n / grid.nx));
            assert_abs_diff_eq!(env.values()[n], c.eval(x, y).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn lopez_envelope_flat_center_value() {
        let params = nodoid::params_from_t(1.0, 1.0).unwrap();
        let h = params.half_height;
        let grid = Grid::new((-1.0, 1.0), (-h, h), 11, 9).unwrap();
        let zero = BoundaryFunction::closed(Expr::Constant(0.0), (-6.0, 6.0), 0.02).unwrap();
        let env = lower_envelope(&zero, Case::Lopez { neck: 1.0 }, 1.0, &grid).unwrap();
        let expected = -(params.max_radius - params.neck);
        assert_abs_diff_eq!(env.at(5, 4), expected, epsilon = 1e-9);
        for j in [0, grid.ny - 1] {
            for i in 0..grid.nx {
                assert!(env.at(i, j).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn envelope_translation_covariance() {
        let f = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.3, 0.5]), (-4.0, 4.0), 0.05).unwrap();
        let grid = Grid::new((-1.0, 1.0), (-1.0, 1.0), 11, 7).unwrap();
        let g = f.shifted(0.5, -0.25);
        let grid2 = Grid::new((-0.5, 1.5), (-1.0, 1.0), 11, 7).unwrap();
        let a = lower_envelope(&f, Case::Collin, 0.5, &grid).unwrap();
        let b = lower_envelope(&g, Case::Collin, 0.5, &grid2).unwrap();
        for (p, q) in a.values().iter().zip(b.values()) {
            assert_abs_diff_eq!(p - 0.25, *q, epsilon = 1e-9);
        }
    }

    #[test]
    fn cylinder_bounds() {
        let id = BoundaryFunction::closed(Expr::Affine { slope: 1.0, intercept: 0.0 }, (-10.0, 10.0), 0.1).unwrap();
        assert_eq!(horizontal_cylinder_bound(&id, 5.0, 0.5, CylinderMode::Monotone { x0: 0.0 }).unwrap(), 6.0);
        assert!(horizontal_cylinder_bound(&id, 1.0, 0.5, CylinderMode::Monotone { x0: 0.0 }).is_err());
        let zero = BoundaryFunction::closed(Expr::Constant(0.0), (-5.0, 5.0), 0.05).unwrap();
        assert_eq!(horizontal_cylinder_bound(&zero, 0.3, 1.0, CylinderMode::UpperCircle).unwrap(), 0.0);
        let cap = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.0, -1.0]), (-3.0, 3.0), 0.01).unwrap();
        assert_eq!(horizontal_cylinder_bound(&cap, 0.0, 1.0, CylinderMode::UpperCircle).unwrap(), 0.0);
        let cup = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.0, 1.0]), (-3.0, 3.0), 0.01).unwrap();
        assert!(horizontal_cylinder_bound(&cup, 0.0, 0.5, CylinderMode::UpperCircle).is_err());
    }
}
