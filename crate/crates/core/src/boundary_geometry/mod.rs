//! Certificates for the boundary datum: convexity, the uniform rolling-circle
//! under condition, upper-condition points, pinched slopes and the
//! Rolle-type argmax lemma.

mod circles;
mod function;

pub use circles::{
    check_uniform_under_condition, covers_every_window, find_upper_condition_points, intervals,
    lower_support_height, pinched_slope, point_gap, touch_tolerance, upper_support_height,
    CircleConditionReport, DiskContact, Side, Slope, Verdict,
};
pub use function::{BoundaryFunction, Expr};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convexity {
    Convex,
    /// A sample triple whose midpoint lies above the chord.
    NotConvex { witness: [f64; 3], defect: f64 },
}

impl Convexity {
    pub fn is_convex(&self) -> bool {
        matches!(self, Convexity::Convex)
    }
}

/// Discrete convexity of the samples: every consecutive triple satisfies
/// `f(x_{k−1}) − 2 f(x_k) + f(x_{k+1}) ≥ 0` up to rounding.
pub fn convexity_check(f: &BoundaryFunction) -> Result<Convexity> {
    if f.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: f.len() as f64,
            reason: "convexity needs at least three samples",
        });
    }
    let v = f.values();
    let mut worst: Option<(usize, f64)> = None;
    for k in 1..v.len() - 1 {
        let second = v[k - 1] - 2.0 * v[k] + v[k + 1];
        let slack = 64.0 * f64::EPSILON * (v[k - 1].abs() + 2.0 * v[k].abs() + v[k + 1].abs());
        if second < -slack && worst.is_none_or(|(_, d)| second < d) {
            worst = Some((k, second));
        }
    }
    Ok(match worst {
        None => Convexity::Convex,
        Some((k, d)) => Convexity::NotConvex {
            witness: [f.node(k - 1), f.node(k), f.node(k + 1)],
            defect: -d,
        },
    })
}

/// Result of [`rolle_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollePoint {
    pub abscissa: f64,
    pub slope: f64,
}

/// Tolerance on `f'(c) = 0` at the returned point.
pub const ROLLE_SLOPE_TOLERANCE: f64 = 1e-5;

/// Given upper-condition points `a < b` with `f'(a) > 0 > f'(b)` and a uniform
/// `R`-circle under condition, returns a maximiser `c` of `f` on `[a, b]`
/// (leftmost on a plateau) where the upper condition holds and `f'(c) = 0`.
pub fn rolle_point(
    f: &BoundaryFunction,
    r_under: f64,
    r_upper: f64,
    a: f64,
    b: f64,
) -> Result<RollePoint> {
    if !(a < b) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            reason: "need a < b",
        });
    }
    let report = check_uniform_under_condition(f, r_under, None)?;
    if report.verdict != Verdict::Holds {
        return Err(Error::Uncertified {
            reason: format!("uniform {r_under}-circle under condition: {:?}", report.verdict),
            witness: report.witness,
        });
    }
    let sa = pinched_slope(f, a, r_under, r_upper)?;
    let sb = pinched_slope(f, b, r_under, r_upper)?;
    if sa.signum() <= 0.0 || sb.signum() >= 0.0 {
        return Err(Error::Uncertified {
            reason: format!("slope signs at the endpoints are {sa:?} and {sb:?}; need + and −"),
            witness: Some(if sa.signum() <= 0.0 { a } else { b }),
        });
    }

    let mut best = (a, f.eval(a));
    for k in f.node_range(a, b) {
        let x = f.node(k);
        let v = f.eval(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    if f.eval(b) > best.1 {
        best = (b, f.eval(b));
    }
    let step = f.spacing();
    let (xr, neg) = circles_golden(f, (best.0 - step).max(a), (best.0 + step).min(b));
    if -neg > best.1 {
        best = (xr, -neg);
    }
    let c = best.0;

    let (gap, _) = point_gap(f, Side::Upper, c, r_upper)?;
    if gap > touch_tolerance(f, r_upper) {
        return Err(Error::Uncertified {
            reason: format!("upper condition fails at the maximiser {c} (gap {gap:.3e})"),
            witness: Some(c),
        });
    }
    let slope = match pinched_slope(f, c, r_under, r_upper)? {
        Slope::Finite(m) if m.abs() <= ROLLE_SLOPE_TOLERANCE => m,
        other => {
            return Err(Error::Uncertified {
                reason: format!("slope at the maximiser {c} is {other:?}"),
                witness: Some(c),
            })
        }
    };
    Ok(RollePoint { abscissa: c, slope })
}

fn circles_golden(f: &BoundaryFunction, lo: f64, hi: f64) -> (f64, f64) {
    circles::golden_min(|x| -f.eval(x), lo, hi)
}
