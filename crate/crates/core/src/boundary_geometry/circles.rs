//! Rolling-circle certificates: disks of radius `R` below the graph of `f`
//! (under condition) or inside its epigraph (upper condition).

use rayon::prelude::*;

use super::function::BoundaryFunction;
use crate::error::{positive, Error, Result};

/// Which side of the graph the disk lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Disk below the graph, touching from underneath.
    Under,
    /// Disk inside the epigraph, touching from above.
    Upper,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Under => 1.0,
            Side::Upper => -1.0,
        }
    }
}

/// Extremal disk with center abscissa `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskContact {
    pub center: f64,
    /// Height of the disk center: `s*(a)` for [`Side::Under`], `s**(a)` for [`Side::Upper`].
    pub height: f64,
    /// Refined contact abscissa (leftmost when the contact set is flat).
    pub touch: f64,
    /// Sample nodes whose gap to the circle is within the tangency tolerance.
    pub touch_set: Vec<f64>,
}

/// Minimises a function on `[lo, hi]` by golden-section search.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    for _ in 0..120 {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if g1 <= g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - INV_PHI * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + INV_PHI * (b - a);
            g2 = g(x2);
        }
    }
    if g1 <= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// Tangency tolerance `max(1e-8, 10 δ² κ)` with `κ` the larger of the
/// curvature hint and the circle curvature `1/R`.
pub fn touch_tolerance(f: &BoundaryFunction, radius: f64) -> f64 {
    let kappa = f.curvature_hint().unwrap_or(0.0).max(1.0 / radius);
    let d = f.spacing();
    (10.0 * d * d * kappa).max(1e-8)
}

/// `(1 + f′(x)²)^{3/2}`: converts a normal gap between neighbouring
/// tangency points into the vertical gap seen at the sample nodes.
fn slope_factor(f: &BoundaryFunction, x: f64) -> f64 {
    let (lo, hi) = f.window();
    let d = f.spacing();
    let (a, b) = ((x - d).max(lo), (x + d).min(hi));
    let s = (f.eval(b) - f.eval(a)) / (b - a);
    (1.0 + s * s).powf(1.5)
}

fn arc(radius: f64, dx: f64) -> f64 {
    (radius * radius - dx * dx).max(0.0).sqrt()
}

/// `σ f(x) − √(R² − (x − c)²)`; its minimum over the disk footprint gives the
/// extremal disk for side `σ`.
fn objective(f: &BoundaryFunction, side: Side, c: f64, radius: f64, x: f64) -> f64 {
    side.sign() * f.eval(x) - arc(radius, x - c)
}

/// Minimum of the objective over `[c − R, c + R]`: node sampling followed by a
/// golden-section refinement around the best node.
fn extreme(f: &BoundaryFunction, side: Side, c: f64, radius: f64) -> (f64, f64) {
    let lo = c - radius;
    let hi = c + radius;
    let mut best = (lo, objective(f, side, c, radius, lo));
    let mut best_idx: Option<usize> = None;
    let range = f.node_range(lo, hi);
    for k in range.clone() {
        let x = f.node(k);
        let v = objective(f, side, c, radius, x);
        if v < best.1 {
            best = (x, v);
            best_idx = Some(k);
        }
    }
    let v_hi = objective(f, side, c, radius, hi);
    if v_hi < best.1 {
        best = (hi, v_hi);
        best_idx = None;
    }
    let (blo, bhi) = match best_idx {
        Some(k) => {
            let left = if k > range.start { f.node(k - 1) } else { lo };
            let right = if k + 1 < range.end { f.node(k + 1) } else { hi };
            (left.max(lo), right.min(hi))
        }
        None => {
            let step = f.spacing();
            ((best.0 - step).max(lo), (best.0 + step).min(hi))
        }
    };
    let (xr, vr) = golden_min(|x| objective(f, side, c, radius, x), blo, bhi);
    if vr < best.1 {
        best = (xr, vr);
    }
    best
}

fn check_footprint(f: &BoundaryFunction, a: f64, radius: f64) -> Result<()> {
    positive("R", radius)?;
    if f.contains(a - radius) && f.contains(a + radius) {
        Ok(())
    } else {
        let (lo, hi) = f.window();
        Err(Error::OutOfRange { query: a, lo: lo + radius, hi: hi - radius })
    }
}

fn contact(f: &BoundaryFunction, side: Side, a: f64, radius: f64) -> Result<DiskContact> {
    check_footprint(f, a, radius)?;
    let (touch, m) = extreme(f, side, a, radius);
    let tol = touch_tolerance(f, radius);
    let touch_set: Vec<f64> = f
        .node_range(a - radius, a + radius)
        .map(|k| f.node(k))
        .filter(|&x| objective(f, side, a, radius, x) - m <= tol)
        .collect();
    // Leftmost representative on a flat contact set.
    let touch = match touch_set.first() {
        Some(&x0) if objective(f, side, a, radius, x0) - m <= 1e-14 * (1.0 + m.abs()) => x0.min(touch),
        _ => touch,
    };
    Ok(DiskContact {
        center: a,
        height: side.sign() * m,
        touch,
        touch_set,
    })
}

/// `s*(a) = min_{|x−a| ≤ R} f(x) − √(R² − (x−a)²)`: the highest disk of radius
/// `R` centred above `a` that stays below the graph.
pub fn lower_support_height(f: &BoundaryFunction, a: f64, radius: f64) -> Result<DiskContact> {
    contact(f, Side::Under, a, radius)
}

/// `s**(a) = max_{|x−a| ≤ R} f(x) + √(R² − (x−a)²)`: the lowest disk of radius
/// `R` centred above `a` that stays inside the epigraph.
pub fn upper_support_height(f: &BoundaryFunction, a: f64, radius: f64) -> Result<DiskContact> {
    contact(f, Side::Upper, a, radius)
}

/// Centers usable for sweeps: sample nodes whose disk footprint fits the window.
fn sweep_centers(f: &BoundaryFunction, radius: f64) -> Vec<f64> {
    let (lo, hi) = f.window();
    f.node_range(lo + radius, hi - radius).map(|k| f.node(k)).collect()
}

/// For each target abscissa, the smallest gap between the graph and any swept
/// extremal circle at that abscissa, with the center achieving it.
fn gaps_at(f: &BoundaryFunction, side: Side, radius: f64, targets: &[f64]) -> Vec<(f64, Option<f64>)> {
    let centers = sweep_centers(f, radius);
    let minima: Vec<f64> = centers
        .par_iter()
        .map(|&c| extreme(f, side, c, radius).1)
        .collect();
    targets
        .par_iter()
        .map(|&x| {
            let first = centers.partition_point(|&c| c < x - radius);
            let mut best = (f64::INFINITY, None);
            for (c, m) in centers[first..].iter().zip(&minima[first..]) {
                if *c > x + radius {
                    break;
                }
                let gap = objective(f, side, *c, radius, x) - m;
                if gap < best.0 {
                    best = (gap, Some(*c));
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// Every violation is within ten tolerances: the sampling cannot decide.
    Inconclusive,
}

/// Outcome of a uniform under-condition sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleConditionReport {
    pub radius: f64,
    pub verdict: Verdict,
    /// Subwindow on which the verdict is made (window minus a `2R` margin).
    pub tested_window: (f64, f64),
    pub tolerance: f64,
    pub touched: Vec<f64>,
    pub violations: Vec<f64>,
    /// Largest gap over the tested nodes, divided by `(1 + f′²)^{3/2}`, and
    /// where it occurs.
    pub worst_gap: f64,
    pub witness: Option<f64>,
}

impl CircleConditionReport {
    /// Contiguous runs of violating nodes as closed intervals.
    pub fn violation_intervals(&self, spacing: f64) -> Vec<(f64, f64)> {
        intervals(&self.violations, spacing)
    }

    pub fn touched_intervals(&self, spacing: f64) -> Vec<(f64, f64)> {
        intervals(&self.touched, spacing)
    }
}

/// Groups sorted abscissas into runs whose consecutive spacing is at most
/// `1.5 · spacing`.
pub fn intervals(points: &[f64], spacing: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &x in points {
        match out.last_mut() {
            Some(run) if x - run.1 <= 1.5 * spacing => run.1 = x,
            _ => out.push((x, x)),
        }
    }
    out
}

/// Sweeps disk centers across the window and checks that every node of the
/// tested subwindow is touched from below by some disk of radius `R`.
pub fn check_uniform_under_condition(
    f: &BoundaryFunction,
    radius: f64,
    tol: Option<f64>,
) -> Result<CircleConditionReport> {
    positive("R", radius)?;
    let tolerance = tol.unwrap_or_else(|| touch_tolerance(f, radius));
    let (lo, hi) = f.window();
    let tested_window = (lo + 2.0 * radius, hi - 2.0 * radius);
    let targets: Vec<f64> = if tested_window.0 <= tested_window.1 {
        f.node_range(tested_window.0, tested_window.1)
            .map(|k| f.node(k))
            .collect()
    } else {
        Vec::new()
    };
    let gaps = gaps_at(f, Side::Under, radius, &targets);
    let mut touched = Vec::new();
    let mut violations = Vec::new();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut witness = None;
    for (&x, &(gap, _)) in targets.iter().zip(&gaps) {
        let gap = gap / slope_factor(f, x);
        if gap <= tolerance {
            touched.push(x);
        } else {
            violations.push(x);
        }
        if gap > worst_gap {
            worst_gap = gap;
            witness = Some(x);
        }
    }
    let verdict = if targets.is_empty() {
        Verdict::Inconclusive
    } else if violations.is_empty() {
        Verdict::Holds
    } else if worst_gap <= 10.0 * tolerance {
        Verdict::Inconclusive
    } else {
        Verdict::Fails
    };
    Ok(CircleConditionReport {
        radius,
        verdict,
        tested_window,
        tolerance,
        touched,
        violations,
        worst_gap: worst_gap.max(0.0),
        witness: if verdict == Verdict::Holds { None } else { witness },
    })
}

/// Abscissas where `f` satisfies an `R`-circle upper condition, found by
/// lowering disks of radius `R` onto the graph from every swept center.
pub fn find_upper_condition_points(f: &BoundaryFunction, radius: f64) -> Result<Vec<f64>> {
    positive("R", radius)?;
    let tol = touch_tolerance(f, radius);
    let targets = f.nodes();
    let gaps = gaps_at(f, Side::Upper, radius, &targets);
    let mut points: Vec<f64> = targets
        .iter()
        .zip(&gaps)
        .filter(|(&x, g)| g.0 <= tol * slope_factor(f, x))
        .map(|(&x, _)| x)
        .collect();
    let refined: Vec<f64> = sweep_centers(f, radius)
        .par_iter()
        .map(|&c| extreme(f, Side::Upper, c, radius).0)
        .collect();
    points.extend(refined);
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    Ok(points)
}

/// True when every closed subinterval of `[lo, hi]` of length `2R` contains
/// at least one of the sorted `points`.
pub fn covers_every_window(points: &[f64], window: (f64, f64), radius: f64) -> bool {
    let (lo, hi) = window;
    if hi - lo < 2.0 * radius {
        return true;
    }
    let inside: Vec<f64> = points.iter().copied().filter(|&x| x >= lo && x <= hi).collect();
    let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
        return false;
    };
    let span = 2.0 * radius * (1.0 + 1e-12);
    first - lo <= span && hi - last <= span && inside.windows(2).all(|w| w[1] - w[0] <= span)
}

/// Smallest gap at `a` between `f` and a tangent extremal circle of radius
/// `R`, optimised over the circle center; returns `(gap, center)`.
pub fn point_gap(f: &BoundaryFunction, side: Side, a: f64, radius: f64) -> Result<(f64, f64)> {
    positive("R", radius)?;
    let (lo, hi) = f.window();
    let c_lo = (a - radius).max(lo + radius);
    let c_hi = (a + radius).min(hi - radius);
    if !(c_lo <= c_hi) || !f.contains(a) {
        return Err(Error::OutOfRange { query: a, lo: lo + radius, hi: hi - radius });
    }
    let fa = f.eval(a);
    let gap = |c: f64| {
        let m = extreme(f, side, c, radius).1;
        side.sign() * fa - arc(radius, a - c) - m
    };
    let mut best = (c_lo, gap(c_lo));
    for k in f.node_range(c_lo, c_hi) {
        let c = f.node(k);
        let g = gap(c);
        if g < best.1 {
            best = (c, g);
        }
    }
    let g_hi = gap(c_hi);
    if g_hi < best.1 {
        best = (c_hi, g_hi);
    }
    let step = f.spacing();
    let (cr, gr) = golden_min(gap, (best.0 - step).max(c_lo), (best.0 + step).min(c_hi));
    if gr < best.1 {
        best = (cr, gr);
    }
    Ok((best.1, best.0))
}

/// Tangent slope of a graph pinched between two circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl Slope {
    pub fn signum(self) -> f64 {
        match self {
            Slope::Finite(m) if m == 0.0 => 0.0,
            Slope::Finite(m) => m.signum(),
            Slope::PlusInfinity => 1.0,
            Slope::MinusInfinity => -1.0,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Slope::Finite(m) => Some(m),
            _ => None,
        }
    }
}

fn circle_slope(side: Side, offset: f64, radius: f64) -> Slope {
    // offset = a − c for a circle centred at abscissa c touching at a.
    let sign = -side.sign();
    if offset.abs() >= radius * (1.0 - 1e-9) {
        return if sign * offset > 0.0 { Slope::PlusInfinity } else { Slope::MinusInfinity };
    }
    Slope::Finite(sign * offset / arc(radius, offset))
}

/// Common tangent slope at `a` of the under circle (radius `r_under`) and the
/// upper circle (radius `r_upper`) pinching the graph.
pub fn pinched_slope(f: &BoundaryFunction, a: f64, r_under: f64, r_upper: f64) -> Result<Slope> {
    let (gap_u, c_u) = point_gap(f, Side::Under, a, r_under)?;
    let tol_u = touch_tolerance(f, r_under);
    if gap_u > tol_u {
        return Err(Error::Uncertified {
            reason: format!("no {r_under}-circle touches the graph from below at x = {a} (gap {gap_u:.3e})"),
            witness: Some(a),
        });
    }
    let (gap_o, c_o) = point_gap(f, Side::Upper, a, r_upper)?;
    let tol_o = touch_tolerance(f, r_upper);
    if gap_o > tol_o {
        return Err(Error::Uncertified {
            reason: format!("no {r_upper}-circle touches the graph from above at x = {a} (gap {gap_o:.3e})"),
            witness: Some(a),
        });
    }
    let under = circle_slope(Side::Under, a - c_u, r_under);
    let upper = circle_slope(Side::Upper, a - c_o, r_upper);
    Ok(match (under, upper) {
        (Slope::Finite(m1), Slope::Finite(m2)) => Slope::Finite(0.5 * (m1 + m2)),
        (Slope::Finite(m), _) | (_, Slope::Finite(m)) => Slope::Finite(m),
        (s, _) => s,
    })
}
