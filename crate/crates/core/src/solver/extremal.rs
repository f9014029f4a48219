use rayon::prelude::*;

use super::{solve_dirichlet, solve_js_cap, Case, SidePolicy, Solution, SolverConfig, StripProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalOptions {
    /// Cap height is `sup |f| + cap_margin` over the padded truncation.
    pub cap_margin: f64,
    /// Extra length on each side of the cap solve; defaults to `2l`.
    pub pad: Option<f64>,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        ExtremalOptions {
            cap_margin: 1.0,
            pad: None,
        }
    }
}

/// The largest and smallest discrete solutions on one truncation.
#[derive(Debug, Clone)]
pub struct ExtremalFields {
    pub upper: Solution,
    pub lower: Solution,
    pub cap: f64,
    /// `max(u_lower − u_upper, 0)` over the grid.
    pub ordering_defect: f64,
}

impl ExtremalFields {
    /// `u_upper − u_lower` at every node.
    pub fn gap(&self) -> Vec<f64> {
        let up = self.upper.field.values();
        let lo = self.lower.field.values();
        up.iter().zip(lo).map(|(a, b)| a - b).collect()
    }
}

/// Side data for the upper field: the trace, at the truncation ends, of the
/// capped minimal solve on a truncation padded by `pad` on each side.
fn upper_sides(p: &StripProblem, cfg: &SolverConfig, opts: &ExtremalOptions) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let g = p.grid();
    let pad = opts.pad.unwrap_or(2.0 * p.half_width());
    let k = (pad / g.dx()).round() as usize;
    let pad = k as f64 * g.dx();
    let (lo, hi) = p.truncation();
    let cap = p.boundary().sup_abs_on(lo - pad, hi + pad) + opts.cap_margin;
    let padded = StripProblem::new(
        0.0,
        p.half_width(),
        (lo - pad, hi + pad),
        (g.nx + 2 * k, g.ny),
        p.boundary().clone(),
        SidePolicy::JsCap { cap },
    )?
    .with_rows(g.rows);
    let w = solve_js_cap(&padded, cap, cfg)?.field;
    let left = (0..g.ny).map(|j| w.at(k, j)).collect();
    let right = (0..g.ny).map(|j| w.at(k + g.nx - 1, j)).collect();
    Ok((left, right, cap))
}

pub fn extremal_fields(
    p: &StripProblem,
    case: Case,
    cfg: &SolverConfig,
    opts: &ExtremalOptions,
) -> Result<ExtremalFields> {
    let (upper, lower) = rayon::join(
        || -> Result<(Solution, f64)> {
            let (left, right, cap) = upper_sides(p, cfg, opts)?;
            let q = p.with_sides(SidePolicy::Explicit { left, right })?;
            Ok((solve_dirichlet(&q, cfg)?, cap))
        },
        || solve_dirichlet(&p.with_sides(SidePolicy::Envelope(case))?, cfg),
    );
    let (upper, cap) = upper?;
    let lower = lower?;
    let ordering_defect = lower
        .field
        .values()
        .iter()
        .zip(upper.field.values())
        .fold(0.0f64, |m, (l, u)| m.max(l - u));
    Ok(ExtremalFields {
        upper,
        lower,
        cap,
        ordering_defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapVerdict {
    StrictlyDecreasing,
    /// Decreasing until the gap reaches the numerical floor, and staying there.
    DecreasingToFloor,
    NotDecreasing,
}

/// Gap between the extremal fields on a fixed window, one entry per
/// truncation `[−n, n]`.
#[derive(Debug, Clone)]
pub struct GapSeries {
    pub window: (f64, f64),
    pub truncations: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Node where each gap is attained.
    pub argmax: Vec<(f64, f64)>,
    /// Size below which a gap cannot be distinguished from zero: the solver
    /// residual propagated over the strip width plus rounding of the values.
    pub floor: f64,
    pub strictly_decreasing: bool,
    pub verdict: GapVerdict,
}

struct WindowGap {
    gap: f64,
    node: (f64, f64),
    floor: f64,
}

fn window_gap(e: &ExtremalFields, window: (f64, f64), half_width: f64) -> WindowGap {
    let (upper, lower) = (&e.upper.field, &e.lower.field);
    let g = upper.grid();
    let mut gap = f64::NEG_INFINITY;
    let mut node = (f64::NAN, f64::NAN);
    let mut scale: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let x = g.x(i);
            if x < window.0 - 1e-12 || x > window.1 + 1e-12 {
                continue;
            }
            let d = upper.at(i, j) - lower.at(i, j);
            scale = scale.max(upper.at(i, j).abs()).max(lower.at(i, j).abs());
            if d > gap {
                gap = d;
                node = (x, g.y(j));
            }
        }
    }
    let residual = e.upper.residual.max(e.lower.residual);
    WindowGap {
        gap,
        node,
        floor: 10.0 * residual * half_width * half_width + 64.0 * f64::EPSILON * scale.max(1.0),
    }
}

fn gap_verdict(gaps: &[f64], floor: f64) -> GapVerdict {
    let pairs = || gaps.windows(2);
    if pairs().all(|w| w[1] < w[0]) {
        GapVerdict::StrictlyDecreasing
    } else if pairs().all(|w| w[1] < w[0] || w[1] <= floor) {
        GapVerdict::DecreasingToFloor
    } else {
        GapVerdict::NotDecreasing
    }
}

/// Solves the extremal pair on each truncation `[−n, n]` (same spacing as
/// `template`) and records the largest gap on `window`.
pub fn uniqueness_gap(
    template: &StripProblem,
    case: Case,
    window: (f64, f64),
    truncations: &[f64],
    cfg: &SolverConfig,
    opts: &ExtremalOptions,
) -> Result<GapSeries> {
    if truncations.is_empty() {
        return Err(Error::Grid("no truncations given".into()));
    }
    if truncations.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("truncations must be strictly increasing (nested)".into()));
    }
    if !(window.0 < window.1) || !(-truncations[0] < window.0 && window.1 < truncations[0]) {
        return Err(Error::Grid(format!(
            "window [{}, {}] must lie strictly inside [−{n}, {n}]",
            window.0,
            window.1,
            n = truncations[0]
        )));
    }
    let results: Vec<WindowGap> = truncations
        .par_iter()
        .map(|&n| {
            let p = template.with_truncation((-n, n))?;
            let e = extremal_fields(&p, case, cfg, opts)?;
            log::info!("truncation {n}: extremal fields solved");
            Ok(window_gap(&e, window, template.half_width()))
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = results.iter().map(|r| r.gap).collect();
    let floor = results.iter().map(|r| r.floor).fold(0.0, f64::max);
    let verdict = gap_verdict(&gaps, floor);
    Ok(GapSeries {
        window,
        truncations: truncations.to_vec(),
        argmax: results.iter().map(|r| r.node).collect(),
        strictly_decreasing: verdict == GapVerdict::StrictlyDecreasing,
        gaps,
        floor,
        verdict,
    })
}
