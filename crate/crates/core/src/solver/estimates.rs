use super::{solve_js_cap, Case, SidePolicy, SolverConfig, StripProblem};
use crate::barrier::{horizontal_cylinder_bound, lower_envelope, CylinderMode};
use crate::boundary_geometry::BoundaryFunction;
use crate::error::Result;
use crate::field::ScalarField;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation `bound side − allowed side`; negative when every
    /// node is strictly inside the bound.
    pub worst_slack: f64,
    pub worst_node: Option<(f64, f64)>,
    /// Number of nodes where the estimate applied.
    pub checked: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub checks: Vec<EstimateCheck>,
}

impl EstimateReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&EstimateCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    node: Option<(f64, f64)>,
    checked: usize,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            worst: f64::NEG_INFINITY,
            node: None,
            checked: 0,
        }
    }

    /// Records `excess = lhs − rhs` for an inequality `lhs ≤ rhs`.
    fn push(&mut self, excess: f64, x: f64, y: f64) {
        self.checked += 1;
        if excess > self.worst {
            self.worst = excess;
            self.node = Some((x, y));
        }
    }

    fn finish(self) -> EstimateCheck {
        EstimateCheck {
            name: self.name,
            passed: self.worst <= self.tolerance,
            worst_slack: if self.checked == 0 { 0.0 } else { self.worst },
            worst_node: self.node,
            checked: self.checked,
            tolerance: self.tolerance,
        }
    }
}

/// Checks the a priori height estimates on a solved field:
///
/// * `cap`: `u ≤ w` for the capped minimal solve `w` on the same grid;
/// * `envelope`: `u ≥` barrier lower envelope of the case;
/// * `monotone_cylinder`: `u ≤ f(x) + 1/(2H)` on columns where `f` is monotone
///   over a neighbourhood of length `1/H` inside the truncation;
/// * `upper_circle`: `u(x, ·) ≤ f(x)` where `f` has a `1/(2H)`-circle upper
///   condition whose disk fits in the truncation;
/// * `symmetry`: `|u(x, y) − u(x, −y)| ≤ 1e-10`.
///
/// Estimates use the tolerance `10 h²`, `h = max(dx, dy)`.
pub fn verify_height_estimates(
    u: &ScalarField,
    f: &BoundaryFunction,
    case: Case,
    cfg: &SolverConfig,
) -> Result<EstimateReport> {
    let g = *u.grid();
    let curvature = u.curvature();
    let h = g.dx().max(g.dy());
    let tol = 10.0 * h * h;
    let half_width = 0.5 * (g.y_hi - g.y_lo);
    let (lo, hi) = (g.x_lo, g.x_hi);
    let rows = || (0..g.ny).map(|j| (j, g.y(j)));

    let side_max = (0..g.ny)
        .flat_map(|j| [u.at(0, j), u.at(g.nx - 1, j)])
        .fold(f64::NEG_INFINITY, f64::max);
    let cap = side_max.max(f.sup_abs_on(lo, hi)) + 1.0;
    let p = StripProblem::new(0.0, half_width, (lo, hi), (g.nx, g.ny), f.clone(), SidePolicy::JsCap { cap })?
        .with_rows(g.rows);
    let w = solve_js_cap(&p, cap, cfg)?.field;
    let mut lemma_cap = Tally::new("cap", tol);
    for j in 0..g.ny {
        for i in 0..g.nx {
            lemma_cap.push(u.at(i, j) - w.at(i, j), g.x(i), g.y(j));
        }
    }

    let env = lower_envelope(f, case, curvature, &g)?;
    let mut lemma_env = Tally::new("envelope", tol);
    for j in 0..g.ny {
        for i in 0..g.nx {
            lemma_env.push(env.at(i, j) - u.at(i, j), g.x(i), g.y(j));
        }
    }

    let radius = 0.5 / curvature;
    let mut monotone = Tally::new("monotone_cylinder", tol);
    let mut upper = Tally::new("upper_circle", tol);
    let local = f.rewindowed((lo, hi))?;
    for i in 0..g.nx {
        let x = g.x(i);
        let modes = [
            (x - 2.0 * radius >= lo - 1e-12).then_some(CylinderMode::Monotone { x0: x - 2.0 * radius }),
            (x + 2.0 * radius <= hi + 1e-12).then_some(CylinderMode::MonotoneLeft { x0: x + 2.0 * radius }),
        ];
        let bound = modes
            .into_iter()
            .flatten()
            .filter_map(|m| horizontal_cylinder_bound(f, x, curvature, m).ok())
            .fold(f64::INFINITY, f64::min);
        if bound.is_finite() {
            for (j, y) in rows() {
                monotone.push(u.at(i, j) - bound, x, y);
            }
        }
        if local.contains(x) {
            if let Ok(b) = horizontal_cylinder_bound(&local, x, curvature, CylinderMode::UpperCircle) {
                for (j, y) in rows() {
                    upper.push(u.at(i, j) - b, x, y);
                }
            }
        }
    }

    let mut symmetry = Tally::new("symmetry", 1e-10);
    for j in 0..g.ny {
        for i in 0..g.nx {
            symmetry.push((u.at(i, j) - u.at(i, g.ny - 1 - j)).abs(), g.x(i), g.y(j));
        }
    }

    Ok(EstimateReport {
        checks: vec![
            lemma_cap.finish(),
            lemma_env.finish(),
            monotone.finish(),
            upper.finish(),
            symmetry.finish(),
        ],
    })
}
