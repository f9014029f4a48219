//! Dirichlet problems for the constant mean curvature equation on
//! rectangular truncations of a strip.

mod banded;
mod discrete;
mod estimates;
mod extremal;

pub use estimates::{verify_height_estimates, EstimateCheck, EstimateReport};
pub use extremal::{extremal_fields, uniqueness_gap, ExtremalFields, ExtremalOptions, GapSeries, GapVerdict};

use crate::barrier::lower_envelope;
use crate::boundary_geometry::BoundaryFunction;
use crate::error::{positive, Error, Result};
use crate::field::{Grid, RowSpacing, ScalarField};
use crate::nodoid;
use discrete::Discretization;

/// Which uniqueness regime the strip belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Case {
    /// Limiting width `l = 1/(2H)`, convex boundary datum.
    Collin,
    /// Width `l = h_t(H)` for the nodoid with neck radius `neck`.
    Lopez { neck: f64 },
}

impl Case {
    /// Half-width `l` of the strip attached to the case.
    pub fn half_width(&self, curvature: f64) -> Result<f64> {
        positive("H", curvature)?;
        match *self {
            Case::Collin => Ok(0.5 / curvature),
            Case::Lopez { neck } => Ok(nodoid::params_from_t(curvature, neck)?.half_height),
        }
    }
}

/// Dirichlet data on the two sides `x = x_lo` and `x = x_hi`. Corner nodes
/// always take the boundary datum `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum SidePolicy {
    /// One value per grid row, bottom to top.
    Explicit { left: Vec<f64>, right: Vec<f64> },
    /// Constant height on both sides.
    JsCap { cap: f64 },
    /// Trace of the barrier lower envelope.
    Envelope(Case),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Max-norm bound on the discrete residual `div(∇u/W) − 2H`.
    pub residual_tol: f64,
    pub max_newton: usize,
    /// Smallest line-search step before a Newton solve is declared diverged.
    pub min_damping: f64,
    /// Number of curvature levels `H_k = (k/K)H` after the minimal solve.
    pub continuation_steps: usize,
    /// How many times a failed continuation step may be halved.
    pub max_refinements: usize,
    /// Relative residual at which iterative refinement of the linear solve stops.
    pub linear_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_tol: 1e-9,
            max_newton: 200,
            min_damping: 1e-8,
            continuation_steps: 4,
            max_refinements: 8,
            linear_tol: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        positive("residual_tol", self.residual_tol)?;
        positive("min_damping", self.min_damping)?;
        positive("linear_tol", self.linear_tol)?;
        for (name, v) in [
            ("max_newton", self.max_newton),
            ("continuation_steps", self.continuation_steps),
        ] {
            if v == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    value: 0.0,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }
}

/// `div(∇u/√(1+|∇u|²)) = 2H` on `[x_lo, x_hi] × [−l, l]` with `u = f(x)` on
/// `y = ±l`.
#[derive(Debug, Clone)]
pub struct StripProblem {
    curvature: f64,
    half_width: f64,
    grid: Grid,
    boundary: BoundaryFunction,
    sides: SidePolicy,
}

impl StripProblem {
    pub fn new(
        curvature: f64,
        half_width: f64,
        truncation: (f64, f64),
        nodes: (usize, usize),
        boundary: BoundaryFunction,
        sides: SidePolicy,
    ) -> Result<Self> {
        if !(curvature >= 0.0) || !curvature.is_finite() {
            return Err(Error::InvalidParameter {
                name: "H",
                value: curvature,
                reason: "curvature must be finite and nonnegative",
            });
        }
        positive("l", half_width)?;
        if curvature > 0.0 && 2.0 * half_width * curvature > 1.0 + 1e-12 {
            return Err(Error::InfeasibleWidth {
                width: 2.0 * half_width,
                limit: 1.0 / curvature,
            });
        }
        let grid = Grid::new(truncation, (-half_width, half_width), nodes.0, nodes.1)?;
        if !boundary.contains(grid.x_lo) || !boundary.contains(grid.x_hi) {
            let (lo, hi) = boundary.window();
            return Err(Error::OutOfRange {
                query: if boundary.contains(grid.x_lo) { grid.x_hi } else { grid.x_lo },
                lo,
                hi,
            });
        }
        let p = StripProblem {
            curvature,
            half_width,
            grid,
            boundary,
            sides,
        };
        p.check_sides()?;
        Ok(p)
    }

    fn check_sides(&self) -> Result<()> {
        match &self.sides {
            SidePolicy::Explicit { left, right } => {
                if left.len() != self.grid.ny || right.len() != self.grid.ny {
                    return Err(Error::Grid(format!(
                        "side data needs {} values per side, got {} and {}",
                        self.grid.ny,
                        left.len(),
                        right.len()
                    )));
                }
                if left.iter().chain(right).any(|v| !v.is_finite()) {
                    return Err(Error::Grid("side data must be finite".into()));
                }
            }
            SidePolicy::JsCap { cap } => {
                if !cap.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "M",
                        value: *cap,
                        reason: "cap height must be finite",
                    });
                }
            }
            SidePolicy::Envelope(_) => {}
        }
        Ok(())
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn boundary(&self) -> &BoundaryFunction {
        &self.boundary
    }

    pub fn sides(&self) -> &SidePolicy {
        &self.sides
    }

    pub fn truncation(&self) -> (f64, f64) {
        (self.grid.x_lo, self.grid.x_hi)
    }

    /// Places the grid rows according to `rows`.
    pub fn with_rows(mut self, rows: RowSpacing) -> Self {
        self.grid = self.grid.with_rows(rows);
        self
    }

    pub fn with_sides(&self, sides: SidePolicy) -> Result<Self> {
        let p = StripProblem {
            sides,
            ..self.clone()
        };
        p.check_sides()?;
        Ok(p)
    }

    pub fn with_curvature(&self, curvature: f64) -> Result<Self> {
        Ok(StripProblem::new(
            curvature,
            self.half_width,
            self.truncation(),
            (self.grid.nx, self.grid.ny),
            self.boundary.clone(),
            self.sides.clone(),
        )?
        .with_rows(self.grid.rows))
    }

    /// Same spacing on a different truncation; the node count is rounded so
    /// that `dx` is preserved when the length is a multiple of it.
    pub fn with_truncation(&self, truncation: (f64, f64)) -> Result<Self> {
        let nx = ((truncation.1 - truncation.0) / self.grid.dx()).round() as usize + 1;
        Ok(StripProblem::new(
            self.curvature,
            self.half_width,
            truncation,
            (nx, self.grid.ny),
            self.boundary.clone(),
            self.sides.clone(),
        )?
        .with_rows(self.grid.rows))
    }

    /// Full-grid vector with the Dirichlet data on boundary nodes and zeros inside.
    pub fn dirichlet_data(&self) -> Result<Vec<f64>> {
        let g = &self.grid;
        let (left, right): (Vec<f64>, Vec<f64>) = match &self.sides {
            SidePolicy::Explicit { left, right } => (left.clone(), right.clone()),
            SidePolicy::JsCap { cap } => (vec![*cap; g.ny], vec![*cap; g.ny]),
            SidePolicy::Envelope(case) => {
                let env = lower_envelope(&self.boundary, *case, self.curvature, g)?;
                (
                    (0..g.ny).map(|j| env.at(0, j)).collect(),
                    (0..g.ny).map(|j| env.at(g.nx - 1, j)).collect(),
                )
            }
        };
        let mut u = vec![0.0; g.len()];
        for j in 0..g.ny {
            u[g.index(0, j)] = left[j];
            u[g.index(g.nx - 1, j)] = right[j];
        }
        for i in 0..g.nx {
            let fx = self.boundary.eval(g.x(i));
            u[g.index(i, 0)] = fx;
            u[g.index(i, g.ny - 1)] = fx;
        }
        Ok(u)
    }
}

/// A converged discrete solution with solver diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ScalarField,
    /// Max-norm of the discrete residual at the final iterate.
    pub residual: f64,
    pub newton_iterations: usize,
    /// Curvature levels visited by the continuation, the final one included.
    pub levels: Vec<f64>,
    /// `max(interior) − max(boundary)`; nonpositive for a subsolution of the
    /// minimal surface equation.
    pub max_principle_excess: f64,
}

/// Interior residual `div_h(∇u/W) − 2H` of the conservative discretisation;
/// boundary nodes carry zero.
pub fn assemble_residual(u: &ScalarField, curvature: f64) -> ScalarField {
    let d = Discretization::new(u.grid());
    let r = d.residual(u.values(), curvature);
    ScalarField::new(*u.grid(), curvature, r).expect("residual of a finite field is finite")
}

/// Transfinite (Coons) interpolation of the boundary values.
fn coons(grid: &Grid, data: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut u = data.to_vec();
    let at = |i: usize, j: usize| data[j * nx + i];
    for j in 1..ny - 1 {
        let t = j as f64 / (ny - 1) as f64;
        for i in 1..nx - 1 {
            let s = i as f64 / (nx - 1) as f64;
            let lx = (1.0 - s) * at(0, j) + s * at(nx - 1, j);
            let ly = (1.0 - t) * at(i, 0) + t * at(i, ny - 1);
            let corners = (1.0 - s) * (1.0 - t) * at(0, 0)
                + s * (1.0 - t) * at(nx - 1, 0)
                + (1.0 - s) * t * at(0, ny - 1)
                + s * t * at(nx - 1, ny - 1);
            u[j * nx + i] = lx + ly - corners;
        }
    }
    u
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton iteration for the energy `area(u) + 2H Σ u dx dy`; a step is
/// accepted when it decreases either the energy (Armijo) or the gradient norm.
fn newton(d: &Discretization, u: &mut [f64], curvature: f64, cfg: &SolverConfig) -> Result<(usize, f64)> {
    let layout = &d.layout;
    let scaled_max = |g: &[f64]| {
        g.iter()
            .enumerate()
            .fold(0.0f64, |m, (k, v)| m.max(v.abs() / d.unknown_area(k)))
    };
    let mut g = d.reduced_gradient(u, curvature);
    let mut residual = scaled_max(&g);
    for it in 0..cfg.max_newton {
        if residual <= cfg.residual_tol {
            return Ok((it, residual));
        }
        let mut h = d.hessian(u);
        let chol = match h.cholesky() {
            Ok(c) => c,
            Err(_) => {
                // Rounding can push the smallest pivots of a nearly singular
                // Hessian below zero; shift the diagonal until it factors.
                let mut shift = 1e-12 * h.max_diagonal();
                loop {
                    let mut shifted = h.clone();
                    shifted.shift_diagonal(shift);
                    if let Ok(c) = shifted.cholesky() {
                        h = shifted;
                        break c;
                    }
                    shift *= 10.0;
                    if !shift.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: 0 });
                    }
                }
            }
        };
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut step = chol.solve(&rhs);
        let rhs_norm = norm2(&rhs);
        for _ in 0..2 {
            let hs = h.mul(&step);
            let r: Vec<f64> = rhs.iter().zip(&hs).map(|(a, b)| a - b).collect();
            if norm2(&r) <= cfg.linear_tol * rhs_norm {
                break;
            }
            let corr = chol.solve(&r);
            for (s, c) in step.iter_mut().zip(&corr) {
                *s += c;
            }
        }
        let e0 = d.energy(u, curvature);
        let slope: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
        let g_norm = norm2(&g);
        let mut alpha = 1.0;
        let mut trial = u.to_vec();
        loop {
            for (m, s) in step.iter().enumerate() {
                let n = layout.node(m);
                trial[n] = u[n] + alpha * s;
            }
            let e1 = d.energy(&trial, curvature);
            let g1 = d.reduced_gradient(&trial, curvature);
            let armijo = e1 <= e0 + 1e-4 * alpha * slope;
            // Near convergence the energy change drowns in rounding; the
            // gradient norm then decides.
            let flat = (e1 - e0).abs() <= 1e-13 * e0.abs().max(1.0);
            let smaller = norm2(&g1) < (1.0 - 1e-4 * alpha) * g_norm;
            if e1.is_finite() && (armijo || (flat && smaller)) {
                log::trace!("newton {it} at H = {curvature}: step {alpha}, residual {:e}", scaled_max(&g1));
                u.copy_from_slice(&trial);
                g = g1;
                residual = scaled_max(&g);
                break;
            }
            alpha *= 0.5;
            if alpha < cfg.min_damping {
                return Err(Error::Diverged {
                    curvature,
                    iterations: it + 1,
                    residual,
                });
            }
        }
    }
    if residual <= cfg.residual_tol {
        Ok((cfg.max_newton, residual))
    } else {
        Err(Error::Diverged {
            curvature,
            iterations: cfg.max_newton,
            residual,
        })
    }
}

/// Solves the discrete Dirichlet problem by continuation in the curvature,
/// starting from the minimal surface with the same boundary data.
pub fn solve_dirichlet(p: &StripProblem, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let grid = p.grid();
    let data = p.dirichlet_data()?;
    let d = Discretization::new(grid);
    let mut u = d.harmonic(&coons(grid, &data))?;
    let (mut iterations, mut residual) = newton(&d, &mut u, 0.0, cfg)?;
    let target = p.curvature();
    let mut levels = vec![0.0];
    let mut level = 0.0;
    let mut step = target / cfg.continuation_steps as f64;
    let mut refinements = 0;
    while level < target {
        let mut next = level + step;
        if next >= target * (1.0 - 1e-12) {
            next = target;
        }
        let mut trial = u.clone();
        match newton(&d, &mut trial, next, cfg) {
            Ok((its, res)) => {
                iterations += its;
                residual = res;
                u = trial;
                level = next;
                levels.push(next);
                log::debug!("continuation level H = {next} reached in {its} Newton steps");
            }
            Err(e) => {
                refinements += 1;
                if refinements > cfg.max_refinements {
                    return Err(e);
                }
                step *= 0.5;
                log::debug!("continuation step to H = {next} failed ({e}); halving");
            }
        }
    }
    let (mut bmax, mut imax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let v = u[grid.index(i, j)];
            if grid.is_boundary(i, j) {
                bmax = bmax.max(v);
            } else {
                imax = imax.max(v);
            }
        }
    }
    let excess = imax - bmax;
    if excess > 1e-9 * (1.0 + bmax.abs()) {
        log::warn!("interior maximum exceeds boundary maximum by {excess:e}");
    }
    Ok(Solution {
        field: ScalarField::new(*grid, target, u)?,
        residual,
        newton_iterations: iterations,
        levels,
        max_principle_excess: excess,
    })
}

/// Minimal-surface solve with constant side height `cap`, the truncated
/// stand-in for side data `+∞`.
pub fn solve_js_cap(p: &StripProblem, cap: f64, cfg: &SolverConfig) -> Result<Solution> {
    let (lo, hi) = p.truncation();
    let sup = p.boundary().sup_abs_on(lo, hi);
    if !(cap > sup) {
        return Err(Error::InvalidParameter {
            name: "M",
            value: cap,
            reason: "cap height must exceed sup |f| on the truncation",
        });
    }
    let q = p.with_curvature(0.0)?.with_sides(SidePolicy::JsCap { cap })?;
    solve_dirichlet(&q, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::HalfCylinder;
    use crate::boundary_geometry::Expr;

    fn flat(window: (f64, f64)) -> BoundaryFunction {
        BoundaryFunction::closed(Expr::Constant(0.0), window, 0.05).unwrap()
    }

    #[test]
    fn width_gate() {
        let e = StripProblem::new(0.5, 1.01, (-1.0, 1.0), (5, 5), flat((-2.0, 2.0)), SidePolicy::JsCap { cap: 1.0 });
        assert!(matches!(e, Err(Error::InfeasibleWidth { .. })));
        assert!(StripProblem::new(0.5, 1.0, (-1.0, 1.0), (5, 5), flat((-2.0, 2.0)), SidePolicy::JsCap { cap: 1.0 }).is_ok());
        assert!(StripProblem::new(0.0, 50.0, (-1.0, 1.0), (5, 5), flat((-2.0, 2.0)), SidePolicy::JsCap { cap: 1.0 }).is_ok());
    }

    #[test]
    fn zero_field_residual_is_minus_two_h() {
        let g = Grid::new((-1.0, 1.0), (-1.0, 1.0), 9, 9).unwrap();
        let u = ScalarField::from_fn(g, 0.5, |_, _| 0.0).unwrap();
        let r = assemble_residual(&u, 0.5);
        for j in 0..9 {
            for i in 0..9 {
                let expect = if g.is_boundary(i, j) { 0.0 } else { -1.0 };
                assert_eq!(r.at(i, j), expect);
            }
        }
    }

    #[test]
    fn half_cylinder_residual_is_second_order() {
        let c = HalfCylinder::new(0.3, 0.0, 0.0, 0.5).unwrap();
        let mut errs = Vec::new();
        for n in [33, 65, 129] {
            let g = Grid::new((-0.8, 0.8), (-0.5, 0.5), n, n).unwrap();
            let u = ScalarField::from_fn(g, 0.5, |x, y| c.eval(x, y).unwrap()).unwrap();
            let r = assemble_residual(&u, 0.5);
            errs.push(r.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn minimal_plane_is_exact() {
        let f = BoundaryFunction::closed(Expr::Affine { slope: 0.7, intercept: -0.2 }, (-3.0, 3.0), 0.05).unwrap();
        let g_side = |x: f64| (0..9).map(move |_| 0.7 * x - 0.2).collect::<Vec<_>>();
        let p = StripProblem::new(
            0.0,
            1.0,
            (-2.0, 2.0),
            (17, 9),
            f,
            SidePolicy::Explicit { left: g_side(-2.0), right: g_side(2.0) },
        )
        .unwrap();
        let s = solve_dirichlet(&p, &SolverConfig::default()).unwrap();
        let g = s.field.grid().clone();
        for n in 0..g.len() {
            let x = g.x(n % g.nx);
            assert!((s.field.values()[n] - (0.7 * x - 0.2)).abs() < 1e-12);
        }
    }

    #[test]
    fn solution_is_symmetric_and_converged() {
        let f = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.0, 1.0]), (-3.0, 3.0), 0.05).unwrap();
        let p = StripProblem::new(0.5, 1.0, (-2.0, 2.0), (33, 17), f, SidePolicy::JsCap { cap: 6.0 }).unwrap();
        let s = solve_dirichlet(&p, &SolverConfig::default()).unwrap();
        assert!(s.residual <= 1e-9);
        assert!(s.field.reflection_defect() <= 1e-10);
        let r = assemble_residual(&s.field, 0.5);
        assert!(r.values().iter().all(|v| v.abs() <= 1e-9));
        assert!(s.max_principle_excess <= 0.0);
    }

    #[test]
    fn js_cap_rejects_low_cap() {
        let f = BoundaryFunction::closed(Expr::Constant(2.0), (-3.0, 3.0), 0.05).unwrap();
        let p = StripProblem::new(0.5, 1.0, (-2.0, 2.0), (9, 9), f, SidePolicy::JsCap { cap: 6.0 }).unwrap();
        assert!(solve_js_cap(&p, 1.5, &SolverConfig::default()).is_err());
    }
}
