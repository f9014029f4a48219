use rayon::prelude::*;

use cmc_core::barrier::HalfCylinder;
use cmc_core::solver::verify_height_estimates;
use cmc_core::ScalarField;

use super::{fmt_point, grid_tag, opt_num, solve_grids, Context, Setup};
use crate::failure::Failure;
use crate::output::{num, Output};

const SYMMETRY_BOUND: f64 = 1e-10;
const MIN_ORDER: f64 = 1.7;

/// L∞ error against the half-cylinder, skipping two rows at each long side.
fn cylinder_error(u: &ScalarField, c: &HalfCylinder) -> Result<f64, Failure> {
    let g = u.grid();
    let mut worst: f64 = 0.0;
    for j in 2..g.ny.saturating_sub(2) {
        for i in 0..g.nx {
            worst = worst.max((u.at(i, j) - c.eval(g.x(i), g.y(j))?).abs());
        }
    }
    Ok(worst)
}

/// Largest `u_lower − u_upper` over the columns inside `window`.
fn window_defect(upper: &ScalarField, lower: &ScalarField, window: (f64, f64)) -> f64 {
    let g = upper.grid();
    let mut worst = f64::NEG_INFINITY;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let x = g.x(i);
            if x >= window.0 - 1e-12 && x <= window.1 + 1e-12 {
                worst = worst.max(lower.at(i, j) - upper.at(i, j));
            }
        }
    }
    worst
}

pub fn run(ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let setup = Setup::new(ctx)?;
    setup.certify(out)?;
    let (solved, exact) = solve_grids(ctx, &setup)?;
    let tol = setup.solver.residual_tol;

    let mut summary = Vec::new();
    let mut convergence: Vec<(usize, usize, f64, f64)> = Vec::new();
    for s in &solved {
        let tag = grid_tag(s.nodes);
        for (name, sol) in &s.fields {
            let u = &sol.field;
            let mut text = Vec::new();
            u.write_csv(&mut text)?;
            out.write(&format!("{name}_{tag}.csv"), &text)?;
            let mut bin = Vec::new();
            u.write_binary(&mut bin)?;
            out.write(&format!("{name}_{tag}.bin"), &bin)?;

            let g = u.grid();
            let symmetry = u.reflection_defect();
            out.check_le(format!("residual_{name}_{tag}"), sol.residual, tol);
            out.check_le(format!("max_principle_excess_{name}_{tag}"), sol.max_principle_excess, 1e-9);
            out.check_le(format!("symmetry_{name}_{tag}"), symmetry, SYMMETRY_BOUND);
            let mut error = None;
            if let Some(c) = &exact {
                let e = cylinder_error(u, c)?;
                let h = g.dx().max(g.dy());
                let mid = g.ny / 2;
                let centre = (0..g.nx)
                    .map(|i| (u.at(i, mid) - c.eval(g.x(i), g.y(mid)).unwrap_or(f64::NAN)).abs())
                    .fold(0.0, f64::max);
                out.check_le(format!("centerline_error_{tag}"), centre, 5.0 * h * h);
                convergence.push((g.nx, g.ny, g.dx(), e));
                error = Some(e);
            }
            summary.push(vec![
                g.nx.to_string(),
                g.ny.to_string(),
                name.to_string(),
                num(sol.residual),
                sol.newton_iterations.to_string(),
                num(sol.max_principle_excess),
                num(symmetry),
                opt_num(error),
                opt_num(s.cap),
                opt_num(s.ordering_defect),
            ]);
        }
        if let (Some(up), Some(lo)) = (s.field("upper"), s.field("lower")) {
            let d = window_defect(&up.field, &lo.field, setup.spec.window());
            out.check_le(format!("ordering_on_window_{tag}"), d, 1e-8);
        }
    }
    out.csv(
        "solve_summary.csv",
        &[
            "nx",
            "ny",
            "field",
            "residual",
            "newton_iterations",
            "max_principle_excess",
            "symmetry_defect",
            "error",
            "cap",
            "ordering_defect",
        ],
        &summary,
    )?;

    if !convergence.is_empty() {
        convergence.sort_by_key(|c| c.0);
        let mut rows = Vec::new();
        for (k, &(nx, ny, h, e)) in convergence.iter().enumerate() {
            let order = (k > 0).then(|| {
                let (_, _, h0, e0) = convergence[k - 1];
                (e0 / e).ln() / (h0 / h).ln()
            });
            if let Some(p) = order {
                out.check_ge(format!("order_{}_to_{nx}", convergence[k - 1].0), p, MIN_ORDER);
            }
            rows.push(vec![nx.to_string(), ny.to_string(), num(h), num(e), opt_num(order)]);
        }
        out.csv("convergence.csv", &["nx", "ny", "h", "error", "order"], &rows)?;
    }
    Ok(())
}

pub fn estimates(ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let setup = Setup::new(ctx)?;
    setup.certify(out)?;
    let (solved, _) = solve_grids(ctx, &setup)?;
    let jobs: Vec<(String, &str, &ScalarField)> = solved
        .iter()
        .flat_map(|s| s.fields.iter().map(move |(name, sol)| (grid_tag(s.nodes), *name, &sol.field)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|(_, _, u)| verify_height_estimates(u, &setup.f, setup.case, &setup.solver))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for ((tag, name, u), report) in jobs.iter().zip(&reports) {
        for c in &report.checks {
            let (x, y) = fmt_point(c.worst_node);
            out.check_le(format!("{}_{name}_{tag}", c.name), c.worst_slack, c.tolerance);
            rows.push(vec![
                u.grid().nx.to_string(),
                u.grid().ny.to_string(),
                name.to_string(),
                c.name.to_string(),
                c.checked.to_string(),
                num(c.worst_slack),
                num(c.tolerance),
                x,
                y,
                c.passed.to_string(),
            ]);
        }
    }
    out.csv(
        "estimates.csv",
        &["nx", "ny", "field", "estimate", "checked", "worst_slack", "tolerance", "x", "y", "passed"],
        &rows,
    )
}
