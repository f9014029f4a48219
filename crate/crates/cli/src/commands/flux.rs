use rayon::prelude::*;

use cmc_core::flux::{
    divergence_diagnostic, gamma_portion, integrate_difference, make_arc, stokes_residual, ArcKind, ArcPath,
    ArcSide, OneForm,
};
use cmc_core::solver::Case;

use super::{grid_tag, solve_grids, Context, Setup};
use crate::config::ArcSides;
use crate::failure::Failure;
use crate::output::{num, Output};
use crate::svg::{LinePlot, Series};

const LENGTH_SLACK: f64 = 1e-6;

pub fn run(ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let setup = Setup::new(ctx)?;
    let spec = &ctx.config.flux;
    if spec.arcs.is_empty() && spec.rectangles.is_empty() {
        return Err(Failure::Config("flux needs arcs or rectangles in [flux]".into()));
    }
    for r in &spec.rectangles {
        if !(r[0] < r[1] && r[2] < r[3]) {
            return Err(Failure::Config(format!("rectangle {r:?} must satisfy x0 < x1 and y0 < y1")));
        }
    }
    setup.certify(out)?;
    let (mut solved, _) = solve_grids(ctx, &setup)?;
    solved.sort_by_key(|s| s.nodes[0] * s.nodes[1]);
    let h = setup.curvature;

    // Stokes residuals on every grid, then monotone decrease under refinement.
    let mut stokes_rows = Vec::new();
    let names: Vec<&str> = solved[0].fields.iter().map(|(n, _)| *n).collect();
    let mut history: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); spec.rectangles.len()]; names.len()];
    for s in &solved {
        for (fi, (name, sol)) in s.fields.iter().enumerate() {
            let form = OneForm::new(&sol.field);
            let res = spec
                .rectangles
                .par_iter()
                .map(|r| stokes_residual(&form, (r[0], r[1]), (r[2], r[3])))
                .collect::<Result<Vec<_>, _>>()?;
            for (k, (r, v)) in spec.rectangles.iter().zip(&res).enumerate() {
                history[fi][k].push(*v);
                stokes_rows.push(vec![
                    s.nodes[0].to_string(),
                    s.nodes[1].to_string(),
                    name.to_string(),
                    num(r[0]),
                    num(r[1]),
                    num(r[2]),
                    num(r[3]),
                    num(*v),
                ]);
            }
        }
    }
    if !spec.rectangles.is_empty() {
        out.csv("stokes.csv", &["nx", "ny", "field", "x0", "x1", "y0", "y1", "residual"], &stokes_rows)?;
        if solved.len() > 1 {
            for (fi, name) in names.iter().enumerate() {
                for (k, seq) in history[fi].iter().enumerate() {
                    out.check_flag(
                        format!("stokes_decreasing_{name}_rect{k}"),
                        seq.windows(2).all(|w| w[1] < w[0]),
                    );
                }
            }
        }
    }

    if spec.arcs.is_empty() {
        return Ok(());
    }
    let finest = solved.last().expect("at least one grid");
    let tag = grid_tag(finest.nodes);
    let kind = match setup.case {
        Case::Collin => ArcKind::Collin,
        Case::Lopez { .. } => ArcKind::Lopez {
            half_height: setup.half_width,
        },
    };
    let sides: &[(ArcSide, &str)] = match spec.arc_sides {
        ArcSides::Plus => &[(ArcSide::Plus, "+")],
        ArcSides::Minus => &[(ArcSide::Minus, "-")],
        ArcSides::Both => &[(ArcSide::Plus, "+"), (ArcSide::Minus, "-")],
    };
    let mut arcs: Vec<(f64, &str, ArcPath)> = Vec::new();
    for &a in &spec.arcs {
        for &(side, sign) in sides {
            arcs.push((a, sign, make_arc(kind, side, a, h, spec.arc_samples)?));
        }
    }

    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (name, sol) in &finest.fields {
        let form = OneForm::new(&sol.field);
        let values = arcs
            .par_iter()
            .map(|(_, _, arc)| divergence_diagnostic(&form, arc))
            .collect::<Result<Vec<_>, _>>()?;
        let mut points = Vec::new();
        for ((a, sign, _), d) in arcs.iter().zip(&values) {
            let id = format!("C{sign}({})/{name}", num(*a));
            rows.push(vec![id.clone(), num(d.flux.length), num(d.flux.value), num(d.ratio), num(d.flux.error)]);
            out.check_le(format!("length_bound_{id}"), d.ratio.abs(), 1.0 + LENGTH_SLACK);
            if *sign == "+" {
                points.push((*a, d.ratio));
            }
        }
        if !points.is_empty() {
            series.push(Series {
                name: name.to_string(),
                points,
            });
        }
    }
    out.csv("flux.csv", &["path", "length", "integral", "ratio", "error"], &rows)?;

    if let (Some(up), Some(lo)) = (finest.field("upper"), finest.field("lower")) {
        let (fu, fl) = (OneForm::new(&up.field), OneForm::new(&lo.field));
        let mut gamma_rows = Vec::new();
        for (a, sign, arc) in arcs.iter().filter(|(_, s, _)| *s == "+") {
            for &c in &spec.gamma_c {
                let pieces = gamma_portion(arc, &up.field, &lo.field, c)?;
                let (mut length, mut flux, mut error) = (0.0, 0.0, 0.0);
                for p in &pieces {
                    let v = integrate_difference(&fu, &fl, p)?;
                    length += v.length;
                    flux += v.value;
                    error += v.error;
                }
                let id = format!("Gamma{sign}({})", num(*a));
                out.check_le(format!("gamma_bound_{id}_c={}", num(c)), flux.abs(), 2.0 * length * (1.0 + LENGTH_SLACK));
                gamma_rows.push(vec![
                    id,
                    num(c),
                    pieces.len().to_string(),
                    num(length),
                    num(flux),
                    num(2.0 * length),
                    num(error),
                ]);
            }
        }
        out.csv("gamma.csv", &["path", "c", "pieces", "length", "flux_difference", "bound", "error"], &gamma_rows)?;
    }

    if !series.is_empty() {
        let plot = LinePlot {
            title: format!("normalized flux across C+(a), grid {tag}"),
            x_label: "a".into(),
            y_label: "flux / length".into(),
            log_x: false,
            log_y: false,
            series,
        };
        out.write("flux_ratio.svg", plot.render().as_bytes())?;
    }
    Ok(())
}
