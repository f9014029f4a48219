use cmc_core::solver::{uniqueness_gap, GapVerdict};
use cmc_core::SidePolicy;

use super::{Context, Setup};
use crate::failure::Failure;
use crate::output::{num, Output};
use crate::svg::{LinePlot, Series};

pub fn run(ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let setup = Setup::new(ctx)?;
    setup.certify(out)?;
    let spec = setup.spec;
    let template = setup.strip(spec.grids[0], SidePolicy::Envelope(setup.case))?;
    let margins = &ctx.config.sweep.cap_margins;
    if margins.is_empty() {
        return Err(Failure::Config("sweep.cap_margins is empty".into()));
    }

    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut series = Vec::new();
    for &m in margins {
        let opts = ctx.config.extremal_options(m)?;
        let g = uniqueness_gap(&template, setup.case, spec.window(), &spec.truncations, &setup.solver, &opts)?;
        for (k, &n) in g.truncations.iter().enumerate() {
            let (x, y) = g.argmax[k];
            rows.push(vec![num(m), num(n), num(g.gaps[k]), num(x), num(y), num(g.floor)]);
        }
        out.check_flag(format!("gap_decreasing_M+{}", num(m)), g.verdict != GapVerdict::NotDecreasing);
        let low = g.gaps.iter().copied().fold(f64::INFINITY, f64::min);
        out.check_ge(format!("gap_nonnegative_M+{}", num(m)), low, -g.floor);
        verdicts.push(vec![num(m), format!("{:?}", g.verdict), num(g.floor)]);
        series.push(Series {
            name: format!("margin {}", num(m)),
            points: g.truncations.iter().copied().zip(g.gaps.iter().copied()).collect(),
        });
    }
    out.csv("gap.csv", &["cap_margin", "n", "gap", "x", "y", "floor"], &rows)?;
    out.csv("gap_verdict.csv", &["cap_margin", "verdict", "floor"], &verdicts)?;
    let plot = LinePlot {
        title: "gap between extremal solutions on the window".into(),
        x_label: "truncation n".into(),
        y_label: "max gap".into(),
        log_x: false,
        log_y: true,
        series,
    };
    out.write("gap.svg", plot.render().as_bytes())
}
