use rayon::prelude::*;

use cmc_core::boundary_geometry::{
    check_uniform_under_condition, covers_every_window, find_upper_condition_points, rolle_point, Verdict,
};

use super::{opt_num, Context};
use crate::failure::Failure;
use crate::output::{num, Output};

pub fn run(ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let f = ctx.config.boundary(&ctx.base)?;
    let spec = &ctx.config.circle;
    if spec.under_radii.is_empty() && spec.upper_radius.is_none() && spec.rolle.is_none() {
        return Err(Failure::Config(
            "circle-check needs under_radii, upper_radius or rolle in [circle]".into(),
        ));
    }
    let mut first_failure: Option<Failure> = None;

    let reports = spec
        .under_radii
        .par_iter()
        .map(|&r| check_uniform_under_condition(&f, r, None))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for rep in &reports {
        let r = rep.radius;
        rows.push(vec![
            num(r),
            format!("{:?}", rep.verdict).to_lowercase(),
            num(rep.tested_window.0),
            num(rep.tested_window.1),
            num(rep.tolerance),
            num(rep.worst_gap),
            opt_num(rep.witness),
            rep.touched.len().to_string(),
            rep.violations.len().to_string(),
        ]);
        for (lo, hi) in rep.violation_intervals(f.spacing()) {
            bad.push(vec![num(r), num(lo), num(hi)]);
        }
        out.check_flag(format!("under_condition_R={}", num(r)), rep.verdict == Verdict::Holds);
        if rep.verdict != Verdict::Holds && first_failure.is_none() {
            first_failure = Some(Failure::Hypothesis {
                reason: format!("uniform {}-circle under condition: {:?}", num(r), rep.verdict),
                witness: rep.witness,
            });
        }
    }
    if !reports.is_empty() {
        out.csv(
            "circle.csv",
            &[
                "radius",
                "verdict",
                "tested_lo",
                "tested_hi",
                "tolerance",
                "worst_gap",
                "witness",
                "touched",
                "violations",
            ],
            &rows,
        )?;
        out.csv("violations.csv", &["radius", "lo", "hi"], &bad)?;
    }

    if let Some(r) = spec.upper_radius {
        let points = find_upper_condition_points(&f, r)?;
        let rows: Vec<Vec<String>> = points.iter().map(|&x| vec![num(x), num(f.eval(x))]).collect();
        out.csv("upper_points.csv", &["x", "f"], &rows)?;
        let covered = covers_every_window(&points, f.window(), r);
        out.check_flag(format!("upper_points_cover_R={}", num(r)), covered);
        if !covered && first_failure.is_none() {
            first_failure = Some(Failure::Hypothesis {
                reason: format!("some window of length {} has no {}-circle upper point", num(2.0 * r), num(r)),
                witness: None,
            });
        }
    }

    if let Some([a, b]) = spec.rolle {
        let [r_under, r_upper] = spec
            .rolle_radii
            .ok_or_else(|| Failure::Config("rolle needs rolle_radii = [R_under, R_upper]".into()))?;
        match rolle_point(&f, r_under, r_upper, a, b) {
            Ok(p) => {
                out.csv(
                    "rolle.csv",
                    &["a", "b", "abscissa", "slope", "value"],
                    &[vec![num(a), num(b), num(p.abscissa), num(p.slope), num(f.eval(p.abscissa))]],
                )?;
                out.check_flag("rolle_certified", true);
            }
            Err(e) => {
                let e = Failure::from(e);
                if !matches!(e, Failure::Hypothesis { .. }) {
                    return Err(e);
                }
                out.check_flag("rolle_certified", false);
                first_failure.get_or_insert(e);
            }
        }
    }

    match first_failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
