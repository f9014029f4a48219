use rayon::prelude::*;

use cmc_core::nodoid::{self, NodoidParams};

use super::Context;
use crate::failure::Failure;
use crate::output::{num, Output};
use crate::svg::{LinePlot, Series};

const RESIDUAL_BOUND: f64 = 1e-6;

pub fn run(ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let spec = ctx
        .config
        .nodoid
        .as_ref()
        .ok_or_else(|| Failure::Config("nodoid-table needs a [nodoid] table".into()))?;
    let ts = spec.neck_radii()?;
    spec.check_profiles()?;
    let h = spec.curvature;

    let params: Vec<NodoidParams> = ts
        .par_iter()
        .map(|&t| nodoid::params_from_t(h, t))
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<String>> = params
        .iter()
        .map(|p| {
            vec![
                num(p.neck),
                num(p.first_integral),
                num(p.max_radius),
                num(p.half_height),
                num(p.neck_gap()),
                num(p.half_height_error),
            ]
        })
        .collect();
    out.csv("nodoid.csv", &["t", "c", "rho", "h", "rho_minus_t", "h_error"], &rows)?;

    // Dilation puts every member at H = 1 with neck tH, so the limit checks
    // apply when the range reaches tH ≤ 1e-3 or tH ≥ 100.
    let limit = 0.5 / h;
    let sorted = ts.windows(2).all(|w| w[1] > w[0]);
    if params.len() > 1 && sorted {
        out.check_flag(
            "h_strictly_increasing",
            params.windows(2).all(|w| w[1].half_height > w[0].half_height),
        );
        out.check_flag(
            "rho_strictly_increasing",
            params.windows(2).all(|w| w[1].max_radius > w[0].max_radius),
        );
    }
    let h_max = params.iter().map(|p| p.half_height).fold(0.0, f64::max);
    out.check_le("h_max_below_half_inverse_H", h_max, limit);
    if let Some(last) = params.iter().rfind(|p| p.neck * h >= 100.0) {
        out.check_le("h_large_t_to_half_inverse_H", (last.half_height - limit).abs(), 1e-2 / h);
    }
    if let Some(first) = params.iter().find(|p| p.neck * h <= 1e-3) {
        out.check_le("h_small_t_to_zero", first.half_height, 1e-2 / h);
    }
    if let Some(last) = params.iter().rfind(|p| p.neck * h >= 1000.0) {
        out.check_le("rho_minus_t_to_half_inverse_H", (last.neck_gap() - limit).abs(), 1e-3 / h);
    }

    if spec.profiles.is_empty() {
        return Ok(());
    }
    let tables = spec
        .profiles
        .par_iter()
        .map(|&t| nodoid::profile(&nodoid::params_from_t(h, t)?, spec.profile_samples))
        .collect::<Result<Vec<_>, _>>()?;
    let mut series = Vec::new();
    for (k, table) in tables.iter().enumerate() {
        let t = table.params().neck;
        let rows: Vec<Vec<String>> = table.samples().map(|(u, r)| vec![num(u), num(r)]).collect();
        out.csv(&format!("profile_{k}.csv"), &["u", "r"], &rows)?;
        let worst = table
            .first_integral_residuals()
            .iter()
            .map(|r| r.1)
            .fold(0.0, f64::max);
        out.check_le(format!("first_integral_residual_t={}", num(t)), worst, RESIDUAL_BOUND);
        let mut points: Vec<(f64, f64)> = table.samples().map(|(u, r)| (r, -u)).collect();
        points.reverse();
        points.extend(table.samples().skip(1).map(|(u, r)| (r, u)));
        series.push(Series {
            name: format!("t = {}", num(t)),
            points,
        });
    }
    let plot = LinePlot {
        title: format!("nodoid profiles, H = {}", num(h)),
        x_label: "r".into(),
        y_label: "u".into(),
        log_x: false,
        log_y: false,
        series,
    };
    out.write("profiles.svg", plot.render().as_bytes())
}
