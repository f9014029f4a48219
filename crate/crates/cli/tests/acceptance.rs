//! Acceptance suite: one PASS/FAIL line per criterion, with pinned tolerances
//! and the measured runtime against its budget.
//!
//! Criterion 7 asks the under-condition verdict for x² to flip between
//! R = 0.4 and R = 0.6. A convex graph admits rolling disks of every radius,
//! so that flip cannot happen for x²; the line is printed as it comes out and
//! the flip is reported separately for −x², whose osculating radius is 1/2.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cmc_core::barrier::HalfCylinder;
use cmc_core::boundary_geometry::{
    check_uniform_under_condition, covers_every_window, find_upper_condition_points, rolle_point, Verdict,
};
use cmc_core::flux::{arc_reach, integrate_along, make_arc, stokes_residual, ArcKind, ArcPath, ArcSide, OneForm};
use cmc_core::nodoid::{params_from_t, profile};
use cmc_core::solver::{
    extremal_fields, solve_dirichlet, uniqueness_gap, verify_height_estimates, ExtremalOptions, GapSeries, GapVerdict,
};
use cmc_core::{BoundaryFunction, Case, Expr, RowSpacing, ScalarField, SidePolicy, SolverConfig, StripProblem};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Line {
    id: &'static str,
    title: &'static str,
    passed: bool,
    elapsed: Duration,
    budget: Option<Duration>,
    detail: String,
}

impl Line {
    fn ok(&self) -> bool {
        self.passed && self.budget.is_none_or(|b| self.elapsed < b)
    }

    fn print(&self) {
        let budget = self.budget.map_or("no budget".to_string(), |b| format!("budget {} s", b.as_secs()));
        println!(
            "{} [{}] {} ({:.2} s, {budget})",
            if self.ok() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64()
        );
        for l in self.detail.lines() {
            println!("       {l}");
        }
    }
}

fn seconds(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let h100 = params_from_t(1.0, 100.0).unwrap().half_height;
    let h_small = params_from_t(1.0, 0.001).unwrap().half_height;
    let p1000 = params_from_t(1.0, 1000.0).unwrap();
    let rows: Vec<_> = log_grid(1e-3, 1e3, 50)
        .into_iter()
        .map(|t| params_from_t(1.0, t).unwrap())
        .collect();
    let h_inc = rows.windows(2).all(|w| w[1].half_height > w[0].half_height);
    let rho_inc = rows.windows(2).all(|w| w[1].max_radius > w[0].max_radius);
    let d1 = (h100 - 0.5).abs();
    let d3 = (p1000.max_radius - 1000.0 - 0.5).abs();
    Line {
        id: "1",
        title: "nodoid limits and monotonicity (H = 1)",
        passed: d1 < 1e-2 && h_small < 1e-2 && d3 < 1e-3 && h_inc && rho_inc,
        elapsed: start.elapsed(),
        budget: seconds(5),
        detail: format!(
            "|h_100 − 0.5| = {d1:.3e} < 1e-2; h_0.001 = {h_small:.3e} < 1e-2; |ρ_1000 − 1000 − 0.5| = {d3:.3e} < 1e-3\n\
             h increasing: {h_inc}; ρ increasing: {rho_inc} (50-point log grid on [1e-3, 1e3])"
        ),
    }
}

fn criterion_2() -> Line {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for h in [0.5, 1.0] {
        for t in [0.5, 1.0, 2.0] {
            let table = profile(&params_from_t(h, t).unwrap(), 2001).unwrap();
            for (_, r) in table.first_integral_residuals() {
                worst = worst.max(r);
            }
        }
    }
    Line {
        id: "2",
        title: "first-integral residual of the profile tables",
        passed: worst <= 1e-6,
        elapsed: start.elapsed(),
        budget: seconds(5),
        detail: format!("max |Hr² + r/√(1+r′²) − c| = {worst:.3e} ≤ 1e-6 over (H, t) ∈ {{0.5, 1}} × {{0.5, 1, 2}}"),
    }
}

/// Flat data at the limiting width: the half-cylinder is exact.
struct Flat {
    cylinder: HalfCylinder,
    fields: Vec<ScalarField>,
    f: BoundaryFunction,
    solve_time: Duration,
}

fn flat_solves() -> Flat {
    let start = Instant::now();
    let cylinder = HalfCylinder::new(0.0, 0.0, 0.0, 0.5).unwrap();
    let f = BoundaryFunction::closed(Expr::Constant(0.0), (-20.0, 20.0), 0.01).unwrap();
    let fields = [33, 65, 129]
        .iter()
        .map(|&n| {
            let p = StripProblem::new(0.5, 1.0, (-4.0, 4.0), (n, n), f.clone(), SidePolicy::JsCap { cap: 0.0 })
                .unwrap()
                .with_rows(RowSpacing::Cosine);
            let g = *p.grid();
            let col = |x: f64| (0..g.ny).map(|j| cylinder.eval(x, g.y(j)).unwrap()).collect();
            let sides = SidePolicy::Explicit {
                left: col(g.x_lo),
                right: col(g.x_hi),
            };
            solve_dirichlet(&p.with_sides(sides).unwrap(), &SolverConfig::default())
                .unwrap()
                .field
        })
        .collect();
    Flat {
        cylinder,
        fields,
        f,
        solve_time: start.elapsed(),
    }
}

fn criterion_3(flat: &Flat) -> Line {
    let start = Instant::now();
    let errors: Vec<f64> = flat
        .fields
        .iter()
        .map(|u| {
            let g = u.grid();
            let mut worst: f64 = 0.0;
            for j in 2..g.ny - 2 {
                for i in 0..g.nx {
                    worst = worst.max((u.at(i, j) - flat.cylinder.eval(g.x(i), g.y(j)).unwrap()).abs());
                }
            }
            worst
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Line {
        id: "3",
        title: "half-cylinder recovery, f ≡ 0, H = 0.5, l = 1, [−4, 4]",
        passed: orders.iter().all(|&p| p >= 1.7),
        elapsed: flat.solve_time + start.elapsed(),
        budget: seconds(60),
        detail: format!(
            "L∞ errors (two rows excluded) at 33², 65², 129²: {:.3e}, {:.3e}, {:.3e}\nobserved orders {:.3}, {:.3} ≥ 1.7",
            errors[0], errors[1], errors[2], orders[0], orders[1]
        ),
    }
}

fn wang_problem(n: f64) -> (StripProblem, BoundaryFunction) {
    let f = BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.0, 1.0]), (-40.0, 40.0), 0.01).unwrap();
    let nx = (2.0 * n / 0.125) as usize + 1;
    let p = StripProblem::new(0.5, 1.0, (-n, n), (nx, 17), f.clone(), SidePolicy::Envelope(Case::Collin))
        .unwrap()
        .with_rows(RowSpacing::Cosine);
    (p, f)
}

fn criterion_4(flat: &Flat) -> Line {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut passed = true;
    let mut record = |report: cmc_core::solver::EstimateReport| {
        for c in report.checks {
            passed &= c.passed;
            let e = worst.entry(c.name).or_insert(f64::NEG_INFINITY);
            *e = e.max(c.worst_slack - c.tolerance);
        }
    };
    for u in &flat.fields {
        record(verify_height_estimates(u, &flat.f, Case::Collin, &cfg).unwrap());
    }
    let (p, f) = wang_problem(8.0);
    let e = extremal_fields(&p, Case::Collin, &cfg, &ExtremalOptions::default()).unwrap();
    for u in [&e.upper.field, &e.lower.field] {
        record(verify_height_estimates(u, &f, Case::Collin, &cfg).unwrap());
    }
    let detail = worst
        .iter()
        .map(|(k, v)| format!("{k}: max(slack − tolerance) = {v:.3e} ≤ 0"))
        .collect::<Vec<_>>()
        .join("\n");
    Line {
        id: "4",
        title: "height estimates on the flat solves and on f = x² (tolerance 10·h², symmetry 1e-10)",
        passed,
        elapsed: flat.solve_time + start.elapsed(),
        budget: seconds(120),
        detail,
    }
}

fn gap_text(g: &GapSeries) -> String {
    let pairs: Vec<String> = g
        .truncations
        .iter()
        .zip(&g.gaps)
        .map(|(n, v)| format!("g({n}) = {v:.3e}"))
        .collect();
    format!("{}; floor {:.3e}; verdict {:?}", pairs.join(", "), g.floor, g.verdict)
}

fn criterion_5() -> Line {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let opts = ExtremalOptions::default();
    let (template, _) = wang_problem(8.0);
    let wang = uniqueness_gap(&template, Case::Collin, (-1.0, 1.0), &[8.0, 16.0, 32.0], &cfg, &opts).unwrap();

    let lopez = Case::Lopez { neck: 1.0 };
    let l = lopez.half_width(1.0).unwrap();
    let f = BoundaryFunction::closed(
        Expr::Sum(vec![
            Expr::Polynomial(vec![0.0, 0.0, 0.1]),
            Expr::Sine {
                amplitude: 0.5,
                frequency: 1.0,
                phase: std::f64::consts::FRAC_PI_2,
            },
        ]),
        (-40.0, 40.0),
        0.01,
    )
    .unwrap();
    let rho = params_from_t(1.0, 1.0).unwrap().max_radius;
    let under = check_uniform_under_condition(&f, rho, None).unwrap().verdict;
    let t = StripProblem::new(1.0, l, (-8.0, 8.0), (129, 17), f, SidePolicy::Envelope(lopez))
        .unwrap()
        .with_rows(RowSpacing::Cosine);
    let lz = uniqueness_gap(&t, lopez, (-1.0, 1.0), &[8.0, 16.0, 32.0], &cfg, &opts).unwrap();

    let accepted = |g: &GapSeries| g.verdict != GapVerdict::NotDecreasing;
    Line {
        id: "5",
        title: "uniqueness squeeze g(n) on [−1, 1], n ∈ {8, 16, 32}, decrease to the discretization floor",
        passed: accepted(&wang) && accepted(&lz) && under == Verdict::Holds,
        elapsed: start.elapsed(),
        budget: seconds(600),
        detail: format!(
            "x², Collin H = 0.5: {}\n0.1x² + 0.5cos x, López H = 1, t = 1 (√2-circle under condition {under:?}): {}",
            gap_text(&wang),
            gap_text(&lz)
        ),
    }
}

fn criterion_6(flat: &Flat) -> Line {
    let start = Instant::now();
    let rects = [((-1.0, 1.0), (-0.5, 0.5)), ((-2.0, 2.0), (-0.75, 0.75)), ((-3.0, 3.0), (-0.9, 0.9))];
    let forms: Vec<OneForm> = flat.fields.iter().map(OneForm::new).collect();
    let mut stokes_ok = true;
    let mut stokes = Vec::new();
    for (x, y) in rects {
        let r: Vec<f64> = forms.iter().map(|w| stokes_residual(w, x, y).unwrap()).collect();
        stokes_ok &= r.windows(2).all(|w| w[1] < w[0]);
        stokes.push(format!("[{}, {}]×[{}, {}]: {:.2e} → {:.2e} → {:.2e}", x.0, x.1, y.0, y.1, r[0], r[1], r[2]));
    }

    let form = &forms[1];
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst_ratio: f64 = 0.0;
    let mut paths = 0;
    while paths < 1000 {
        let k = rng.random_range(2..7);
        let pts: Vec<(f64, f64)> = (0..k)
            .map(|_| (rng.random_range(-4.0..4.0), rng.random_range(-1.0..1.0)))
            .collect();
        let Ok(path) = ArcPath::polyline(pts) else { continue };
        let v = integrate_along(form, &path).unwrap();
        worst_ratio = worst_ratio.max(v.value.abs() / v.length);
        paths += 1;
    }

    let arc = make_arc(ArcKind::Collin, ArcSide::Plus, 0.0, 0.5, 401).unwrap();
    let mid = arc.vertices()[arc.vertices().len() / 2];
    let landmark = (mid.0 - 1.0).abs().max(mid.1.abs());
    // h = 0.3 and r = 0.5 form a 3-4-5 triangle, so K = 0.5 − 0.4 = 0.1.
    let k = arc_reach(ArcKind::Lopez { half_height: 0.3 }, 1.0).unwrap();
    let k_err = (k - 0.1).abs();

    Line {
        id: "6",
        title: "flux identities",
        passed: stokes_ok && worst_ratio <= 1.0 + 1e-6 && landmark <= 1e-12 && k_err <= 1e-12,
        elapsed: flat.solve_time + start.elapsed(),
        budget: seconds(60),
        detail: format!(
            "Stokes |∮ω − 2H·A| on 33², 65², 129² decreasing: {stokes_ok}\n{}\n\
             1000 random polylines: max |∫ω|/ℓ = {worst_ratio:.9} ≤ 1 + 1e-6\n\
             C⁺(0), H = 0.5, distance of the middle vertex to (1, 0): {landmark:.1e} ≤ 1e-12\n\
             López K for H = 1, h = 0.3: |K − 0.1| = {k_err:.1e} ≤ 1e-12",
            stokes.join("\n")
        ),
    }
}

fn random_piecewise(rng: &mut StdRng) -> BoundaryFunction {
    let mut breaks = vec![-10.0];
    while *breaks.last().unwrap() < 10.0 {
        let next = breaks.last().unwrap() + rng.random_range(0.3..3.0);
        breaks.push(next);
    }
    let pieces: Vec<(u8, f64, f64)> = (0..breaks.len())
        .map(|_| (rng.random_range(0..3), rng.random_range(-2.0..2.0), rng.random_range(0.5..3.0)))
        .collect();
    let shape = |kind: u8, a: f64, b: f64, s: f64| match kind {
        0 => a * s,
        1 => a * (b * s).sin(),
        _ => a * s * s,
    };
    let mut offsets = vec![0.0];
    for k in 1..breaks.len() {
        let (kind, a, b) = pieces[k - 1];
        offsets.push(offsets[k - 1] + shape(kind, a, b, breaks[k] - breaks[k - 1]));
    }
    let f = move |x: f64| {
        let k = breaks.partition_point(|&b| b <= x).saturating_sub(1);
        let (kind, a, b) = pieces[k];
        offsets[k] + shape(kind, a, b, x - breaks[k])
    };
    BoundaryFunction::from_fn(f, (-6.0, 6.0), 0.01).unwrap()
}

struct Circles {
    line: Line,
    /// The flip on −x², the graph whose osculating radius is 1/2.
    cap_flip: bool,
    rest_ok: bool,
}

fn criterion_7() -> Circles {
    let start = Instant::now();
    let parabola = |sign: f64| {
        BoundaryFunction::closed(Expr::Polynomial(vec![0.0, 0.0, sign]), (-3.0, 3.0), 0.005)
            .unwrap()
            .with_curvature_hint(2.0)
    };
    let verdicts = |f: &BoundaryFunction| {
        let a = check_uniform_under_condition(f, 0.4, None).unwrap();
        let b = check_uniform_under_condition(f, 0.6, None).unwrap();
        (a.verdict, b.verdict, b.witness)
    };
    let (x2_04, x2_06, _) = verdicts(&parabola(1.0));
    let (cap_04, cap_06, cap_w) = verdicts(&parabola(-1.0));
    let literal = x2_04 == Verdict::Holds && x2_06 == Verdict::Fails;
    let cap_flip = cap_04 == Verdict::Holds && cap_06 == Verdict::Fails && cap_w.is_some_and(|w| w.abs() < 0.05);

    let bump = BoundaryFunction::closed(Expr::Polynomial(vec![1.0, 0.0, -1.0]), (-3.0, 3.0), 0.005)
        .unwrap()
        .with_curvature_hint(2.0);
    let rolle = rolle_point(&bump, 0.4, 1.0, -0.5, 0.5).map(|p| p.abscissa);
    let rolle_ok = rolle == Ok(0.0);

    let mut rng = StdRng::seed_from_u64(2024);
    let mut covered = 0;
    for _ in 0..20 {
        let f = random_piecewise(&mut rng);
        if [0.5, 1.0]
            .iter()
            .all(|&r| covers_every_window(&find_upper_condition_points(&f, r).unwrap(), f.window(), r))
        {
            covered += 1;
        }
    }
    let rest_ok = rolle_ok && covered == 20;
    Circles {
        line: Line {
            id: "7",
            title: "circle-condition oracle agreement",
            passed: literal && rest_ok,
            elapsed: start.elapsed(),
            budget: seconds(30),
            detail: format!(
                "f = x²: R = 0.4 {x2_04:?}, R = 0.6 {x2_06:?} (criterion asks Holds then Fails; x² is convex, so every radius holds)\n\
                 f = −x² (osculating radius 1/2): R = 0.4 {cap_04:?}, R = 0.6 {cap_06:?}, witness {cap_w:?}\n\
                 rolle_point on 1 − x² over [−0.5, 0.5]: {rolle:?} (exactly 0 required)\n\
                 upper-condition coverage, R ∈ {{0.5, 1}}: {covered}/20 random piecewise functions"
            ),
        },
        cap_flip,
        rest_ok,
    }
}

const SUITE: &[(&str, &str, i32)] = &[
    ("nodoid", "nodoid-table", 0),
    ("flat", "solve", 0),
    ("flat", "flux", 0),
    ("flat", "estimates", 0),
    ("wang", "solve", 0),
    ("wang", "sweep", 0),
    ("wang", "estimates", 0),
    ("wang", "flux", 0),
    ("lopez", "sweep", 0),
    ("lopez", "flux", 0),
    ("cap", "circle-check", 3),
    ("parabola", "circle-check", 0),
    ("rolle", "circle-check", 0),
];

fn csv_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Line {
    let start = Instant::now();
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let runs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut codes_ok = true;
    let mut notes = Vec::new();
    for run in &runs {
        for &(scenario, command, expected) in SUITE {
            let status = Command::new(env!("CARGO_BIN_EXE_cmc"))
                .arg(command)
                .arg("--config")
                .arg(scenarios.join(format!("{scenario}.toml")))
                .arg("--out")
                .arg(run.path().join(scenario))
                .env("CMC_LOG", "quiet")
                .status()
                .unwrap();
            if status.code() != Some(expected) {
                codes_ok = false;
                notes.push(format!("{scenario} {command}: exit {:?}, expected {expected}", status.code()));
            }
        }
    }
    let a = csv_files(runs[0].path());
    let b = csv_files(runs[1].path());
    let differing: Vec<String> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let identical = !a.is_empty() && a.len() == b.len() && differing.is_empty();
    notes.push(format!(
        "{} CSV files over {} command runs; byte-identical: {identical}{}",
        a.len(),
        SUITE.len(),
        if differing.is_empty() { String::new() } else { format!(" (differ: {})", differing.join(", ")) }
    ));
    Line {
        id: "8",
        title: "determinism of the CLI scenario suite (two consecutive runs)",
        passed: codes_ok && identical,
        elapsed: start.elapsed(),
        budget: None,
        detail: notes.join("\n"),
    }
}

fn main() {
    let mut lines = vec![criterion_1(), criterion_2()];
    let flat = flat_solves();
    lines.push(criterion_3(&flat));
    lines.push(criterion_4(&flat));
    lines.push(criterion_5());
    lines.push(criterion_6(&flat));
    let circles = criterion_7();
    lines.push(circles.line);
    lines.push(criterion_8());

    println!();
    for l in &lines {
        l.print();
    }
    let supplementary = if circles.cap_flip { "PASS" } else { "FAIL" };
    println!("{supplementary} [7, supplementary] under-condition flip at the osculating radius 1/2 for f = −x²");
    println!();

    let failed: Vec<&str> = lines.iter().filter(|l| !l.ok()).map(|l| l.id).collect();
    // Criterion 7 is unattainable as worded; everything else it asks for
    // must hold, and the flip must appear where the geometry puts it.
    assert!(circles.cap_flip && circles.rest_ok, "criterion 7 components other than the x² flip failed");
    assert!(failed.iter().all(|&id| id == "7"), "failed criteria: {failed:?}");
}
