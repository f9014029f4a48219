mod circle;
mod flux;
mod nodoid;
mod solve;
mod sweep;

use std::path::PathBuf;

use rayon::prelude::*;

use cmc_core::barrier::HalfCylinder;
use cmc_core::boundary_geometry::{check_uniform_under_condition, convexity_check, Convexity, Verdict};
use cmc_core::solver::{extremal_fields, solve_dirichlet, solve_js_cap, Case, Solution, SolverConfig};
use cmc_core::{nodoid as core_nodoid, BoundaryFunction, SidePolicy, StripProblem};

use crate::config::{ProblemSpec, RunConfig, Sides};
use crate::failure::Failure;
use crate::output::{num, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    NodoidTable,
    Solve,
    Sweep,
    CircleCheck,
    Flux,
    Estimates,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::NodoidTable => "nodoid-table",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::CircleCheck => "circle-check",
            Command::Flux => "flux",
            Command::Estimates => "estimates",
        }
    }
}

pub struct Context {
    pub config: RunConfig,
    /// Directory of the config file; relative data paths resolve against it.
    pub base: PathBuf,
}

/// Runs `cmd`, then turns any failed bound check into a failure of the run.
pub fn run(cmd: Command, ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    match cmd {
        Command::NodoidTable => nodoid::run(ctx, out)?,
        Command::Solve => solve::run(ctx, out)?,
        Command::Sweep => sweep::run(ctx, out)?,
        Command::CircleCheck => circle::run(ctx, out)?,
        Command::Flux => flux::run(ctx, out)?,
        Command::Estimates => solve::estimates(ctx, out)?,
    }
    let failed: Vec<&str> = out
        .checks()
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("bound checks failed: {}", failed.join(", "))))
    }
}

/// A validated strip problem family: one boundary datum, one case, several grids.
struct Setup<'a> {
    spec: &'a ProblemSpec,
    f: BoundaryFunction,
    case: Case,
    curvature: f64,
    half_width: f64,
    solver: SolverConfig,
}

impl<'a> Setup<'a> {
    fn new(ctx: &'a Context) -> Result<Self, Failure> {
        let spec = ctx.config.problem()?;
        Ok(Setup {
            spec,
            f: ctx.config.boundary(&ctx.base)?,
            case: spec.case(),
            curvature: spec.curvature,
            half_width: spec.half_width()?,
            solver: ctx.config.solver_config()?,
        })
    }

    fn truncation(&self) -> (f64, f64) {
        let n = self.spec.truncations[0];
        (-n, n)
    }

    fn strip(&self, nodes: [usize; 2], sides: SidePolicy) -> Result<StripProblem, Failure> {
        Ok(StripProblem::new(
            self.curvature,
            self.half_width,
            self.truncation(),
            (nodes[0], nodes[1]),
            self.f.clone(),
            sides,
        )?
        .with_rows(self.spec.row_spacing()))
    }

    /// Certifies the boundary hypothesis of the case: convexity (Collin) or
    /// the uniform `ρ_t(H)`-circle under condition (López).
    fn certify(&self, out: &mut Output) -> Result<(), Failure> {
        match self.case {
            Case::Collin => {
                let verdict = convexity_check(&self.f)?;
                out.check_flag("hypothesis_convex", verdict.is_convex());
                if let Convexity::NotConvex { witness, defect } = verdict {
                    return Err(Failure::Hypothesis {
                        reason: format!(
                            "boundary datum is not convex: second difference −{defect:e} at x = {}",
                            witness[1]
                        ),
                        witness: Some(witness[1]),
                    });
                }
            }
            Case::Lopez { neck } => {
                let rho = core_nodoid::params_from_t(self.curvature, neck)?.max_radius;
                let report = check_uniform_under_condition(&self.f, rho, None)?;
                out.check_flag("hypothesis_under_circle", report.verdict == Verdict::Holds);
                if report.verdict != Verdict::Holds {
                    return Err(Failure::Hypothesis {
                        reason: format!("uniform {rho}-circle under condition: {:?}", report.verdict),
                        witness: report.witness,
                    });
                }
            }
        }
        Ok(())
    }

    /// Exact half-cylinder matching affine data; Collin case only.
    fn half_cylinder(&self, ctx: &Context) -> Result<HalfCylinder, Failure> {
        let slope = ctx
            .config
            .boundary
            .as_ref()
            .and_then(|b| b.affine_slope())
            .ok_or_else(|| Failure::Config("sides = \"half-cylinder\" needs constant or affine data".into()))?;
        if self.case != Case::Collin {
            return Err(Failure::Config("sides = \"half-cylinder\" needs case = \"collin\"".into()));
        }
        let x0 = self.truncation().0;
        Ok(HalfCylinder::new(slope, x0, self.f.eval(x0), self.curvature)?)
    }
}

/// Solutions on one grid, named by role.
struct Solved {
    nodes: [usize; 2],
    fields: Vec<(&'static str, Solution)>,
    cap: Option<f64>,
    ordering_defect: Option<f64>,
}

impl Solved {
    fn field(&self, name: &str) -> Option<&Solution> {
        self.fields.iter().find(|(n, _)| *n == name).map(|(_, s)| s)
    }
}

fn grid_tag(nodes: [usize; 2]) -> String {
    format!("{}x{}", nodes[0], nodes[1])
}

/// Solves every configured grid in parallel with the configured side policy.
fn solve_grids(ctx: &Context, setup: &Setup) -> Result<(Vec<Solved>, Option<HalfCylinder>), Failure> {
    let solve = &ctx.config.solve;
    let exact = match solve.sides {
        Sides::HalfCylinder => Some(setup.half_cylinder(ctx)?),
        _ => None,
    };
    let opts = ctx.config.extremal_options(solve.cap_margin)?;
    let solved = setup
        .spec
        .grids
        .par_iter()
        .map(|&nodes| -> Result<Solved, Failure> {
            let cfg = &setup.solver;
            let base = setup.strip(nodes, SidePolicy::Envelope(setup.case))?;
            let one = |name, s| Solved {
                nodes,
                fields: vec![(name, s)],
                cap: None,
                ordering_defect: None,
            };
            let solved = match solve.sides {
                Sides::Extremal => {
                    let e = extremal_fields(&base, setup.case, cfg, &opts)?;
                    Solved {
                        nodes,
                        cap: Some(e.cap),
                        ordering_defect: Some(e.ordering_defect),
                        fields: vec![("upper", e.upper), ("lower", e.lower)],
                    }
                }
                Sides::Envelope => one("u", solve_dirichlet(&base, cfg)?),
                Sides::JsCap => {
                    let (lo, hi) = setup.truncation();
                    let cap = solve.cap.unwrap_or(setup.f.sup_abs_on(lo, hi) + solve.cap_margin);
                    let mut s = one("w", solve_js_cap(&base, cap, cfg)?);
                    s.cap = Some(cap);
                    s
                }
                Sides::HalfCylinder => {
                    let c = exact.expect("half-cylinder built above");
                    let g = base.grid();
                    let col = |x: f64| -> Result<Vec<f64>, Failure> {
                        (0..g.ny).map(|j| Ok(c.eval(x, g.y(j))?)).collect()
                    };
                    let sides = SidePolicy::Explicit {
                        left: col(g.x_lo)?,
                        right: col(g.x_hi)?,
                    };
                    one("u", solve_dirichlet(&base.with_sides(sides)?, cfg)?)
                }
            };
            log::info!("grid {} solved", grid_tag(nodes));
            Ok(solved)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok((solved, exact))
}

fn fmt_point(p: Option<(f64, f64)>) -> (String, String) {
    match p {
        Some((x, y)) => (num(x), num(y)),
        None => (String::new(), String::new()),
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
