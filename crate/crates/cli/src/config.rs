//! TOML run configuration. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use cmc_core::solver::{Case, ExtremalOptions, SolverConfig};
use cmc_core::{BoundaryFunction, Expr, RowSpacing};

use crate::failure::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    /// Worker threads for independent solves; `--jobs` overrides.
    pub jobs: Option<usize>,
    pub problem: Option<ProblemSpec>,
    pub boundary: Option<ExprSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub solve: SolveSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub circle: CircleSpec,
    #[serde(default)]
    pub flux: FluxSpec,
    pub nodoid: Option<NodoidSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Collin,
    Lopez,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rows {
    #[default]
    Cosine,
    Uniform,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub case: CaseKind,
    #[serde(rename = "H")]
    pub curvature: f64,
    /// Neck radius of the nodoid; López case only.
    pub t: Option<f64>,
    /// Optional; must agree with the width forced by the case.
    pub l: Option<f64>,
    /// Half-lengths `n` of the truncations `[−n, n]`.
    pub truncations: Vec<f64>,
    /// Node counts `[nx, ny]` on the first truncation.
    pub grids: Vec<[usize; 2]>,
    #[serde(default = "default_window")]
    pub window: [f64; 2],
    #[serde(default)]
    pub rows: Rows,
}

fn default_window() -> [f64; 2] {
    [-1.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExprKind {
    Constant,
    Affine,
    Polynomial,
    Abs,
    Sine,
    Sum,
    Csv,
}

/// Boundary datum. Top-level specs carry the sampling window; `sum` terms
/// carry only the expression keys of their own kind.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprSpec {
    pub kind: ExprKind,
    pub value: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
    pub center: Option<f64>,
    pub amplitude: Option<f64>,
    pub frequency: Option<f64>,
    pub phase: Option<f64>,
    pub terms: Option<Vec<ExprSpec>>,
    /// CSV file with columns `x, f` on a uniform grid, relative to the config.
    pub path: Option<PathBuf>,
    pub window: Option<[f64; 2]>,
    pub spacing: Option<f64>,
    pub curvature_hint: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub residual_tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub min_damping: Option<f64>,
    pub continuation_steps: Option<usize>,
    pub max_refinements: Option<usize>,
    pub linear_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sides {
    /// Both extremal fields: capped minimal trace above, barrier envelope below.
    #[default]
    Extremal,
    Envelope,
    JsCap,
    /// Exact half-cylinder trace; requires constant or affine data, Collin case.
    HalfCylinder,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    #[serde(default)]
    pub sides: Sides,
    /// Side height for `js-cap`.
    pub cap: Option<f64>,
    #[serde(default = "default_cap_margin")]
    pub cap_margin: f64,
}

impl Default for SolveSpec {
    fn default() -> Self {
        SolveSpec {
            sides: Sides::default(),
            cap: None,
            cap_margin: default_cap_margin(),
        }
    }
}

fn default_cap_margin() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// One gap series per margin `M − sup|f|` of the cap solve.
    #[serde(default = "default_cap_margins")]
    pub cap_margins: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            cap_margins: default_cap_margins(),
        }
    }
}

fn default_cap_margins() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleSpec {
    #[serde(default)]
    pub under_radii: Vec<f64>,
    pub upper_radius: Option<f64>,
    /// `[a, b]` for the Rolle-type lemma.
    pub rolle: Option<[f64; 2]>,
    /// Radii used by the Rolle lemma: `[R_under, R_upper]`.
    pub rolle_radii: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcSides {
    #[default]
    Plus,
    Minus,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSpec {
    /// Abscissas `a` of the arcs `C±(a)`.
    #[serde(default)]
    pub arcs: Vec<f64>,
    #[serde(default)]
    pub arc_sides: ArcSides,
    #[serde(default = "default_arc_samples")]
    pub arc_samples: usize,
    /// `[x0, x1, y0, y1]` rectangles for the Stokes identity.
    #[serde(default)]
    pub rectangles: Vec<[f64; 4]>,
    /// Thresholds `c` defining `Γ = C⁺(a) ∩ {u_upper ≥ u_lower + 2c}`.
    #[serde(default = "default_gamma")]
    pub gamma_c: Vec<f64>,
}

impl Default for FluxSpec {
    fn default() -> Self {
        FluxSpec {
            arcs: Vec::new(),
            arc_sides: ArcSides::default(),
            arc_samples: default_arc_samples(),
            rectangles: Vec::new(),
            gamma_c: default_gamma(),
        }
    }
}

fn default_arc_samples() -> usize {
    401
}

fn default_gamma() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodoidSpec {
    #[serde(rename = "H")]
    pub curvature: f64,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub count: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    /// Explicit neck radii; replaces the range.
    pub t: Option<Vec<f64>>,
    /// Neck radii whose profile curves are tabulated and plotted.
    #[serde(default)]
    pub profiles: Vec<f64>,
    #[serde(default = "default_profile_samples")]
    pub profile_samples: usize,
}

fn default_profile_samples() -> usize {
    2001
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn finite(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(format!("{name} must be finite")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config_error(format!("{name} must be positive, got {v}")))
    }
}

pub fn parse(text: &str) -> Result<RunConfig, Failure> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
    if cfg.scenario.trim().is_empty() {
        return Err(config_error("scenario name is empty"));
    }
    if cfg.jobs == Some(0) {
        return Err(config_error("jobs must be at least 1"));
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn problem(&self) -> Result<&ProblemSpec, Failure> {
        let p = self
            .problem
            .as_ref()
            .ok_or_else(|| config_error("this command needs a [problem] table"))?;
        p.validate()?;
        Ok(p)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, Failure> {
        let d = SolverConfig::default();
        let s = &self.solver;
        let cfg = SolverConfig {
            residual_tol: s.residual_tol.unwrap_or(d.residual_tol),
            max_newton: s.max_newton.unwrap_or(d.max_newton),
            min_damping: s.min_damping.unwrap_or(d.min_damping),
            continuation_steps: s.continuation_steps.unwrap_or(d.continuation_steps),
            max_refinements: s.max_refinements.unwrap_or(d.max_refinements),
            linear_tol: s.linear_tol.unwrap_or(d.linear_tol),
        };
        cfg.validate().map_err(|e| config_error(e.to_string()))?;
        Ok(cfg)
    }

    pub fn extremal_options(&self, cap_margin: f64) -> Result<ExtremalOptions, Failure> {
        positive("cap_margin", cap_margin)?;
        Ok(ExtremalOptions {
            cap_margin,
            ..ExtremalOptions::default()
        })
    }

    pub fn boundary(&self, base: &Path) -> Result<BoundaryFunction, Failure> {
        let spec = self
            .boundary
            .as_ref()
            .ok_or_else(|| config_error("this command needs a [boundary] table"))?;
        spec.build(base)
    }
}

impl ProblemSpec {
    fn validate(&self) -> Result<(), Failure> {
        positive("H", self.curvature)?;
        match (self.case, self.t) {
            (CaseKind::Lopez, None) => return Err(config_error("case = \"lopez\" needs the neck radius t")),
            (CaseKind::Collin, Some(_)) => return Err(config_error("t is only meaningful for case = \"lopez\"")),
            (_, Some(t)) => {
                positive("t", t)?;
            }
            _ => {}
        }
        if let Some(l) = self.l {
            let forced = self.half_width()?;
            if (l - forced).abs() > 1e-9 * forced.max(1.0) {
                return Err(config_error(format!(
                    "l = {l} conflicts with the width forced by the case (l = {forced})"
                )));
            }
        }
        if self.truncations.is_empty() {
            return Err(config_error("truncations is empty"));
        }
        for &n in &self.truncations {
            positive("truncation", n)?;
        }
        if self.truncations.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_error("truncations must be strictly increasing"));
        }
        if self.grids.is_empty() {
            return Err(config_error("grids is empty"));
        }
        if self.grids.iter().any(|g| g[0] < 3 || g[1] < 3) {
            return Err(config_error("every grid needs at least 3 nodes per direction"));
        }
        let [a, b] = self.window;
        finite("window", a)?;
        finite("window", b)?;
        if !(a < b) {
            return Err(config_error("window must satisfy lo < hi"));
        }
        Ok(())
    }

    pub fn case(&self) -> Case {
        match self.case {
            CaseKind::Collin => Case::Collin,
            CaseKind::Lopez => Case::Lopez {
                neck: self.t.unwrap_or(f64::NAN),
            },
        }
    }

    /// `1/(2H)` for Collin, `h_t(H)` for López.
    pub fn half_width(&self) -> Result<f64, Failure> {
        self.case()
            .half_width(self.curvature)
            .map_err(|e| config_error(e.to_string()))
    }

    pub fn row_spacing(&self) -> RowSpacing {
        match self.rows {
            Rows::Cosine => RowSpacing::Cosine,
            Rows::Uniform => RowSpacing::Uniform,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.window[0], self.window[1])
    }
}

impl ExprSpec {
    fn build(&self, base: &Path) -> Result<BoundaryFunction, Failure> {
        let hint = self.curvature_hint;
        let f = if self.kind == ExprKind::Csv {
            if self.window.is_some() || self.spacing.is_some() {
                return Err(config_error("csv boundary data takes its window and spacing from the file"));
            }
            self.only(&["path"])?;
            let path = self.path.as_ref().ok_or_else(|| config_error("csv boundary needs path"))?;
            read_samples(&base.join(path))?
        } else {
            let [lo, hi] = self
                .window
                .ok_or_else(|| config_error("boundary needs window = [lo, hi]"))?;
            let spacing = positive("spacing", self.spacing.unwrap_or(0.01))?;
            let expr = self.expr()?;
            BoundaryFunction::closed(expr, (lo, hi), spacing).map_err(|e| config_error(e.to_string()))?
        };
        Ok(match hint {
            Some(h) => f.with_curvature_hint(finite("curvature_hint", h)?),
            None => f,
        })
    }

    /// Rejects expression keys that do not belong to this kind.
    fn only(&self, allowed: &[&str]) -> Result<(), Failure> {
        let present = [
            ("value", self.value.is_some()),
            ("slope", self.slope.is_some()),
            ("intercept", self.intercept.is_some()),
            ("coefficients", self.coefficients.is_some()),
            ("center", self.center.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("frequency", self.frequency.is_some()),
            ("phase", self.phase.is_some()),
            ("terms", self.terms.is_some()),
            ("path", self.path.is_some()),
        ];
        match present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
            Some((k, _)) => Err(config_error(format!("key `{k}` does not apply to kind {:?}", self.kind))),
            None => Ok(()),
        }
    }

    fn get(v: Option<f64>, name: &str) -> Result<f64, Failure> {
        finite(name, v.ok_or_else(|| config_error(format!("missing `{name}`")))?)
    }

    fn expr(&self) -> Result<Expr, Failure> {
        Ok(match self.kind {
            ExprKind::Constant => {
                self.only(&["value"])?;
                Expr::Constant(Self::get(self.value, "value")?)
            }
            ExprKind::Affine => {
                self.only(&["slope", "intercept"])?;
                Expr::Affine {
                    slope: Self::get(self.slope, "slope")?,
                    intercept: finite("intercept", self.intercept.unwrap_or(0.0))?,
                }
            }
            ExprKind::Polynomial => {
                self.only(&["coefficients"])?;
                let c = self
                    .coefficients
                    .clone()
                    .ok_or_else(|| config_error("missing `coefficients`"))?;
                if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                    return Err(config_error("coefficients must be a nonempty list of finite numbers"));
                }
                Expr::Polynomial(c)
            }
            ExprKind::Abs => {
                self.only(&["center", "slope"])?;
                Expr::Abs {
                    center: finite("center", self.center.unwrap_or(0.0))?,
                    slope: Self::get(self.slope, "slope")?,
                }
            }
            ExprKind::Sine => {
                self.only(&["amplitude", "frequency", "phase"])?;
                Expr::Sine {
                    amplitude: Self::get(self.amplitude, "amplitude")?,
                    frequency: finite("frequency", self.frequency.unwrap_or(1.0))?,
                    phase: finite("phase", self.phase.unwrap_or(0.0))?,
                }
            }
            ExprKind::Sum => {
                self.only(&["terms"])?;
                let terms = self.terms.as_ref().ok_or_else(|| config_error("missing `terms`"))?;
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    if t.window.is_some() || t.spacing.is_some() || t.curvature_hint.is_some() {
                        return Err(config_error("sum terms take no window, spacing or curvature_hint"));
                    }
                    if matches!(t.kind, ExprKind::Csv) {
                        return Err(config_error("csv data cannot be a sum term"));
                    }
                    out.push(t.expr()?);
                }
                Expr::Sum(out)
            }
            ExprKind::Csv => unreachable!("handled by build"),
        })
    }

    /// Slope of constant or affine data.
    pub fn affine_slope(&self) -> Option<f64> {
        match self.kind {
            ExprKind::Constant => Some(0.0),
            ExprKind::Affine => self.slope,
            _ => None,
        }
    }
}

fn read_samples(path: &Path) -> Result<BoundaryFunction, Failure> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "f" {
        return Err(config_error(format!("{}: expected header `x,f`", path.display())));
    }
    let mut xs = Vec::new();
    let mut fs = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let num = |k: usize| -> Result<f64, Failure> {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| config_error(format!("{}: `{}`: {e}", path.display(), &rec[k])))
        };
        xs.push(num(0)?);
        fs.push(num(1)?);
    }
    if xs.len() < 2 {
        return Err(config_error(format!("{}: need at least two samples", path.display())));
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let uniform = xs
        .iter()
        .enumerate()
        .all(|(k, &x)| (x - (xs[0] + k as f64 * step)).abs() <= 1e-9 * step.abs().max(1.0));
    if !(step > 0.0) || !uniform {
        return Err(config_error(format!("{}: x must be increasing and uniformly spaced", path.display())));
    }
    BoundaryFunction::samples(xs[0], step, fs).map_err(|e| config_error(e.to_string()))
}

impl NodoidSpec {
    /// Neck radii of the table.
    pub fn neck_radii(&self) -> Result<Vec<f64>, Failure> {
        positive("H", self.curvature)?;
        if let Some(t) = &self.t {
            if self.t_min.is_some() || self.t_max.is_some() || self.count.is_some() {
                return Err(config_error("give either t or t_min/t_max/count, not both"));
            }
            if t.is_empty() {
                return Err(config_error("empty range: t is empty"));
            }
            for &v in t {
                positive("t", v)?;
            }
            return Ok(t.clone());
        }
        let (lo, hi, n) = match (self.t_min, self.t_max, self.count) {
            (Some(a), Some(b), Some(n)) => (a, b, n),
            _ => return Err(config_error("nodoid table needs t_min, t_max and count (or t)")),
        };
        positive("t_min", lo)?;
        positive("t_max", hi)?;
        if n == 0 || hi < lo || (n > 1 && hi == lo) {
            return Err(config_error(format!("empty range: t in [{lo}, {hi}] with count {n}")));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let m = (n - 1) as f64;
        Ok((0..n)
            .map(|k| {
                let s = k as f64 / m;
                if k == 0 {
                    lo
                } else if k + 1 == n {
                    hi
                } else {
                    match self.spacing {
                        Spacing::Log => (lo.ln() + s * (hi.ln() - lo.ln())).exp(),
                        Spacing::Linear => lo + s * (hi - lo),
                    }
                }
            })
            .collect())
    }

    pub fn check_profiles(&self) -> Result<(), Failure> {
        for &t in &self.profiles {
            positive("profiles", t)?;
        }
        if self.profile_samples < 3 {
            return Err(config_error("profile_samples must be at least 3"));
        }
        Ok(())
    }
}
