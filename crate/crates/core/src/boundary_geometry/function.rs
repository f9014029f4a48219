use std::fmt;
use std::sync::Arc;

use crate::error::{positive, Error, Result};

/// Closed-form boundary data.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Affine { slope: f64, intercept: f64 },
    /// Coefficients in ascending order: `c0 + c1 x + c2 x² + …`.
    Polynomial(Vec<f64>),
    /// `slope · |x − center|`.
    Abs { center: f64, slope: f64 },
    /// `amplitude · sin(frequency · x + phase)`.
    Sine { amplitude: f64, frequency: f64, phase: f64 },
    Sum(Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Constant(c) => *c,
            Expr::Affine { slope, intercept } => slope * x + intercept,
            Expr::Polynomial(coef) => coef.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Expr::Abs { center, slope } => slope * (x - center).abs(),
            Expr::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * x + phase).sin(),
            Expr::Sum(terms) => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }
}

#[derive(Clone)]
enum Source {
    Closed(Expr),
    Samples { x0: f64, step: f64, values: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Closed(e) => f.debug_tuple("Closed").field(e).finish(),
            Source::Samples { x0, step, values } => f
                .debug_struct("Samples")
                .field("x0", x0)
                .field("step", step)
                .field("len", &values.len())
                .finish(),
            Source::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// The boundary datum `f`, imposed as `u(x, ±l) = f(x)`.
///
/// Every function carries an evaluation window and a sampling spacing `δ`;
/// the geometric certificates operate on the nodes `window.0 + kδ`.
#[derive(Debug, Clone)]
pub struct BoundaryFunction {
    source: Source,
    window: (f64, f64),
    intervals: usize,
    shift: (f64, f64),
    curvature_hint: Option<f64>,
}

fn check_window(lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "window",
            value: hi - lo,
            reason: "window must be a finite interval with lo < hi",
        })
    }
}

impl BoundaryFunction {
    /// A closed-form function on `window` sampled with spacing close to `spacing`
    /// (rounded so that the window holds a whole number of steps).
    pub fn closed(expr: Expr, window: (f64, f64), spacing: f64) -> Result<Self> {
        Self::with_source(Source::Closed(expr), window, spacing)
    }

    /// An arbitrary callable; used for generated test data.
    pub fn from_fn<F>(f: F, window: (f64, f64), spacing: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_source(Source::Custom(Arc::new(f)), window, spacing)
    }

    /// Uniform samples starting at `x0`; evaluation interpolates linearly.
    pub fn samples(x0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        positive("step", step)?;
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                value: values.len() as f64,
                reason: "need at least two finite samples",
            });
        }
        let intervals = values.len() - 1;
        let hi = x0 + step * intervals as f64;
        Ok(BoundaryFunction {
            source: Source::Samples { x0, step, values },
            window: (x0, hi),
            intervals,
            shift: (0.0, 0.0),
            curvature_hint: None,
        })
    }

    fn with_source(source: Source, window: (f64, f64), spacing: f64) -> Result<Self> {
        check_window(window.0, window.1)?;
        positive("spacing", spacing)?;
        let intervals = ((window.1 - window.0) / spacing).round().max(1.0) as usize;
        Ok(BoundaryFunction {
            source,
            window,
            intervals,
            shift: (0.0, 0.0),
            curvature_hint: None,
        })
    }

    /// Attaches a curvature bound used to size tangency tolerances.
    pub fn with_curvature_hint(mut self, hint: f64) -> Self {
        self.curvature_hint = Some(hint.abs());
        self
    }

    /// Same function on a different window, keeping the spacing.
    pub fn rewindowed(&self, window: (f64, f64)) -> Result<Self> {
        check_window(window.0, window.1)?;
        let spacing = self.spacing();
        let mut out = self.clone();
        out.window = window;
        out.intervals = ((window.1 - window.0) / spacing).round().max(1.0) as usize;
        Ok(out)
    }

    /// `x ↦ f(x − dx) + dz` on the translated window.
    pub fn shifted(&self, dx: f64, dz: f64) -> Self {
        let mut out = self.clone();
        out.shift = (self.shift.0 + dx, self.shift.1 + dz);
        out.window = (self.window.0 + dx, self.window.1 + dx);
        out
    }

    pub fn curvature_hint(&self) -> Option<f64> {
        self.curvature_hint
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn spacing(&self) -> f64 {
        (self.window.1 - self.window.0) / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Abscissa of sample node `k`, symmetric about the window midpoint.
    pub fn node(&self, k: usize) -> f64 {
        let (lo, hi) = self.window;
        if k == 0 {
            return lo;
        }
        if k == self.intervals {
            return hi;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let n = self.intervals as f64;
        mid + half * (2.0 * k as f64 - n) / n
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Index range of nodes inside `[a, b]`.
    pub(crate) fn node_range(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let (lo, _) = self.window;
        let step = self.spacing();
        let first = ((a - lo) / step - 1e-9).ceil().max(0.0) as usize;
        let last = (((b - lo) / step + 1e-9).floor() as i64).min(self.intervals as i64);
        if last < first as i64 {
            first..first
        } else {
            first..(last as usize + 1)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * (1.0 + x.abs());
        x >= self.window.0 - slack && x <= self.window.1 + slack
    }

    pub fn eval(&self, x: f64) -> f64 {
        let xs = x - self.shift.0;
        let v = match &self.source {
            Source::Closed(e) => e.eval(xs),
            Source::Custom(f) => f(xs),
            Source::Samples { x0, step, values } => {
                let pos = ((xs - x0) / step).clamp(0.0, (values.len() - 1) as f64);
                let k = (pos.floor() as usize).min(values.len() - 2);
                let w = pos - k as f64;
                values[k] * (1.0 - w) + values[k + 1] * w
            }
        };
        v + self.shift.1
    }

    /// Values at the sample nodes.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.eval(self.node(k))).collect()
    }

    /// Largest `|f|` over the sample nodes inside `[a, b]`, endpoints included.
    pub fn sup_abs_on(&self, a: f64, b: f64) -> f64 {
        self.node_range(a, b)
            .map(|k| self.eval(self.node(k)).abs())
            .chain([self.eval(a).abs(), self.eval(b).abs()])
            .fold(0.0, f64::max)
    }
}
