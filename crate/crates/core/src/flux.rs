//! The flux 1-form `ω_u = p dy − q dx`, `(p, q) = ∇u / √(1 + |∇u|²)`, and
//! its integrals along polylines and circle arcs.

use std::io::Write;

use crate::error::{positive, Error, Result};
use crate::field::{Grid, ScalarField};
use crate::nodoid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneFormSample {
    pub p: f64,
    pub q: f64,
}

impl OneFormSample {
    fn from_gradient(ux: f64, uy: f64) -> Self {
        let w = (1.0 + ux * ux + uy * uy).sqrt();
        let (mut p, mut q) = (ux / w, uy / w);
        let n2 = p * p + q * q;
        if n2 > 1.0 {
            let s = n2.sqrt();
            p /= s;
            q /= s;
        }
        OneFormSample { p, q }
    }
}

/// Nodal gradients of a field, ready for interpolation.
#[derive(Debug, Clone)]
pub struct OneForm {
    grid: Grid,
    curvature: f64,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

/// Second-order derivative at node `k` from three neighbouring nodes at
/// abscissas `z` (centered inside, one-sided at the ends).
fn derivative(v: impl Fn(usize) -> f64, z: impl Fn(usize) -> f64, k: usize, n: usize) -> f64 {
    let (a, b, c) = if k == 0 {
        (0, 1, 2)
    } else if k == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (k - 1, k, k + 1)
    };
    let (za, zb, zc, zk) = (z(a), z(b), z(c), z(k));
    // Derivative of the quadratic interpolant through the three nodes.
    let la = ((zk - zb) + (zk - zc)) / ((za - zb) * (za - zc));
    let lb = ((zk - za) + (zk - zc)) / ((zb - za) * (zb - zc));
    let lc = ((zk - za) + (zk - zb)) / ((zc - za) * (zc - zb));
    la * v(a) + lb * v(b) + lc * v(c)
}

fn bilinear(grid: &Grid, v: &[f64], x: f64, y: f64) -> Result<f64> {
    if !grid.contains(x, y) {
        return Err(Error::OutsideHull { x, y });
    }
    let pos = ((x - grid.x_lo) / grid.dx()).clamp(0.0, (grid.nx - 1) as f64);
    let i = (pos.floor() as usize).min(grid.nx - 2);
    let s = pos - i as f64;
    let (j, t) = grid.locate_row(y);
    let at = |i: usize, j: usize| v[grid.index(i, j)];
    Ok((1.0 - t) * ((1.0 - s) * at(i, j) + s * at(i + 1, j)) + t * ((1.0 - s) * at(i, j + 1) + s * at(i + 1, j + 1)))
}

impl OneForm {
    pub fn new(u: &ScalarField) -> Self {
        let g = *u.grid();
        let (nx, ny) = (g.nx, g.ny);
        let mut ux = vec![0.0; g.len()];
        let mut uy = vec![0.0; g.len()];
        for j in 0..ny {
            for i in 0..nx {
                ux[g.index(i, j)] = derivative(|k| u.at(k, j), |k| g.x(k), i, nx);
                uy[g.index(i, j)] = derivative(|k| u.at(i, k), |k| g.y(k), j, ny);
            }
        }
        OneForm {
            grid: g,
            curvature: u.curvature(),
            ux,
            uy,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<OneFormSample> {
        let gx = bilinear(&self.grid, &self.ux, x, y)?;
        let gy = bilinear(&self.grid, &self.uy, x, y)?;
        Ok(OneFormSample::from_gradient(gx, gy))
    }
}

pub fn omega_eval(u: &ScalarField, point: (f64, f64)) -> Result<OneFormSample> {
    OneForm::new(u).eval(point.0, point.1)
}

/// Linear interpolation of the field values at `(x, y)`.
pub fn sample_field(u: &ScalarField, x: f64, y: f64) -> Result<f64> {
    bilinear(u.grid(), u.values(), x, y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcKind {
    /// Half-circle of radius `1/(2H)` joining the two strip edges `y = ±1/(2H)`.
    Collin,
    /// Arc of the circle of radius `1/(2H)` through `(a, ±h)`.
    Lopez { half_height: f64 },
}

impl ArcKind {
    pub fn lopez_from_neck(curvature: f64, neck: f64) -> Result<Self> {
        Ok(ArcKind::Lopez {
            half_height: nodoid::params_from_t(curvature, neck)?.half_height,
        })
    }
}

/// `C⁺(a)` bulges towards `+x`, `C⁻(a)` towards `−x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcSide {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcTag {
    pub kind: ArcKind,
    pub side: ArcSide,
    pub a: f64,
    pub curvature: f64,
}

/// Oriented polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcPath {
    vertices: Vec<(f64, f64)>,
    reversed: bool,
    tag: Option<ArcTag>,
}

impl ArcPath {
    pub fn polyline(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.iter().any(|v| !v.0.is_finite() || !v.1.is_finite()) {
            return Err(Error::Path("vertices must be finite".into()));
        }
        let mut clean: Vec<(f64, f64)> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if clean.last() != Some(&v) {
                clean.push(v);
            }
        }
        if clean.len() < 2 {
            return Err(Error::Path("a path needs two distinct vertices".into()));
        }
        Ok(ArcPath {
            vertices: clean,
            reversed: false,
            tag: None,
        })
    }

    /// Boundary of `[x0, x1] × [y0, y1]`, counter-clockwise.
    pub fn rectangle(x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        ArcPath::polyline(vec![(x.0, y.0), (x.1, y.0), (x.1, y.1), (x.0, y.1), (x.0, y.0)])
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn tag(&self) -> Option<&ArcTag> {
        self.tag.as_ref()
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        ArcPath {
            vertices: v,
            reversed: !self.reversed,
            tag: self.tag,
        }
    }

    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum()
    }
}

/// Polyline sampling of `C±(a)` with `samples` vertices (rounded up to odd, so
/// that the middle vertex is the point of the arc on `y = 0`). The arc is
/// oriented counter-clockwise about its center.
pub fn make_arc(kind: ArcKind, side: ArcSide, a: f64, curvature: f64, samples: usize) -> Result<ArcPath> {
    positive("H", curvature)?;
    let r = 0.5 / curvature;
    let (d, h) = match kind {
        ArcKind::Collin => (0.0, r),
        ArcKind::Lopez { half_height } => {
            positive("h", half_height)?;
            if half_height >= r {
                return Err(Error::InvalidParameter {
                    name: "h",
                    value: half_height,
                    reason: "arc half-height must be below 1/(2H)",
                });
            }
            ((r * r - half_height * half_height).sqrt(), half_height)
        }
    };
    let n = samples.max(3) | 1;
    let phi = h.atan2(d);
    let (cx, start, ends) = match side {
        ArcSide::Plus => (a - d, -phi, [(a, -h), (a, h)]),
        ArcSide::Minus => (a + d, std::f64::consts::PI - phi, [(a, h), (a, -h)]),
    };
    let mid = n / 2;
    let vertices: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            if k == 0 {
                ends[0]
            } else if k == n - 1 {
                ends[1]
            } else if k == mid {
                (cx + if side == ArcSide::Plus { r } else { -r }, 0.0)
            } else {
                let ang = start + 2.0 * phi * k as f64 / (n - 1) as f64;
                (cx + r * ang.cos(), r * ang.sin())
            }
        })
        .collect();
    let mut path = ArcPath::polyline(vertices)?;
    path.tag = Some(ArcTag { kind, side, a, curvature });
    Ok(path)
}

/// Distance `K` from `a` to the point of the arc on `y = 0`.
pub fn arc_reach(kind: ArcKind, curvature: f64) -> Result<f64> {
    positive("H", curvature)?;
    let r = 0.5 / curvature;
    Ok(match kind {
        ArcKind::Collin => r,
        ArcKind::Lopez { half_height } => r - (r * r - half_height * half_height).max(0.0).sqrt(),
    })
}

/// A line integral with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxValue {
    pub value: f64,
    pub error: f64,
    pub length: f64,
}

const REL_TOL: f64 = 1e-8;
const MAX_DOUBLINGS: usize = 16;

fn midpoint(form: &OneForm, p0: (f64, f64), p1: (f64, f64), m: usize) -> Result<f64> {
    let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
    let mut sum = 0.0;
    for k in 0..m {
        let s = (k as f64 + 0.5) / m as f64;
        let w = form.eval(p0.0 + s * dx, p0.1 + s * dy)?;
        sum += w.p * dy - w.q * dx;
    }
    Ok(sum / m as f64)
}

fn segment(form: &OneForm, p0: (f64, f64), p1: (f64, f64)) -> Result<(f64, f64)> {
    let len = (p1.0 - p0.0).hypot(p1.1 - p0.1);
    let h = 0.5 * form.grid.dx().min(form.grid.dy());
    let mut m = ((len / h).ceil() as usize).max(1);
    let mut prev = midpoint(form, p0, p1, m)?;
    for _ in 0..MAX_DOUBLINGS {
        m *= 2;
        let next = midpoint(form, p0, p1, m)?;
        let change = (next - prev).abs();
        if change < REL_TOL * len {
            return Ok((next, change));
        }
        prev = next;
    }
    Err(Error::Path(format!(
        "segment ({}, {})–({}, {}) did not converge after {MAX_DOUBLINGS} doublings",
        p0.0, p0.1, p1.0, p1.1
    )))
}

/// `∫_path ω_u`; each segment is integrated in a canonical direction and the
/// contributions are summed in a canonical order, so reversing the path
/// negates the result exactly.
pub fn integrate_along(form: &OneForm, path: &ArcPath) -> Result<FluxValue> {
    let mut parts: Vec<((f64, f64), (f64, f64), f64)> = path
        .vertices
        .windows(2)
        .map(|w| {
            let forward = (w[0].0, w[0].1) <= (w[1].0, w[1].1);
            if forward {
                (w[0], w[1], 1.0)
            } else {
                (w[1], w[0], -1.0)
            }
        })
        .collect();
    parts.sort_by(|a, b| {
        a.0 .0
            .total_cmp(&b.0 .0)
            .then(a.0 .1.total_cmp(&b.0 .1))
            .then(a.1 .0.total_cmp(&b.1 .0))
            .then(a.1 .1.total_cmp(&b.1 .1))
            .then(a.2.total_cmp(&b.2))
    });
    let mut value = 0.0;
    let mut error = 0.0;
    for (p0, p1, sign) in parts {
        let (v, e) = segment(form, p0, p1)?;
        value += sign * v;
        error += e;
    }
    Ok(FluxValue {
        value,
        error,
        length: path.length(),
    })
}

/// `∫_path (ω_a − ω_b)`.
pub fn integrate_difference(a: &OneForm, b: &OneForm, path: &ArcPath) -> Result<FluxValue> {
    let fa = integrate_along(a, path)?;
    let fb = integrate_along(b, path)?;
    Ok(FluxValue {
        value: fa.value - fb.value,
        error: fa.error + fb.error,
        length: fa.length,
    })
}

/// `|∮_{∂R} ω_u − 2H·Area(R)|` for the rectangle `R = [x0, x1] × [y0, y1]`.
pub fn stokes_residual(form: &OneForm, x: (f64, f64), y: (f64, f64)) -> Result<f64> {
    let area = (x.1 - x.0) * (y.1 - y.0);
    let path = match ArcPath::rectangle(x, y) {
        Ok(p) => p,
        Err(_) => return Ok(0.0),
    };
    let flux = integrate_along(form, &path)?;
    Ok((flux.value - 2.0 * form.curvature * area).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub ratio: f64,
    pub flux: FluxValue,
}

/// `∫_arc ω_u / ℓ(arc)`.
pub fn divergence_diagnostic(form: &OneForm, arc: &ArcPath) -> Result<Divergence> {
    let flux = integrate_along(form, arc)?;
    if !(flux.length > 0.0) {
        return Err(Error::Path("zero-length arc".into()));
    }
    Ok(Divergence {
        ratio: flux.value / flux.length,
        flux,
    })
}

/// Maximal runs of consecutive arc vertices where `upper − lower ≥ 2c`.
pub fn gamma_portion(arc: &ArcPath, upper: &ScalarField, lower: &ScalarField, c: f64) -> Result<Vec<ArcPath>> {
    if upper.grid() != lower.grid() {
        return Err(Error::Grid("extremal fields live on different grids".into()));
    }
    let mut runs = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    for &(x, y) in &arc.vertices {
        let gap = sample_field(upper, x, y)? - sample_field(lower, x, y)?;
        if gap >= 2.0 * c {
            current.push((x, y));
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    Ok(runs
        .into_iter()
        .filter(|r| r.len() >= 2)
        .filter_map(|r| ArcPath::polyline(r).ok())
        .map(|mut p| {
            p.reversed = arc.reversed;
            p
        })
        .collect())
}

/// One row of a flux report.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxRow {
    pub id: String,
    pub length: f64,
    pub integral: f64,
    pub ratio: f64,
    pub error: f64,
}

pub fn write_flux_csv<W: Write>(rows: &[FluxRow], mut w: W) -> Result<()> {
    writeln!(w, "path,length,integral,ratio,error")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.id, r.length, r.integral, r.ratio, r.error)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plane(slope: f64) -> ScalarField {
        let g = Grid::new((-2.0, 2.0), (-1.0, 1.0), 21, 11).unwrap();
        ScalarField::from_fn(g, 0.0, |x, _| slope * x).unwrap()
    }

    #[test]
    fn plane_form_is_constant() {
        let w = omega_eval(&plane(0.75), (0.3, -0.2)).unwrap();
        assert_abs_diff_eq!(w.p, 0.75 / 1.5625f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.q, 0.0, epsilon = 1e-14);
        let w = omega_eval(&plane(0.0), (2.0, 1.0)).unwrap();
        assert_eq!((w.p, w.q), (0.0, 0.0));
        assert!(omega_eval(&plane(1.0), (2.1, 0.0)).is_err());
    }

    #[test]
    fn arcs_hit_their_landmarks() {
        let c = make_arc(ArcKind::Collin, ArcSide::Plus, 0.0, 0.5, 100).unwrap();
        let v = c.vertices();
        assert_eq!(v[0], (0.0, -1.0));
        assert_eq!(*v.last().unwrap(), (0.0, 1.0));
        assert_eq!(v[v.len() / 2], (1.0, 0.0));
        let fine = make_arc(ArcKind::Collin, ArcSide::Plus, 0.0, 0.5, 20001).unwrap();
        assert_abs_diff_eq!(fine.length(), std::f64::consts::PI, epsilon = 1e-7);
        let l = make_arc(ArcKind::Lopez { half_height: 0.3 }, ArcSide::Plus, 0.0, 1.0, 51).unwrap();
        let mid = l.vertices()[25];
        assert_abs_diff_eq!(mid.0, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(arc_reach(ArcKind::Lopez { half_height: 0.3 }, 1.0).unwrap(), 0.1, epsilon = 1e-15);
        let m = make_arc(ArcKind::Collin, ArcSide::Minus, 2.0, 0.5, 9).unwrap();
        assert_eq!(m.vertices()[4], (1.0, 0.0));
        assert_eq!(m.vertices()[0], (2.0, 1.0));
    }

    #[test]
    fn reversal_negates_exactly() {
        let g = Grid::new((-2.0, 2.0), (-1.0, 1.0), 41, 21).unwrap();
        let u = ScalarField::from_fn(g, 0.0, |x, y| (x * y).sin() + x * x).unwrap();
        let form = OneForm::new(&u);
        let arc = make_arc(ArcKind::Collin, ArcSide::Plus, -0.5, 0.5, 31).unwrap();
        let a = integrate_along(&form, &arc).unwrap();
        let b = integrate_along(&form, &arc.reversed()).unwrap();
        assert_eq!(a.value, -b.value);
    }

    #[test]
    fn degenerate_rectangle_has_no_residual() {
        let form = OneForm::new(&plane(2.0));
        assert_eq!(stokes_residual(&form, (0.0, 0.0), (-0.5, 0.5)).unwrap(), 0.0);
        assert!(stokes_residual(&form, (-1.0, 1.0), (-0.5, 0.5)).unwrap() < 1e-12);
    }
}
