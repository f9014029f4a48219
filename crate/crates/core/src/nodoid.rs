//! The one-parameter family of nodoids with mean curvature `H`.
//!
//! A nodoid is generated by rotating the profile `r(u)` around the vertical
//! axis, where `r` solves the first integral `H r² + r / √(1 + r'²) = c`.
//! The family is parametrised by the neck radius `t = r(0)`; the maximal
//! radius `ρ` and the half-height `h` follow from `t`.

use crate::error::{positive, Error, Result};
use crate::quadrature::{self, Estimate};

/// Default absolute tolerance for the half-height quadrature.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Neck radius from the first-integral constant: the nonnegative root of
/// `H t² + t = c`.
pub fn t_from_c(curvature: f64, c: f64) -> Result<f64> {
    positive("H", curvature)?;
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "must be finite and nonnegative",
        });
    }
    // Rationalised form of (−1 + √(1 + 4Hc)) / (2H); no cancellation for small Hc.
    Ok(2.0 * c / (1.0 + (1.0 + 4.0 * curvature * c).sqrt()))
}

/// One member of the nodoid family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodoidParams {
    /// Mean curvature `H`.
    pub curvature: f64,
    /// Neck radius `t`.
    pub neck: f64,
    /// First-integral constant `c = H ρ²`.
    pub first_integral: f64,
    /// Maximal radius `ρ_t(H)`.
    pub max_radius: f64,
    /// Half-height `h_t(H)`.
    pub half_height: f64,
    /// Error estimate attached to `half_height`.
    pub half_height_error: f64,
}

impl NodoidParams {
    /// `ρ − t`, evaluated without cancellation.
    pub fn neck_gap(&self) -> f64 {
        (self.neck / self.curvature) / (self.max_radius + self.neck)
    }
}

fn max_radius(curvature: f64, neck: f64) -> f64 {
    (neck * neck + neck / curvature).sqrt()
}

/// Integrand of the half-height after the substitution `x = t + s²`.
///
/// The original integrand `H(ρ²−x²)/√(x² − H²(ρ²−x²)²)` has an inverse square
/// root singularity at `x = t`; with `x² − H²(ρ²−x²)² = H(x−t)(x+t+1/H)(x+H(ρ²−x²))`
/// the factor `√(x−t) = s` cancels against `dx = 2s ds`.
pub(crate) fn height_integrand(curvature: f64, neck: f64, rho: f64, s: f64) -> f64 {
    let x = neck + s * s;
    let n = curvature * (rho - x).max(0.0) * (rho + x);
    let d = curvature * (x + neck + 1.0 / curvature) * (x + n);
    2.0 * n / d.sqrt()
}

/// Fills in `ρ`, `c` and the half-height of the nodoid with neck radius `t`.
pub fn params_from_t(curvature: f64, neck: f64) -> Result<NodoidParams> {
    params_from_t_with_tolerance(curvature, neck, DEFAULT_TOLERANCE)
}

pub fn params_from_t_with_tolerance(curvature: f64, neck: f64, abs_tol: f64) -> Result<NodoidParams> {
    positive("H", curvature)?;
    positive("t", neck)?;
    positive("tolerance", abs_tol)?;
    let rho = max_radius(curvature, neck);
    let c = curvature * neck * neck + neck;
    let gap = (neck / curvature) / (rho + neck);
    let Estimate { value, error, .. } = quadrature::integrate(
        |s| height_integrand(curvature, neck, rho, s),
        0.0,
        gap.sqrt(),
        abs_tol,
    )?;
    Ok(NodoidParams {
        curvature,
        neck,
        first_integral: c,
        max_radius: rho,
        half_height: value,
        half_height_error: error,
    })
}

/// `ρ_t(H) − t`.
pub fn neck_gap(curvature: f64, neck: f64) -> Result<f64> {
    positive("H", curvature)?;
    positive("t", neck)?;
    Ok((neck / curvature) / (max_radius(curvature, neck) + neck))
}

/// Tabulated profile `r(u)` on `u ∈ [0, h]`, extended evenly to `[−h, h]`.
///
/// Samples are uniform in `s = √(r − t)`. Each node stores the cumulative
/// height `u`, the radius `r = t + s²` and the exact derivative `du/ds`, so
/// `u(s)` is interpolated by piecewise cubic Hermite polynomials and inverted
/// by bisection within the bracketing panel.
#[derive(Debug, Clone)]
pub struct NodoidProfile {
    params: NodoidParams,
    step: f64,
    s: Vec<f64>,
    u: Vec<f64>,
    du_ds: Vec<f64>,
    error: f64,
}

/// Builds the profile table with `samples` nodes.
pub fn profile(params: &NodoidParams, samples: usize) -> Result<NodoidProfile> {
    if samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
            reason: "need at least two samples",
        });
    }
    let NodoidParams {
        curvature,
        neck,
        max_radius: rho,
        ..
    } = *params;
    let s_max = params.neck_gap().sqrt();
    let step = s_max / (samples - 1) as f64;
    let g = |s: f64| height_integrand(curvature, neck, rho, s);
    let s: Vec<f64> = (0..samples)
        .map(|k| if k + 1 == samples { s_max } else { k as f64 * step })
        .collect();
    let mut u = Vec::with_capacity(samples);
    let mut acc = 0.0;
    let mut error = 0.0;
    u.push(0.0);
    for w in s.windows(2) {
        let panel = quadrature::gauss_kronrod_15(&g, w[0], w[1]);
        acc += panel.value;
        error += panel.error;
        u.push(acc);
    }
    let du_ds = s.iter().map(|&si| g(si)).collect();
    Ok(NodoidProfile {
        params: *params,
        step,
        s,
        u,
        du_ds,
        error,
    })
}

impl NodoidProfile {
    pub fn params(&self) -> &NodoidParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Half-height as integrated by the table (agrees with
    /// `params().half_height` to within the quadrature error).
    pub fn half_height(&self) -> f64 {
        *self.u.last().expect("profile has at least two samples")
    }

    /// Accumulated quadrature error of the cumulative table.
    pub fn table_error(&self) -> f64 {
        self.error
    }

    /// `(u, r)` pairs of the table, `u` increasing from 0 to `h`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.u
            .iter()
            .zip(&self.s)
            .map(move |(&u, &s)| (u, self.params.neck + s * s))
    }

    fn hermite(&self, k: usize, s: f64) -> f64 {
        let h = self.s[k + 1] - self.s[k];
        let tau = (s - self.s[k]) / h;
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + tau;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.u[k] + h10 * h * self.du_ds[k] + h01 * self.u[k + 1] + h11 * h * self.du_ds[k + 1]
    }

    /// Radius `r(u)` for `u ∈ [−h, h]` (even extension).
    pub fn radius_at(&self, height: f64) -> Result<f64> {
        let h = self.half_height();
        let q = height.abs();
        let slack = 1e-9 * h.max(1.0);
        if !(q <= h + slack) {
            return Err(Error::OutOfRange {
                query: height,
                lo: -h,
                hi: h,
            });
        }
        let q = q.min(h);
        let neck = self.params.neck;
        if q == h {
            return Ok(self.params.max_radius);
        }
        // Last table index with u[k] <= q.
        let k = self.u.partition_point(|&v| v <= q).saturating_sub(1);
        let k = k.min(self.s.len() - 2);
        if self.u[k] == q {
            return Ok(neck + self.s[k] * self.s[k]);
        }
        // Bisection on the Hermite cubic; the endpoint values bracket q even
        // where the cubic is not monotone.
        let (mut lo, mut hi) = (self.s[k], self.s[k + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.hermite(k, mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        Ok(neck + s * s)
    }

    /// Residuals `|H r² + r/√(1+r'²) − c|` at the interior table nodes, with
    /// `r' = dr/du` from centred differences of the table.
    pub fn first_integral_residuals(&self) -> Vec<(f64, f64)> {
        let NodoidParams {
            curvature,
            neck,
            first_integral,
            ..
        } = self.params;
        (1..self.s.len().saturating_sub(1))
            .map(|k| {
                let du = self.u[k + 1] - self.u[k - 1];
                let dr = (self.s[k + 1] * self.s[k + 1]) - (self.s[k - 1] * self.s[k - 1]);
                let r = neck + self.s[k] * self.s[k];
                // r/√(1+r'²) with r' = dr/du, written to stay finite as r' → ∞.
                let tilt = r * du / (du * du + dr * dr).sqrt();
                (self.u[k], (curvature * r * r + tilt - first_integral).abs())
            })
            .collect()
    }

    /// Uniform spacing of the table in `s = √(r − t)`.
    pub fn step(&self) -> f64 {
        self.step
    }
}
