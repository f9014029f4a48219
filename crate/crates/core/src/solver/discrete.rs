//! Conservative discretisation of the area functional on a tensor grid.
//!
//! Every cell contributes the mean of four corner evaluations of
//! `√(1 + |∇u|²)`, where at each corner the gradient is taken from the two
//! cell edges meeting there. The discrete operator is the gradient of
//! `area(u) + 2H Σ u dx dy`, so the Jacobian is the (symmetric, positive
//! definite) Hessian of a convex function.

use super::banded::BandedSpd;
use crate::field::Grid;

/// Corner offset, x-neighbour offset, y-neighbour offset, x sign, y sign.
const CORNERS: [((usize, usize), (usize, usize), (usize, usize), f64, f64); 4] = [
    ((0, 0), (1, 0), (0, 1), 1.0, 1.0),
    ((1, 0), (0, 0), (1, 1), -1.0, 1.0),
    ((0, 1), (1, 1), (0, 0), 1.0, -1.0),
    ((1, 1), (0, 1), (1, 0), -1.0, -1.0),
];

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    nx: usize,
    ny: usize,
    y_fast: bool,
}

impl Layout {
    pub fn new(grid: &Grid) -> Self {
        Layout {
            nx: grid.nx,
            ny: grid.ny,
            y_fast: grid.ny <= grid.nx,
        }
    }

    pub fn unknowns(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    pub fn bandwidth(&self) -> usize {
        if self.y_fast {
            self.ny - 1
        } else {
            self.nx - 1
        }
    }

    #[inline]
    pub fn unknown(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny {
            return None;
        }
        Some(if self.y_fast {
            (i - 1) * (self.ny - 2) + (j - 1)
        } else {
            (j - 1) * (self.nx - 2) + (i - 1)
        })
    }

    /// Node index (row-major, x fastest) of unknown `m`.
    pub fn node(&self, m: usize) -> usize {
        let (i, j) = if self.y_fast {
            (m / (self.ny - 2) + 1, m % (self.ny - 2) + 1)
        } else {
            (m % (self.nx - 2) + 1, m / (self.nx - 2) + 1)
        };
        j * self.nx + i
    }
}

pub(crate) struct Discretization {
    pub grid: Grid,
    pub layout: Layout,
    dx: f64,
    /// Height of each cell row.
    dy: Vec<f64>,
    /// Control area `dx·(dy_{j−1} + dy_j)/2` of the nodes in row `j`.
    area: Vec<f64>,
}

impl Discretization {
    pub fn new(grid: &Grid) -> Self {
        let dx = grid.dx();
        let dy: Vec<f64> = (0..grid.ny - 1).map(|j| grid.dy_at(j)).collect();
        let area = (0..grid.ny)
            .map(|j| {
                let below = if j > 0 { dy[j - 1] } else { 0.0 };
                let above = if j + 1 < grid.ny { dy[j] } else { 0.0 };
                0.5 * dx * (below + above)
            })
            .collect();
        Discretization {
            grid: *grid,
            layout: Layout::new(grid),
            dx,
            dy,
            area,
        }
    }

    /// Control area of the node behind unknown `m`.
    pub fn unknown_area(&self, m: usize) -> f64 {
        self.area[self.layout.node(m) / self.grid.nx]
    }

    #[inline]
    fn quarter(&self, j: usize) -> f64 {
        0.25 * self.dx * self.dy[j]
    }

    #[inline]
    fn corner(&self, u: &[f64], i: usize, j: usize, k: usize) -> ([usize; 3], f64, f64, f64, f64) {
        let nx = self.grid.nx;
        let ((ci, cj), (xi, xj), (yi, yj), sx, sy) = CORNERS[k];
        let c = (j + cj) * nx + i + ci;
        let xn = (j + xj) * nx + i + xi;
        let yn = (j + yj) * nx + i + yi;
        let gx = sx * (u[xn] - u[c]) / self.dx;
        let gy = sy * (u[yn] - u[c]) / self.dy[j];
        ([c, xn, yn], gx, gy, sx, sy)
    }

    /// `area(u) + 2H Σ_interior u·(control area)`.
    pub fn energy(&self, u: &[f64], curvature: f64) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut area = 0.0;
        for j in 0..ny - 1 {
            let mut row = 0.0;
            for i in 0..nx - 1 {
                for k in 0..4 {
                    let (_, gx, gy, _, _) = self.corner(u, i, j, k);
                    row += (1.0 + gx * gx + gy * gy).sqrt();
                }
            }
            area += self.quarter(j) * row;
        }
        let mut volume = 0.0;
        for j in 1..ny - 1 {
            let row: f64 = (1..nx - 1).map(|i| u[j * nx + i]).sum();
            volume += self.area[j] * row;
        }
        area + 2.0 * curvature * volume
    }

    /// Discrete harmonic extension of the boundary values of `u`: the
    /// minimiser of the Dirichlet energy `Σ q (gx² + gy²)/2` over the corners.
    pub fn harmonic(&self, u: &[f64]) -> crate::error::Result<Vec<f64>> {
        let laplace = self.hessian(&vec![0.0; u.len()]);
        let g = self.gradient_with(u, |_, _| 1.0);
        let rhs: Vec<f64> = (0..self.layout.unknowns()).map(|m| -g[self.layout.node(m)]).collect();
        let step = laplace.cholesky()?.solve(&rhs);
        let mut out = u.to_vec();
        for (m, s) in step.iter().enumerate() {
            out[self.layout.node(m)] += s;
        }
        Ok(out)
    }

    /// Gradient of the area term with respect to every node value.
    pub fn area_gradient(&self, u: &[f64]) -> Vec<f64> {
        self.gradient_with(u, |gx, gy| (1.0 + gx * gx + gy * gy).sqrt())
    }

    /// Gradient of `Σ q Φ(gx, gy)` where `∂Φ/∂g = g / w(gx, gy)`.
    fn gradient_with(&self, u: &[f64], w: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut g = vec![0.0; u.len()];
        for j in 0..ny - 1 {
            let q = self.quarter(j);
            for i in 0..nx - 1 {
                for k in 0..4 {
                    let ([c, xn, yn], gx, gy, sx, sy) = self.corner(u, i, j, k);
                    let w = w(gx, gy);
                    let px = q * gx / w * sx / self.dx;
                    let py = q * gy / w * sy / self.dy[j];
                    g[xn] += px;
                    g[yn] += py;
                    g[c] -= px + py;
                }
            }
        }
        g
    }

    /// Discrete `div(∇u / W) − 2H` at every node (zero on the boundary).
    pub fn residual(&self, u: &[f64], curvature: f64) -> Vec<f64> {
        let g = self.area_gradient(u);
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut r = vec![0.0; u.len()];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let n = j * nx + i;
                r[n] = -g[n] / self.area[j] - 2.0 * curvature;
            }
        }
        r
    }

    /// Energy gradient restricted to the unknowns.
    pub fn reduced_gradient(&self, u: &[f64], curvature: f64) -> Vec<f64> {
        let g = self.area_gradient(u);
        (0..self.layout.unknowns())
            .map(|m| {
                let n = self.layout.node(m);
                g[n] + 2.0 * curvature * self.area[n / self.grid.nx]
            })
            .collect()
    }

    pub fn hessian(&self, u: &[f64]) -> BandedSpd {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut h = BandedSpd::zeros(self.layout.unknowns(), self.layout.bandwidth());
        for j in 0..ny - 1 {
            let q = self.quarter(j);
            let dy = self.dy[j];
            for i in 0..nx - 1 {
                for k in 0..4 {
                    let (nodes, gx, gy, sx, sy) = self.corner(u, i, j, k);
                    let w2 = 1.0 + gx * gx + gy * gy;
                    let w = w2.sqrt();
                    let w3 = w * w2;
                    let hxx = q * (1.0 + gy * gy) / w3;
                    let hxy = -q * gx * gy / w3;
                    let hyy = q * (1.0 + gx * gx) / w3;
                    let ax = [-sx / self.dx, sx / self.dx, 0.0];
                    let ay = [-sy / dy, 0.0, sy / dy];
                    let idx: [Option<usize>; 3] = nodes.map(|n| self.layout.unknown(n % nx, n / nx));
                    for p in 0..3 {
                        let Some(mp) = idx[p] else { continue };
                        for q in 0..3 {
                            let Some(mq) = idx[q] else { continue };
                            if mq > mp {
                                continue;
                            }
                            let v = hxx * ax[p] * ax[q]
                                + hxy * (ax[p] * ay[q] + ay[p] * ax[q])
                                + hyy * ay[p] * ay[q];
                            h.add_lower(mp, mq, v);
                        }
                    }
                }
            }
        }
        h
    }
}
