//! Rectangular node grids and nodal fields.
//!
//! Binary layout (all little-endian): `Nx: u64`, `Ny: u64`, row spacing code
//! `u64` (0 uniform, 1 cosine), `x_lo`, `x_hi`, `y_lo`, `y_hi`, `H` as `f64`,
//! followed by `Nx·Ny` values as `f64` in row-major order (rows of constant
//! `y`, `x` varying fastest).

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Placement of the grid rows between `y_lo` and `y_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowSpacing {
    #[default]
    Uniform,
    /// `y = mid + half·sin(πη/2)` for uniform `η ∈ [−1, 1]`: rows cluster
    /// quadratically at both edges, where limiting-width solutions have
    /// vertical tangent planes.
    Cosine,
}

impl RowSpacing {
    fn code(self) -> u64 {
        match self {
            RowSpacing::Uniform => 0,
            RowSpacing::Cosine => 1,
        }
    }

    fn from_code(c: u64) -> Result<Self> {
        match c {
            0 => Ok(RowSpacing::Uniform),
            1 => Ok(RowSpacing::Cosine),
            _ => Err(Error::Grid(format!("unknown row spacing code {c}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub nx: usize,
    pub ny: usize,
    pub rows: RowSpacing,
}

fn symmetric_node(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if k == 0 {
        return lo;
    }
    if k + 1 == n {
        return hi;
    }
    let m = (n - 1) as f64;
    0.5 * (lo + hi) + 0.5 * (hi - lo) * (2.0 * k as f64 - m) / m
}

impl Grid {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::Grid(format!("need at least 3×3 nodes, got {nx}×{ny}")));
        }
        if !(x.0 < x.1 && y.0 < y.1) || ![x.0, x.1, y.0, y.1].iter().all(|v| v.is_finite()) {
            return Err(Error::Grid(format!("degenerate bounds {x:?} × {y:?}")));
        }
        Ok(Grid {
            x_lo: x.0,
            x_hi: x.1,
            y_lo: y.0,
            y_hi: y.1,
            nx,
            ny,
            rows: RowSpacing::Uniform,
        })
    }

    pub fn with_rows(mut self, rows: RowSpacing) -> Self {
        self.rows = rows;
        self
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.nx - 1) as f64
    }

    /// Largest row spacing.
    pub fn dy(&self) -> f64 {
        match self.rows {
            RowSpacing::Uniform => (self.y_hi - self.y_lo) / (self.ny - 1) as f64,
            RowSpacing::Cosine => {
                let m = self.ny / 2;
                self.y(m) - self.y(m - 1)
            }
        }
    }

    /// Spacing between rows `j` and `j + 1`.
    pub fn dy_at(&self, j: usize) -> f64 {
        self.y(j + 1) - self.y(j)
    }

    /// Row `j` with `y(j) ≤ y ≤ y(j + 1)`, clamped to the grid, and the
    /// local coordinate of `y` in that interval.
    pub fn locate_row(&self, y: f64) -> (usize, f64) {
        let j = match self.rows {
            RowSpacing::Uniform => {
                let pos = ((y - self.y_lo) / self.dy()).clamp(0.0, (self.ny - 1) as f64);
                (pos.floor() as usize).min(self.ny - 2)
            }
            RowSpacing::Cosine => {
                let (mut lo, mut hi) = (0, self.ny - 1);
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if self.y(mid) <= y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        };
        let t = ((y - self.y(j)) / self.dy_at(j)).clamp(0.0, 1.0);
        (j, t)
    }

    /// Larger of the two spacings.
    pub fn spacing(&self) -> f64 {
        self.dx().max(self.dy())
    }

    /// Node abscissas are placed symmetrically about the midpoint so that
    /// reflected nodes are exact negatives on symmetric bounds.
    pub fn x(&self, i: usize) -> f64 {
        symmetric_node(self.x_lo, self.x_hi, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        match self.rows {
            RowSpacing::Uniform => symmetric_node(self.y_lo, self.y_hi, self.ny, j),
            RowSpacing::Cosine => {
                if j == 0 {
                    return self.y_lo;
                }
                if j + 1 == self.ny {
                    return self.y_hi;
                }
                let m = (self.ny - 1) as f64;
                let eta = (2.0 * j as f64 - m) / m;
                let s = (std::f64::consts::FRAC_PI_2 * eta).sin();
                0.5 * (self.y_lo + self.y_hi) + 0.5 * (self.y_hi - self.y_lo) * s
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let sx = 1e-12 * (self.x_hi - self.x_lo);
        let sy = 1e-12 * (self.y_hi - self.y_lo);
        x >= self.x_lo - sx && x <= self.x_hi + sx && y >= self.y_lo - sy && y <= self.y_hi + sy
    }

    /// Index of the node nearest to `x`, if it coincides with `x` up to rounding.
    pub fn column_of(&self, x: f64) -> Option<usize> {
        let pos = (x - self.x_lo) / self.dx();
        let i = pos.round();
        if i < 0.0 || i > (self.nx - 1) as f64 || (pos - i).abs() > 1e-8 {
            None
        } else {
            Some(i as usize)
        }
    }
}

/// Nodal values on a [`Grid`], tagged with the mean curvature they solve for.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    curvature: f64,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, curvature: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite value at node {k}")));
        }
        Ok(ScalarField {
            grid,
            curvature,
            values,
        })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid, curvature: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self::new(grid, curvature, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let g = &self.grid;
        (0..g.len()).map(|k| g.is_boundary(k % g.nx, k / g.nx)).collect()
    }

    /// Largest `|u(x, y) − u(x, −y)|` over the grid (for symmetric `y` bounds).
    pub fn reflection_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for j in 0..g.ny / 2 {
            for i in 0..g.nx {
                worst = worst.max((self.at(i, j) - self.at(i, g.ny - 1 - j)).abs());
            }
        }
        worst
    }

    /// Writes `x,y,u` rows with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,u")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                writeln!(w, "{},{},{}", self.grid.x(i), self.grid.y(j), self.at(i, j))?;
            }
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        w.write_all(&(g.nx as u64).to_le_bytes())?;
        w.write_all(&(g.ny as u64).to_le_bytes())?;
        w.write_all(&g.rows.code().to_le_bytes())?;
        for v in [g.x_lo, g.x_hi, g.y_lo, g.y_hi, self.curvature] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let nx = next_u64(&mut r)? as usize;
        let ny = next_u64(&mut r)? as usize;
        let rows = RowSpacing::from_code(next_u64(&mut r)?)?;
        let mut head = [0.0; 5];
        for v in head.iter_mut() {
            *v = f64::from_bits(next_u64(&mut r)?);
        }
        let grid = Grid::new((head[0], head[1]), (head[2], head[3]), nx, ny)?.with_rows(rows);
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            values.push(f64::from_bits(next_u64(&mut r)?));
        }
        Self::new(grid, head[4], values)
    }
}
