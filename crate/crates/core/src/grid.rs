//! Discrete fields: radial profiles on `[0, rmax]` and scalar fields on a
//! disk mask inside the unit ball.

use crate::error::CoreError;
use std::sync::Arc;

/// A function of radius on a uniform grid, `values[i] ~ u(i h)`, `h = rmax / (len-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub rmax: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn from_fn(rmax: f64, cells: usize, f: impl Fn(f64) -> f64) -> Self {
        assert!(rmax > 0.0 && cells >= 4);
        let h = rmax / cells as f64;
        let values = (0..=cells).map(|i| f(i as f64 * h)).collect();
        RadialField { rmax, h, values }
    }

    pub fn zeros(rmax: f64, cells: usize) -> Self {
        Self::from_fn(rmax, cells, |_| 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn radius(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// First and second derivative arrays for an even field about r = 0:
    /// central differences inside, even reflection at the pole, one-sided
    /// second-order stencils at the outer edge.
    pub fn derivatives_even(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.last_index();
        let h = self.h;
        let u = &self.values;
        let mut du = vec![0.0; n + 1];
        let mut d2u = vec![0.0; n + 1];
        du[0] = 0.0;
        d2u[0] = 2.0 * (u[1] - u[0]) / (h * h);
        for i in 1..n {
            du[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
            d2u[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        }
        du[n] = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
        d2u[n] = (2.0 * u[n] - 5.0 * u[n - 1] + 4.0 * u[n - 2] - u[n - 3]) / (h * h);
        (du, d2u)
    }

    /// Cubic (4-point Lagrange) interpolation at radius `r`.
    pub fn interp(&self, r: f64) -> Result<f64, CoreError> {
        let n = self.last_index();
        if !(0.0..=self.rmax * (1.0 + 1e-12)).contains(&r) {
            return Err(CoreError::domain(format!(
                "interpolation radius {r} outside [0, {}]",
                self.rmax
            )));
        }
        let s = (r / self.h).min(n as f64);
        let i1 = (s.floor() as usize).min(n - 1);
        // choose 4 nodes i0..i0+3 containing the cell [i1, i1+1]
        let i0 = i1.saturating_sub(1).min(n - 3);
        let t = s - i0 as f64;
        let u = &self.values[i0..i0 + 4];
        let mut acc = 0.0;
        for (j, &uj) in u.iter().enumerate() {
            let mut w = 1.0;
            for l in 0..4 {
                if l != j {
                    w *= (t - l as f64) / (j as f64 - l as f64);
                }
            }
            acc += w * uj;
        }
        Ok(acc)
    }

    pub fn sup_distance(&self, other: &RadialField) -> Result<f64, CoreError> {
        if self.len() != other.len() || (self.h - other.h).abs() > 1e-14 {
            return Err(CoreError::GridMismatch("radial fields differ in grid".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// A graph field `u(x, y)` on a square patch `[-l, l]^2`, used for the primal
/// side of 2-D Legendre transforms and for full-matrix curvature checks.
#[derive(Debug, Clone)]
pub struct GraphPatch2D {
    pub l: f64,
    pub h: f64,
    /// Points per side; values are row-major with x fastest.
    pub side: usize,
    pub values: Vec<f64>,
}

impl GraphPatch2D {
    pub fn from_fn(l: f64, cells_per_side: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(l > 0.0 && cells_per_side >= 4);
        let side = cells_per_side + 1;
        let h = 2.0 * l / cells_per_side as f64;
        let mut values = Vec::with_capacity(side * side);
        for j in 0..side {
            let y = -l + j as f64 * h;
            for i in 0..side {
                let x = -l + i as f64 * h;
                values.push(f(x, y));
            }
        }
        GraphPatch2D { l, h, side, values }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.h
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.side + i]
    }
}

/// Mask classification of a lattice cell relative to the disk |xi| < r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Outside,
    /// In-domain cell with at least one 8-neighbor outside; carries Dirichlet data.
    Ring,
    /// In-domain cell whose full 9-point stencil is in-domain.
    Interior,
}

/// Geometry of the square lattice masked to the disk of radius `r` (shared by
/// every field living on it).
#[derive(Debug)]
pub struct BallGrid {
    pub r: f64,
    pub h: f64,
    /// Half-width in cells; indices run over [-half, half]^2.
    pub half: i64,
    pub size: usize,
    pub kind: Vec<CellKind>,
    /// sqrt(1 - |xi|^2) per cell (0 outside the mask).
    pub wstar: Vec<f64>,
    /// Contiguous interior runs, one per row: (j, i_begin, i_end) inclusive.
    pub interior_rows: Vec<(i64, i64, i64)>,
    pub ring_cells: Vec<usize>,
    pub interior_count: usize,
}

impl BallGrid {
    pub fn new(r: f64, h: f64) -> Result<Arc<BallGrid>, CoreError> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(CoreError::domain(format!("ball radius {r} outside (0, 1]")));
        }
        if !(h > 0.0 && h < r / 4.0) {
            return Err(CoreError::domain(format!("grid spacing {h} too coarse for radius {r}")));
        }
        let half = (r / h).floor() as i64;
        let size = (2 * half + 1) as usize;
        let mut kind = vec![CellKind::Outside; size * size];
        let mut wstar = vec![0.0; size * size];
        let in_domain = |i: i64, j: i64| -> bool {
            if i.abs() > half || j.abs() > half {
                return false;
            }
            let (x, y) = (i as f64 * h, j as f64 * h);
            x * x + y * y < r * r
        };
        for j in -half..=half {
            for i in -half..=half {
                if in_domain(i, j) {
                    let idx = Self::index_of(half, size, i, j);
                    let (x, y) = (i as f64 * h, j as f64 * h);
                    kind[idx] = CellKind::Ring;
                    wstar[idx] = (1.0 - x * x - y * y).sqrt();
                }
            }
        }
        let mut interior_rows = Vec::new();
        let mut ring_cells = Vec::new();
        let mut interior_count = 0usize;
        for j in -half..=half {
            let mut run: Option<(i64, i64)> = None;
            for i in -half..=half {
                if !in_domain(i, j) {
                    continue;
                }
                let idx = Self::index_of(half, size, i, j);
                let mut interior = true;
                'nb: for dj in -1..=1 {
                    for di in -1..=1 {
                        if !in_domain(i + di, j + dj) {
                            interior = false;
                            break 'nb;
                        }
                    }
                }
                if interior {
                    kind[idx] = CellKind::Interior;
                    interior_count += 1;
                    run = match run {
                        None => Some((i, i)),
                        Some((a, _)) => Some((a, i)),
                    };
                } else {
                    ring_cells.push(idx);
                }
            }
            if let Some((a, b)) = run {
                interior_rows.push((j, a, b));
            }
        }
        // the disk interior is row-convex, so one run per row is exhaustive
        debug_assert!(interior_rows.iter().all(|&(j, a, b)| {
            (a..=b).all(|i| kind[Self::index_of(half, size, i, j)] == CellKind::Interior)
        }));
        Ok(Arc::new(BallGrid {
            r,
            h,
            half,
            size,
            kind,
            wstar,
            interior_rows,
            ring_cells,
            interior_count,
        }))
    }

    #[inline]
    fn index_of(half: i64, size: usize, i: i64, j: i64) -> usize {
        ((j + half) as usize) * size + (i + half) as usize
    }

    #[inline]
    pub fn idx(&self, i: i64, j: i64) -> usize {
        Self::index_of(self.half, self.size, i, j)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let j = (idx / self.size) as i64 - self.half;
        let i = (idx % self.size) as i64 - self.half;
        (i as f64 * self.h, j as f64 * self.h)
    }
}

/// A scalar field on a [`BallGrid`]; out-of-mask entries are NaN.
#[derive(Debug, Clone)]
pub struct BallField2D {
    pub grid: Arc<BallGrid>,
    pub values: Vec<f64>,
}

impl BallField2D {
    pub fn from_fn(grid: Arc<BallGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![f64::NAN; grid.size * grid.size];
        for idx in 0..values.len() {
            if grid.kind[idx] != CellKind::Outside {
                let (x, y) = grid.coords(idx);
                values[idx] = f(x, y);
            }
        }
        BallField2D { grid, values }
    }

    pub fn same_grid(&self, other: &BallField2D) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
            || (self.grid.r == other.grid.r && self.grid.h == other.grid.h)
    }

    /// Max |a - b| over in-mask cells.
    pub fn sup_distance(&self, other: &BallField2D) -> Result<f64, CoreError> {
        if !self.same_grid(other) {
            return Err(CoreError::GridMismatch("ball fields differ in grid".into()));
        }
        let mut m = 0.0f64;
        for idx in 0..self.values.len() {
            if self.grid.kind[idx] != CellKind::Outside {
                m = m.max((self.values[idx] - other.values[idx]).abs());
            }
        }
        Ok(m)
    }

    /// Bilinear interpolation at an in-disk point; cells outside the mask
    /// cannot participate.
    pub fn interp(&self, x: f64, y: f64) -> Result<f64, CoreError> {
        let g = &self.grid;
        let fi = (x / g.h).floor();
        let fj = (y / g.h).floor();
        let (i, j) = (fi as i64, fj as i64);
        if i < -g.half || i + 1 > g.half || j < -g.half || j + 1 > g.half {
            return Err(CoreError::domain(format!("({x}, {y}) outside ball grid")));
        }
        let tx = x / g.h - fi;
        let ty = y / g.h - fj;
        let mut vals = [0.0; 4];
        for (c, (di, dj)) in [(0_i64, 0_i64), (1, 0), (0, 1), (1, 1)].iter().enumerate() {
            let idx = g.idx(i + di, j + dj);
            if g.kind[idx] == CellKind::Outside {
                return Err(CoreError::domain(format!(
                    "({x}, {y}) stencil leaves the disk mask"
                )));
            }
            vals[c] = self.values[idx];
        }
        Ok(vals[0] * (1.0 - tx) * (1.0 - ty)
            + vals[1] * tx * (1.0 - ty)
            + vals[2] * (1.0 - tx) * ty
            + vals[3] * tx * ty)
    }
}
