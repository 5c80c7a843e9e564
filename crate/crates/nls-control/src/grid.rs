//! Periodic spatial grids and complex fields sampled on them.
//!
//! The domain is the box `[0, L)^d` with `d` in {1, 2}, discretized by `n`
//! equispaced points per axis. `n` must be a power of two (the spectral
//! routines rely on it) and at least 8. Fields are stored flat, x fastest:
//! index `ix + n*iy` in two dimensions.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    d: usize,
    n: usize,
    length: f64,
}

impl SpatialGrid {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::InvalidParam(format!("dimension must be 1 or 2, got {d}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParam(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParam(format!("box length must be positive, got {length}")));
        }
        Ok(Self { d, n, length })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one grid point, `dx^d`.
    pub fn cell(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// Coordinates of the flat index; the unused axis reads 0 in 1-d.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let dx = self.dx();
        match self.d {
            1 => [idx as f64 * dx, 0.0],
            _ => [(idx % self.n) as f64 * dx, (idx / self.n) as f64 * dx],
        }
    }

    /// Wavenumber along one axis for FFT-ordered index `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let n = self.n;
        let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        2.0 * std::f64::consts::PI * signed / self.length
    }

    /// Wavenumber vector of the flat spectral index.
    pub fn kvec(&self, idx: usize) -> [f64; 2] {
        match self.d {
            1 => [self.wavenumber(idx), 0.0],
            _ => [self.wavenumber(idx % self.n), self.wavenumber(idx / self.n)],
        }
    }

    /// `|k|^2` of the flat spectral index.
    pub fn ksq(&self, idx: usize) -> f64 {
        let k = self.kvec(idx);
        k[0] * k[0] + k[1] * k[1]
    }

    /// Shortest periodic distance squared to `center`.
    pub fn torus_dist_sq(&self, idx: usize, center: [f64; 2]) -> f64 {
        let x = self.coords(idx);
        let mut acc = 0.0;
        for a in 0..self.d {
            let mut dr = (x[a] - center[a]).abs() % self.length;
            if dr > self.length / 2.0 {
                dr = self.length - dr;
            }
            acc += dr * dr;
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: SpatialGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "value buffer has {} entries, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample a function of the grid coordinates.
    pub fn from_fn(grid: SpatialGrid, mut f: impl FnMut([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn check_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn scale(&mut self, c: Complex64) {
        for z in &mut self.values {
            *z *= c;
        }
    }

    /// `self += c * other`, grids must match.
    pub fn axpy(&mut self, c: Complex64, other: &ComplexField) -> Result<()> {
        self.check_same_grid(other)?;
        for (z, w) in self.values.iter_mut().zip(&other.values) {
            *z += c * w;
        }
        Ok(())
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(ComplexField { grid: self.grid, values })
    }
}
