//! Time grids and stored state trajectories.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};

/// Uniform partition of `[0, t_final]` into `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidParam(format!("final time must be positive, got {t_final}")));
        }
        if steps == 0 {
            return Err(Error::InvalidParam("need at least one time step".into()));
        }
        Ok(Self { t_final, steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Trapezoid weight of node `k`: 1/2 at both ends, 1 inside.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.steps {
            0.5
        } else {
            1.0
        }
    }

    pub fn halved(&self) -> TimeGrid {
        TimeGrid { t_final: self.t_final, steps: self.steps * 2 }
    }
}

/// States stored every `stride` solver steps, always including both ends.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: SpatialGrid,
    time: TimeGrid,
    stride: usize,
    fields: Vec<ComplexField>,
}

impl Trajectory {
    pub fn new(grid: SpatialGrid, time: TimeGrid, stride: usize, fields: Vec<ComplexField>) -> Result<Self> {
        if stride == 0 || time.steps() % stride != 0 {
            return Err(Error::InvalidDiscretization(format!(
                "stride {} must divide the {} solver steps",
                stride,
                time.steps()
            )));
        }
        let expect = time.steps() / stride + 1;
        if fields.len() != expect {
            return Err(Error::NodeMismatch(format!(
                "expected {expect} stored nodes, got {}",
                fields.len()
            )));
        }
        for f in &fields {
            if f.grid() != grid {
                return Err(Error::GridMismatch("trajectory fields on mixed grids".into()));
            }
        }
        Ok(Self { grid, time, stride, fields })
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Spacing between stored nodes.
    pub fn dt_stored(&self) -> f64 {
        self.time.dt() * self.stride as f64
    }

    /// Time of stored node `i`.
    pub fn node_time(&self, i: usize) -> f64 {
        self.time.node(i * self.stride)
    }

    pub fn field(&self, i: usize) -> &ComplexField {
        &self.fields[i]
    }

    pub fn fields(&self) -> &[ComplexField] {
        &self.fields
    }

    pub fn fields_mut(&mut self) -> &mut [ComplexField] {
        &mut self.fields
    }

    pub fn first(&self) -> &ComplexField {
        &self.fields[0]
    }

    pub fn last(&self) -> &ComplexField {
        self.fields.last().expect("trajectory is never empty")
    }

    /// Largest stored-node L2 distance to another trajectory on the same nodes.
    pub fn sup_l2_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::NodeMismatch(format!(
                "{} stored nodes vs {}",
                self.len(),
                other.len()
            )));
        }
        let mut sup: f64 = 0.0;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            let diff = a.sub(b)?;
            sup = sup.max(crate::norms::lp_norm(&diff, 2.0)?);
        }
        Ok(sup)
    }

    /// Binary dump, little endian: header `d: u32, n: u32, L: f64, M: u64,
    /// stride: u64`, then for each stored node all grid values as `(re, im)`
    /// pairs of f64, x fastest.
    pub fn write_fields_bin(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.points() as u32).to_le_bytes())?;
        w.write_all(&self.grid.length().to_le_bytes())?;
        w.write_all(&(self.time.steps() as u64).to_le_bytes())?;
        w.write_all(&(self.stride as u64).to_le_bytes())?;
        for f in &self.fields {
            for z in f.values() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read a dump produced by [`write_fields_bin`]. The final time is not
    /// part of the layout and must be supplied by the caller.
    pub fn read_fields_bin(r: &mut impl Read, t_final: f64) -> Result<Trajectory> {
        let mut u32buf = [0u8; 4];
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut u32buf)?;
        let d = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let n = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut f64buf)?;
        let length = f64::from_le_bytes(f64buf);
        r.read_exact(&mut f64buf)?;
        let steps = u64::from_le_bytes(f64buf) as usize;
        r.read_exact(&mut f64buf)?;
        let stride = u64::from_le_bytes(f64buf) as usize;
        let grid = SpatialGrid::new(d, n, length)?;
        let time = TimeGrid::new(t_final, steps)?;
        if stride == 0 || steps % stride != 0 {
            return Err(Error::InvalidDiscretization(format!(
                "dump stride {stride} does not divide {steps} steps"
            )));
        }
        let nodes = steps / stride + 1;
        let mut fields = Vec::with_capacity(nodes);
        for _ in 0..nodes {
            let mut values = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                r.read_exact(&mut f64buf)?;
                let re = f64::from_le_bytes(f64buf);
                r.read_exact(&mut f64buf)?;
                let im = f64::from_le_bytes(f64buf);
                values.push(Complex64::new(re, im));
            }
            fields.push(ComplexField::from_values(grid, values)?);
        }
        Trajectory::new(grid, time, stride, fields)
    }
}
