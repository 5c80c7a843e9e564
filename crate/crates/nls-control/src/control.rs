//! Control signals and the admissible sets they are projected onto.
//!
//! A control is an `R^m`-valued piecewise-linear function given by its values
//! on a uniform time grid. The grid may be coarser than the solver grid; the
//! solver samples the control by linear interpolation, so refining the time
//! step never changes the control itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::TimeGrid;

/// Compact convex constraint set in `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdmissibleSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl AdmissibleSet {
    /// Symmetric box `[-r, r]^m`.
    pub fn symmetric_box(m: usize, r: f64) -> Self {
        AdmissibleSet::Box { lo: vec![-r; m], hi: vec![r; m] }
    }

    pub fn channels(&self) -> usize {
        match self {
            AdmissibleSet::Box { lo, .. } => lo.len(),
            AdmissibleSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AdmissibleSet::Box { lo, hi } => {
                // an empty box is the "no control channels" marker
                if lo.len() != hi.len() {
                    return Err(Error::InvalidParam("box bounds must have equal length".into()));
                }
                for (a, b) in lo.iter().zip(hi) {
                    if !a.is_finite() || !b.is_finite() || a > b {
                        return Err(Error::InvalidParam(format!("empty or unbounded box side [{a}, {b}]")));
                    }
                }
            }
            AdmissibleSet::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::InvalidParam("ball center must be non-empty".into()));
                }
                if !center.iter().all(|c| c.is_finite()) || !radius.is_finite() || *radius < 0.0 {
                    return Err(Error::InvalidParam(format!("bad ball radius {radius}")));
                }
            }
        }
        Ok(())
    }

    /// Euclidean diameter, used for scale-free stopping tests.
    pub fn diameter(&self) -> f64 {
        match self {
            AdmissibleSet::Box { lo, hi } => {
                lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
            }
            AdmissibleSet::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Euclidean projection, in place. Idempotent; for the ball the center
    /// maps to itself (the zero-direction tie is resolved at the center).
    pub fn project(&self, v: &mut [f64]) {
        match self {
            AdmissibleSet::Box { lo, hi } => {
                for ((x, a), b) in v.iter_mut().zip(lo).zip(hi) {
                    *x = x.clamp(*a, *b);
                }
            }
            AdmissibleSet::Ball { center, radius } => {
                let mut dist_sq = 0.0;
                for (x, c) in v.iter().zip(center) {
                    dist_sq += (x - c) * (x - c);
                }
                let dist = dist_sq.sqrt();
                if dist > *radius {
                    let s = radius / dist;
                    for (x, c) in v.iter_mut().zip(center) {
                        *x = c + (*x - c) * s;
                    }
                }
            }
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        let mut w = v.to_vec();
        self.project(&mut w);
        v.iter().zip(&w).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Piecewise-linear control path with every node value inside an admissible
/// set (node values are projected on construction).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    time: TimeGrid,
    channels: usize,
    /// node-major: `values[node][channel]`
    values: Vec<Vec<f64>>,
    set: AdmissibleSet,
}

impl ControlPath {
    pub fn new(time: TimeGrid, set: AdmissibleSet, mut values: Vec<Vec<f64>>) -> Result<Self> {
        set.validate()?;
        let m = set.channels();
        if values.len() != time.steps() + 1 {
            return Err(Error::NodeMismatch(format!(
                "control needs {} node values, got {}",
                time.steps() + 1,
                values.len()
            )));
        }
        for v in &mut values {
            if v.len() != m {
                return Err(Error::NodeMismatch(format!(
                    "control node has {} channels, set has {m}",
                    v.len()
                )));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite);
            }
            set.project(v);
        }
        Ok(Self { time, channels: m, values, set })
    }

    /// Control constant in time.
    pub fn constant(time: TimeGrid, set: AdmissibleSet, value: Vec<f64>) -> Result<Self> {
        let nodes = time.steps() + 1;
        Self::new(time, set, vec![value; nodes])
    }

    pub fn zero(time: TimeGrid, set: AdmissibleSet) -> Result<Self> {
        let m = set.channels();
        Self::constant(time, set, vec![0.0; m])
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn set(&self) -> &AdmissibleSet {
        &self.set
    }

    pub fn node_values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Replace node values, projecting onto the set.
    pub fn with_values(&self, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.time, self.set.clone(), values)
    }

    /// Linear interpolation at an arbitrary time, clamped to `[0, T]`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let dt = self.time.dt();
        let s = (t / dt).clamp(0.0, self.time.steps() as f64);
        let k = (s.floor() as usize).min(self.time.steps() - 1);
        let theta = s - k as f64;
        let lo = &self.values[k];
        let hi = &self.values[k + 1];
        lo.iter().zip(hi).map(|(a, b)| a + theta * (b - a)).collect()
    }

    /// Discrete `L^2(0,T; R^m)` norm over the control nodes (trapezoid in
    /// time).
    pub fn l2_norm(&self) -> f64 {
        let dt = self.time.dt();
        let last = self.values.len() - 1;
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let w = if k == 0 || k == last { 0.5 } else { 1.0 };
            acc += w * dt * v.iter().map(|x| x * x).sum::<f64>();
        }
        acc.sqrt()
    }

    /// Same-grid distance in the discrete `L^2(0,T)` norm.
    pub fn l2_distance(&self, other: &ControlPath) -> Result<f64> {
        if self.time != other.time || self.channels != other.channels {
            return Err(Error::NodeMismatch("control grids differ".into()));
        }
        let dt = self.time.dt();
        let last = self.values.len() - 1;
        let mut acc = 0.0;
        for (k, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            let w = if k == 0 || k == last { 0.5 } else { 1.0 };
            acc += w * dt * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        }
        Ok(acc.sqrt())
    }
}
