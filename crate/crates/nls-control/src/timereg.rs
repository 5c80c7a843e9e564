//! Pathwise temporal regularity of the gauge-removed free evolution.
//!
//! The diagnostic undoes the noise gauge and the free group at every stored
//! node,
//!
//! ```text
//! Phi(t_i) = exp(+ i t_i Laplacian) exp(-W(t_i)) X(t_i),
//! ```
//!
//! then measures the largest ratio `h^{-1/2} || Phi(. + h) - Phi ||` in
//! `L^2(0, T - h; L^2)` over grid shifts `h`. For solutions of the rescaled
//! equation the increment of `Phi` carries the Duhamel integral only, so the
//! ratio stays bounded as the grid refines; the free group and the gauge
//! drop out by construction. Spatially varying noise profiles put
//! first-order terms outside this transform and are rejected.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::noise::PhaseField;
use crate::norms::lp_norm;
use crate::spectral::free_propagate;
use crate::trajectory::Trajectory;

/// Which gauge to remove before the free-group rewind.
#[derive(Clone, Copy)]
pub enum GaugeSpec<'a> {
    /// Deterministic trajectory, `W = 0`.
    None,
    /// Remove `exp(W(t_i))` sampled from a noise realization.
    Phase(&'a PhaseField),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftRatio {
    pub h: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct TemporalRegularity {
    pub sup: f64,
    pub profile: Vec<ShiftRatio>,
}

/// Diagnostics bundle written by the `diagnose` pipeline; field order is the
/// serialized key order.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub v2_norm: f64,
    pub temporal_sup: f64,
    pub h_profile: Vec<ShiftRatio>,
    pub besov_max_ratio: f64,
}

pub fn temporal_regularity(traj: &Trajectory, gauge: GaugeSpec) -> Result<TemporalRegularity> {
    if traj.len() < 3 {
        return Err(Error::InvalidParam(
            "temporal regularity needs at least three stored nodes".into(),
        ));
    }
    if let GaugeSpec::Phase(phase) = gauge {
        if !phase.constant_profiles() {
            return Err(Error::Unsupported(
                "gauge removal needs spatially constant noise profiles".into(),
            ));
        }
        if phase.grid() != traj.grid() {
            return Err(Error::GridMismatch("phase and trajectory grids differ".into()));
        }
        if phase.time() != traj.time() {
            return Err(Error::NodeMismatch("phase and trajectory time grids differ".into()));
        }
    }

    let transformed: Vec<ComplexField> = (0..traj.len())
        .map(|i| {
            let mut f = traj.field(i).clone();
            if let GaugeSpec::Phase(phase) = gauge {
                let g = phase.gauge_factor(i * traj.stride(), -1.0);
                for (z, gz) in f.values_mut().iter_mut().zip(g.values()) {
                    *z *= gz;
                }
            }
            free_propagate(&f, -traj.node_time(i))
        })
        .collect();

    let m = traj.len() - 1;
    let dt = traj.dt_stored();
    let mut profile = Vec::with_capacity(m - 1);
    let mut sup = 0.0f64;
    for j in 1..m {
        let h = j as f64 * dt;
        let mut acc = 0.0;
        for k in 0..(m - j) {
            let diff = transformed[k + j].sub(&transformed[k])?;
            let d = lp_norm(&diff, 2.0)?;
            acc += dt * d * d;
        }
        let ratio = acc.sqrt() / h.sqrt();
        sup = sup.max(ratio);
        profile.push(ShiftRatio { h, ratio });
    }
    Ok(TemporalRegularity { sup, profile })
}
