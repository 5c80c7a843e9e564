//! Tracking objective and its gradient data.
//!
//! ```text
//! Phi(u) = E |X(T) - target|^2_{L^2}
//!        + gamma1 E int |X - tracking|^2_{L^2} dt     (trapezoid)
//!        + gamma2 int |u|^2 dt                        (trapezoid)
//!        + gamma3 int |u'|^2 dt                       (forward differences)
//! ```
//!
//! Stochastic expectations are plain means over a frozen set of Wiener
//! paths (common random numbers): the same paths serve every objective and
//! gradient call of a run, so the sample objective is a deterministic
//! function of the control and line searches stay meaningful. Paths fan out
//! in parallel but are reduced in a fixed order.

use rayon::prelude::*;

use crate::adjoint::{im_v_pairing, solve_backward, AdjointState, BackwardMode};
use crate::control::{AdmissibleSet, ControlPath};
use crate::error::{Error, Result};
use crate::forward::{solve_forward, ModelParams};
use crate::grid::ComplexField;
use crate::noise::{NoiseModel, PhaseField, WienerPath};
use crate::norms::lp_norm;
use crate::trajectory::{TimeGrid, Trajectory};
use crate::util::path_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl ObjectiveWeights {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<Self> {
        let w = Self { gamma1, gamma2, gamma3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma1", self.gamma1), ("gamma2", self.gamma2), ("gamma3", self.gamma3)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.gamma2 == 0.0 {
            return Err(Error::InvalidParam(
                "the control-energy weight gamma2 must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Terminal target plus optional tracking trajectory; a missing tracking
/// signal stands for the zero field.
#[derive(Debug, Clone)]
pub struct TargetData {
    terminal: ComplexField,
    tracking: Option<Trajectory>,
}

impl TargetData {
    pub fn new(terminal: ComplexField, tracking: Option<Trajectory>) -> Self {
        Self { terminal, tracking }
    }

    pub fn terminal(&self) -> &ComplexField {
        &self.terminal
    }

    pub fn tracking(&self) -> Option<&Trajectory> {
        self.tracking.as_ref()
    }
}

/// Frozen set of driving paths for one optimization run.
#[derive(Debug, Clone)]
pub struct NoiseEnsemble {
    model: NoiseModel,
    paths: Vec<WienerPath>,
}

impl NoiseEnsemble {
    pub fn new(model: NoiseModel, paths: Vec<WienerPath>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidParam("noise ensemble needs at least one path".into()));
        }
        for p in &paths {
            if p.channels() != model.len() {
                return Err(Error::NodeMismatch(format!(
                    "path drives {} channels, model has {}",
                    p.channels(),
                    model.len()
                )));
            }
        }
        Ok(Self { model, paths })
    }

    /// Derive `count` independent paths from one base seed.
    pub fn sample(model: NoiseModel, time: TimeGrid, count: usize, base_seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParam("noise ensemble needs at least one path".into()));
        }
        let paths = (0..count)
            .map(|i| model.sample_path(time, path_seed(base_seed, i as u64)))
            .collect();
        Self::new(model, paths)
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn paths(&self) -> &[WienerPath] {
        &self.paths
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub total: f64,
    pub terminal: f64,
    pub tracking: f64,
    pub control_energy: f64,
    pub smoothness: f64,
}

/// Gradient data at one control. `eta` is the sample-mean gradient density
/// `2(gamma2 u - Im int V X conj(Y) dx)`; `smooth` the gamma3 density;
/// `discrete` the exact nodal partials of the discrete objective, present
/// when the discrete-adjoint mode produced them.
#[derive(Debug, Clone)]
pub struct GradientData {
    eta: Vec<Vec<f64>>,
    smooth: Vec<Vec<f64>>,
    discrete: Option<Vec<Vec<f64>>>,
}

impl GradientData {
    pub fn eta(&self) -> &[Vec<f64>] {
        &self.eta
    }

    /// `eta + gamma3` density: what a projected-gradient step descends.
    pub fn total_density(&self) -> Vec<Vec<f64>> {
        self.eta
            .iter()
            .zip(&self.smooth)
            .map(|(e, s)| e.iter().zip(s).map(|(a, b)| a + b).collect())
            .collect()
    }

    pub fn discrete(&self) -> Option<&[Vec<f64>]> {
        self.discrete.as_deref()
    }
}

/// One fully specified tracking problem: dynamics, horizon, admissible set,
/// weights, targets, and (optionally) the frozen noise ensemble.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    params: ModelParams,
    time: TimeGrid,
    x0: ComplexField,
    set: AdmissibleSet,
    weights: ObjectiveWeights,
    targets: TargetData,
    noise: Option<NoiseEnsemble>,
}

impl ControlProblem {
    pub fn new(
        params: ModelParams,
        time: TimeGrid,
        x0: ComplexField,
        set: AdmissibleSet,
        weights: ObjectiveWeights,
        targets: TargetData,
        noise: Option<NoiseEnsemble>,
    ) -> Result<Self> {
        weights.validate()?;
        set.validate()?;
        if x0.grid() != params.grid() {
            return Err(Error::GridMismatch("initial state on a different grid".into()));
        }
        targets.terminal.check_same_grid(&x0)?;
        if let Some(tr) = &targets.tracking {
            if tr.grid() != params.grid() || tr.time() != time || tr.stride() != 1 {
                return Err(Error::NodeMismatch(
                    "tracking target must be stored densely on the problem's grid and nodes".into(),
                ));
            }
        }
        if set.channels() != params.channels() {
            return Err(Error::Inadmissible(format!(
                "admissible set has {} channels, model has {}",
                set.channels(),
                params.channels()
            )));
        }
        if let Some(ens) = &noise {
            for p in ens.paths() {
                if p.time() != time {
                    return Err(Error::NodeMismatch(
                        "noise paths must live on the problem's time grid".into(),
                    ));
                }
            }
        }
        Ok(Self {
            params,
            time,
            x0,
            set,
            weights,
            targets,
            noise,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn x0(&self) -> &ComplexField {
        &self.x0
    }

    pub fn set(&self) -> &AdmissibleSet {
        &self.set
    }

    pub fn weights(&self) -> ObjectiveWeights {
        self.weights
    }

    pub fn targets(&self) -> &TargetData {
        &self.targets
    }

    pub fn noise(&self) -> Option<&NoiseEnsemble> {
        self.noise.as_ref()
    }

    pub fn zero_control(&self) -> Result<ControlPath> {
        ControlPath::zero(self.time, self.set.clone())
    }

    fn check_admissible(&self, u: &ControlPath) -> Result<()> {
        self.params.check_control(u, self.time)?;
        if u.set() != &self.set {
            return Err(Error::Inadmissible(
                "control was built for a different admissible set".into(),
            ));
        }
        for row in u.node_values() {
            if !self.set.contains(row, 1e-12) {
                return Err(Error::Inadmissible("control leaves the admissible set".into()));
            }
        }
        Ok(())
    }

    fn phase_for(&self, path: &WienerPath) -> Result<PhaseField> {
        let ens = self.noise.as_ref().expect("caller checked");
        ens.model().phase_field(self.params.grid(), path)
    }

    /// State-dependent cost of one realization: terminal misfit plus the
    /// gamma1-weighted tracking integral.
    fn state_cost(&self, fwd: &Trajectory) -> Result<(f64, f64)> {
        let gap_t = fwd.last().sub(&self.targets.terminal)?;
        let terminal = lp_norm(&gap_t, 2.0)?.powi(2);
        let mut tracking = 0.0;
        if self.weights.gamma1 != 0.0 {
            let dt = self.time.dt();
            for k in 0..=self.time.steps() {
                let gap = match &self.targets.tracking {
                    Some(tr) => fwd.field(k).sub(tr.field(k))?,
                    None => fwd.field(k).clone(),
                };
                tracking += self.time.weight(k) * dt * lp_norm(&gap, 2.0)?.powi(2);
            }
            tracking *= self.weights.gamma1;
        }
        Ok((terminal, tracking))
    }

    /// Terminal and tracking costs per realization, in path order.
    pub fn per_path_state_costs(&self, u: &ControlPath) -> Result<Vec<(f64, f64)>> {
        self.check_admissible(u)?;
        match &self.noise {
            None => {
                let fwd = solve_forward(&self.x0, &self.params, u, None, self.time, 1)?;
                Ok(vec![self.state_cost(&fwd)?])
            }
            Some(ens) => ens
                .paths()
                .par_iter()
                .map(|path| {
                    let phase = self.phase_for(path)?;
                    let fwd = solve_forward(&self.x0, &self.params, u, Some(&phase), self.time, 1)?;
                    self.state_cost(&fwd)
                })
                .collect::<Result<Vec<_>>>(),
        }
    }

    /// Quadratic control penalties; these never touch the state.
    fn control_cost(&self, u: &ControlPath) -> (f64, f64) {
        let energy = self.weights.gamma2 * u.l2_norm().powi(2);
        let mut smooth = 0.0;
        if self.weights.gamma3 != 0.0 {
            let dt = self.time.dt();
            let values = u.node_values();
            for k in 0..self.time.steps() {
                let step: f64 = values[k + 1]
                    .iter()
                    .zip(&values[k])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                smooth += step / dt;
            }
            smooth *= self.weights.gamma3;
        }
        (energy, smooth)
    }

    pub fn evaluate(&self, u: &ControlPath) -> Result<ObjectiveValue> {
        let costs = self.per_path_state_costs(u)?;
        let n = costs.len() as f64;
        let terminal = costs.iter().map(|c| c.0).sum::<f64>() / n;
        let tracking = costs.iter().map(|c| c.1).sum::<f64>() / n;
        let (control_energy, smoothness) = self.control_cost(u);
        Ok(ObjectiveValue {
            total: terminal + tracking + control_energy + smoothness,
            terminal,
            tracking,
            control_energy,
            smoothness,
        })
    }

    /// Forward/backward pass for one realization.
    fn path_gradient(
        &self,
        u: &ControlPath,
        phase: Option<&PhaseField>,
        mode: BackwardMode,
    ) -> Result<(Vec<Vec<f64>>, Option<Vec<Vec<f64>>>)> {
        let fwd = solve_forward(&self.x0, &self.params, u, phase, self.time, 1)?;
        let adj = solve_backward(
            &fwd,
            &self.params,
            u,
            phase,
            &self.targets.terminal,
            self.targets.tracking.as_ref(),
            self.weights.gamma1,
            mode,
            None,
        )?;
        let pairing = self.pairing_matrix(&fwd, &adj);
        let coupling = adj.control_coupling().map(|c| c.to_vec());
        Ok((pairing, coupling))
    }

    /// `Im int V_j X_k conj(Y_k) dx` per node and channel.
    fn pairing_matrix(&self, fwd: &Trajectory, adj: &AdjointState) -> Vec<Vec<f64>> {
        (0..=self.time.steps())
            .map(|k| {
                (0..self.params.channels())
                    .map(|j| {
                        im_v_pairing(self.params.potential(j), fwd.field(k), adj.y().field(k))
                    })
                    .collect()
            })
            .collect()
    }

    /// Sample-mean gradient of the objective at `u`.
    pub fn gradient(&self, u: &ControlPath, mode: BackwardMode) -> Result<GradientData> {
        self.check_admissible(u)?;
        let per_path: Vec<(Vec<Vec<f64>>, Option<Vec<Vec<f64>>>)> = match &self.noise {
            None => vec![self.path_gradient(u, None, mode)?],
            Some(ens) => ens
                .paths()
                .par_iter()
                .map(|path| {
                    let phase = self.phase_for(path)?;
                    self.path_gradient(u, Some(&phase), mode)
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let nodes = self.time.steps() + 1;
        let channels = self.params.channels();
        let n = per_path.len() as f64;
        let mut pairing = vec![vec![0.0; channels]; nodes];
        let mut coupling = vec![vec![0.0; channels]; nodes];
        let mut have_coupling = true;
        for (p, c) in &per_path {
            for k in 0..nodes {
                for j in 0..channels {
                    pairing[k][j] += p[k][j] / n;
                }
            }
            match c {
                Some(c) => {
                    for k in 0..nodes {
                        for j in 0..channels {
                            coupling[k][j] += c[k][j] / n;
                        }
                    }
                }
                None => have_coupling = false,
            }
        }

        let g2 = self.weights.gamma2;
        let eta: Vec<Vec<f64>> = (0..nodes)
            .map(|k| {
                (0..channels)
                    .map(|j| 2.0 * (g2 * u.node_values()[k][j] - pairing[k][j]))
                    .collect()
            })
            .collect();
        let raw_smooth = self.smoothness_partials(u);
        let dt = self.time.dt();
        let smooth: Vec<Vec<f64>> = raw_smooth
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let w = self.time.weight(k) * dt;
                row.iter().map(|g| g / w).collect()
            })
            .collect();

        let discrete = if have_coupling {
            // exact nodal partials: coupling + quadrature-weighted energy
            // term + second-difference smoothness term
            let mut d = coupling;
            for k in 0..nodes {
                let w = self.time.weight(k) * dt;
                for j in 0..channels {
                    d[k][j] += 2.0 * g2 * w * u.node_values()[k][j] + raw_smooth[k][j];
                }
            }
            Some(d)
        } else {
            None
        };

        Ok(GradientData { eta, smooth, discrete })
    }

    /// Exact partials of the gamma3 term: negative second differences with
    /// natural boundaries, scaled by `2 gamma3 / dt`.
    fn smoothness_partials(&self, u: &ControlPath) -> Vec<Vec<f64>> {
        let nodes = self.time.steps() + 1;
        let channels = self.params.channels();
        let mut out = vec![vec![0.0; channels]; nodes];
        if self.weights.gamma3 == 0.0 {
            return out;
        }
        let dt = self.time.dt();
        let values = u.node_values();
        let scale = 2.0 * self.weights.gamma3 / dt;
        for k in 0..nodes {
            for j in 0..channels {
                let mut g = 0.0;
                if k > 0 {
                    g += values[k][j] - values[k - 1][j];
                }
                if k + 1 < nodes {
                    g -= values[k + 1][j] - values[k][j];
                }
                out[k][j] = scale * g;
            }
        }
        out
    }
}
