//! Backward (adjoint) solver and the gradient density it feeds.
//!
//! Two modes share one entry point:
//!
//! * `Continuous` integrates the dual linearized equation backward with the
//!   exact real transpose of the tangent splitting: per step, conjugate
//!   gauge factor, half free flight in reversed time, transposed rotation,
//!   tracking source injected at the midpoint, half free flight. Because
//!   every homogeneous sub-step is the transpose of its tangent
//!   counterpart, the duality defect against the variational solver comes
//!   only from source quadrature.
//! * `DiscreteAdjoint` runs reverse-mode through the actual nonlinear
//!   forward step. It produces, besides the adjoint state, the exact
//!   partial derivatives of the discrete tracking objective with respect to
//!   every control node (the coupling part; quadratic control penalties are
//!   differentiated where the objective is assembled).
//!
//! The stored adjoint state keeps the terminal identity
//! `Y(T) = -(X(T) - target)` exact in both modes.

use num_complex::Complex64;

use crate::control::ControlPath;
use crate::error::{Error, Result};
use crate::forward::{amp_pow, check_phase, ModelParams};
use crate::grid::ComplexField;
use crate::linearize::{linearize, RotationCoeffs, TruncationLevel};
use crate::noise::PhaseField;
use crate::spectral::{free_propagate, free_propagate_mut};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackwardMode {
    Continuous,
    DiscreteAdjoint,
}

/// Backward-filled adjoint trajectory. `control_coupling` is present in
/// discrete-adjoint runs only: node-major exact partials of the discrete
/// tracking cost with respect to the control values.
#[derive(Debug, Clone)]
pub struct AdjointState {
    y: Trajectory,
    control_coupling: Option<Vec<Vec<f64>>>,
}

impl AdjointState {
    pub fn y(&self) -> &Trajectory {
        &self.y
    }

    pub fn control_coupling(&self) -> Option<&[Vec<f64>]> {
        self.control_coupling.as_deref()
    }
}

/// `sum_x v(x) Im(a(x) conj(b(x))) dx^d`, the pairing behind both the
/// gradient density and the per-step control cotangent.
pub(crate) fn im_v_pairing(v: &[f64], a: &ComplexField, b: &ComplexField) -> f64 {
    let cell = a.grid().cell();
    v.iter()
        .zip(a.values())
        .zip(b.values())
        .map(|((vi, ai), bi)| vi * (ai * bi.conj()).im)
        .sum::<f64>()
        * cell
}

struct BackwardInputs<'a> {
    forward: &'a Trajectory,
    params: &'a ModelParams,
    u: &'a ControlPath,
    phase: Option<&'a PhaseField>,
    terminal_target: &'a ComplexField,
    tracking: Option<&'a Trajectory>,
    gamma1: f64,
}

impl BackwardInputs<'_> {
    fn validate(&self, mode: BackwardMode, trunc: Option<TruncationLevel>) -> Result<()> {
        if self.forward.stride() != 1 {
            return Err(Error::NodeMismatch(
                "backward solve needs every forward node (stride 1)".into(),
            ));
        }
        if self.forward.grid() != self.params.grid() {
            return Err(Error::GridMismatch("forward trajectory on a different grid".into()));
        }
        let time = self.forward.time();
        self.params.check_control(self.u, time)?;
        if let Some(ph) = self.phase {
            check_phase(ph, self.params, time)?;
            if mode == BackwardMode::Continuous && !ph.constant_profiles() {
                return Err(Error::Unsupported(
                    "continuous backward integration needs spatially constant noise profiles"
                        .into(),
                ));
            }
        }
        if mode == BackwardMode::DiscreteAdjoint && trunc.is_some() {
            return Err(Error::Unsupported(
                "truncation applies to the linearized backward flow, not the discrete transpose"
                    .into(),
            ));
        }
        self.terminal_target.check_same_grid(self.forward.first())?;
        if !(self.gamma1 >= 0.0) || !self.gamma1.is_finite() {
            return Err(Error::InvalidParam(format!(
                "tracking weight must be finite and nonnegative, got {}",
                self.gamma1
            )));
        }
        if let Some(tr) = self.tracking {
            if tr.stride() != 1 || tr.time() != time {
                return Err(Error::NodeMismatch(
                    "tracking trajectory must be sampled on the solver nodes".into(),
                ));
            }
            if tr.grid() != self.forward.grid() {
                return Err(Error::GridMismatch("tracking trajectory on a different grid".into()));
            }
        }
        Ok(())
    }

    /// `X_k - tracking_k`, with a zero tracking signal when none was given.
    fn tracking_gap(&self, k: usize) -> Result<ComplexField> {
        match self.tracking {
            Some(tr) => self.forward.field(k).sub(tr.field(k)),
            None => Ok(self.forward.field(k).clone()),
        }
    }
}

/// Integrate the adjoint state backward from `Y(T) = -(X(T) - terminal_target)`.
///
/// A missing tracking trajectory stands for a zero tracking signal; with
/// `gamma1 = 0` it is never touched.
#[allow(clippy::too_many_arguments)]
pub fn solve_backward(
    forward: &Trajectory,
    params: &ModelParams,
    u: &ControlPath,
    phase: Option<&PhaseField>,
    terminal_target: &ComplexField,
    tracking: Option<&Trajectory>,
    gamma1: f64,
    mode: BackwardMode,
    trunc: Option<TruncationLevel>,
) -> Result<AdjointState> {
    let inputs = BackwardInputs {
        forward,
        params,
        u,
        phase,
        terminal_target,
        tracking,
        gamma1,
    };
    inputs.validate(mode, trunc)?;
    match mode {
        BackwardMode::Continuous => solve_continuous(&inputs, trunc),
        BackwardMode::DiscreteAdjoint => solve_discrete(&inputs),
    }
}

fn terminal_state(inputs: &BackwardInputs) -> Result<ComplexField> {
    let mut y = inputs.forward.last().sub(inputs.terminal_target)?;
    y.scale(Complex64::new(-1.0, 0.0));
    Ok(y)
}

fn apply_conj_gauge(y: &mut ComplexField, phase: &PhaseField, k: usize) {
    let g = phase.step_gauge(k);
    for (z, gz) in y.values_mut().iter_mut().zip(g.values()) {
        *z *= gz.conj();
    }
}

fn solve_continuous(inputs: &BackwardInputs, trunc: Option<TruncationLevel>) -> Result<AdjointState> {
    let time = inputs.forward.time();
    let steps = time.steps();
    let dt = time.dt();
    let lambda = inputs.params.lambda();
    let alpha = inputs.params.alpha();

    let mut fields = vec![ComplexField::zeros(inputs.params.grid()); steps + 1];
    let mut y = terminal_state(inputs)?;
    fields[steps] = y.clone();

    for k in (0..steps).rev() {
        let u_mid = inputs.u.eval(time.node(k) + 0.5 * dt);
        let pot = inputs.params.combined_potential(&u_mid);
        let s1 = free_propagate(inputs.forward.field(k), 0.5 * dt);
        let lin = linearize(&s1, alpha, trunc)?;
        let rot = RotationCoeffs::new(&lin, lambda, &pot);

        if let Some(ph) = inputs.phase {
            apply_conj_gauge(&mut y, ph, k);
        }
        free_propagate_mut(&mut y, -0.5 * dt);
        rot.apply_transposed(&mut y, dt);
        if inputs.gamma1 != 0.0 {
            // tracking source at the step midpoint, carried through the
            // remaining half of the transposed rotation
            let mut mid = inputs.tracking_gap(k)?;
            mid.axpy(Complex64::new(1.0, 0.0), &inputs.tracking_gap(k + 1)?)?;
            mid.scale(Complex64::new(0.5, 0.0));
            rot.apply_transposed(&mut mid, 0.5 * dt);
            y.axpy(Complex64::new(-dt * inputs.gamma1, 0.0), &mid)?;
        }
        free_propagate_mut(&mut y, -0.5 * dt);
        if !y.is_finite() {
            return Err(Error::NonFinite);
        }
        fields[k] = y.clone();
    }

    Ok(AdjointState {
        y: Trajectory::new(inputs.params.grid(), time, 1, fields)?,
        control_coupling: None,
    })
}

fn solve_discrete(inputs: &BackwardInputs) -> Result<AdjointState> {
    let time = inputs.forward.time();
    let steps = time.steps();
    let dt = time.dt();
    let lambda = inputs.params.lambda();
    let alpha = inputs.params.alpha();
    let power = alpha - 1.0;
    let grid = inputs.params.grid();
    let channels = inputs.params.channels();

    let mut fields = vec![ComplexField::zeros(grid); steps + 1];
    // stored terminal state keeps the advertised identity; the recursion
    // itself starts from the full cotangent of the discrete objective,
    // which at the last node also carries the trapezoid tracking half-weight
    fields[steps] = terminal_state(inputs)?;

    let mut yhat = inputs.forward.last().sub(inputs.terminal_target)?;
    yhat.scale(Complex64::new(2.0, 0.0));
    if inputs.gamma1 != 0.0 {
        let gap = inputs.tracking_gap(steps)?;
        let w = 2.0 * inputs.gamma1 * time.weight(steps) * dt;
        yhat.axpy(Complex64::new(w, 0.0), &gap)?;
    }

    let mut coupling = vec![vec![0.0; channels]; steps + 1];
    for k in (0..steps).rev() {
        let u_mid = inputs.u.eval(time.node(k) + 0.5 * dt);
        let pot = inputs.params.combined_potential(&u_mid);
        let s1 = free_propagate(inputs.forward.field(k), 0.5 * dt);
        // nonlinear phase stage of the forward step, recomputed
        let mut s2 = s1.clone();
        let mut phases = Vec::with_capacity(s1.values().len());
        for (z, p) in s2.values_mut().iter_mut().zip(&pot) {
            let m = Complex64::from_polar(1.0, -dt * (lambda * amp_pow(*z, power) + p));
            *z *= m;
            phases.push(m);
        }

        if let Some(ph) = inputs.phase {
            apply_conj_gauge(&mut yhat, ph, k);
        }
        free_propagate_mut(&mut yhat, -0.5 * dt);

        // control enters only through the phase stage: the cotangent of the
        // midpoint value splits evenly onto the two adjacent nodes
        for j in 0..channels {
            let du = dt * im_v_pairing(inputs.params.potential(j), &s2, &yhat);
            coupling[k][j] += 0.5 * du;
            coupling[k + 1][j] += 0.5 * du;
        }

        // transpose of the differentiated phase stage: conjugate phase
        // factor, then the rank-one correction from the amplitude dependence
        for ((z, m), s) in yhat.values_mut().iter_mut().zip(&phases).zip(s1.values()) {
            let y2 = m.conj() * *z;
            let nsq = s.norm_sqr();
            if nsq == 0.0 {
                *z = y2;
            } else {
                let factor = dt * lambda * (alpha - 1.0) * amp_pow(*s, power) / nsq
                    * (s * y2.conj()).im;
                *z = y2 + factor * s;
            }
        }
        free_propagate_mut(&mut yhat, -0.5 * dt);
        if inputs.gamma1 != 0.0 {
            let gap = inputs.tracking_gap(k)?;
            let w = 2.0 * inputs.gamma1 * time.weight(k) * dt;
            yhat.axpy(Complex64::new(w, 0.0), &gap)?;
        }
        if !yhat.is_finite() {
            return Err(Error::NonFinite);
        }
        let mut yk = yhat.clone();
        yk.scale(Complex64::new(-0.5, 0.0));
        fields[k] = yk;
    }

    Ok(AdjointState {
        y: Trajectory::new(grid, time, 1, fields)?,
        control_coupling: Some(coupling),
    })
}

/// Gradient density of the tracking objective with respect to the control,
/// node-major:
///
/// ```text
/// eta_j(t_k) = 2 (gamma2 u_j(t_k) - sum_x V_j X_k Im(X_k conj(Y_k)) dx)
/// ```
///
/// evaluated from whichever adjoint state is supplied. Smoothness penalties
/// are differentiated next to the objective, not here.
pub fn gradient_eta(
    u: &ControlPath,
    forward: &Trajectory,
    adjoint: &AdjointState,
    params: &ModelParams,
    gamma2: f64,
) -> Result<Vec<Vec<f64>>> {
    let time = forward.time();
    params.check_control(u, time)?;
    if adjoint.y().time() != time || adjoint.y().stride() != 1 || forward.stride() != 1 {
        return Err(Error::NodeMismatch(
            "gradient needs forward and adjoint states on the same nodes".into(),
        ));
    }
    let mut eta = Vec::with_capacity(time.steps() + 1);
    for k in 0..=time.steps() {
        let x = forward.field(k);
        let y = adjoint.y().field(k);
        let uk = u.node_values()[k].as_slice();
        let mut row = Vec::with_capacity(params.channels());
        for j in 0..params.channels() {
            let pairing = im_v_pairing(params.potential(j), x, y);
            row.push(2.0 * (gamma2 * uk[j] - pairing));
        }
        eta.push(row);
    }
    Ok(eta)
}
