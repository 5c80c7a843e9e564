//! Optimization drivers over the tracking objective.
//!
//! Both drivers monitor the fixed-point residual
//!
//! ```text
//! r(u) = || u - P_K(u - eta(u) / (2 gamma2)) ||_{L^2(0,T)}
//! ```
//!
//! which rewrites the optimality characterization `u = P_K((1/gamma2)
//! Im int V X conj(Y) dx)`: the projection argument equals `(1/gamma2)`
//! times the pairing. `r(u)` is a computable certificate, so it drives the
//! stopping rule rather than objective stagnation.
//!
//! Projected gradient descends `eta` plus the smoothness density with an
//! Armijo backtracking line search; with frozen noise paths the sample
//! objective is deterministic, so accepted steps decrease it monotonically.
//! The fixed-point driver damps the characterization map and needs
//! `gamma3 = 0`, where that map is meaningful.

use serde::Serialize;

use crate::adjoint::{gradient_eta, AdjointState, BackwardMode};
use crate::control::ControlPath;
use crate::error::{Error, Result};
use crate::forward::ModelParams;
use crate::objective::{ControlProblem, GradientData};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    ProjectedGradient,
    FixedPoint { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub phi: f64,
    pub grad_norm: f64,
    pub residual: f64,
    pub step: f64,
}

/// Full record of one optimization run. The iteration history holds one
/// entry per accepted update; the top-level numbers describe the final
/// control.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub iterations: Vec<IterationRecord>,
    pub control: ControlPath,
    pub status: RunStatus,
    pub phi: f64,
    pub grad_norm: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: BackwardMode,
}

impl OptimizerSettings {
    pub fn validate(&self, problem: &ControlProblem) -> Result<()> {
        if !self.tol.is_finite() {
            return Err(Error::InvalidParam("optimizer tolerance must be finite".into()));
        }
        if let Method::FixedPoint { theta } = self.method {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "fixed-point damping must lie in (0, 1], got {theta}"
                )));
            }
            if problem.weights().gamma3 != 0.0 {
                return Err(Error::InvalidParam(
                    "the fixed-point characterization holds for gamma3 = 0 only".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Trapezoid-in-time L^2 norm of a node-major array.
fn path_norm(values: &[Vec<f64>], time: crate::trajectory::TimeGrid) -> f64 {
    let dt = time.dt();
    values
        .iter()
        .enumerate()
        .map(|(k, row)| time.weight(k) * dt * row.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Residual of the optimality characterization, from a gradient density.
pub fn residual_from_eta(u: &ControlPath, eta: &[Vec<f64>], gamma2: f64) -> Result<f64> {
    let nodes = u.time().steps() + 1;
    if eta.len() != nodes {
        return Err(Error::NodeMismatch(format!(
            "gradient has {} rows, control has {nodes} nodes",
            eta.len()
        )));
    }
    let defect: Vec<Vec<f64>> = u
        .node_values()
        .iter()
        .zip(eta)
        .map(|(uk, ek)| {
            let mut arg: Vec<f64> = uk
                .iter()
                .zip(ek)
                .map(|(ui, gi)| ui - gi / (2.0 * gamma2))
                .collect();
            u.set().project(&mut arg);
            uk.iter().zip(&arg).map(|(ui, pi)| ui - pi).collect()
        })
        .collect();
    Ok(path_norm(&defect, u.time()))
}

/// Residual evaluated from a single forward/adjoint pair.
pub fn optimality_residual(
    u: &ControlPath,
    forward: &Trajectory,
    adjoint: &AdjointState,
    params: &ModelParams,
    gamma2: f64,
) -> Result<f64> {
    let eta = gradient_eta(u, forward, adjoint, params, gamma2)?;
    residual_from_eta(u, &eta, gamma2)
}

fn shifted_control(u: &ControlPath, density: &[Vec<f64>], scale: f64) -> Result<ControlPath> {
    let values: Vec<Vec<f64>> = u
        .node_values()
        .iter()
        .zip(density)
        .map(|(row, g)| row.iter().zip(g).map(|(ui, gi)| ui - scale * gi).collect())
        .collect();
    // construction projects node values onto the admissible set
    ControlPath::new(u.time(), u.set().clone(), values)
}

struct Evaluated {
    grad: GradientData,
    residual: f64,
    grad_norm: f64,
}

fn evaluate_gradient(
    problem: &ControlProblem,
    u: &ControlPath,
    mode: BackwardMode,
) -> Result<Evaluated> {
    let grad = problem.gradient(u, mode)?;
    let residual = residual_from_eta(u, grad.eta(), problem.weights().gamma2)?;
    let grad_norm = path_norm(&grad.total_density(), problem.time());
    Ok(Evaluated { grad, residual, grad_norm })
}

/// Run the selected driver from `u0` until the residual drops below
/// `settings.tol`, the iteration budget runs out, or (projected gradient
/// only) the line search cannot decrease the objective any more.
pub fn optimize(
    problem: &ControlProblem,
    u0: &ControlPath,
    settings: &OptimizerSettings,
) -> Result<RunReport> {
    settings.validate(problem)?;
    let gamma2 = problem.weights().gamma2;
    let mut u = u0.clone();
    let mut phi = problem.evaluate(&u)?.total;
    let mut iterations = Vec::new();
    let mut status = RunStatus::MaxIterations;

    // Armijo warm start: the decoupled-quadratic exact step is 1/gamma2
    let mut step = 1.0 / gamma2;
    const SIGMA: f64 = 1e-4;
    const MAX_BACKTRACKS: usize = 40;

    let mut ev = evaluate_gradient(problem, &u, settings.mode)?;
    for _ in 0..settings.max_iter {
        if ev.residual <= settings.tol {
            status = RunStatus::Converged;
            break;
        }
        match settings.method {
            Method::ProjectedGradient => {
                let density = ev.grad.total_density();
                let mut accepted = None;
                let mut s = step;
                for _ in 0..MAX_BACKTRACKS {
                    let candidate = shifted_control(&u, &density, 0.5 * s)?;
                    let phi_c = problem.evaluate(&candidate)?.total;
                    let moved = u.l2_distance(&candidate)?;
                    if phi_c <= phi - SIGMA * (2.0 / s) * moved * moved && phi_c < phi {
                        accepted = Some((candidate, phi_c, s));
                        break;
                    }
                    s *= 0.5;
                }
                let Some((candidate, phi_c, s)) = accepted else {
                    status = RunStatus::Stalled;
                    break;
                };
                u = candidate;
                phi = phi_c;
                step = (2.0 * s).min(1e6 / gamma2);
                iterations.push(IterationRecord {
                    phi,
                    grad_norm: ev.grad_norm,
                    residual: ev.residual,
                    step: s,
                });
            }
            Method::FixedPoint { theta } => {
                // u - eta/(2 gamma2) is exactly (1/gamma2) times the pairing
                let next = shifted_control(&u, ev.grad.eta(), 0.5 / gamma2)?;
                let values: Vec<Vec<f64>> = u
                    .node_values()
                    .iter()
                    .zip(next.node_values())
                    .map(|(a, b)| {
                        a.iter()
                            .zip(b)
                            .map(|(ai, bi)| (1.0 - theta) * ai + theta * bi)
                            .collect()
                    })
                    .collect();
                u = ControlPath::new(u.time(), u.set().clone(), values)?;
                phi = problem.evaluate(&u)?.total;
                iterations.push(IterationRecord {
                    phi,
                    grad_norm: ev.grad_norm,
                    residual: ev.residual,
                    step: theta,
                });
            }
        }
        ev = evaluate_gradient(problem, &u, settings.mode)?;
    }
    if status == RunStatus::MaxIterations && ev.residual <= settings.tol {
        status = RunStatus::Converged;
    }

    Ok(RunReport {
        iterations,
        control: u,
        status,
        phi,
        grad_norm: ev.grad_norm,
        residual: ev.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::AdmissibleSet;
    use crate::forward::{solve_forward, Nonlinearity};
    use crate::grid::{ComplexField, SpatialGrid};
    use crate::objective::{ObjectiveWeights, TargetData};
    use crate::trajectory::TimeGrid;
    use num_complex::Complex64;

    fn decoupled_problem(gamma2: f64) -> (ControlProblem, ControlPath) {
        // zero potential: Phi(u) = gamma2 int |u|^2 + const, minimized at 0
        let grid = SpatialGrid::new(1, 32, 16.0).unwrap();
        let params =
            ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![vec![0.0; grid.len()]])
                .unwrap();
        let time = TimeGrid::new(0.2, 24).unwrap();
        let x0 = ComplexField::from_fn(grid, |x| {
            Complex64::new((-(x[0] - 8.0).powi(2)).exp(), 0.0)
        });
        let set = AdmissibleSet::symmetric_box(1, 2.0);
        let u0 = ControlPath::zero(time, set.clone()).unwrap();
        let reference = solve_forward(&x0, &params, &u0, None, time, 1).unwrap();
        let weights = ObjectiveWeights::new(0.0, gamma2, 0.0).unwrap();
        let targets = TargetData::new(reference.last().clone(), None);
        let problem = ControlProblem::new(params, time, x0, set.clone(), weights, targets, None).unwrap();
        let start = ControlPath::constant(time, set, vec![1.5]).unwrap();
        (problem, start)
    }

    fn tracking_problem() -> (ControlProblem, ControlPath) {
        let grid = SpatialGrid::new(1, 32, 16.0).unwrap();
        let v1: Vec<f64> = (0..grid.len())
            .map(|i| (-(grid.coords(i)[0] - 8.0).powi(2) / 2.0).exp())
            .collect();
        let params = ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![v1]).unwrap();
        // the descent direction is the continuous-form density, which sits
        // O(dt) from the exact discrete gradient; dt must be small enough
        // that this floor stays below the 1e-4 stopping tolerance
        let time = TimeGrid::new(0.25, 192).unwrap();
        let x0 = ComplexField::from_fn(grid, |x| {
            Complex64::new((-(x[0] - 8.0).powi(2)).exp(), 0.0)
        });
        let set = AdmissibleSet::symmetric_box(1, 1.0);

        // reference control generates the target trajectory, so a good
        // minimizer exists inside the box
        let u_star_values: Vec<Vec<f64>> = (0..=time.steps())
            .map(|k| vec![0.6 * (3.0 * time.node(k)).cos()])
            .collect();
        let u_star = ControlPath::new(time, set.clone(), u_star_values).unwrap();
        let reference = solve_forward(&x0, &params, &u_star, None, time, 1).unwrap();

        let weights = ObjectiveWeights::new(1.0, 0.1, 0.0).unwrap();
        let targets = TargetData::new(reference.last().clone(), Some(reference));
        let problem = ControlProblem::new(params, time, x0, set.clone(), weights, targets, None).unwrap();
        let u0 = ControlPath::zero(time, set).unwrap();
        (problem, u0)
    }

    fn pgd(tol: f64, max_iter: usize) -> OptimizerSettings {
        OptimizerSettings {
            method: Method::ProjectedGradient,
            tol,
            max_iter,
            mode: BackwardMode::DiscreteAdjoint,
        }
    }

    #[test]
    fn zero_iteration_budget_returns_the_start() {
        let (problem, u0) = decoupled_problem(0.5);
        let report = optimize(&problem, &u0, &pgd(1e-10, 0)).unwrap();
        assert!(report.iterations.is_empty());
        assert_eq!(report.control.node_values(), u0.node_values());
        assert_eq!(report.status, RunStatus::MaxIterations);
    }

    #[test]
    fn decoupled_quadratic_reaches_zero_with_both_methods() {
        let (problem, u0) = decoupled_problem(0.5);
        let report = optimize(&problem, &u0, &pgd(1e-10, 50)).unwrap();
        assert_eq!(report.status, RunStatus::Converged);
        assert!(report.control.l2_norm() <= 1e-8, "pgd left {}", report.control.l2_norm());

        let fp = OptimizerSettings {
            method: Method::FixedPoint { theta: 0.5 },
            tol: 1e-10,
            max_iter: 200,
            mode: BackwardMode::DiscreteAdjoint,
        };
        let report = optimize(&problem, &u0, &fp).unwrap();
        assert_eq!(report.status, RunStatus::Converged);
        assert!(report.control.l2_norm() <= 1e-8, "fp left {}", report.control.l2_norm());
    }

    #[test]
    fn tracking_problem_residual_drops_and_phi_never_increases() {
        let (problem, u0) = tracking_problem();
        let report = optimize(&problem, &u0, &pgd(1e-4, 80)).unwrap();
        let initial = {
            let ev = problem.gradient(&u0, BackwardMode::DiscreteAdjoint).unwrap();
            residual_from_eta(&u0, ev.eta(), problem.weights().gamma2).unwrap()
        };
        assert!(
            report.residual <= 1e-4,
            "residual {} from {initial} after {} iterations",
            report.residual,
            report.iterations.len()
        );
        let mut last = f64::INFINITY;
        for it in &report.iterations {
            assert!(it.phi <= last + 1e-15, "phi went up: {} -> {}", last, it.phi);
            last = it.phi;
        }
    }

    #[test]
    fn interior_residual_is_the_scaled_gradient_norm() {
        // box wide enough that the projection is the identity near u
        let (problem, _) = tracking_problem();
        let time = problem.time();
        let wide = AdmissibleSet::symmetric_box(1, 50.0);
        let values: Vec<Vec<f64>> = (0..=time.steps())
            .map(|k| vec![0.3 * (2.0 * time.node(k)).sin()])
            .collect();
        let u = ControlPath::new(time, wide, values).unwrap();
        let gamma2 = 0.7;
        let eta: Vec<Vec<f64>> = (0..=time.steps())
            .map(|k| vec![(1.0 + time.node(k)).cos()])
            .collect();
        let r = residual_from_eta(&u, &eta, gamma2).unwrap();
        let direct = path_norm(&eta, time) / (2.0 * gamma2);
        assert!((r - direct).abs() < 1e-13 * direct);
    }

    #[test]
    fn residual_is_zero_at_the_trivial_certificate() {
        let (problem, u0) = decoupled_problem(1.0);
        let zero = problem.zero_control().unwrap();
        let grad = problem.gradient(&zero, BackwardMode::DiscreteAdjoint).unwrap();
        assert_eq!(residual_from_eta(&zero, grad.eta(), 1.0).unwrap(), 0.0);
        drop(u0);
    }

    #[test]
    fn fixed_point_rejects_smoothness_penalty() {
        let grid = SpatialGrid::new(1, 32, 16.0).unwrap();
        let params =
            ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![vec![0.0; grid.len()]])
                .unwrap();
        let time = TimeGrid::new(0.1, 8).unwrap();
        let x0 = ComplexField::from_fn(grid, |x| {
            Complex64::new((-(x[0] - 8.0).powi(2)).exp(), 0.0)
        });
        let set = AdmissibleSet::symmetric_box(1, 2.0);
        let weights = ObjectiveWeights::new(0.0, 1.0, 0.5).unwrap();
        let targets = TargetData::new(x0.clone(), None);
        let problem =
            ControlProblem::new(params, time, x0, set.clone(), weights, targets, None).unwrap();
        let u0 = ControlPath::zero(time, set).unwrap();
        let settings = OptimizerSettings {
            method: Method::FixedPoint { theta: 0.5 },
            tol: 1e-6,
            max_iter: 5,
            mode: BackwardMode::DiscreteAdjoint,
        };
        assert!(matches!(
            optimize(&problem, &u0, &settings),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn exhausted_line_search_reports_a_stall() {
        // start exactly at the minimizer and demand an unreachable residual:
        // every candidate equals the current point, so the strict-decrease
        // test fails at full backtrack depth
        let (problem, _) = decoupled_problem(0.5);
        let u0 = problem.zero_control().unwrap();
        let report = optimize(&problem, &u0, &pgd(-1.0, 10)).unwrap();
        assert_eq!(report.status, RunStatus::Stalled);
        assert_eq!(report.control.node_values(), u0.node_values());
    }
}
