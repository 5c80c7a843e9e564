//! Adjoint gradient against central differences.
//!
//! Builds a small tracking problem, computes the objective gradient with
//! the discrete adjoint (exact reverse mode of the splitting scheme), and
//! compares nodal partial derivatives with central difference quotients of
//! the objective. Agreement is limited only by the difference quotient
//! itself, so relative errors sit near 1e-9 with eps = 1e-5.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use nls_control::adjoint::BackwardMode;
use nls_control::control::{AdmissibleSet, ControlPath};
use nls_control::forward::{ModelParams, Nonlinearity};
use nls_control::grid::{ComplexField, SpatialGrid};
use nls_control::objective::{ControlProblem, ObjectiveWeights, TargetData};
use nls_control::trajectory::TimeGrid;
use num_complex::Complex64;

fn main() -> nls_control::Result<()> {
    let grid = SpatialGrid::new(1, 64, 16.0)?;
    let time = TimeGrid::new(0.2, 32)?;

    let bump: Vec<f64> = (0..grid.len())
        .map(|i| (-0.5 * grid.torus_dist_sq(i, [8.0, 0.0]) / 2.0).exp())
        .collect();
    let params = ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![bump])?;

    let mut x0 = ComplexField::zeros(grid);
    let mut target = ComplexField::zeros(grid);
    for i in 0..grid.len() {
        let r2 = grid.torus_dist_sq(i, [8.0, 0.0]);
        x0.values_mut()[i] = Complex64::new((-0.5 * r2).exp(), 0.0);
        target.values_mut()[i] = Complex64::new((-0.25 * r2).exp() * 0.8, 0.0);
    }

    let set = AdmissibleSet::Box { lo: vec![-2.0], hi: vec![2.0] };
    let values: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.5 * (3.0 * time.node(k)).cos()]).collect();
    let u = ControlPath::new(time, set.clone(), values)?;

    let problem = ControlProblem::new(
        params,
        time,
        x0,
        set.clone(),
        ObjectiveWeights::new(0.0, 0.3, 0.0)?,
        TargetData::new(target, None),
        None,
    )?;

    let grad = problem.gradient(&u, BackwardMode::DiscreteAdjoint)?;
    let partials = grad.discrete().expect("discrete mode fills nodal partials");

    let eps = 1e-5;
    println!("{:>5} {:>8} {:>16} {:>16} {:>10}", "node", "t", "adjoint", "fd", "rel err");
    let mut worst: f64 = 0.0;
    for k in (0..=time.steps()).step_by(4) {
        let mut plus = u.node_values().to_vec();
        let mut minus = plus.clone();
        plus[k][0] += eps;
        minus[k][0] -= eps;
        let up = ControlPath::new(time, set.clone(), plus)?;
        let um = ControlPath::new(time, set.clone(), minus)?;
        let fd = (problem.evaluate(&up)?.total - problem.evaluate(&um)?.total) / (2.0 * eps);
        let rel = (partials[k][0] - fd).abs() / fd.abs().max(1e-300);
        worst = worst.max(rel);
        println!("{:5} {:8.4} {:16.9e} {:16.9e} {:10.2e}", k, time.node(k), partials[k][0], fd, rel);
    }
    println!("\nworst relative error: {worst:.2e}");
    Ok(())
}
