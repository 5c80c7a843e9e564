//! Duality between the linearized flow and the backward equation.
//!
//! For a source `f` driving the linearized equation (solution `phi`, zero
//! initial data) and the adjoint state `Y` driven by the objective data,
//!
//! ```text
//! int_0^T Re<f, Y> dt  =  Re<phi(T), X(T) - target>
//!                         + gamma1 int_0^T Re<phi, X - tracking> dt
//! ```
//!
//! Both sides are computed for a handful of random sources on a common
//! forward trajectory. The defect scales with dt^2; at dt = 1e-3 it sits
//! comfortably below 1e-3 in relative terms.
//!
//! ```bash
//! cargo run --release --example duality_check
//! ```

use nls_control::adjoint::{solve_backward, BackwardMode};
use nls_control::control::{AdmissibleSet, ControlPath};
use nls_control::forward::{solve_forward, ModelParams, Nonlinearity};
use nls_control::grid::{ComplexField, SpatialGrid};
use nls_control::norms::re_inner;
use nls_control::tangent::solve_variational;
use nls_control::trajectory::{TimeGrid, Trajectory};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() -> nls_control::Result<()> {
    let grid = SpatialGrid::new(1, 64, 16.0)?;
    let time = TimeGrid::new(0.25, 250)?;
    let gamma1 = 0.5;

    let bump: Vec<f64> = (0..grid.len())
        .map(|i| (-0.5 * grid.torus_dist_sq(i, [8.0, 0.0]) / 2.0).exp())
        .collect();
    let params = ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![bump])?;
    let packet = |center: f64, width: f64| {
        ComplexField::from_fn(grid, |x| {
            let r = (x[0] - center + 8.0).rem_euclid(16.0) - 8.0;
            Complex64::new((-0.5 * r * r / (width * width)).exp(), 0.0)
        })
    };
    let x0 = packet(8.0, 1.0);
    let target = packet(8.9, 1.0);
    let set = AdmissibleSet::Box { lo: vec![-2.0], hi: vec![2.0] };
    let values: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.5 * (3.0 * time.node(k)).sin()]).collect();
    let u = ControlPath::new(time, set, values)?;

    let fwd = solve_forward(&x0, &params, &u, None, time, 1)?;
    let tracking = solve_forward(&packet(7.3, 1.2), &params, &u, None, time, 1)?;
    let adj = solve_backward(
        &fwd,
        &params,
        &u,
        None,
        &target,
        Some(&tracking),
        gamma1,
        BackwardMode::Continuous,
        None,
    )?;

    let mut rng = StdRng::seed_from_u64(7);
    let dt = time.dt();
    println!("{:>5}  {:>14}  {:>14}  {:>10}", "trial", "lhs", "rhs", "rel defect");
    for trial in 0..5 {
        let amp: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fields: Vec<ComplexField> = (0..=time.steps())
            .map(|k| {
                let t = time.node(k);
                ComplexField::from_fn(grid, |x| {
                    Complex64::new(
                        amp[0] * (-(x[0] - 8.0).powi(2) / 3.0).exp() * (3.0 * t).cos(),
                        (amp[1] + amp[2] * t) * (-(x[0] - 9.0).powi(2) / 2.0).exp(),
                    )
                })
            })
            .collect();
        let source = Trajectory::new(grid, time, 1, fields)?;
        let phi = solve_variational(&fwd, &params, &u, None, &source)?;

        let mut lhs = 0.0;
        for k in 0..=time.steps() {
            lhs += time.weight(k) * dt * re_inner(source.field(k), adj.y().field(k))?;
        }
        let mut rhs = re_inner(phi.last(), &fwd.last().sub(&target)?)?;
        for k in 0..=time.steps() {
            let gap = fwd.field(k).sub(tracking.field(k))?;
            rhs += gamma1 * time.weight(k) * dt * re_inner(phi.field(k), &gap)?;
        }
        let rel = (lhs - rhs).abs() / rhs.abs().max(1e-12);
        println!("{trial:>5}  {lhs:14.8e}  {rhs:14.8e}  {rel:10.2e}");
    }
    Ok(())
}
