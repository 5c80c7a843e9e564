//! Conservative noise and the exact gauge transform.
//!
//! With a single constant-profile channel `i' = i mu`, the stochastic flow
//! factors exactly: `X_stoch(t) = exp(W(t)) X_det(t)` pathwise, because the
//! multiplier commutes with every sub-step of the splitting. The example
//! runs both sides on the same Wiener path and prints the defect at each
//! stored node, which is pure roundoff, along with the pathwise mass drift.
//!
//! ```bash
//! cargo run --release --example forward_stochastic
//! ```

use nls_control::control::{AdmissibleSet, ControlPath};
use nls_control::forward::{solve_forward, ModelParams, Nonlinearity};
use nls_control::grid::{ComplexField, SpatialGrid};
use nls_control::noise::{NoiseChannel, NoiseModel, Profile};
use nls_control::norms::lp_norm;
use nls_control::trajectory::TimeGrid;
use num_complex::Complex64;

fn main() -> nls_control::Result<()> {
    let grid = SpatialGrid::new(1, 128, 16.0)?;
    let time = TimeGrid::new(0.5, 200)?;

    let params = ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![])?;
    let mut x0 = ComplexField::zeros(grid);
    for (i, z) in x0.values_mut().iter_mut().enumerate() {
        let r2 = grid.torus_dist_sq(i, [8.0, 0.0]);
        *z = Complex64::new((-0.5 * r2).exp(), 0.0) * Complex64::new(0.0, 0.3 * r2).exp();
    }

    // Purely imaginary amplitude on a flat profile: conservative noise.
    let model = NoiseModel::new(
        vec![NoiseChannel {
            amplitude: Complex64::new(0.0, 0.8),
            profile: Profile::Constant(1.0),
        }],
        true,
    )?;
    let path = model.sample_path(time, 42);
    let phase = model.phase_field(grid, &path)?;

    let u = ControlPath::zero(time, AdmissibleSet::Box { lo: vec![], hi: vec![] })?;
    let stochastic = solve_forward(&x0, &params, &u, Some(&phase), time, 20)?;
    let deterministic = solve_forward(&x0, &params, &u, None, time, 20)?;

    let m0 = lp_norm(&x0, 2.0)?;
    println!("{:>6}  {:>14}  {:>12}", "t", "gauge defect", "mass drift");
    for (i, field) in stochastic.fields().iter().enumerate() {
        let k = i * stochastic.stride();
        let gauge = phase.gauge_factor(k, 1.0);
        let mut predicted = deterministic.fields()[i].clone();
        for (z, g) in predicted.values_mut().iter_mut().zip(gauge.values()) {
            *z *= g;
        }
        let defect = field
            .values()
            .iter()
            .zip(predicted.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        println!(
            "{:6.3}  {:14.3e}  {:12.3e}",
            stochastic.node_time(i),
            defect,
            (lp_norm(field, 2.0)? - m0).abs()
        );
    }
    Ok(())
}
