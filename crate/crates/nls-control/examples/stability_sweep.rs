//! Continuous dependence on control and noise.
//!
//! The trajectory map `(u, beta) -> X` is locally Lipschitz: halving a
//! joint perturbation of the control path and the driving Wiener path
//! should at least halve the `sup_t L^2` state distance. The sweep fixes
//! one perturbation direction, scales it down six times, and prints the
//! distance table; the last column is the per-level contraction factor
//! (about 0.5 once the perturbation is small enough for the linear regime).
//!
//! ```bash
//! cargo run --release --example stability_sweep
//! ```

use nls_control::control::{AdmissibleSet, ControlPath};
use nls_control::forward::{solve_forward, ModelParams, Nonlinearity};
use nls_control::grid::{ComplexField, SpatialGrid};
use nls_control::noise::{NoiseChannel, NoiseModel, Profile, WienerPath};
use nls_control::trajectory::TimeGrid;
use num_complex::Complex64;

fn main() -> nls_control::Result<()> {
    let grid = SpatialGrid::new(1, 64, 16.0)?;
    let time = TimeGrid::new(0.5, 200)?;

    let bump: Vec<f64> = (0..grid.len())
        .map(|i| (-0.5 * grid.torus_dist_sq(i, [8.0, 0.0]) / 2.0).exp())
        .collect();
    let params = ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![bump])?;
    let x0 = ComplexField::from_fn(grid, |x| {
        Complex64::new((-0.5 * (x[0] - 8.0).powi(2)).exp(), 0.0)
    });
    let model = NoiseModel::new(
        vec![NoiseChannel {
            amplitude: Complex64::new(0.0, 0.6),
            profile: Profile::Constant(1.0),
        }],
        true,
    )?;
    let beta = model.sample_path(time, 31);
    let phase = model.phase_field(grid, &beta)?;

    let set = AdmissibleSet::Box { lo: vec![-2.0], hi: vec![2.0] };
    let base_values: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.7 * (2.0 * time.node(k)).cos()]).collect();
    let u = ControlPath::new(time, set.clone(), base_values.clone())?;
    let base = solve_forward(&x0, &params, &u, Some(&phase), time, 10)?;

    // Fixed perturbation direction: smooth in the control, an independent
    // Wiener path in the noise.
    let w2 = model.sample_path(time, 90210);

    println!(
        "{:>10}  {:>12}  {:>12}  {:>12}  {:>8}",
        "scale", "control gap", "noise gap", "state gap", "factor"
    );
    let mut prev: Option<f64> = None;
    for level in 0..6 {
        let s = 0.2 * f64::powi(0.5, level);
        let values: Vec<Vec<f64>> = base_values
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let t = time.node(k);
                row.iter().map(|v| v + s * (5.0 * t).sin()).collect()
            })
            .collect();
        let u_pert = ControlPath::new(time, set.clone(), values)?;

        let mut noise_gap: f64 = 0.0;
        let shifted: Vec<Vec<f64>> = beta
            .values()
            .iter()
            .zip(w2.values())
            .map(|(b, d)| {
                b.iter()
                    .zip(d)
                    .map(|(x, y)| {
                        noise_gap = noise_gap.max((s * y).abs());
                        x + s * y
                    })
                    .collect()
            })
            .collect();
        let beta_pert = WienerPath::from_values(time, shifted)?;
        let phase_pert = model.phase_field(grid, &beta_pert)?;

        let traj = solve_forward(&x0, &params, &u_pert, Some(&phase_pert), time, 10)?;
        let state_gap = traj.sup_l2_distance(&base)?;
        let factor = prev.map(|p| state_gap / p);
        prev = Some(state_gap);
        match factor {
            None => println!(
                "{:10.5}  {:12.5e}  {:12.5e}  {:12.5e}  {:>8}",
                s,
                u_pert.l2_distance(&u)?,
                noise_gap,
                state_gap,
                "-"
            ),
            Some(f) => println!(
                "{:10.5}  {:12.5e}  {:12.5e}  {:12.5e}  {:8.4}",
                s,
                u_pert.l2_distance(&u)?,
                noise_gap,
                state_gap,
                f
            ),
        }
    }
    Ok(())
}
