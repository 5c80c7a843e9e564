//! Path regularity diagnostics: p-variation, Besov ratio, time modulus.
//!
//! Three views of trajectory roughness:
//!
//! 1. `V^p` norms of scalar random walks via the exact dynamic program,
//!    which maximizes `sum |increments|^p` over all partitions.
//! 2. The discrete Besov embedding ratio. Finite `V^p` controls the
//!    `L^p([0,T]; shifted differences)` quadrature; the printed ratio must
//!    stay below `2^(1 + 1/p)`. A finite value here is evidence of the
//!    expected regularity class, not a proof.
//! 3. The gauge-corrected time modulus of a stochastic field trajectory:
//!    unwinding the noise phase and the free flow leaves the Duhamel
//!    integral of the nonlinearity, so shifted L2 differences shrink at
//!    least like `sqrt(h)` and the sup over shifts bounds the modulus.
//!
//! ```bash
//! cargo run --release --example vp_diagnostics
//! ```

use nls_control::control::{AdmissibleSet, ControlPath};
use nls_control::forward::{solve_forward, ModelParams, Nonlinearity};
use nls_control::grid::{ComplexField, SpatialGrid};
use nls_control::noise::{NoiseChannel, NoiseModel, Profile};
use nls_control::pvar::{besov_embedding_check, vp_norm, SampledPath};
use nls_control::timereg::{temporal_regularity, GaugeSpec};
use nls_control::trajectory::TimeGrid;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() -> nls_control::Result<()> {
    // Scalar random walks first.
    let mut rng = StdRng::seed_from_u64(2024);
    let p = 2.0;
    println!("{:>5}  {:>10}  {:>12}  {:>6}", "walk", "V^2 norm", "besov ratio", "ok");
    for walk in 0..5 {
        let mut x = 0.0;
        let samples: Vec<f64> = (0..256)
            .map(|_| {
                x += rng.gen_range(-1.0..1.0f64) * 0.0625;
                x
            })
            .collect();
        let path = SampledPath::scalars(samples)?;
        let v = vp_norm(&path, p)?;
        let (ratio, ok) = besov_embedding_check(&path, p)?;
        println!("{walk:>5}  {v:10.5}  {ratio:12.5}  {ok:>6}");
    }
    println!("(bound for p=2: 2^1.5 = {:.5})\n", f64::powf(2.0, 1.5));

    // Now a stochastic field trajectory.
    let grid = SpatialGrid::new(1, 64, 16.0)?;
    let time = TimeGrid::new(0.5, 512)?;
    let params = ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![])?;
    let x0 = ComplexField::from_fn(grid, |x| {
        Complex64::new((-0.5 * (x[0] - 8.0).powi(2)).exp(), 0.0)
    });
    let model = NoiseModel::new(
        vec![NoiseChannel {
            amplitude: Complex64::new(0.0, 1.0),
            profile: Profile::Constant(1.0),
        }],
        true,
    )?;
    let path = model.sample_path(time, 5);
    let phase = model.phase_field(grid, &path)?;
    let u = ControlPath::zero(time, AdmissibleSet::Box { lo: vec![], hi: vec![] })?;
    let traj = solve_forward(&x0, &params, &u, Some(&phase), time, 8)?;

    let sampled = SampledPath::from_trajectory(&traj)?;
    let v = vp_norm(&sampled, p)?;
    let (ratio, ok) = besov_embedding_check(&sampled, p)?;
    println!("field trajectory: V^2 = {v:.5}, besov ratio = {ratio:.5}, ok = {ok}");

    let reg = temporal_regularity(&traj, GaugeSpec::Phase(&phase))?;
    println!("\ngauge-corrected time modulus (sup over shifts: {:.5})", reg.sup);
    println!("{:>10}  {:>10}", "shift h", "ratio");
    for r in reg.profile.iter().take(8) {
        println!("{:10.5}  {:10.5}", r.h, r.ratio);
    }
    Ok(())
}
