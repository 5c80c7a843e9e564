//! Variational (tangent) solver: the directional derivative of the state
//! with respect to the control, integrated with the same splitting skeleton
//! as the forward solver.
//!
//! Per step, with coefficients frozen at the stage value `s1 = F_half X_k`:
//!
//! 1. half free flight of psi,
//! 2. exact 2x2 rotation `exp(dt A)` from the frozen `(c, h)` coefficients,
//!    minus `dt` times the rotation over half a step applied to the midpoint
//!    source value,
//! 3. half free flight,
//! 4. gauge factor `exp(dW)` in stochastic runs.
//!
//! The source trajectory holds `Psi` at every node; the equation reads
//! `i dpsi = Delta psi dt + lambda (h1 psi + h2 conj(psi)) dt
//! + (V0 + u.V) psi dt - i Psi dt`, so step 2 subtracts the transported
//! midpoint average `(Psi_k + Psi_{k+1})/2`. For the control direction
//! `u_dir` the matching source is `Psi = i (u_dir . V) X`, built by
//! [`control_direction_source`].

use num_complex::Complex64;

use crate::control::ControlPath;
use crate::error::{Error, Result};
use crate::forward::{check_phase, ModelParams};
use crate::grid::ComplexField;
use crate::linearize::{linearize, RotationCoeffs};
use crate::noise::PhaseField;
use crate::spectral::{free_propagate, free_propagate_mut};
use crate::trajectory::Trajectory;

/// Both trajectories must store every node of the same time grid on the same
/// spatial grid.
fn check_node_aligned(forward: &Trajectory, source: &Trajectory) -> Result<()> {
    if forward.stride() != 1 {
        return Err(Error::NodeMismatch(
            "variational solve needs every forward node (stride 1)".into(),
        ));
    }
    if source.stride() != 1 {
        return Err(Error::NodeMismatch("source must be sampled at every node".into()));
    }
    if forward.grid() != source.grid() {
        return Err(Error::GridMismatch("source lives on a different spatial grid".into()));
    }
    if forward.time() != source.time() {
        return Err(Error::NodeMismatch("source nodes differ from forward nodes".into()));
    }
    Ok(())
}

/// Integrate the linearized equation with zero initial data and the given
/// source, along a stored forward trajectory.
pub fn solve_variational(
    forward: &Trajectory,
    params: &ModelParams,
    u: &ControlPath,
    phase: Option<&PhaseField>,
    source: &Trajectory,
) -> Result<Trajectory> {
    check_node_aligned(forward, source)?;
    if forward.grid() != params.grid() {
        return Err(Error::GridMismatch("forward trajectory on a different grid".into()));
    }
    let time = forward.time();
    params.check_control(u, time)?;
    if let Some(ph) = phase {
        check_phase(ph, params, time)?;
    }

    let dt = time.dt();
    let lambda = params.lambda();
    let alpha = params.alpha();
    let mut psi = ComplexField::zeros(params.grid());
    let mut stored = Vec::with_capacity(time.steps() + 1);
    stored.push(psi.clone());

    for k in 0..time.steps() {
        let u_mid = u.eval(time.node(k) + 0.5 * dt);
        let pot = params.combined_potential(&u_mid);
        let s1 = free_propagate(forward.field(k), 0.5 * dt);
        let lin = linearize(&s1, alpha, None)?;
        let rot = RotationCoeffs::new(&lin, lambda, &pot);

        free_propagate_mut(&mut psi, 0.5 * dt);
        rot.apply(&mut psi, dt);
        // midpoint source, carried through the remaining half rotation so the
        // whole step stays second-order consistent
        let mut mid = source.field(k).clone();
        mid.axpy(Complex64::new(1.0, 0.0), source.field(k + 1))?;
        mid.scale(Complex64::new(0.5, 0.0));
        rot.apply(&mut mid, 0.5 * dt);
        psi.axpy(Complex64::new(-dt, 0.0), &mid)?;
        free_propagate_mut(&mut psi, 0.5 * dt);
        if let Some(ph) = phase {
            let g = ph.step_gauge(k);
            for (z, gz) in psi.values_mut().iter_mut().zip(g.values()) {
                *z *= gz;
            }
        }
        if !psi.is_finite() {
            return Err(Error::NonFinite);
        }
        stored.push(psi.clone());
    }

    Trajectory::new(params.grid(), time, 1, stored)
}

/// Source trajectory `Psi_k = i (dir_k . V) X_k` for a nodal control
/// direction, given node-major direction values (`steps + 1` rows of
/// `channels` entries).
pub fn control_direction_source(
    forward: &Trajectory,
    params: &ModelParams,
    direction: &[Vec<f64>],
) -> Result<Trajectory> {
    if forward.stride() != 1 {
        return Err(Error::NodeMismatch(
            "direction source needs every forward node (stride 1)".into(),
        ));
    }
    let nodes = forward.time().steps() + 1;
    if direction.len() != nodes {
        return Err(Error::NodeMismatch(format!(
            "direction has {} rows, time grid has {nodes} nodes",
            direction.len()
        )));
    }
    let mut fields = Vec::with_capacity(nodes);
    for (k, row) in direction.iter().enumerate() {
        if row.len() != params.channels() {
            return Err(Error::NodeMismatch(format!(
                "direction row {k} has {} channels, model has {}",
                row.len(),
                params.channels()
            )));
        }
        let x = forward.field(k);
        let mut psi = ComplexField::zeros(params.grid());
        for (j, &dj) in row.iter().enumerate() {
            if dj == 0.0 {
                continue;
            }
            let vj = params.potential(j);
            for ((p, z), v) in psi.values_mut().iter_mut().zip(x.values()).zip(vj) {
                *p += Complex64::new(0.0, dj * v) * z;
            }
        }
        fields.push(psi);
    }
    Trajectory::new(params.grid(), forward.time(), 1, fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::AdmissibleSet;
    use crate::forward::{solve_forward, Nonlinearity};
    use crate::grid::SpatialGrid;
    use crate::noise::{NoiseChannel, NoiseModel, Profile};
    use crate::norms::lp_norm;
    use crate::trajectory::TimeGrid;
    use crate::util::loglog_slope;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn setup(n: usize, steps: usize, t_final: f64) -> (ModelParams, ControlPath, ComplexField, TimeGrid) {
        let grid = SpatialGrid::new(1, n, 16.0).unwrap();
        let v1: Vec<f64> = (0..grid.len())
            .map(|i| (2.0 * std::f64::consts::PI * grid.coords(i)[0] / 16.0).cos())
            .collect();
        let params = ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![v1]).unwrap();
        let time = TimeGrid::new(t_final, steps).unwrap();
        let set = AdmissibleSet::symmetric_box(1, 2.0);
        let values: Vec<Vec<f64>> = (0..=steps)
            .map(|k| vec![0.4 * (3.0 * time.node(k)).sin()])
            .collect();
        let u = ControlPath::new(time, set, values).unwrap();
        let x0 = ComplexField::from_fn(grid, |x| {
            Complex64::new((-(x[0] * x[0])).exp(), 0.3 * (-(x[0] * x[0]) / 2.0).exp())
        });
        (params, u, x0, time)
    }

    fn random_source(grid: SpatialGrid, time: TimeGrid, seed: u64) -> Trajectory {
        let mut rng = StdRng::seed_from_u64(seed);
        let fields = (0..=time.steps())
            .map(|_| {
                ComplexField::from_fn(grid, |x| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        * (-(x[0] * x[0]) / 4.0).exp()
                })
            })
            .collect();
        Trajectory::new(grid, time, 1, fields).unwrap()
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let (params, u, x0, time) = setup(32, 40, 0.2);
        let fwd = solve_forward(&x0, &params, &u, None, time, 1).unwrap();
        let zero = Trajectory::new(
            params.grid(),
            time,
            1,
            vec![ComplexField::zeros(params.grid()); time.steps() + 1],
        )
        .unwrap();
        let psi = solve_variational(&fwd, &params, &u, None, &zero).unwrap();
        for f in psi.fields() {
            assert_eq!(f.max_abs(), 0.0);
        }
    }

    #[test]
    fn source_superposition_holds_to_machine_precision() {
        let (params, u, x0, time) = setup(32, 32, 0.25);
        let fwd = solve_forward(&x0, &params, &u, None, time, 1).unwrap();
        let s1 = random_source(params.grid(), time, 11);
        let s2 = random_source(params.grid(), time, 12);
        let (a, b) = (1.7, -0.6);
        let mut combo_fields = Vec::new();
        for k in 0..=time.steps() {
            let mut f = s1.field(k).clone();
            f.scale(Complex64::new(a, 0.0));
            f.axpy(Complex64::new(b, 0.0), s2.field(k)).unwrap();
            combo_fields.push(f);
        }
        let combo = Trajectory::new(params.grid(), time, 1, combo_fields).unwrap();

        let p1 = solve_variational(&fwd, &params, &u, None, &s1).unwrap();
        let p2 = solve_variational(&fwd, &params, &u, None, &s2).unwrap();
        let pc = solve_variational(&fwd, &params, &u, None, &combo).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=time.steps() {
            let mut lin = p1.field(k).clone();
            lin.scale(Complex64::new(a, 0.0));
            lin.axpy(Complex64::new(b, 0.0), p2.field(k)).unwrap();
            lin.axpy(Complex64::new(-1.0, 0.0), pc.field(k)).unwrap();
            worst = worst.max(lp_norm(&lin, 2.0).unwrap());
        }
        assert!(worst < 1e-12, "superposition defect {worst}");
    }

    #[test]
    fn doubling_the_source_doubles_the_solution() {
        let (params, u, x0, time) = setup(32, 24, 0.2);
        let fwd = solve_forward(&x0, &params, &u, None, time, 1).unwrap();
        let s = random_source(params.grid(), time, 3);
        let mut dbl_fields = Vec::new();
        for k in 0..=time.steps() {
            let mut f = s.field(k).clone();
            f.scale(Complex64::new(2.0, 0.0));
            dbl_fields.push(f);
        }
        let dbl = Trajectory::new(params.grid(), time, 1, dbl_fields).unwrap();
        let p = solve_variational(&fwd, &params, &u, None, &s).unwrap();
        let pd = solve_variational(&fwd, &params, &u, None, &dbl).unwrap();
        for k in 0..=time.steps() {
            let mut diff = p.field(k).clone();
            diff.scale(Complex64::new(2.0, 0.0));
            diff.axpy(Complex64::new(-1.0, 0.0), pd.field(k)).unwrap();
            assert!(lp_norm(&diff, 2.0).unwrap() < 1e-12);
        }
    }

    /// Difference quotients of the forward map converge to the variational
    /// solution at first order in the perturbation size.
    #[test]
    fn matches_difference_quotients_at_first_order() {
        let (params, u, x0, time) = setup(64, 2048, 0.125);
        let fwd = solve_forward(&x0, &params, &u, None, time, 1).unwrap();

        // smooth in time: white-noise directions average out over the steps
        // and hide the O(eps) term under the O(dt) scheme difference
        let dir: Vec<Vec<f64>> = (0..=time.steps())
            .map(|k| {
                let t = time.node(k);
                vec![(2.0 * t).cos() + 0.5 * (7.0 * t).sin()]
            })
            .collect();
        let source = control_direction_source(&fwd, &params, &dir).unwrap();
        let psi = solve_variational(&fwd, &params, &u, None, &source).unwrap();

        let eps_list = [1e-1, 3e-2, 1e-2];
        let mut errs = Vec::new();
        for &eps in &eps_list {
            let shifted: Vec<Vec<f64>> = u
                .node_values()
                .iter()
                .zip(&dir)
                .map(|(row, d)| row.iter().zip(d).map(|(a, b)| a + eps * b).collect())
                .collect();
            let u_eps = ControlPath::new(time, u.set().clone(), shifted).unwrap();
            let fwd_eps = solve_forward(&x0, &params, &u_eps, None, time, 1).unwrap();
            let mut worst: f64 = 0.0;
            for k in 0..=time.steps() {
                let mut q = fwd_eps.field(k).clone();
                q.axpy(Complex64::new(-1.0, 0.0), fwd.field(k)).unwrap();
                q.scale(Complex64::new(1.0 / eps, 0.0));
                q.axpy(Complex64::new(-1.0, 0.0), psi.field(k)).unwrap();
                worst = worst.max(lp_norm(&q, 2.0).unwrap());
            }
            errs.push(worst);
        }
        let slope = loglog_slope(&eps_list, &errs);
        assert!(
            (slope - 1.0).abs() < 0.2,
            "first-order slope {slope}, errors {errs:?}"
        );
    }

    #[test]
    fn stochastic_runs_stay_first_order_accurate() {
        let (params, u, x0, time) = setup(32, 512, 0.25);
        let model = NoiseModel::new(
            vec![NoiseChannel {
                amplitude: Complex64::new(0.0, 0.4),
                profile: Profile::Constant(1.0),
            }],
            true,
        )
        .unwrap();
        let path = model.sample_path(time, 77);
        let phase = model.phase_field(params.grid(), &path).unwrap();

        let fwd = solve_forward(&x0, &params, &u, Some(&phase), time, 1).unwrap();
        let dir: Vec<Vec<f64>> = (0..=time.steps())
            .map(|k| {
                let t = time.node(k);
                vec![(3.0 * t).sin() + 0.7]
            })
            .collect();
        let source = control_direction_source(&fwd, &params, &dir).unwrap();
        let psi = solve_variational(&fwd, &params, &u, Some(&phase), &source).unwrap();

        let mut errs = Vec::new();
        let eps_list = [1e-1, 1e-2];
        for &eps in &eps_list {
            let shifted: Vec<Vec<f64>> = u
                .node_values()
                .iter()
                .zip(&dir)
                .map(|(row, d)| row.iter().zip(d).map(|(a, b)| a + eps * b).collect())
                .collect();
            let u_eps = ControlPath::new(time, u.set().clone(), shifted).unwrap();
            // same phase field: common noise between base and perturbed runs
            let fwd_eps = solve_forward(&x0, &params, &u_eps, Some(&phase), time, 1).unwrap();
            let mut q = fwd_eps.last().clone();
            q.axpy(Complex64::new(-1.0, 0.0), fwd.last()).unwrap();
            q.scale(Complex64::new(1.0 / eps, 0.0));
            q.axpy(Complex64::new(-1.0, 0.0), psi.last()).unwrap();
            errs.push(lp_norm(&q, 2.0).unwrap());
        }
        // one decade of eps should shrink the defect by roughly one decade
        let ratio = errs[1] / errs[0];
        assert!(
            ratio > 0.05 && ratio < 0.2,
            "defect ratio {ratio}, errors {errs:?}"
        );
    }

    #[test]
    fn node_mismatch_is_rejected() {
        let (params, u, x0, time) = setup(32, 16, 0.1);
        let fwd = solve_forward(&x0, &params, &u, None, time, 1).unwrap();
        let other = TimeGrid::new(0.1, 8).unwrap();
        let src = random_source(params.grid(), other, 0);
        assert!(solve_variational(&fwd, &params, &u, None, &src).is_err());

        let strided = solve_forward(&x0, &params, &u, None, time, 4).unwrap();
        let src_ok = random_source(params.grid(), time, 0);
        assert!(solve_variational(&strided, &params, &u, None, &src_ok).is_err());
    }
}
