//! End-to-end acceptance gate.
//!
//! Eleven numbered checks, one test each, covering conservation, the gauge
//! reduction, gradient consistency, duality, optimizer certificates, path
//! regularity diagnostics, stability, and scheme order. Every test prints
//! one verdict line; run with
//!
//! ```bash
//! cargo test --test acceptance -- --nocapture
//! ```
//!
//! All sizes are desk scale (d = 1, n = 64, a few thousand steps at most)
//! and every test finishes well inside a minute.

use nls_control::adjoint::{solve_backward, BackwardMode};
use nls_control::control::{AdmissibleSet, ControlPath};
use nls_control::forward::{solve_forward, ModelParams, Nonlinearity};
use nls_control::grid::{ComplexField, SpatialGrid};
use nls_control::noise::{NoiseChannel, NoiseModel, Profile, WienerPath};
use nls_control::norms::{lp_norm, re_inner};
use nls_control::objective::{ControlProblem, ObjectiveWeights, TargetData};
use nls_control::optimize::{optimize, Method, OptimizerSettings, RunStatus};
use nls_control::pvar::{besov_embedding_check, vp_norm, SampledPath};
use nls_control::tangent::{control_direction_source, solve_variational};
use nls_control::timereg::{temporal_regularity, GaugeSpec};
use nls_control::trajectory::{TimeGrid, Trajectory};
use nls_control::util::loglog_slope;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn report(num: usize, name: &str, ok: bool, detail: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {num:02} {name}: {verdict} ({detail})");
    assert!(ok, "criterion {num:02} {name}: {detail}");
}

fn grid64() -> SpatialGrid {
    SpatialGrid::new(1, 64, 16.0).unwrap()
}

/// Gaussian packet with periodic wrap, optional phase ramp.
fn packet(grid: SpatialGrid, center: f64, width: f64, momentum: f64) -> ComplexField {
    let l = grid.length();
    ComplexField::from_fn(grid, |x| {
        let r = (x[0] - center).rem_euclid(l);
        let r = if r > l / 2.0 { r - l } else { r };
        Complex64::new((-0.5 * r * r / (width * width)).exp(), 0.0)
            * Complex64::new(0.0, momentum * x[0]).exp()
    })
}

fn bump(grid: SpatialGrid, center: f64, width: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| (-0.5 * grid.torus_dist_sq(i, [center, 0.0]) / (width * width)).exp())
        .collect()
}

fn cubic_one_channel(grid: SpatialGrid) -> ModelParams {
    ModelParams::new(grid, Nonlinearity::Defocusing, 3.0, None, vec![bump(grid, 8.0, 2.0)])
        .unwrap()
}

fn conservative_noise(amps: &[f64]) -> NoiseModel {
    let channels = amps
        .iter()
        .map(|&a| NoiseChannel {
            amplitude: Complex64::new(0.0, a),
            profile: Profile::Constant(1.0),
        })
        .collect();
    NoiseModel::new(channels, true).unwrap()
}

/// Keep every `s`-th stored field so two resolutions share node times.
fn restride(traj: &Trajectory, s: usize) -> Trajectory {
    let fields: Vec<ComplexField> = traj.fields().iter().step_by(s).cloned().collect();
    Trajectory::new(traj.grid(), traj.time(), traj.stride() * s, fields).unwrap()
}

#[test]
fn criterion_01_mass_conservation() {
    let grid = grid64();
    let time = TimeGrid::new(0.5, 512).unwrap();
    let params = cubic_one_channel(grid);
    let set = AdmissibleSet::symmetric_box(1, 1.0);
    let values: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.5 * (3.0 * time.node(k)).sin()]).collect();
    let u = ControlPath::new(time, set, values).unwrap();
    let x0 = packet(grid, 8.0, 1.0, 0.4);
    let m0 = lp_norm(&x0, 2.0).unwrap();

    // conservative noise with one flat and one spatially varying profile
    let model = NoiseModel::new(
        vec![
            NoiseChannel { amplitude: Complex64::new(0.0, 0.8), profile: Profile::Constant(1.0) },
            NoiseChannel {
                amplitude: Complex64::new(0.0, 0.5),
                profile: Profile::Bump { scale: 1.0, center: [8.0, 0.0], decay: 2.0 },
            },
        ],
        true,
    )
    .unwrap();

    let mut worst: f64 = 0.0;
    for seed in 0..16 {
        let phase = model.phase_field(grid, &model.sample_path(time, seed)).unwrap();
        let traj = solve_forward(&x0, &params, &u, Some(&phase), time, 1).unwrap();
        for field in traj.fields() {
            worst = worst.max((lp_norm(field, 2.0).unwrap() / m0 - 1.0).abs());
        }
    }
    report(
        1,
        "pathwise mass conservation",
        worst <= 1e-10,
        format!("max relative drift {worst:.3e} over 16 paths, tol 1e-10"),
    );
}

#[test]
fn criterion_02_gauge_reduction() {
    let grid = grid64();
    let time = TimeGrid::new(0.5, 256).unwrap();
    let params = cubic_one_channel(grid);
    let set = AdmissibleSet::symmetric_box(1, 1.0);
    let u = ControlPath::constant(time, set, vec![-0.4]).unwrap();
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let tol = 1e-12 * x0.max_abs();
    let det = solve_forward(&x0, &params, &u, None, time, 8).unwrap();

    // conservative constant profiles: the gauge is a uniform phase, so it
    // commutes with every sub-step including the nonlinear rotation
    let models = [
        conservative_noise(&[0.8]),
        conservative_noise(&[0.9, -0.45]),
    ];

    let mut worst: f64 = 0.0;
    for (m, model) in models.iter().enumerate() {
        for seed in 0..2u64 {
            let path = model.sample_path(time, 40 + 2 * m as u64 + seed);
            let phase = model.phase_field(grid, &path).unwrap();
            let stoch = solve_forward(&x0, &params, &u, Some(&phase), time, 8).unwrap();
            for i in 0..stoch.len() {
                let gauge = phase.w_at(i * 8).values()[0].exp();
                let mut expect = det.field(i).clone();
                expect.scale(gauge);
                let err = stoch.field(i).sub(&expect).unwrap().max_abs();
                worst = worst.max(err / tol);
            }
        }
    }
    report(
        2,
        "constant-profile gauge oracle",
        worst <= 1.0,
        format!("max pointwise defect {:.3e} of tolerance 1e-12*|X0|_inf, 4 paths", worst * tol),
    );
}

fn gradient_problem(steps: usize) -> (ControlProblem, ControlPath, TimeGrid) {
    let grid = grid64();
    let time = TimeGrid::new(0.2, steps).unwrap();
    let params = cubic_one_channel(grid);
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let target = packet(grid, 8.5, 1.05, 0.0);
    let set = AdmissibleSet::symmetric_box(1, 2.0);
    let values: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.5 * (3.0 * time.node(k)).cos()]).collect();
    let u = ControlPath::new(time, set.clone(), values).unwrap();
    let problem = ControlProblem::new(
        params,
        time,
        x0,
        set,
        ObjectiveWeights::new(0.0, 2.0, 0.0).unwrap(),
        TargetData::new(target, None),
        None,
    )
    .unwrap();
    (problem, u, time)
}

#[test]
fn criterion_03_gradient_correctness() {
    // exact reverse mode against central differences, every node
    let (problem, u, time) = gradient_problem(32);
    let grad = problem.gradient(&u, BackwardMode::DiscreteAdjoint).unwrap();
    let partials = grad.discrete().unwrap();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..=time.steps() {
        let mut plus = u.node_values().to_vec();
        let mut minus = plus.clone();
        plus[k][0] += eps;
        minus[k][0] -= eps;
        let up = ControlPath::new(time, problem.set().clone(), plus).unwrap();
        let um = ControlPath::new(time, problem.set().clone(), minus).unwrap();
        let fd = (problem.evaluate(&up).unwrap().total - problem.evaluate(&um).unwrap().total)
            / (2.0 * eps);
        worst = worst.max((partials[k][0] - fd).abs() / fd.abs().max(1e-300));
    }

    // the gradient density from the continuous backward solve approaches
    // the one from the discrete adjoint as the step shrinks
    let mut dts = Vec::new();
    let mut errs = Vec::new();
    for steps in [50usize, 100, 200, 400] {
        let (problem, u, time) = gradient_problem(steps);
        let cont = problem.gradient(&u, BackwardMode::Continuous).unwrap().total_density();
        let disc = problem.gradient(&u, BackwardMode::DiscreteAdjoint).unwrap().total_density();
        let mut sup: f64 = 0.0;
        for k in 0..=steps {
            sup = sup.max((cont[k][0] - disc[k][0]).abs());
        }
        dts.push(time.dt());
        errs.push(sup);
    }
    let order = loglog_slope(&dts, &errs);

    let ok = worst <= 1e-7 && order >= 1.0;
    report(
        3,
        "adjoint gradient correctness",
        ok,
        format!("max FD relative error {worst:.3e} (tol 1e-7), continuous-vs-discrete order {order:.2} (need >= 1)"),
    );
}

#[test]
fn criterion_04_first_order_expansion() {
    let grid = grid64();
    let time = TimeGrid::new(0.125, 4096).unwrap();
    let params = cubic_one_channel(grid);
    let set = AdmissibleSet::symmetric_box(1, 2.0);
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let base: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.5 * (3.0 * time.node(k)).cos()]).collect();
    let dir: Vec<Vec<f64>> = (0..=time.steps())
        .map(|k| vec![(2.0 * std::f64::consts::PI * time.node(k) / 0.125 + 0.4).sin()])
        .collect();
    let u = ControlPath::new(time, set.clone(), base.clone()).unwrap();
    let fwd = solve_forward(&x0, &params, &u, None, time, 64).unwrap();
    let fwd_full = solve_forward(&x0, &params, &u, None, time, 1).unwrap();
    let source = control_direction_source(&fwd_full, &params, &dir).unwrap();
    let phi = solve_variational(&fwd_full, &params, &u, None, &source).unwrap();

    let eps_list = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut errs = Vec::new();
    for &eps in &eps_list {
        let shifted: Vec<Vec<f64>> = base
            .iter()
            .zip(&dir)
            .map(|(b, d)| vec![b[0] + eps * d[0]])
            .collect();
        let u_eps = ControlPath::new(time, set.clone(), shifted).unwrap();
        let traj = solve_forward(&x0, &params, &u_eps, None, time, 64).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..traj.len() {
            let mut diff = traj.field(i).sub(fwd.field(i)).unwrap();
            diff.scale(Complex64::new(1.0 / eps, 0.0));
            let defect = diff.sub(phi.field(i * 64)).unwrap();
            sup = sup.max(lp_norm(&defect, 2.0).unwrap());
        }
        errs.push(sup);
    }
    let slope = loglog_slope(&eps_list, &errs);
    report(
        4,
        "first-order expansion in the control",
        (0.8..=1.2).contains(&slope),
        format!("defect slope {slope:.3} over eps 1e-1..1e-4 (need 1 +- 0.2), defects {}", fmt_list(&errs)),
    );
}

#[test]
fn criterion_05_duality() {
    let grid = grid64();
    let time = TimeGrid::new(0.25, 250).unwrap();
    let gamma1 = 0.5;
    let params = cubic_one_channel(grid);
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let target = packet(grid, 8.9, 1.0, 0.0);
    let set = AdmissibleSet::symmetric_box(1, 2.0);
    let values: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.5 * (3.0 * time.node(k)).sin()]).collect();
    let u = ControlPath::new(time, set, values).unwrap();

    let fwd = solve_forward(&x0, &params, &u, None, time, 1).unwrap();
    let tracking = solve_forward(&packet(grid, 7.3, 1.2, 0.0), &params, &u, None, time, 1).unwrap();
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
    )
    .unwrap();

    let mut rng = StdRng::seed_from_u64(7);
    let dt = time.dt();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
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
        let source = Trajectory::new(grid, time, 1, fields).unwrap();
        let phi = solve_variational(&fwd, &params, &u, None, &source).unwrap();

        let mut lhs = 0.0;
        for k in 0..=time.steps() {
            lhs += time.weight(k) * dt * re_inner(source.field(k), adj.y().field(k)).unwrap();
        }
        let mut rhs = re_inner(phi.last(), &fwd.last().sub(&target).unwrap()).unwrap();
        for k in 0..=time.steps() {
            let gap = fwd.field(k).sub(tracking.field(k)).unwrap();
            rhs += gamma1 * time.weight(k) * dt * re_inner(phi.field(k), &gap).unwrap();
        }
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-12));
    }
    report(
        5,
        "tangent-adjoint duality",
        worst <= 1e-3,
        format!("max relative defect {worst:.3e} over 5 random sources at dt = 1e-3, tol 1e-3"),
    );
}

#[test]
fn criterion_06_optimality_certificate() {
    let seed = 6412;
    let grid = grid64();
    let time = TimeGrid::new(0.25, 192).unwrap();
    let params = cubic_one_channel(grid);
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let set = AdmissibleSet::symmetric_box(1, 1.0);

    let mut rng = StdRng::seed_from_u64(seed);
    let amp = rng.gen_range(0.4..0.8);
    let freq = rng.gen_range(2.0..4.0);
    let reference: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![amp * (freq * time.node(k)).cos()]).collect();
    let u_star = ControlPath::new(time, set.clone(), reference).unwrap();
    let tracked = solve_forward(&x0, &params, &u_star, None, time, 1).unwrap();

    let problem = ControlProblem::new(
        params,
        time,
        x0,
        set.clone(),
        ObjectiveWeights::new(1.0, 0.1, 0.0).unwrap(),
        TargetData::new(tracked.last().clone(), Some(tracked)),
        None,
    )
    .unwrap();
    let settings = OptimizerSettings {
        method: Method::ProjectedGradient,
        tol: 1e-4,
        max_iter: 200,
        mode: BackwardMode::DiscreteAdjoint,
    };
    let run = optimize(&problem, &ControlPath::zero(time, set).unwrap(), &settings).unwrap();

    let mut monotone = true;
    for pair in run.iterations.windows(2) {
        if pair[1].phi > pair[0].phi * (1.0 + 1e-15) {
            monotone = false;
        }
    }
    let ok = run.status == RunStatus::Converged && run.residual <= 1e-4 && monotone;
    report(
        6,
        "optimality certificate",
        ok,
        format!(
            "seed {seed}: residual {:.3e} (tol 1e-4) after {} iterations, status {:?}, objective non-increasing: {monotone}",
            run.residual,
            run.iterations.len(),
            run.status,
        ),
    );
}

#[test]
fn criterion_07_pvariation_dp_exactness() {
    // brute force: every subset of interior nodes, increments accumulated
    // left to right exactly as the dynamic program does
    fn brute(values: &[f64], p: f64) -> f64 {
        let m = values.len();
        let interior = m - 2;
        let mut best: f64 = 0.0;
        for mask in 0..(1u32 << interior) {
            let mut nodes = vec![0];
            for b in 0..interior {
                if mask & (1 << b) != 0 {
                    nodes.push(b + 1);
                }
            }
            nodes.push(m - 1);
            let mut sum = 0.0;
            for w in nodes.windows(2) {
                sum += (values[w[1]] - values[w[0]]).abs().powf(p);
            }
            best = best.max(sum);
        }
        best.powf(1.0 / p)
    }

    let mut rng = StdRng::seed_from_u64(777);
    let ps = [1.0, 1.5, 2.0, 3.0];
    for trial in 0..200 {
        let m = rng.gen_range(2..=12);
        let mut x = 0.0;
        let values: Vec<f64> = (0..m)
            .map(|_| {
                x += rng.gen_range(-1.0..1.0);
                x
            })
            .collect();
        let p = ps[rng.gen_range(0..ps.len())];
        let dp = vp_norm(&SampledPath::scalars(values.clone()).unwrap(), p).unwrap();
        let bf = brute(&values, p);
        assert_eq!(dp, bf, "trial {trial}: dp {dp} != brute force {bf} (p = {p}, m = {m})");
    }
    report(7, "p-variation dynamic program exactness", true, "200 random paths with up to 12 samples, bit-for-bit equality".into());
}

#[test]
fn criterion_08_besov_embedding_ratio() {
    let bound = f64::powf(2.0, 1.5);
    let mut rng = StdRng::seed_from_u64(888);
    let mut worst_scalar: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.gen_range(8..=96);
        let mut x = 0.0;
        let values: Vec<f64> = (0..m)
            .map(|_| {
                x += rng.gen_range(-1.0..1.0);
                x
            })
            .collect();
        let (ratio, ok) = besov_embedding_check(&SampledPath::scalars(values).unwrap(), 2.0).unwrap();
        assert!(ok);
        worst_scalar = worst_scalar.max(ratio);
    }

    let grid = grid64();
    let time = TimeGrid::new(0.5, 256).unwrap();
    let params = cubic_one_channel(grid);
    let set = AdmissibleSet::symmetric_box(1, 1.0);
    let values: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.4 * (2.0 * time.node(k)).sin()]).collect();
    let u = ControlPath::new(time, set, values).unwrap();
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let model = conservative_noise(&[0.9, -0.5]);
    let mut worst_field: f64 = 0.0;
    for seed in 0..10 {
        let phase = model.phase_field(grid, &model.sample_path(time, 100 + seed)).unwrap();
        let traj = solve_forward(&x0, &params, &u, Some(&phase), time, 8).unwrap();
        let sampled = SampledPath::from_trajectory(&traj).unwrap();
        let (ratio, ok) = besov_embedding_check(&sampled, 2.0).unwrap();
        assert!(ok);
        worst_field = worst_field.max(ratio);
    }
    let ok = worst_scalar <= bound && worst_field <= bound;
    report(
        8,
        "discrete Besov embedding ratio",
        ok,
        format!("max ratio {worst_scalar:.3} over 1000 scalar paths, {worst_field:.3} over 10 field trajectories, bound 2^1.5 = {bound:.3}"),
    );
}

#[test]
fn criterion_09_temporal_regularity_stability() {
    let grid = grid64();
    let params = cubic_one_channel(grid);
    let set = AdmissibleSet::symmetric_box(1, 1.0);
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let target = packet(grid, 8.9, 1.1, 0.0);
    let model = conservative_noise(&[0.8]);

    let coarse_time = TimeGrid::new(0.5, 512).unwrap();
    let coarse_path = model.sample_path(coarse_time, 909);
    let fine_path = coarse_path.refine_bridge().unwrap();
    let fine_time = fine_path.time();

    let mut sups = Vec::new(); // (forward, backward) per resolution
    for (time, path, stride) in [(coarse_time, &coarse_path, 8), (fine_time, &fine_path, 16)] {
        let values: Vec<Vec<f64>> =
            (0..=time.steps()).map(|k| vec![0.4 * (2.0 * time.node(k)).sin()]).collect();
        let u = ControlPath::new(time, set.clone(), values).unwrap();
        let phase = model.phase_field(grid, path).unwrap();
        let fwd = solve_forward(&x0, &params, &u, Some(&phase), time, 1).unwrap();
        let adj = solve_backward(
            &fwd,
            &params,
            &u,
            Some(&phase),
            &target,
            None,
            0.0,
            BackwardMode::Continuous,
            None,
        )
        .unwrap();
        let fwd_reg =
            temporal_regularity(&restride(&fwd, stride), GaugeSpec::Phase(&phase)).unwrap();
        let bwd_reg =
            temporal_regularity(&restride(adj.y(), stride), GaugeSpec::Phase(&phase)).unwrap();
        sups.push((fwd_reg.sup, bwd_reg.sup));
    }

    let fwd_var = (sups[0].0 - sups[1].0).abs() / sups[0].0.max(sups[1].0);
    let bwd_var = (sups[0].1 - sups[1].1).abs() / sups[0].1.max(sups[1].1);
    let ok = fwd_var <= 0.10 && bwd_var <= 0.10;
    report(
        9,
        "temporal regularity modulus stability",
        ok,
        format!(
            "forward sup {:.4} -> {:.4} ({:.1}%), backward sup {:.4} -> {:.4} ({:.1}%) across one dt halving, tol 10%",
            sups[0].0,
            sups[1].0,
            100.0 * fwd_var,
            sups[0].1,
            sups[1].1,
            100.0 * bwd_var,
        ),
    );
}

#[test]
fn criterion_10_stability_sweep() {
    let grid = grid64();
    let time = TimeGrid::new(0.5, 200).unwrap();
    let params = cubic_one_channel(grid);
    let set = AdmissibleSet::symmetric_box(1, 2.0);
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let base_values: Vec<Vec<f64>> =
        (0..=time.steps()).map(|k| vec![0.7 * (2.0 * time.node(k)).cos()]).collect();
    let u = ControlPath::new(time, set.clone(), base_values.clone()).unwrap();
    let model = conservative_noise(&[0.6]);
    let beta = model.sample_path(time, 31);
    let phase = model.phase_field(grid, &beta).unwrap();
    let base = solve_forward(&x0, &params, &u, Some(&phase), time, 10).unwrap();
    let w2 = model.sample_path(time, 90210);

    let mut dists = Vec::new();
    for level in 0..6 {
        let s = 0.2 * f64::powi(0.5, level);
        let values: Vec<Vec<f64>> = base_values
            .iter()
            .enumerate()
            .map(|(k, row)| vec![row[0] + s * (5.0 * time.node(k)).sin()])
            .collect();
        let u_pert = ControlPath::new(time, set.clone(), values).unwrap();
        let shifted: Vec<Vec<f64>> = beta
            .values()
            .iter()
            .zip(w2.values())
            .map(|(b, d)| vec![b[0] + s * d[0]])
            .collect();
        let phase_pert =
            model.phase_field(grid, &WienerPath::from_values(time, shifted).unwrap()).unwrap();
        let traj = solve_forward(&x0, &params, &u_pert, Some(&phase_pert), time, 10).unwrap();
        dists.push(traj.sup_l2_distance(&base).unwrap());
    }
    let monotone = dists.windows(2).all(|w| w[1] <= w[0] * 1.05);
    report(
        10,
        "stability under control and noise perturbations",
        monotone,
        format!("state distances {} over 5 halvings, monotone within 5%", fmt_list(&dists)),
    );
}

#[test]
fn criterion_11_split_step_order() {
    let grid = grid64();
    let params = cubic_one_channel(grid);
    let set = AdmissibleSet::symmetric_box(1, 2.0);
    let x0 = packet(grid, 8.0, 1.0, 0.0);
    let t_final = 0.5;
    let coarse_ctrl = TimeGrid::new(t_final, 8).unwrap();
    let u = ControlPath::new(
        coarse_ctrl,
        set,
        (0..=8).map(|k| vec![(k as f64 * 0.3).sin()]).collect(),
    )
    .unwrap();

    let reference = {
        let time = TimeGrid::new(t_final, 2048).unwrap();
        solve_forward(&x0, &params, &u, None, time, 2048).unwrap()
    };
    let mut dts = Vec::new();
    let mut errs = Vec::new();
    for steps in [64usize, 128, 256, 512] {
        let time = TimeGrid::new(t_final, steps).unwrap();
        let traj = solve_forward(&x0, &params, &u, None, time, steps).unwrap();
        dts.push(time.dt());
        errs.push(lp_norm(&traj.last().sub(reference.last()).unwrap(), 2.0).unwrap());
    }
    let slope = loglog_slope(&dts, &errs);
    report(
        11,
        "split-step self-convergence order",
        (1.7..=2.2).contains(&slope),
        format!("observed order {slope:.3} over 4 refinement levels, errors {}", fmt_list(&errs)),
    );
}
