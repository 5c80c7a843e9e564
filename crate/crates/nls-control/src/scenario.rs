//! Scenario orchestration: turn one parsed config into domain objects, run
//! a subcommand, and emit its artifacts.
//!
//! Artifacts are deterministic functions of the effective config (including
//! any seed or path-count overrides applied before the hash is taken), so a
//! rerun reproduces every file byte for byte. Each file starts with a `#`
//! preamble or JSON fields naming the config hash and base seed.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::adjoint::BackwardMode;
use crate::config::{
    BackwardModeConfig, MethodConfig, RunConfig, TargetSpec,
};
use crate::control::{AdmissibleSet, ControlPath};
use crate::error::{Error, Result};
use crate::forward::{solve_forward, ModelParams, Nonlinearity};
use crate::grid::{ComplexField, SpatialGrid};
use crate::io::{
    read_field_csv, write_control_csv, write_field_csv, write_norms_csv, write_trajectory_csv,
};
use crate::noise::{NoiseModel, PhaseField, WienerPath};
use crate::objective::{ControlProblem, NoiseEnsemble, ObjectiveWeights, TargetData};
use crate::optimize::{optimize, Method, OptimizerSettings, RunReport};
use crate::pvar::{besov_embedding_check, vp_norm, SampledPath};
use crate::timereg::{temporal_regularity, GaugeSpec, ShiftRatio};
use crate::trajectory::{TimeGrid, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Forward,
    Optimize,
    Gradcheck,
    Diagnose,
    Stability,
}

/// Config compiled into domain objects. Construction re-runs every physical
/// invariant through the domain constructors.
pub struct Scenario {
    config: RunConfig,
    hash: String,
    grid: SpatialGrid,
    time: TimeGrid,
    params: ModelParams,
    x0: ComplexField,
    set: AdmissibleSet,
    u0: ControlPath,
    noise: Option<NoiseModel>,
}

impl Scenario {
    pub fn from_config(config: RunConfig) -> Result<Scenario> {
        config.validate()?;
        let hash = config.hash();
        let grid = SpatialGrid::new(config.grid.d, config.grid.n, config.grid.length)?;
        let time = TimeGrid::new(config.time.t_final, config.time.steps)?;
        let nonlinearity = match config.model.nonlinearity {
            crate::config::NonlinearityConfig::Defocusing => Nonlinearity::Defocusing,
            crate::config::NonlinearityConfig::Focusing => Nonlinearity::Focusing,
        };
        let v0 = config.model.v0.as_ref().map(|s| s.evaluate(grid)).transpose()?;
        let potentials: Result<Vec<Vec<f64>>> =
            config.model.potentials.iter().map(|s| s.evaluate(grid)).collect();
        let params = ModelParams::new(grid, nonlinearity, config.model.alpha, v0, potentials?)?;
        let x0 = config.initial.evaluate(grid)?;
        let set = config.control.set.clone();
        let u0 = config.control.u0.build(time, set.clone())?;
        let noise = config.noise.as_ref().map(|n| n.build(grid.dim())).transpose()?;
        if time.steps() % config.time.stride != 0 || config.time.stride == 0 {
            return Err(Error::Config {
                path: "time.stride".into(),
                msg: format!("{} does not divide {} steps", config.time.stride, time.steps()),
            });
        }
        Ok(Scenario { config, hash, grid, time, params, x0, set, u0, noise })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn preamble(&self) -> String {
        format!("# config={} seed={}", self.hash, self.config.mc.base_seed)
    }

    /// One noise realization for single-trajectory commands.
    fn single_phase(&self, seed: u64) -> Result<Option<PhaseField>> {
        match &self.noise {
            None => Ok(None),
            Some(model) => {
                let path = model.sample_path(self.time, seed);
                Ok(Some(model.phase_field(self.grid, &path)?))
            }
        }
    }

    fn uncontrolled(&self, seed: Option<u64>, stride: usize) -> Result<Trajectory> {
        let zero = ControlPath::zero(self.time, self.set.clone())?;
        let phase = self.single_phase(seed.unwrap_or(self.config.mc.base_seed))?;
        solve_forward(&self.x0, &self.params, &zero, phase.as_ref(), self.time, stride)
    }

    fn resolve_terminal(&self, spec: &TargetSpec) -> Result<ComplexField> {
        match spec {
            TargetSpec::Analytic { state } => state.evaluate(self.grid),
            TargetSpec::File { path } => {
                let file = fs::File::open(path)?;
                read_field_csv(BufReader::new(file), self.grid)
            }
            TargetSpec::UncontrolledRun { seed } => {
                Ok(self.uncontrolled(*seed, self.time.steps())?.last().clone())
            }
        }
    }

    fn resolve_tracking(&self, spec: &TargetSpec) -> Result<Trajectory> {
        match spec {
            TargetSpec::Analytic { state } => {
                let f = state.evaluate(self.grid)?;
                Trajectory::new(self.grid, self.time, 1, vec![f; self.time.steps() + 1])
            }
            TargetSpec::File { path } => {
                let mut file = fs::File::open(path)?;
                let traj = Trajectory::read_fields_bin(&mut file, self.time.t_final())?;
                if traj.grid() != self.grid || traj.time() != self.time || traj.stride() != 1 {
                    return Err(Error::NodeMismatch(
                        "tracking file does not match the configured discretization".into(),
                    ));
                }
                Ok(traj)
            }
            TargetSpec::UncontrolledRun { seed } => self.uncontrolled(*seed, 1),
        }
    }

    /// Assemble the tracking problem; `optimize` and `gradcheck` need it.
    pub fn build_problem(&self) -> Result<ControlProblem> {
        let weights = self.config.weights.as_ref().ok_or_else(|| Error::Config {
            path: "weights".into(),
            msg: "required by this subcommand".into(),
        })?;
        let weights = ObjectiveWeights::new(weights.gamma1, weights.gamma2, weights.gamma3)?;
        let targets = self.config.targets.as_ref().ok_or_else(|| Error::Config {
            path: "targets".into(),
            msg: "required by this subcommand".into(),
        })?;
        let terminal = self.resolve_terminal(&targets.terminal)?;
        let tracking = match (&targets.tracking, weights.gamma1 > 0.0) {
            (Some(spec), _) => Some(self.resolve_tracking(spec)?),
            (None, true) => {
                return Err(Error::Config {
                    path: "targets.tracking".into(),
                    msg: "required when gamma1 > 0".into(),
                })
            }
            (None, false) => None,
        };
        let ensemble = match &self.noise {
            None => None,
            Some(model) => Some(NoiseEnsemble::sample(
                model.clone(),
                self.time,
                self.config.mc.paths,
                self.config.mc.base_seed,
            )?),
        };
        ControlProblem::new(
            self.params.clone(),
            self.time,
            self.x0.clone(),
            self.set.clone(),
            weights,
            TargetData::new(terminal, tracking),
            ensemble,
        )
    }

    fn optimizer_settings(&self) -> OptimizerSettings {
        let opt = &self.config.optimizer;
        OptimizerSettings {
            method: match opt.method {
                MethodConfig::Pgd => Method::ProjectedGradient,
                MethodConfig::FixedPoint => Method::FixedPoint { theta: opt.theta },
            },
            tol: opt.tol,
            max_iter: opt.max_iter,
            mode: match opt.mode {
                BackwardModeConfig::Continuous => BackwardMode::Continuous,
                BackwardModeConfig::DiscreteAdjoint => BackwardMode::DiscreteAdjoint,
            },
        }
    }

    /// Run one subcommand, write its artifacts, and return their paths.
    pub fn run(&self, cmd: Subcommand, out: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out)?;
        match cmd {
            Subcommand::Forward => self.cmd_forward(out),
            Subcommand::Optimize => self.cmd_optimize(out),
            Subcommand::Gradcheck => self.cmd_gradcheck(out),
            Subcommand::Diagnose => self.cmd_diagnose(out),
            Subcommand::Stability => self.cmd_stability(out),
        }
    }

    fn emit(
        &self,
        out: &Path,
        name: &str,
        body: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
    ) -> Result<PathBuf> {
        let path = out.join(name);
        let mut w = BufWriter::new(fs::File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        Ok(path)
    }

    fn cmd_forward(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let seed = self.config.mc.base_seed;
        let noise_path = self.noise.as_ref().map(|m| m.sample_path(self.time, seed));
        let phase = match (&self.noise, &noise_path) {
            (Some(model), Some(p)) => Some(model.phase_field(self.grid, p)?),
            _ => None,
        };
        let traj = solve_forward(
            &self.x0,
            &self.params,
            &self.u0,
            phase.as_ref(),
            self.time,
            self.config.time.stride,
        )?;

        let mut written = Vec::new();
        written.push(self.emit(out, "trajectory.bin", |w| traj.write_fields_bin(w))?);
        written.push(self.emit(out, "trajectory.csv", |w| {
            write_trajectory_csv(w, &traj, &self.preamble())
        })?);
        written.push(self.emit(out, "norms.csv", |w| write_norms_csv(w, &traj, &self.preamble()))?);
        written.push(self.emit(out, "final_state.csv", |w| {
            write_field_csv(w, traj.last(), &self.preamble())
        })?);
        if let Some(p) = &noise_path {
            written.push(self.emit(out, "noise.csv", |w| p.write_csv(w, &self.preamble()))?);
        }
        Ok(written)
    }

    fn cmd_optimize(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let problem = self.build_problem()?;
        let report = optimize(&problem, &self.u0, &self.optimizer_settings())?;
        let json = self.report_json(&problem, &report)?;
        let mut written = Vec::new();
        written.push(self.emit(out, "report.json", |w| {
            w.write_all(json.as_bytes())?;
            writeln!(w)?;
            Ok(())
        })?);
        written.push(self.emit(out, "control.csv", |w| {
            write_control_csv(w, &report.control, &self.preamble())
        })?);
        Ok(written)
    }

    fn report_json(&self, problem: &ControlProblem, report: &RunReport) -> Result<String> {
        #[derive(Serialize)]
        struct McEcho {
            paths: usize,
            path_seeds: Vec<u64>,
        }
        #[derive(Serialize)]
        struct ReportJson<'a> {
            config_hash: &'a str,
            base_seed: u64,
            status: crate::optimize::RunStatus,
            phi: f64,
            grad_norm: f64,
            residual: f64,
            iterations: &'a [crate::optimize::IterationRecord],
            mc: McEcho,
            config: &'a RunConfig,
        }
        let path_seeds = match problem.noise() {
            None => Vec::new(),
            Some(e) => e.paths().iter().filter_map(|p| p.seed()).collect(),
        };
        let doc = ReportJson {
            config_hash: &self.hash,
            base_seed: self.config.mc.base_seed,
            status: report.status,
            phi: report.phi,
            grad_norm: report.grad_norm,
            residual: report.residual,
            iterations: &report.iterations,
            mc: McEcho { paths: path_seeds.len().max(1), path_seeds },
            config: &self.config,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Central differences of the sample objective against the
    /// discrete-adjoint partials, on up to nine evenly spaced nodes per
    /// channel. Nodes where the bump would leave the admissible set are
    /// skipped: projection would silently bend the difference quotient.
    fn cmd_gradcheck(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let problem = self.build_problem()?;
        let grad = problem.gradient(&self.u0, BackwardMode::DiscreteAdjoint)?;
        let partials = grad.discrete().expect("discrete mode fills the nodal partials");
        let eps = 1e-5;
        let nodes = self.time.steps() + 1;
        let step = (nodes / 8).max(1);
        let mut rows = Vec::new();
        for k in (0..nodes).step_by(step).chain([nodes - 1]) {
            if rows.iter().any(|r: &(usize, usize, f64, f64)| r.0 == k) {
                continue;
            }
            for j in 0..self.set.channels() {
                let mut plus = self.u0.node_values().to_vec();
                plus[k][j] += eps;
                let mut minus = self.u0.node_values().to_vec();
                minus[k][j] -= eps;
                if !self.set.contains(&plus[k], 1e-12) || !self.set.contains(&minus[k], 1e-12) {
                    continue;
                }
                let up = ControlPath::new(self.time, self.set.clone(), plus)?;
                let um = ControlPath::new(self.time, self.set.clone(), minus)?;
                let fd =
                    (problem.evaluate(&up)?.total - problem.evaluate(&um)?.total) / (2.0 * eps);
                rows.push((k, j, partials[k][j], fd));
            }
        }
        let preamble = format!("{}\n# central differences, eps={eps}", self.preamble());
        let path = self.emit(out, "gradcheck.csv", |w| {
            writeln!(w, "{preamble}")?;
            writeln!(w, "node,t,channel,adjoint,fd,abs_err,rel_err")?;
            for (k, j, adj, fd) in rows {
                let abs = (adj - fd).abs();
                let rel = abs / fd.abs().max(1e-300);
                writeln!(w, "{},{},{},{},{},{},{}", k, self.time.node(k), j + 1, adj, fd, abs, rel)?;
            }
            Ok(())
        })?;
        Ok(vec![path])
    }

    fn cmd_diagnose(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let seed = self.config.mc.base_seed;
        let noise_path = self.noise.as_ref().map(|m| m.sample_path(self.time, seed));
        let phase = match (&self.noise, &noise_path) {
            (Some(model), Some(p)) => Some(model.phase_field(self.grid, p)?),
            _ => None,
        };
        let traj = solve_forward(
            &self.x0,
            &self.params,
            &self.u0,
            phase.as_ref(),
            self.time,
            self.config.time.stride,
        )?;

        let samples = SampledPath::from_trajectory(&traj)?;
        let v2 = vp_norm(&samples, 2.0)?;
        let (besov, _) = besov_embedding_check(&samples, 2.0)?;
        let gauge = match &phase {
            None => GaugeSpec::None,
            Some(p) => GaugeSpec::Phase(p),
        };
        let reg = temporal_regularity(&traj, gauge)?;

        #[derive(Serialize)]
        struct DiagnosticsJson<'a> {
            config_hash: &'a str,
            base_seed: u64,
            v2_norm: f64,
            temporal_sup: f64,
            h_profile: &'a [ShiftRatio],
            besov_max_ratio: f64,
            config: &'a RunConfig,
        }
        let doc = DiagnosticsJson {
            config_hash: &self.hash,
            base_seed: seed,
            v2_norm: v2,
            temporal_sup: reg.sup,
            h_profile: &reg.profile,
            besov_max_ratio: besov,
            config: &self.config,
        };
        let json = serde_json::to_string_pretty(&doc)?;
        let path = self.emit(out, "diagnostics.json", |w| {
            w.write_all(json.as_bytes())?;
            writeln!(w)?;
            Ok(())
        })?;
        Ok(vec![path])
    }

    /// Joint control-and-noise perturbation sweep. The perturbation
    /// direction is fixed (a smooth control bump plus an independent Wiener
    /// path); its size is halved per level, and the table records the
    /// resulting state distance in `sup_t L^2`.
    fn cmd_stability(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let seed = self.config.mc.base_seed;
        let base_noise = self.noise.as_ref().map(|m| m.sample_path(self.time, seed));
        let base_phase = match (&self.noise, &base_noise) {
            (Some(model), Some(p)) => Some(model.phase_field(self.grid, p)?),
            _ => None,
        };
        let base = solve_forward(
            &self.x0,
            &self.params,
            &self.u0,
            base_phase.as_ref(),
            self.time,
            self.config.time.stride,
        )?;

        let m = self.set.channels();
        let direction: Vec<Vec<f64>> = (0..=self.time.steps())
            .map(|k| {
                let t = self.time.node(k);
                (0..m)
                    .map(|j| {
                        let w = (j + 1) as f64 * std::f64::consts::PI / self.time.t_final();
                        (w * t + 0.3 * j as f64).sin()
                    })
                    .collect()
            })
            .collect();
        let noise_dir = self.noise.as_ref().map(|model| {
            model.sample_path(self.time, crate::util::path_seed(seed, u64::MAX))
        });

        let mut rows = Vec::new();
        for level in 0..=5 {
            let s = 0.1 * f64::powi(0.5, level);
            let values: Vec<Vec<f64>> = self
                .u0
                .node_values()
                .iter()
                .zip(&direction)
                .map(|(u, d)| u.iter().zip(d).map(|(a, b)| a + s * b).collect())
                .collect();
            let u_pert = ControlPath::new(self.time, self.set.clone(), values)?;
            let control_dist = u_pert.l2_distance(&self.u0)?;

            let (phase, noise_dist) = match (&self.noise, &base_noise, &noise_dir) {
                (Some(model), Some(b), Some(d)) => {
                    let mut sup: f64 = 0.0;
                    let values: Vec<Vec<f64>> = b
                        .values()
                        .iter()
                        .zip(d.values())
                        .map(|(bv, dv)| {
                            bv.iter()
                                .zip(dv)
                                .map(|(x, y)| {
                                    sup = sup.max((s * y).abs());
                                    x + s * y
                                })
                                .collect()
                        })
                        .collect();
                    let path = WienerPath::from_values(self.time, values)?;
                    (Some(model.phase_field(self.grid, &path)?), sup)
                }
                _ => (None, 0.0),
            };
            let traj = solve_forward(
                &self.x0,
                &self.params,
                &u_pert,
                phase.as_ref().or(base_phase.as_ref()),
                self.time,
                self.config.time.stride,
            )?;
            let state_dist = traj.sup_l2_distance(&base)?;
            rows.push((s, control_dist, noise_dist, state_dist));
        }

        let preamble = self.preamble();
        let path = self.emit(out, "stability.csv", |w| {
            writeln!(w, "{preamble}")?;
            writeln!(w, "scale,control_dist,noise_dist,state_dist")?;
            for (s, cd, nd, sd) in rows {
                writeln!(w, "{s},{cd},{nd},{sd}")?;
            }
            Ok(())
        })?;
        Ok(vec![path])
    }
}
