//! Run configuration: one JSON file fully determines a run.
//!
//! Parsing is strict. Every level rejects unknown keys and the reported
//! error carries the offending field path, so a typo like `weights.gamma4`
//! fails loudly instead of silently running with a default. Analytic shapes
//! (potentials, states, controls) are small tagged enums evaluated on the
//! grid at build time; `file` variants read the CSV formats from [`crate::io`],
//! which lets one run's output seed the next run's input.
//!
//! The identity of a run is the SHA-256 of its canonical JSON form (struct
//! field order, compact separators). Artifacts name that hash plus the base
//! seed, which makes reruns byte-identical and collisions between different
//! configurations visible.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::control::{AdmissibleSet, ControlPath};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};
use crate::io::{read_control_csv, read_field_csv};
use crate::noise::{NoiseChannel, NoiseModel, Profile};
use crate::trajectory::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub initial: StateSpec,
    pub time: TimeConfig,
    pub control: ControlConfig,
    #[serde(default)]
    pub weights: Option<WeightsConfig>,
    #[serde(default)]
    pub targets: Option<TargetConfig>,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityConfig {
    /// `lambda = -1`
    Defocusing,
    /// `lambda = +1`
    Focusing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub nonlinearity: NonlinearityConfig,
    pub alpha: f64,
    #[serde(default)]
    pub v0: Option<PotentialSpec>,
    pub potentials: Vec<PotentialSpec>,
}

/// Named analytic potential shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `amplitude * exp(-r^2 / (2 width^2))` with `r` the periodic distance
    /// to `center`.
    Gaussian { amplitude: f64, center: Vec<f64>, width: f64 },
    /// `amplitude * prod_a cos(2 pi mode_a x_a / L)`.
    Cosine { amplitude: f64, mode: Vec<i64> },
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// `amplitude * exp(-r^2 / (2 width^2)) * exp(i momentum . x)`; momentum
    /// defaults to zero.
    GaussianPacket {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
        #[serde(default)]
        momentum: Vec<f64>,
    },
    /// `amplitude * exp(2 pi i mode . x / L)`.
    PlaneWave { amplitude: f64, mode: Vec<i64> },
    /// Field CSV produced by [`crate::io::write_field_csv`].
    File { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub steps: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub channels: usize,
    pub set: AdmissibleSet,
    #[serde(default)]
    pub u0: ControlSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlSpec {
    #[default]
    Zero,
    Constant {
        values: Vec<f64>,
    },
    /// `u_j(t) = amplitude_j * sin(frequency_j * t + phase_j)`.
    Sinusoid {
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        #[serde(default)]
        phase: Vec<f64>,
    },
    /// Control CSV produced by [`crate::io::write_control_csv`].
    File {
        path: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(default)]
    pub gamma3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub terminal: TargetSpec,
    #[serde(default)]
    pub tracking: Option<TargetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Analytic {
        state: StateSpec,
    },
    File {
        path: String,
    },
    /// Materialized by an internal `u = 0` solve; the seed (default: the MC
    /// base seed) drives that run's noise when the model is stochastic.
    UncontrolledRun {
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub channels: Vec<NoiseChannelConfig>,
    pub conservative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseChannelConfig {
    /// `[re, im]` of the channel amplitude.
    pub mu: [f64; 2],
    pub profile: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { value: f64 },
    Bump { scale: f64, center: Vec<f64>, decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub paths: usize,
    pub base_seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { paths: 1, base_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodConfig {
    Pgd,
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackwardModeConfig {
    Continuous,
    DiscreteAdjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: MethodConfig,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default = "default_mode")]
    pub mode: BackwardModeConfig,
}

fn default_theta() -> f64 {
    0.5
}

fn default_mode() -> BackwardModeConfig {
    BackwardModeConfig::DiscreteAdjoint
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: MethodConfig::Pgd,
            theta: default_theta(),
            tol: 1e-4,
            max_iter: 200,
            mode: default_mode(),
        }
    }
}

fn check_axes(what: &str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::Config {
            path: what.into(),
            msg: format!("expected {d} components, got {}", v.len()),
        });
    }
    Ok(())
}

fn padded(v: &[f64]) -> [f64; 2] {
    [v[0], v.get(1).copied().unwrap_or(0.0)]
}

impl PotentialSpec {
    pub fn evaluate(&self, grid: SpatialGrid) -> Result<Vec<f64>> {
        match self {
            PotentialSpec::Gaussian { amplitude, center, width } => {
                check_axes("potential.center", center, grid.dim())?;
                if !(*width > 0.0) {
                    return Err(Error::Config {
                        path: "potential.width".into(),
                        msg: format!("must be positive, got {width}"),
                    });
                }
                let c = padded(center);
                Ok((0..grid.len())
                    .map(|i| {
                        amplitude * (-grid.torus_dist_sq(i, c) / (2.0 * width * width)).exp()
                    })
                    .collect())
            }
            PotentialSpec::Cosine { amplitude, mode } => {
                if mode.len() != grid.dim() {
                    return Err(Error::Config {
                        path: "potential.mode".into(),
                        msg: format!("expected {} components, got {}", grid.dim(), mode.len()),
                    });
                }
                let tau = 2.0 * std::f64::consts::PI / grid.length();
                Ok((0..grid.len())
                    .map(|i| {
                        let x = grid.coords(i);
                        let mut v = *amplitude;
                        for (a, m) in mode.iter().enumerate() {
                            v *= (tau * *m as f64 * x[a]).cos();
                        }
                        v
                    })
                    .collect())
            }
            PotentialSpec::Constant { value } => Ok(vec![*value; grid.len()]),
        }
    }
}

impl StateSpec {
    pub fn evaluate(&self, grid: SpatialGrid) -> Result<ComplexField> {
        match self {
            StateSpec::GaussianPacket { amplitude, center, width, momentum } => {
                check_axes("state.center", center, grid.dim())?;
                if !momentum.is_empty() {
                    check_axes("state.momentum", momentum, grid.dim())?;
                }
                if !(*width > 0.0) {
                    return Err(Error::Config {
                        path: "state.width".into(),
                        msg: format!("must be positive, got {width}"),
                    });
                }
                let c = padded(center);
                let p = if momentum.is_empty() { [0.0, 0.0] } else { padded(momentum) };
                Ok(ComplexField::from_fn(grid, |x| {
                    let mut rsq = 0.0;
                    for a in 0..grid.dim() {
                        let mut dr = (x[a] - c[a]).abs() % grid.length();
                        if dr > grid.length() / 2.0 {
                            dr = grid.length() - dr;
                        }
                        rsq += dr * dr;
                    }
                    let env = amplitude * (-rsq / (2.0 * width * width)).exp();
                    let phase = p[0] * x[0] + p[1] * x[1];
                    Complex64::new(0.0, phase).exp() * env
                }))
            }
            StateSpec::PlaneWave { amplitude, mode } => {
                if mode.len() != grid.dim() {
                    return Err(Error::Config {
                        path: "state.mode".into(),
                        msg: format!("expected {} components, got {}", grid.dim(), mode.len()),
                    });
                }
                let tau = 2.0 * std::f64::consts::PI / grid.length();
                Ok(ComplexField::from_fn(grid, |x| {
                    let mut phase = 0.0;
                    for (a, m) in mode.iter().enumerate() {
                        phase += tau * *m as f64 * x[a];
                    }
                    Complex64::new(0.0, phase).exp() * *amplitude
                }))
            }
            StateSpec::File { path } => {
                let file = fs::File::open(path)?;
                read_field_csv(BufReader::new(file), grid)
            }
        }
    }
}

impl ControlSpec {
    pub fn build(&self, time: TimeGrid, set: AdmissibleSet) -> Result<ControlPath> {
        let m = set.channels();
        match self {
            ControlSpec::Zero => ControlPath::zero(time, set),
            ControlSpec::Constant { values } => {
                if values.len() != m {
                    return Err(Error::Config {
                        path: "control.u0.values".into(),
                        msg: format!("expected {m} channels, got {}", values.len()),
                    });
                }
                ControlPath::constant(time, set, values.clone())
            }
            ControlSpec::Sinusoid { amplitude, frequency, phase } => {
                let shift = if phase.is_empty() { vec![0.0; m] } else { phase.clone() };
                if amplitude.len() != m || frequency.len() != m || shift.len() != m {
                    return Err(Error::Config {
                        path: "control.u0".into(),
                        msg: format!("sinusoid parameter lists must all have {m} entries"),
                    });
                }
                let values: Vec<Vec<f64>> = (0..=time.steps())
                    .map(|k| {
                        let t = time.node(k);
                        (0..m).map(|j| amplitude[j] * (frequency[j] * t + shift[j]).sin()).collect()
                    })
                    .collect();
                ControlPath::new(time, set, values)
            }
            ControlSpec::File { path } => {
                let file = fs::File::open(path)?;
                read_control_csv(BufReader::new(file), time, set)
            }
        }
    }
}

impl ProfileSpec {
    pub fn to_profile(&self, d: usize) -> Result<Profile> {
        Ok(match self {
            ProfileSpec::Constant { value } => Profile::Constant(*value),
            ProfileSpec::Bump { scale, center, decay } => {
                check_axes("noise.profile.center", center, d)?;
                Profile::Bump { scale: *scale, center: padded(center), decay: *decay }
            }
        })
    }
}

impl NoiseConfig {
    pub fn build(&self, d: usize) -> Result<NoiseModel> {
        let channels: Result<Vec<NoiseChannel>> = self
            .channels
            .iter()
            .map(|c| {
                Ok(NoiseChannel {
                    amplitude: Complex64::new(c.mu[0], c.mu[1]),
                    profile: c.profile.to_profile(d)?,
                })
            })
            .collect();
        NoiseModel::new(channels?, self.conservative)
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let mut de = serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            Error::Config { path: e.path().to_string(), msg: e.inner().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Compact JSON in declared field order; input to the run hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }

    /// SHA-256 of the canonical form, lowercase hex.
    pub fn hash(&self) -> String {
        crate::util::sha256_hex(self.canonical_json().as_bytes())
    }

    /// Cross-field checks that plain deserialization cannot express. The
    /// heavier physical invariants live in the domain constructors invoked
    /// when a scenario is built from this config.
    pub fn validate(&self) -> Result<()> {
        if self.control.channels != self.model.potentials.len() {
            return Err(Error::Config {
                path: "control.channels".into(),
                msg: format!(
                    "{} channels but {} control potentials",
                    self.control.channels,
                    self.model.potentials.len()
                ),
            });
        }
        if self.control.set.channels() != self.control.channels {
            return Err(Error::Config {
                path: "control.set".into(),
                msg: format!(
                    "set constrains {} channels, control has {}",
                    self.control.set.channels(),
                    self.control.channels
                ),
            });
        }
        if self.mc.paths == 0 {
            return Err(Error::Config {
                path: "mc.paths".into(),
                msg: "needs at least one sample path".into(),
            });
        }
        let opt = &self.optimizer;
        if !(opt.theta > 0.0 && opt.theta <= 1.0) {
            return Err(Error::Config {
                path: "optimizer.theta".into(),
                msg: format!("must lie in (0, 1], got {}", opt.theta),
            });
        }
        if !opt.tol.is_finite() {
            return Err(Error::Config {
                path: "optimizer.tol".into(),
                msg: "must be finite".into(),
            });
        }
        if let Some(w) = &self.weights {
            for (name, v) in [("gamma1", w.gamma1), ("gamma2", w.gamma2), ("gamma3", w.gamma3)] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Config {
                        path: format!("weights.{name}"),
                        msg: format!("must be finite and nonnegative, got {v}"),
                    });
                }
            }
            if w.gamma2 == 0.0 {
                return Err(Error::Config {
                    path: "weights.gamma2".into(),
                    msg: "must be strictly positive".into(),
                });
            }
        }
        Ok(())
    }
}
