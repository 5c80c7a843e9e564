//! Multiplicative phase noise: Wiener paths, spatial noise profiles, and the
//! gauge fields they generate.
//!
//! The noise acting on the state is `W(t,x) = sum_j mu_j e_j(x) beta_j(t)`
//! with complex amplitudes `mu_j`, smooth real profiles `e_j`, and
//! independent standard Brownian motions `beta_j`. In the conservative case
//! all amplitudes are purely imaginary, `W` is purely imaginary, and the
//! pointwise gauge `exp(W)` is unimodular, which is what makes the mass
//! pathwise conserved downstream.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};
use crate::spectral;
use crate::trajectory::TimeGrid;

/// Spatial shape of one noise channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `scale * (1 + r^2)^(-decay)` with `r` the periodic distance to
    /// `center`; `decay >= 2` keeps the shape asymptotically flat enough for
    /// the rescaling machinery.
    Bump { scale: f64, center: [f64; 2], decay: f64 },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::InvalidParam("constant profile must be finite".into()));
                }
            }
            Profile::Bump { scale, decay, .. } => {
                if !scale.is_finite() {
                    return Err(Error::InvalidParam("bump scale must be finite".into()));
                }
                if !(*decay >= 2.0) {
                    return Err(Error::InvalidParam(format!(
                        "bump decay must be >= 2, got {decay}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_))
    }

    pub fn evaluate(&self, grid: SpatialGrid) -> Vec<f64> {
        match self {
            Profile::Constant(c) => vec![*c; grid.len()],
            Profile::Bump { scale, center, decay } => (0..grid.len())
                .map(|i| scale * (1.0 + grid.torus_dist_sq(i, *center)).powf(-decay))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannel {
    pub amplitude: Complex64,
    pub profile: Profile,
}

/// The full noise specification entering the state equation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    channels: Vec<NoiseChannel>,
    conservative: bool,
}

impl NoiseModel {
    pub fn new(channels: Vec<NoiseChannel>, conservative: bool) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidParam("noise model needs at least one channel".into()));
        }
        for ch in &channels {
            ch.profile.validate()?;
            if !ch.amplitude.re.is_finite() || !ch.amplitude.im.is_finite() {
                return Err(Error::InvalidParam("noise amplitude must be finite".into()));
            }
            if conservative && ch.amplitude.re != 0.0 {
                return Err(Error::InvalidParam(format!(
                    "conservative noise requires purely imaginary amplitudes, got {}",
                    ch.amplitude
                )));
            }
        }
        Ok(Self { channels, conservative })
    }

    pub fn channels(&self) -> &[NoiseChannel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn conservative(&self) -> bool {
        self.conservative
    }

    pub fn constant_profiles(&self) -> bool {
        self.channels.iter().all(|ch| ch.profile.is_constant())
    }

    /// Sample the driving Brownian motions on a time grid.
    pub fn sample_path(&self, time: TimeGrid, seed: u64) -> WienerPath {
        WienerPath::sample(self.len(), time, seed)
    }

    /// Evaluate the noise as a [`PhaseField`] on a grid, pairing the model
    /// with one sampled path.
    pub fn phase_field(&self, grid: SpatialGrid, path: &WienerPath) -> Result<PhaseField> {
        if path.channels() != self.len() {
            return Err(Error::NodeMismatch(format!(
                "path drives {} channels, model has {}",
                path.channels(),
                self.len()
            )));
        }
        let profiles = self.channels.iter().map(|ch| ch.profile.evaluate(grid)).collect();
        let amplitudes = self.channels.iter().map(|ch| ch.amplitude).collect();
        Ok(PhaseField {
            grid,
            time: path.time(),
            profiles,
            amplitudes,
            beta: path.values().to_vec(),
            conservative: self.conservative,
            constant_profiles: self.constant_profiles(),
        })
    }

    /// The damping profile `mu(x) = 1/2 sum_j |mu_j|^2 e_j(x)^2` appearing in
    /// the Ito form of the state equation.
    pub fn mu_profile(&self, grid: SpatialGrid) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        for ch in &self.channels {
            let e = ch.profile.evaluate(grid);
            let a = ch.amplitude.norm_sqr();
            for (o, v) in out.iter_mut().zip(&e) {
                *o += 0.5 * a * v * v;
            }
        }
        out
    }
}

/// Sampled Brownian driver values on a uniform time grid, `beta(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    time: TimeGrid,
    /// node-major: `values[node][channel]`
    values: Vec<Vec<f64>>,
    seed: Option<u64>,
    level: u32,
}

impl WienerPath {
    /// Draw increments `N(0, dt)` per channel from a ChaCha stream, so the
    /// same `(channels, time, seed)` triple always reproduces the same path
    /// bit for bit.
    pub fn sample(channels: usize, time: TimeGrid, seed: u64) -> WienerPath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sqrt_dt = time.dt().sqrt();
        let mut values = Vec::with_capacity(time.steps() + 1);
        values.push(vec![0.0; channels]);
        for k in 1..=time.steps() {
            let prev = &values[k - 1];
            let mut node = Vec::with_capacity(channels);
            for j in 0..channels {
                let g: f64 = StandardNormal.sample(&mut rng);
                node.push(prev[j] + sqrt_dt * g);
            }
            values.push(node);
        }
        WienerPath { time, values, seed: Some(seed), level: 0 }
    }

    /// Wrap explicit node values (used for perturbation studies); such a
    /// path cannot be bridge-refined because it has no seed.
    pub fn from_values(time: TimeGrid, values: Vec<Vec<f64>>) -> Result<WienerPath> {
        if values.len() != time.steps() + 1 {
            return Err(Error::NodeMismatch(format!(
                "path needs {} nodes, got {}",
                time.steps() + 1,
                values.len()
            )));
        }
        let channels = values.first().map(|v| v.len()).unwrap_or(0);
        if channels == 0 || values.iter().any(|v| v.len() != channels) {
            return Err(Error::NodeMismatch("ragged or empty path values".into()));
        }
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(WienerPath { time, values, seed: None, level: 0 })
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn channels(&self) -> usize {
        self.values[0].len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// Brownian-bridge midpoint refinement doubling the step count. Values
    /// at the coarse nodes are reused bit for bit; midpoints add the bridge
    /// fluctuation `N(0, dt/4)` from a stream derived from the seed and the
    /// refinement level, so refining is itself deterministic.
    pub fn refine_bridge(&self) -> Result<WienerPath> {
        let seed = self.seed.ok_or_else(|| {
            Error::Unsupported("cannot bridge-refine a path constructed from raw values".into())
        })?;
        let derived = crate::util::splitmix64(seed ^ (0xB71D_6E5F_35C8_0000 + self.level as u64 + 1));
        let mut rng = ChaCha8Rng::seed_from_u64(derived);
        let channels = self.channels();
        let half_sd = (self.time.dt() / 4.0).sqrt();
        let mut values = Vec::with_capacity(2 * self.time.steps() + 1);
        for k in 0..self.time.steps() {
            values.push(self.values[k].clone());
            let lo = &self.values[k];
            let hi = &self.values[k + 1];
            let mut mid = Vec::with_capacity(channels);
            for j in 0..channels {
                let g: f64 = StandardNormal.sample(&mut rng);
                mid.push(0.5 * (lo[j] + hi[j]) + half_sd * g);
            }
            values.push(mid);
        }
        values.push(self.values[self.time.steps()].clone());
        Ok(WienerPath {
            time: self.time.halved(),
            values,
            seed: Some(seed),
            level: self.level + 1,
        })
    }

    /// CSV dump: `t, beta_1, ..., beta_N`, one row per node.
    pub fn write_csv(&self, w: &mut impl std::io::Write, preamble: &str) -> Result<()> {
        if !preamble.is_empty() {
            writeln!(w, "{preamble}")?;
        }
        let names: Vec<String> = (1..=self.channels()).map(|j| format!("beta_{j}")).collect();
        writeln!(w, "t,{}", names.join(","))?;
        for (k, node) in self.values.iter().enumerate() {
            let row: Vec<String> = node.iter().map(|x| format!("{x}")).collect();
            writeln!(w, "{},{}", self.time.node(k), row.join(","))?;
        }
        Ok(())
    }
}

/// The noise evaluated on a spatial grid along one sampled path. Node
/// fields `W(t_k)` are materialized on demand; storing all of them would
/// waste memory on fine time grids while every consumer only walks them in
/// order.
#[derive(Debug, Clone)]
pub struct PhaseField {
    grid: SpatialGrid,
    time: TimeGrid,
    profiles: Vec<Vec<f64>>,
    amplitudes: Vec<Complex64>,
    beta: Vec<Vec<f64>>,
    conservative: bool,
    constant_profiles: bool,
}

impl PhaseField {
    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn conservative(&self) -> bool {
        self.conservative
    }

    pub fn constant_profiles(&self) -> bool {
        self.constant_profiles
    }

    /// `W(t_k, x)` as a complex field.
    pub fn w_at(&self, k: usize) -> ComplexField {
        self.combine(&self.beta[k])
    }

    /// `W(t_{k+1}) - W(t_k)`.
    pub fn w_increment(&self, k: usize) -> ComplexField {
        let hi = &self.beta[k + 1];
        let lo = &self.beta[k];
        let diff: Vec<f64> = hi.iter().zip(lo).map(|(a, b)| a - b).collect();
        self.combine(&diff)
    }

    fn combine(&self, coeff: &[f64]) -> ComplexField {
        let mut out = ComplexField::zeros(self.grid);
        let values = out.values_mut();
        for ((profile, amp), c) in self.profiles.iter().zip(&self.amplitudes).zip(coeff) {
            let factor = amp * c;
            for (z, e) in values.iter_mut().zip(profile) {
                *z += factor * e;
            }
        }
        out
    }

    /// Pointwise `exp(sign * W(t_k))`.
    pub fn gauge_factor(&self, k: usize, sign: f64) -> ComplexField {
        let mut w = self.w_at(k);
        for z in w.values_mut() {
            *z = (sign * *z).exp();
        }
        w
    }

    /// Pointwise `exp(W(t_{k+1}) - W(t_k))`, the exact one-step noise flow.
    pub fn step_gauge(&self, k: usize) -> ComplexField {
        let mut w = self.w_increment(k);
        for z in w.values_mut() {
            *z = z.exp();
        }
        w
    }

    /// `mu(x) = 1/2 sum_j |mu_j|^2 e_j(x)^2`.
    pub fn mu_profile(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (profile, amp) in self.profiles.iter().zip(&self.amplitudes) {
            let a = amp.norm_sqr();
            for (o, v) in out.iter_mut().zip(profile) {
                *o += 0.5 * a * v * v;
            }
        }
        out
    }

    /// First-order coefficients of the rescaled equation at node `k`:
    /// `b = 2 grad W` (one field per axis) and `c = Laplacian W + sum_j
    /// (d_j W)^2`, via spectral derivatives. Constant profiles short-circuit
    /// to exact zeros.
    pub fn lower_order_coeffs(&self, k: usize) -> (Vec<ComplexField>, ComplexField) {
        let d = self.grid.dim();
        if self.constant_profiles {
            return (vec![ComplexField::zeros(self.grid); d], ComplexField::zeros(self.grid));
        }
        let w = self.w_at(k);
        let grads: Vec<ComplexField> = (0..d).map(|axis| spectral::derivative(&w, axis)).collect();
        let mut c = spectral::laplacian(&w);
        {
            let cv = c.values_mut();
            for g in &grads {
                for (cz, gz) in cv.iter_mut().zip(g.values()) {
                    *cz += gz * gz;
                }
            }
        }
        let b = grads
            .into_iter()
            .map(|mut g| {
                g.scale(Complex64::new(2.0, 0.0));
                g
            })
            .collect();
        (b, c)
    }
}
