//! Pointwise linearization of the power nonlinearity and the 2x2 rotation
//! sub-step built from it.
//!
//! The map `F(z) = |z|^(alpha-1) z` is real-differentiable with
//! `dF(z)[w] = h1 w + h2 conj(w)` where
//!
//! ```text
//! h1 = (alpha+1)/2 |z|^(alpha-1)          (real)
//! h2 = (alpha-1)/2 |z|^(alpha-3) z^2      (complex, 0 at z = 0)
//! ```
//!
//! `|h2| <= h1` pointwise. An optional smooth cutoff `g(|z|/n)` (1 on
//! `[0,1]`, 0 from 2 on) tames large amplitudes; the truncated coefficients
//! obey `|h1| + |h2| <= min(alpha 2^(alpha-1) n^(alpha-1), alpha |z|^(alpha-1))`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::amp_pow;
use crate::grid::ComplexField;

/// Smooth amplitude cutoff scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevel(pub f64);

impl TruncationLevel {
    pub fn validate(&self) -> Result<()> {
        if !(self.0 > 0.0) || !self.0.is_finite() {
            return Err(Error::InvalidParam(format!(
                "truncation level must be positive, got {}",
                self.0
            )));
        }
        Ok(())
    }
}

/// `exp(-1/t)`-based bridge: 0 below 0, 1 above 1, smooth in between.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Radial cutoff: 1 on `[0,1]`, 0 on `[2, inf)`.
pub fn radial_cutoff(r: f64) -> f64 {
    smooth_step(2.0 - r)
}

/// Coefficients of the real-linear map `w -> diag w + offdiag conj(w)`
/// obtained by differentiating the nonlinearity along a state.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub diag: Vec<f64>,
    pub offdiag: Vec<Complex64>,
}

pub fn linearize(state: &ComplexField, alpha: f64, trunc: Option<TruncationLevel>) -> Result<Linearization> {
    if !(alpha >= 1.0) {
        return Err(Error::InvalidParam(format!("nonlinearity power must be >= 1, got {alpha}")));
    }
    if let Some(t) = trunc {
        t.validate()?;
    }
    let n = state.values().len();
    let mut diag = Vec::with_capacity(n);
    let mut offdiag = Vec::with_capacity(n);
    for z in state.values() {
        let amp = amp_pow(*z, alpha - 1.0);
        let mut h1 = 0.5 * (alpha + 1.0) * amp;
        // |z|^(alpha-3) z^2 written as |z|^(alpha-1) (z/|z|)^2 stays finite
        // for every alpha >= 1
        let nsq = z.norm_sqr();
        let mut h2 = if nsq == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            0.5 * (alpha - 1.0) * amp * (z * z) / nsq
        };
        if let Some(TruncationLevel(level)) = trunc {
            let g = radial_cutoff(nsq.sqrt() / level);
            h1 *= g;
            h2 *= g;
        }
        diag.push(h1);
        offdiag.push(h2);
    }
    Ok(Linearization { diag, offdiag })
}

/// Per-point generator data of the phase-rotation sub-step for the linearized
/// equation `i dw/dt = c w + h conj(w)` with `c` real:
///
/// ```text
/// d/dt [Re w]   [ h_i       c - h_r ] [Re w]
///      [Im w] = [ -(c+h_r)  -h_i    ] [Im w]
/// ```
///
/// The matrix is traceless with `A^2 = (|h|^2 - c^2) I`, so its exponential
/// has the closed form used below; the oscillatory and hyperbolic branches
/// meet continuously at `|h| = |c|`.
#[derive(Debug, Clone)]
pub(crate) struct RotationCoeffs {
    c: Vec<f64>,
    h: Vec<Complex64>,
}

impl RotationCoeffs {
    /// `c = lambda h1 + pot`, `h = lambda h2`.
    pub fn new(lin: &Linearization, lambda: f64, pot: &[f64]) -> Self {
        let c = lin.diag.iter().zip(pot).map(|(h1, p)| lambda * h1 + p).collect();
        let h = lin.offdiag.iter().map(|h2| lambda * h2).collect();
        Self { c, h }
    }

    #[inline]
    fn factors(c: f64, h: Complex64, tau: f64) -> (f64, f64) {
        let disc = c * c - h.norm_sqr();
        if disc > 0.0 {
            let w = disc.sqrt();
            ((w * tau).cos(), (w * tau).sin() / w)
        } else if disc < 0.0 {
            let k = (-disc).sqrt();
            ((k * tau).cosh(), (k * tau).sinh() / k)
        } else {
            (1.0, tau)
        }
    }

    /// Apply `exp(tau A)` pointwise, in place.
    pub fn apply(&self, field: &mut ComplexField, tau: f64) {
        for ((z, c), h) in field.values_mut().iter_mut().zip(&self.c).zip(&self.h) {
            let (cos_, s) = Self::factors(*c, *h, tau);
            let (a, b) = (z.re, z.im);
            let da = h.im * a + (c - h.re) * b;
            let db = -(c + h.re) * a - h.im * b;
            *z = Complex64::new(cos_ * a + s * da, cos_ * b + s * db);
        }
    }

    /// Apply the real transpose `exp(tau A)^T = exp(tau A^T)` pointwise, in
    /// place. This is the exact dual of [`apply`] under the real `L^2`
    /// pairing.
    pub fn apply_transposed(&self, field: &mut ComplexField, tau: f64) {
        for ((z, c), h) in field.values_mut().iter_mut().zip(&self.c).zip(&self.h) {
            let (cos_, s) = Self::factors(*c, *h, tau);
            let (a, b) = (z.re, z.im);
            let da = h.im * a - (c + h.re) * b;
            let db = (c - h.re) * a - h.im * b;
            *z = Complex64::new(cos_ * a + s * da, cos_ * b + s * db);
        }
    }
}
