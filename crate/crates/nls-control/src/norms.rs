//! Discrete Lebesgue norms, inner products, and mixed space-time norms.
//!
//! Spatial integrals are plain grid sums weighted by `dx^d`; time integrals
//! over stored trajectory nodes use trapezoid weights, so a field constant in
//! time has `L^q` in time norm exactly `T^(1/q)` times its spatial norm.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::trajectory::Trajectory;

/// `(sum |f|^p dx^d)^(1/p)`; `p = inf` gives the grid maximum.
pub fn lp_norm(f: &ComplexField, p: f64) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    if p == f64::INFINITY {
        return Ok(f.max_abs());
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParam(format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    let sum: f64 = f.values().iter().map(|z| z.norm().powf(p)).sum();
    Ok((sum * f.grid().cell()).powf(1.0 / p))
}

/// Hermitian pairing `sum f conj(g) dx^d`, conjugate-linear in `g`.
pub fn l2_inner(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    f.check_same_grid(g)?;
    let sum: Complex64 = f.values().iter().zip(g.values()).map(|(a, b)| a * b.conj()).sum();
    Ok(sum * f.grid().cell())
}

/// Real part of [`l2_inner`], the real Hilbert pairing used by the adjoint
/// calculus.
pub fn re_inner(f: &ComplexField, g: &ComplexField) -> Result<f64> {
    Ok(l2_inner(f, g)?.re)
}

/// Mixed-norm specification for trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// Space-time `L^p` over `[0,T] x box`.
    Lp { p: f64 },
    /// `L^q` in time of the spatial `L^p` norm; `q = inf` takes the maximum
    /// over stored nodes.
    LqLp { q: f64, p: f64 },
    /// `L^2` in time of the weighted half-derivative norm
    /// `|<x - xc>^beta <grad>^alpha f|_{L^2}`. Only the gain pair
    /// `alpha = 1/2, beta = -1` and its dual `alpha = -1/2, beta = 1` are
    /// supported.
    LocalSmoothing { alpha: f64, beta: f64, center: [f64; 2] },
    /// Spatial `L^2` norm of the final stored state.
    TerminalL2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub kind: NormKind,
    /// Marks the pair as a claimed Schrodinger-admissible exponent pair;
    /// validation then enforces the scaling relation `2/q = d(1/2 - 1/p)`.
    pub strichartz: bool,
}

impl NormSpec {
    pub fn lp(p: f64) -> Self {
        Self { kind: NormKind::Lp { p }, strichartz: false }
    }

    pub fn lq_lp(q: f64, p: f64) -> Self {
        Self { kind: NormKind::LqLp { q, p }, strichartz: false }
    }

    pub fn strichartz(q: f64, p: f64) -> Self {
        Self { kind: NormKind::LqLp { q, p }, strichartz: true }
    }

    pub fn local_smoothing(center: [f64; 2]) -> Self {
        Self { kind: NormKind::LocalSmoothing { alpha: 0.5, beta: -1.0, center }, strichartz: false }
    }

    pub fn local_smoothing_dual(center: [f64; 2]) -> Self {
        Self { kind: NormKind::LocalSmoothing { alpha: -0.5, beta: 1.0, center }, strichartz: false }
    }

    pub fn terminal_l2() -> Self {
        Self { kind: NormKind::TerminalL2, strichartz: false }
    }

    /// Check exponent ranges, and the Strichartz scaling relation when the
    /// flag is set (to 1e-12, in the given dimension).
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self.kind {
            NormKind::Lp { p } => {
                if !(p >= 1.0) {
                    return Err(Error::NormSpec(format!("p must be >= 1, got {p}")));
                }
                if self.strichartz {
                    return Err(Error::NormSpec("strichartz flag needs a mixed LqLp pair".into()));
                }
            }
            NormKind::LqLp { q, p } => {
                if !(p >= 1.0) || !(q >= 1.0) {
                    return Err(Error::NormSpec(format!("exponents must be >= 1, got q={q} p={p}")));
                }
                if self.strichartz {
                    if q == f64::INFINITY || p == f64::INFINITY {
                        // (inf, 2) is the trivial admissible pair
                        if !(q == f64::INFINITY && p == 2.0) {
                            return Err(Error::NormSpec(format!(
                                "({q}, {p}) is not a valid Strichartz pair"
                            )));
                        }
                    } else {
                        let lhs = 2.0 / q;
                        let rhs = dim as f64 * (0.5 - 1.0 / p);
                        if (lhs - rhs).abs() > 1e-12 {
                            return Err(Error::NormSpec(format!(
                                "scaling violated: 2/q = {lhs} but d(1/2 - 1/p) = {rhs}"
                            )));
                        }
                    }
                }
            }
            NormKind::LocalSmoothing { alpha, beta, .. } => {
                let gain = alpha == 0.5 && beta == -1.0;
                let dual = alpha == -0.5 && beta == 1.0;
                if !gain && !dual {
                    return Err(Error::NormSpec(format!(
                        "only local smoothing orders (1/2, -1) and (-1/2, 1) are supported, got ({alpha}, {beta})"
                    )));
                }
                if self.strichartz {
                    return Err(Error::NormSpec("strichartz flag needs a mixed LqLp pair".into()));
                }
            }
            NormKind::TerminalL2 => {
                if self.strichartz {
                    return Err(Error::NormSpec("strichartz flag needs a mixed LqLp pair".into()));
                }
            }
        }
        Ok(())
    }
}

fn time_lq(traj: &Trajectory, q: f64, spatial: impl Fn(&ComplexField) -> Result<f64>) -> Result<f64> {
    if q == f64::INFINITY {
        let mut sup: f64 = 0.0;
        for f in traj.fields() {
            sup = sup.max(spatial(f)?);
        }
        return Ok(sup);
    }
    let dt = traj.dt_stored();
    let last = traj.len() - 1;
    let mut acc = 0.0;
    for (i, f) in traj.fields().iter().enumerate() {
        let w = if i == 0 || i == last { 0.5 } else { 1.0 };
        acc += w * dt * spatial(f)?.powf(q);
    }
    Ok(acc.powf(1.0 / q))
}

/// Evaluate a validated norm spec on the stored nodes of a trajectory.
pub fn trajectory_norm(traj: &Trajectory, spec: &NormSpec) -> Result<f64> {
    spec.validate(traj.grid().dim())?;
    match spec.kind {
        NormKind::Lp { p } => time_lq(traj, p, |f| lp_norm(f, p)),
        NormKind::LqLp { q, p } => time_lq(traj, q, |f| lp_norm(f, p)),
        NormKind::LocalSmoothing { alpha, beta, center } => time_lq(traj, 2.0, |f| {
            let smoothed = crate::spectral::bessel_smooth(f, alpha);
            let grid = f.grid();
            let mut acc = 0.0;
            for (i, z) in smoothed.values().iter().enumerate() {
                let w = (1.0 + grid.torus_dist_sq(i, center)).powf(beta);
                acc += w * w * z.norm_sqr();
            }
            Ok((acc * grid.cell()).sqrt())
        }),
        NormKind::TerminalL2 => lp_norm(traj.last(), 2.0),
    }
}
