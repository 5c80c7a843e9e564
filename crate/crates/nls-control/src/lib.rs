//! Numerical toolkit for bilinear optimal control of deterministic and
//! stochastic nonlinear Schrodinger equations on periodic boxes.
//!
//! The state solver is a Strang split-step spectral scheme with an exact
//! pointwise treatment of multiplicative phase noise. Gradients of the
//! tracking objective come from either an exact discrete adjoint or a
//! time-reversed integration of the backward Hamilton-Pontryagin system, and
//! the optimizer projects onto compact convex control sets. Diagnostics
//! cover p-variation norms, a Besov-type embedding check, and the temporal
//! regularity of gauge-transformed trajectories.

pub mod adjoint;
pub mod config;
pub mod control;
pub mod error;
pub mod grid;
pub mod io;
pub mod linearize;
pub mod forward;
pub mod noise;
pub mod objective;
pub mod optimize;
pub mod pvar;
pub mod scenario;
pub mod norms;
pub mod spectral;
pub mod tangent;
pub mod timereg;
pub mod trajectory;
pub mod util;

pub use error::{Error, Result};
