//! Discrete p-variation and the Besov-embedding consistency check.
//!
//! A sampled path is a finite sequence of values with a metric chosen by the
//! caller, so scalar noise components and L^2-valued trajectory samples run
//! through the same machinery. The p-variation of the samples is
//!
//! ```text
//! vp(v)^p = max over index subsequences of  sum_l d(v_{i_l}, v_{i_{l+1}})^p
//! ```
//!
//! and the maximum is attained on a subsequence containing both endpoints,
//! since prepending or appending an index only adds a nonnegative term.
//! The norm is a proxy: it controls the restriction norms used in the
//! pathwise well-posedness theory (which also constrain oscillation between
//! sample times), so a finite value here is evidence, not proof, of the
//! regularity those norms measure.

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::norms::lp_norm;
use crate::trajectory::Trajectory;

/// Values with a caller-chosen metric. Construction fixes the distance
/// callback; the diagnostics only ever see pairwise distances.
pub struct SampledPath<T> {
    values: Vec<T>,
    dist: Box<dyn Fn(&T, &T) -> f64>,
}

impl<T> SampledPath<T> {
    pub fn with_metric(values: Vec<T>, dist: impl Fn(&T, &T) -> f64 + 'static) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParam("sampled path needs at least one value".into()));
        }
        Ok(Self { values, dist: Box::new(dist) })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        (self.dist)(&self.values[i], &self.values[j])
    }
}

impl SampledPath<f64> {
    pub fn scalars(values: Vec<f64>) -> Result<Self> {
        Self::with_metric(values, |a, b| (a - b).abs())
    }
}

impl SampledPath<ComplexField> {
    /// Stored trajectory nodes with the spatial L^2 distance.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let values: Vec<ComplexField> = traj.fields().to_vec();
        Self::with_metric(values, |a, b| {
            lp_norm(&a.sub(b).expect("trajectory nodes share one grid"), 2.0)
                .expect("L^2 norm of a stored field is finite")
        })
    }
}

fn check_order(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidParam(format!("variation order must satisfy p >= 1, got {p}")));
    }
    Ok(())
}

/// p-variation of the sample sequence.
///
/// Dynamic program over the last chosen index: `best[i]` is the largest
/// attainable power sum over subsequences ending at `i`. Runs in O(M^2)
/// distance evaluations. A single sample has no increments and is rejected.
pub fn vp_norm<T>(path: &SampledPath<T>, p: f64) -> Result<f64> {
    check_order(p)?;
    let m = path.len() - 1;
    if m == 0 {
        return Err(Error::InvalidParam(
            "p-variation needs at least two samples".into(),
        ));
    }
    let mut best = vec![0.0f64; m + 1];
    for i in 1..=m {
        let mut b = f64::NEG_INFINITY;
        for j in 0..i {
            let d = path.dist(j, i);
            if !d.is_finite() {
                return Err(Error::NonFinite);
            }
            b = b.max(best[j] + d.powf(p));
        }
        best[i] = b;
    }
    let top = best.iter().cloned().fold(0.0f64, f64::max);
    Ok(top.powf(1.0 / p))
}

/// Largest ratio of a shifted-difference L^p norm to `h^{1/p} vp(v)` over
/// all grid shifts `h = j dt`, together with the embedding verdict.
///
/// With rectangle quadrature the spacing cancels:
///
/// ```text
/// ratio_j = ( sum_{k=0}^{M-j-1} d(v_k, v_{k+j})^p / j )^{1/p} / vp(v)
/// ```
///
/// Grouping the j-step increments by residue class bounds each class sum by
/// `vp^p`, so `ratio_j <= 1` holds exactly for these samples; the accepted
/// threshold `2^{1 + 1/p}` leaves room for quadrature variants. A path with
/// zero variation carries no scale to compare against and passes with ratio
/// zero.
pub fn besov_embedding_check<T>(path: &SampledPath<T>, p: f64) -> Result<(f64, bool)> {
    check_order(p)?;
    let m = path.len() - 1;
    if m == 0 {
        return Err(Error::InvalidParam(
            "embedding check needs at least two samples".into(),
        ));
    }
    let vp = vp_norm(path, p)?;
    if vp == 0.0 {
        return Ok((0.0, true));
    }
    let mut ratio = 0.0f64;
    for j in 1..m {
        let mut acc = 0.0;
        for k in 0..(m - j) {
            acc += path.dist(k, k + j).powf(p);
        }
        ratio = ratio.max((acc / j as f64).powf(1.0 / p) / vp);
    }
    Ok((ratio, ratio <= f64::powf(2.0, 1.0 + 1.0 / p)))
}
