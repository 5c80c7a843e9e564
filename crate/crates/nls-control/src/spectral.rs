//! Fourier-side operations: free Schrodinger flow, fractional smoothing
//! multipliers, spectral derivatives.
//!
//! Convention: the forward transform is unscaled, the inverse carries the
//! full `1/n^d` factor, so `inverse(forward(f)) == f` up to roundoff and
//! Parseval reads `sum |f|^2 = n^-d * sum |fhat|^2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{ComplexField, SpatialGrid};

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

fn transform(grid: SpatialGrid, values: &mut [Complex64], inverse: bool) {
    let n = grid.points();
    let fft = plan(n, inverse);
    match grid.dim() {
        1 => fft.process(values),
        _ => {
            // rows are contiguous; columns via transpose, rows, transpose back
            fft.process(values);
            transpose_square(values, n);
            fft.process(values);
            transpose_square(values, n);
        }
    }
    if inverse {
        let scale = 1.0 / grid.len() as f64;
        for z in values.iter_mut() {
            *z *= scale;
        }
    }
}

fn transpose_square(values: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            values.swap(i * n + j, j * n + i);
        }
    }
}

/// Unscaled forward DFT, in place.
pub fn fft_forward(grid: SpatialGrid, values: &mut [Complex64]) {
    transform(grid, values, false);
}

/// Inverse DFT carrying the `1/n^d` factor, in place.
pub fn fft_inverse(grid: SpatialGrid, values: &mut [Complex64]) {
    transform(grid, values, true);
}

/// Apply a function of `|k|^2` as a Fourier multiplier, in place.
pub fn apply_ksq_multiplier(field: &mut ComplexField, mut m: impl FnMut(f64) -> Complex64) {
    let grid = field.grid();
    fft_forward(grid, field.values_mut());
    {
        let values = field.values_mut();
        for (idx, z) in values.iter_mut().enumerate() {
            *z *= m(grid.ksq(idx));
        }
    }
    fft_inverse(grid, field.values_mut());
}

/// Exact flow of `i dv/dt = Laplacian v` over time `t`: multiplies the mode
/// of wavenumber `k` by `exp(i |k|^2 t)`. A plane wave `exp(ikx)` picks up
/// the phase `exp(i k^2 t)`.
pub fn free_propagate(field: &ComplexField, t: f64) -> ComplexField {
    let mut out = field.clone();
    free_propagate_mut(&mut out, t);
    out
}

pub fn free_propagate_mut(field: &mut ComplexField, t: f64) {
    apply_ksq_multiplier(field, |ksq| Complex64::from_polar(1.0, ksq * t));
}

/// Inhomogeneous smoothing multiplier `(1 + |k|^2)^(s/2)`, the Fourier symbol
/// of `(I - Laplacian)^(s/2)`.
pub fn bessel_smooth(field: &ComplexField, s: f64) -> ComplexField {
    let mut out = field.clone();
    apply_ksq_multiplier(&mut out, |ksq| Complex64::new((1.0 + ksq).powf(s / 2.0), 0.0));
    out
}

/// Spectral partial derivative along `axis` (0 = x, 1 = y).
pub fn derivative(field: &ComplexField, axis: usize) -> ComplexField {
    let grid = field.grid();
    assert!(axis < grid.dim(), "axis {} out of range for dimension {}", axis, grid.dim());
    let mut out = field.clone();
    fft_forward(grid, out.values_mut());
    {
        let values = out.values_mut();
        for (idx, z) in values.iter_mut().enumerate() {
            let k = grid.kvec(idx)[axis];
            *z *= Complex64::new(0.0, k);
        }
    }
    fft_inverse(grid, out.values_mut());
    out
}

/// Spectral Laplacian.
pub fn laplacian(field: &ComplexField) -> ComplexField {
    let mut out = field.clone();
    apply_ksq_multiplier(&mut out, |ksq| Complex64::new(-ksq, 0.0));
    out
}
