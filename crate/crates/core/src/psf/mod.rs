//! One-dimensional slice functions of the point spread function and the
//! truncated separable kernels assembled from them.
//!
//! The response of a unit reflector at fractional bins `(r0, d0, a0)` is the
//! product `S_R(r - r0) * S_D(d - d0) * S_A(a - a0)` where
//!
//! * `S_R(x) = exp(-x^2 / (2 sigma^2))`,
//! * `S_D(x) = g * max{1 - u, 2 - 4u, 0}` with `u = |x| / s_doppler`,
//! * `S_A` is the magnitude spectrum of the window
//!   `(1 - p) - p cos(2 pi n / (N - 1))`, zero-padded to the azimuth bin count,
//!   centred and normalized to a unit peak. Fractional shifts of `S_A` use
//!   linear interpolation between spectrum samples.

mod kernel;
mod window;

pub use kernel::{psf_kernel, PsfModel, SeparableKernel, Tap};
pub use window::{
    derive_lobe_params, eval_azimuth_profile, fit_window_from_lobes, measure_lobes,
    AzimuthSpectrum, WindowFit, WindowSearch, AZIMUTH_TRUNCATION,
};

/// Range taps extend this many standard deviations from the center bin.
pub const RANGE_TRUNCATION_SIGMAS: f64 = 4.0;

#[inline]
pub fn range_value(sigma: f64, x: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp()
}

/// Piecewise-linear Doppler shape without the `g` factor: `max{1 - u, 2 - 4u, 0}`.
#[inline]
pub fn doppler_shape(u: f64) -> f64 {
    (1.0 - u).max(2.0 - 4.0 * u).max(0.0)
}

#[inline]
pub fn doppler_value(g: f64, s_doppler: f64, x: f64) -> f64 {
    g * doppler_shape(x.abs() / s_doppler)
}

/// Gaussian range profile evaluated at each bin position.
pub fn eval_range_profile(sigma: f64, center: f64, bins: &[f64]) -> Vec<f64> {
    bins.iter().map(|&r| range_value(sigma, r - center)).collect()
}

/// Piecewise-linear Doppler profile evaluated at each bin position.
pub fn eval_doppler_profile(g: f64, s_doppler: f64, center: f64, bins: &[f64]) -> Vec<f64> {
    bins.iter()
        .map(|&d| doppler_value(g, s_doppler, d - center))
        .collect()
}

/// Half-width in bins of the truncated range support.
pub fn range_half_width(sigma: f64) -> i64 {
    (RANGE_TRUNCATION_SIGMAS * sigma).ceil() as i64
}

/// Half-width in bins of the Doppler support.
pub fn doppler_half_width(s_doppler: f64) -> i64 {
    s_doppler.ceil() as i64
}
