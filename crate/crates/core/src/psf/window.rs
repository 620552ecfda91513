use std::ops::RangeInclusive;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::LobeParams;

/// Azimuth taps below this fraction of the peak are dropped from kernels.
pub const AZIMUTH_TRUNCATION: f64 = 1e-4;

/// Normalized, centred magnitude spectrum of the azimuth window.
///
/// `values[pad / 2]` corresponds to zero frequency. The spectrum is scaled so
/// that its largest sample is exactly 1; for tapers `p <= 0.5` the largest
/// sample is the zero-frequency one.
#[derive(Debug, Clone, PartialEq)]
pub struct AzimuthSpectrum {
    n_window: usize,
    p_window: f64,
    values: Vec<f64>,
    truncated: Vec<f64>,
    support: (usize, usize),
}

impl AzimuthSpectrum {
    pub fn new(n_window: usize, p_window: f64, pad: usize) -> Result<Self> {
        if n_window < 3 {
            return Err(Error::InvalidParams(format!(
                "n_window = {n_window} must be >= 3"
            )));
        }
        if !(0.0..1.0).contains(&p_window) {
            return Err(Error::InvalidParams(format!(
                "p_window = {p_window} must lie in [0, 1)"
            )));
        }
        if pad < n_window {
            return Err(Error::PadTooShort {
                pad,
                window: n_window,
            });
        }
        let denom = (n_window - 1) as f64;
        let mut buf: Vec<Complex<f64>> = (0..pad)
            .map(|n| {
                let w = if n < n_window {
                    let phase = 2.0 * std::f64::consts::PI * n as f64 / denom;
                    (1.0 - p_window) - p_window * phase.cos()
                } else {
                    0.0
                };
                Complex::new(w, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(pad).process(&mut buf);

        let half = pad / 2;
        let mut values: Vec<f64> = (0..pad)
            .map(|i| buf[(i + pad - half) % pad].norm())
            .collect();
        let peak = values.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::InvalidParams("window has an all-zero spectrum".into()));
        }
        for v in &mut values {
            *v /= peak;
        }

        let lo = values.iter().position(|&v| v >= AZIMUTH_TRUNCATION).unwrap_or(half);
        let hi = values
            .iter()
            .rposition(|&v| v >= AZIMUTH_TRUNCATION)
            .unwrap_or(half);
        let truncated = values
            .iter()
            .enumerate()
            .map(|(i, &v)| if (lo..=hi).contains(&i) { v } else { 0.0 })
            .collect();
        Ok(Self {
            n_window,
            p_window,
            values,
            truncated,
            support: (lo, hi),
        })
    }

    pub fn n_window(&self) -> usize {
        self.n_window
    }

    pub fn p_window(&self) -> f64 {
        self.p_window
    }

    pub fn pad(&self) -> usize {
        self.values.len()
    }

    /// Index of zero frequency.
    pub fn center(&self) -> usize {
        self.values.len() / 2
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spectrum with samples outside the truncation support zeroed.
    pub fn truncated(&self) -> &[f64] {
        &self.truncated
    }

    /// Inclusive index range kept after truncation.
    pub fn support(&self) -> (usize, usize) {
        self.support
    }

    /// Offsets from the center covered by the truncated spectrum.
    pub fn support_offsets(&self) -> (i64, i64) {
        let c = self.center() as i64;
        (self.support.0 as i64 - c, self.support.1 as i64 - c)
    }

    /// Full spectrum at a fractional offset from the peak.
    pub fn value_at(&self, offset: f64) -> f64 {
        interpolate(&self.values, self.center() as f64 + offset)
    }

    /// Truncated spectrum at a fractional offset from the peak.
    pub fn truncated_at(&self, offset: f64) -> f64 {
        interpolate(&self.truncated, self.center() as f64 + offset)
    }

    /// Truncated spectrum at an integer offset; zero outside the support.
    #[inline]
    pub fn truncated_tap(&self, offset: i64) -> f64 {
        let i = self.center() as i64 + offset;
        if i < 0 || i >= self.truncated.len() as i64 {
            0.0
        } else {
            self.truncated[i as usize]
        }
    }
}

/// Linear interpolation of `samples` at fractional index `t`; zero outside.
fn interpolate(samples: &[f64], t: f64) -> f64 {
    let j = t.floor();
    let frac = t - j;
    let at = |i: f64| -> f64 {
        if i < 0.0 || i >= samples.len() as f64 {
            0.0
        } else {
            samples[i as usize]
        }
    };
    let lo = at(j);
    if frac == 0.0 {
        lo
    } else {
        (1.0 - frac) * lo + frac * at(j + 1.0)
    }
}

/// Normalized azimuth profile of length `pad` with its peak moved to `center`.
pub fn eval_azimuth_profile(
    n_window: usize,
    p_window: f64,
    pad: usize,
    center: f64,
) -> Result<Vec<f64>> {
    if !center.is_finite() {
        return Err(Error::NonFinite("azimuth profile center"));
    }
    let spectrum = AzimuthSpectrum::new(n_window, p_window, pad)?;
    Ok((0..pad)
        .map(|a| spectrum.value_at(a as f64 - center))
        .collect())
}

/// Main-lobe width and sidelobe ratio of the window spectrum.
pub fn derive_lobe_params(n_window: usize, p_window: f64, pad: usize) -> Result<LobeParams> {
    let spectrum = AzimuthSpectrum::new(n_window, p_window, pad)?;
    measure_lobes(spectrum.values())
}

/// Measures `(Rs, lambda)` on a sampled beam profile.
///
/// The main lobe is the lobe around the largest sample, bounded by the first
/// local minimum on each side. Null positions are refined to sub-bin accuracy
/// by fitting a symmetric V through the minimum and its neighbours; peak values
/// are refined with a parabola through three samples. `Rs` is the distance
/// between the refined nulls and `lambda` the largest refined sample outside
/// the main lobe over the refined main peak. A side that runs into the edge of
/// the profile without a null mirrors the opposite side; a profile with no
/// sidelobes reports `lambda = 0`.
pub fn measure_lobes(profile: &[f64]) -> Result<LobeParams> {
    if profile.len() < 3 {
        return Err(Error::InvalidInput("beam profile shorter than 3 samples".into()));
    }
    if profile.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("beam profile"));
    }
    let mut peak_idx = 0;
    for (i, &v) in profile.iter().enumerate() {
        if v > profile[peak_idx] {
            peak_idx = i;
        }
    }
    if profile[peak_idx] <= 0.0 {
        return Err(Error::InvalidInput("beam profile has no positive sample".into()));
    }
    let last = profile.len() - 1;

    let mut right = peak_idx;
    while right < last && profile[right + 1] <= profile[right] {
        right += 1;
    }
    let mut left = peak_idx;
    while left > 0 && profile[left - 1] <= profile[left] {
        left -= 1;
    }

    let right_null = (right < last).then(|| refine_null(profile, right));
    let left_null = (left > 0).then(|| refine_null(profile, left));
    let peak_pos = peak_idx as f64;
    let rs = match (left_null, right_null) {
        (Some(l), Some(r)) => r - l,
        (None, Some(r)) => 2.0 * (r - peak_pos),
        (Some(l), None) => 2.0 * (peak_pos - l),
        (None, None) => (last) as f64,
    };

    let peak = refine_peak(profile, peak_idx);
    let mut side_idx = None;
    for i in (0..left).chain(right + 1..=last) {
        if side_idx.is_none_or(|j: usize| profile[i] > profile[j]) {
            side_idx = Some(i);
        }
    }
    let lambda = match side_idx {
        Some(j) => (refine_peak(profile, j) / peak).min(peak_ratio_cap()),
        None => 0.0,
    };
    LobeParams::new(rs, lambda.max(0.0)).map_err(|_| {
        Error::InvalidParams(format!(
            "beam has no dominant main lobe (sidelobe ratio {lambda})"
        ))
    })
}

// Sidelobes that equal the main lobe are reported as degenerate by LobeParams.
fn peak_ratio_cap() -> f64 {
    1.0
}

fn refine_null(profile: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= profile.len() {
        return i as f64;
    }
    let (ym, y0, yp) = (profile[i - 1], profile[i], profile[i + 1]);
    if ym >= yp {
        let slope = ym - y0;
        if slope > 0.0 {
            i as f64 + (y0 / slope).min(0.5)
        } else {
            i as f64
        }
    } else {
        let slope = yp - y0;
        if slope > 0.0 {
            i as f64 - (y0 / slope).min(0.5)
        } else {
            i as f64
        }
    }
}

fn refine_peak(profile: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= profile.len() {
        return profile[i];
    }
    let (ym, y0, yp) = (profile[i - 1], profile[i], profile[i + 1]);
    let curvature = ym - 2.0 * y0 + yp;
    if curvature >= 0.0 {
        y0
    } else {
        y0 - (yp - ym) * (yp - ym) / (8.0 * curvature)
    }
}

/// Candidate window lengths and tapers for inverse lobe fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSearch {
    pub n_values: Vec<usize>,
    pub p_values: Vec<f64>,
}

impl WindowSearch {
    pub fn new(n_values: impl IntoIterator<Item = usize>, p_values: impl IntoIterator<Item = f64>) -> Self {
        Self {
            n_values: n_values.into_iter().collect(),
            p_values: p_values.into_iter().collect(),
        }
    }

    pub fn from_range(n: RangeInclusive<usize>, p_values: &[f64]) -> Self {
        Self::new(n, p_values.iter().copied())
    }

    /// Sorted, de-duplicated candidate pairs, smaller `N` first then smaller `p`.
    pub fn candidates(&self) -> Vec<(usize, f64)> {
        let mut ns = self.n_values.clone();
        ns.sort_unstable();
        ns.dedup();
        let mut ps: Vec<f64> = self.p_values.iter().copied().filter(|p| p.is_finite()).collect();
        ps.sort_by(|a, b| a.total_cmp(b));
        ps.dedup();
        ns.iter()
            .flat_map(|&n| ps.iter().map(move |&p| (n, p)))
            .collect()
    }
}

impl Default for WindowSearch {
    /// `N` in 3..=16 and `p` in 0.00..=0.50 with step 0.05.
    fn default() -> Self {
        Self::new(3..=16, (0..=10).map(|i| i as f64 * 0.05))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFit {
    pub n_window: usize,
    pub p_window: f64,
    /// Squared relative error of `(Rs, lambda)` at the chosen point.
    pub error: f64,
}

/// Grid search for the window whose lobes best match `target`.
///
/// Minimizes the squared relative error of `Rs` and `lambda`; ties resolve to
/// the smaller `N`, then the smaller `p`. Candidates that cannot be evaluated
/// at this pad length are skipped.
pub fn fit_window_from_lobes(
    target: &LobeParams,
    pad: usize,
    search: &WindowSearch,
) -> Result<WindowFit> {
    let candidates = search.candidates();
    if candidates.is_empty() {
        return Err(Error::InvalidInput("empty window search range".into()));
    }
    let lambda_scale = target.lambda.max(1e-3);
    let mut best: Option<WindowFit> = None;
    for (n, p) in candidates {
        let Ok(lobes) = derive_lobe_params(n, p, pad) else {
            continue;
        };
        let er = (lobes.rs - target.rs) / target.rs;
        let el = (lobes.lambda - target.lambda) / lambda_scale;
        let error = er * er + el * el;
        if best.is_none_or(|b| error < b.error) {
            best = Some(WindowFit {
                n_window: n,
                p_window: p,
                error,
            });
        }
    }
    best.ok_or_else(|| {
        Error::InvalidInput(format!("no window candidate is valid for pad length {pad}"))
    })
}
