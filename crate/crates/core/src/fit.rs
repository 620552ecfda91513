//! Waveform-parameter estimation from slices through isolated peaks.
//!
//! Each reference peak contributes three slices through its nearest bin:
//!
//! * range: a log-domain parabola over the contiguous samples above 10% of the
//!   slice peak gives `sigma` and the fractional range center;
//! * Doppler: the piecewise-linear template is fitted for center, support
//!   scale and amplitude, the amplitude in closed form;
//! * azimuth: every candidate window is fitted as a two-tap interpolated
//!   spectrum and `(N, p)` is the candidate with the least residual summed over
//!   all peaks.
//!
//! The Doppler amplitude equals `g * I * S_R * S_A` at the slice position, so
//! `g` needs the true reflector intensity `I`. Peaks taken from CFAR carry the
//! cell value as intensity, which pins the estimate near 0.5; pass reference
//! points with their synthesis intensities to recover `g`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cube::RadarCube;
use crate::error::{Error, Result};
use crate::params::{LobeParams, WaveformParams};
use crate::psf::{
    derive_lobe_params, doppler_shape, fit_window_from_lobes, measure_lobes, range_half_width,
    AzimuthSpectrum, WindowFit, WindowSearch,
};
use crate::scene::ReflectionPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Median,
    Mean,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "median" => Ok(Aggregation::Median),
            "mean" => Ok(Aggregation::Mean),
            _ => Err(format!("unknown aggregation `{s}`, expected median or mean")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub search: WindowSearch,
    pub aggregation: Aggregation,
    /// Upper end of the plausible sigma range; sizes the range fitting window.
    pub sigma_max: f64,
    /// Search interval for the Doppler support scale.
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            search: WindowSearch::default(),
            aggregation: Aggregation::Median,
            sigma_max: 2.8,
            s_min: 1.0,
            s_max: 4.0,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.sigma_max.is_finite()
            && self.sigma_max > 0.0
            && self.s_min.is_finite()
            && self.s_max.is_finite()
            && 0.0 < self.s_min
            && self.s_min <= self.s_max;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "fit options need sigma_max > 0 and 0 < s_min <= s_max, got {}, {}, {}",
                self.sigma_max, self.s_min, self.s_max
            )));
        }
        Ok(())
    }
}

/// Root-mean-square slice residuals relative to each slice's peak value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResiduals {
    pub range: f64,
    pub doppler: f64,
    pub azimuth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformFit {
    pub params: WaveformParams,
    /// Lobes of the fitted window.
    pub lobes: LobeParams,
    /// Median null-to-null width and sidelobe ratio measured on the slices.
    pub measured_lobes: Option<LobeParams>,
    /// Window chosen from the measured lobes alone.
    pub lobe_window: Option<WindowFit>,
    pub residuals: FitResiduals,
    pub peaks_used: usize,
    pub peaks_total: usize,
}

/// Fits with [`FitOptions::default`].
pub fn fit_waveform_params(
    cube: &RadarCube,
    peaks: &[ReflectionPoint],
    pad_length: usize,
) -> Result<WaveformFit> {
    fit_waveform_params_with(cube, peaks, pad_length, &FitOptions::default())
}

struct PeakSlices {
    bin: [usize; 3],
    intensity: f64,
    range: Vec<f64>,
    doppler: Vec<f64>,
    azimuth: Vec<f64>,
}

pub fn fit_waveform_params_with(
    cube: &RadarCube,
    peaks: &[ReflectionPoint],
    pad_length: usize,
    opts: &FitOptions,
) -> Result<WaveformFit> {
    opts.validate()?;
    let [nr, nd, _] = cube.dims();
    let hw_r = range_half_width(opts.sigma_max) as usize;
    let hw_d = opts.s_max.ceil() as usize;

    let bins: Vec<[usize; 3]> = peaks
        .iter()
        .map(|p| {
            let (r, d, a) = p.nearest_bin(cube.grid());
            [r, d, a]
        })
        .collect();
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by_key(|&i| bins[i]);

    let mut slices = Vec::new();
    for &i in &order {
        let [r, d, a] = bins[i];
        let intensity = peaks[i].intensity;
        if intensity.is_nan() || intensity <= 0.0 || cube.get(r, d, a) <= 0.0 {
            continue;
        }
        if r < hw_r || r + hw_r >= nr {
            continue;
        }
        let isolated = bins.iter().enumerate().all(|(j, b)| {
            j == i || b[0].abs_diff(r) > 2 * hw_r || b[1].abs_diff(d) > 2 * hw_d
        });
        if !isolated {
            continue;
        }
        let doppler_lo = d.saturating_sub(hw_d + 1);
        let doppler_hi = (d + hw_d + 1).min(nd - 1);
        slices.push(PeakSlices {
            bin: [r, d, a],
            intensity,
            range: (r - hw_r..=r + hw_r).map(|rr| cube.get(rr, d, a)).collect(),
            doppler: (doppler_lo..=doppler_hi).map(|dd| cube.get(r, dd, a)).collect(),
            azimuth: cube.row(r, d).to_vec(),
        });
    }

    let mut sigmas = Vec::new();
    let mut range_res = Vec::new();
    let mut range_centers = Vec::new();
    let mut kept = Vec::new();
    for (k, s) in slices.iter().enumerate() {
        if let Some(fit) = fit_range(&s.range) {
            sigmas.push(fit.sigma);
            range_res.push(fit.rms);
            range_centers.push((s.bin[0] - hw_r) as f64 + fit.center);
            kept.push(k);
        }
    }
    if kept.is_empty() {
        return Err(Error::InsufficientIsolatedPeaks(format!(
            "none of {} peaks is isolated and fittable",
            peaks.len()
        )));
    }
    let slices: Vec<&PeakSlices> = kept.iter().map(|&k| &slices[k]).collect();

    let window = fit_azimuth(&slices, pad_length, &opts.search)?;
    let spectrum = AzimuthSpectrum::new(window.n_window, window.p_window, pad_length)?;

    let mut gs = Vec::new();
    let mut ss = Vec::new();
    let mut doppler_res = Vec::new();
    let sigma = aggregate(&sigmas, opts.aggregation);
    for (k, s) in slices.iter().enumerate() {
        let dfit = fit_doppler(&s.doppler, opts.s_min, opts.s_max);
        let az = &window.per_peak[k];
        let [r, _, a] = s.bin;
        let (f, u, v) = (az.f, az.u, az.v);
        let att = (u * spectrum.truncated_tap(a as i64 - f) + v * spectrum.truncated_tap(a as i64 - f - 1))
            / (u + v);
        let dx = r as f64 - range_centers[k];
        let range_att = (-(dx * dx) / (2.0 * sigma * sigma)).exp();
        let denom = s.intensity * range_att * att;
        if denom > 0.0 && dfit.amplitude > 0.0 {
            gs.push(dfit.amplitude / denom);
            ss.push(dfit.scale);
            doppler_res.push(dfit.rms);
        }
    }
    if gs.is_empty() {
        return Err(Error::InsufficientIsolatedPeaks(format!(
            "no Doppler slice could be fitted among {} isolated peaks",
            slices.len()
        )));
    }

    let params = WaveformParams::new(
        sigma,
        aggregate(&gs, opts.aggregation),
        window.n_window,
        window.p_window,
        aggregate(&ss, opts.aggregation),
    )?;
    let lobes = derive_lobe_params(window.n_window, window.p_window, pad_length)?;

    let measured: Vec<LobeParams> = slices
        .iter()
        .filter_map(|s| measure_lobes(&s.azimuth).ok())
        .collect();
    let measured_lobes = if measured.is_empty() {
        None
    } else {
        let rs: Vec<f64> = measured.iter().map(|l| l.rs).collect();
        let lambda: Vec<f64> = measured.iter().map(|l| l.lambda).collect();
        LobeParams::new(
            aggregate(&rs, opts.aggregation),
            aggregate(&lambda, opts.aggregation),
        )
        .ok()
    };
    let lobe_window = measured_lobes
        .as_ref()
        .and_then(|l| fit_window_from_lobes(l, pad_length, &opts.search).ok());

    Ok(WaveformFit {
        params,
        lobes,
        measured_lobes,
        lobe_window,
        residuals: FitResiduals {
            range: rms(&range_res),
            doppler: rms(&doppler_res),
            azimuth: window.rms,
        },
        peaks_used: slices.len(),
        peaks_total: peaks.len(),
    })
}

/// Greedy selection of fitting peaks from raw detections: strongest first,
/// dropping any peak within the isolation window of a stronger kept peak and
/// any peak weaker than `floor_ratio` times the strongest. Azimuth sidelobes
/// share the range and Doppler bins of their main lobe and are dropped.
pub fn select_isolated_peaks(
    detections: &[ReflectionPoint],
    opts: &FitOptions,
    floor_ratio: f64,
) -> Vec<ReflectionPoint> {
    let hw_r = 2.0 * range_half_width(opts.sigma_max) as f64;
    let hw_d = 2.0 * opts.s_max.ceil();
    let mut sorted = detections.to_vec();
    sorted.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    let floor = sorted.first().map_or(0.0, |p| floor_ratio * p.intensity);
    let mut kept: Vec<ReflectionPoint> = Vec::new();
    for p in sorted {
        if p.intensity < floor {
            break;
        }
        let clear = kept.iter().all(|k| {
            (k.r_bin - p.r_bin).abs() > hw_r || (k.d_bin - p.d_bin).abs() > hw_d
        });
        if clear {
            kept.push(p);
        }
    }
    kept
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Median or mean of a non-empty slice.
pub fn aggregate(values: &[f64], how: Aggregation) -> f64 {
    match how {
        Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Aggregation::Median => {
            let mut v = values.to_vec();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            }
        }
    }
}

struct RangeFit {
    sigma: f64,
    /// Fractional center as an index into the slice.
    center: f64,
    rms: f64,
}

/// Parabola through `ln y` on the contiguous run above 10% of the slice
/// maximum, weighted by `y^2` so that the low tail, where additive noise is
/// largest relative to the signal, carries little weight.
fn fit_range(slice: &[f64]) -> Option<RangeFit> {
    let (peak_idx, &peak) = slice
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal))?;
    if peak.is_nan() || peak <= 0.0 {
        return None;
    }
    let floor = 0.1 * peak;
    let mut lo = peak_idx;
    while lo > 0 && slice[lo - 1] > floor {
        lo -= 1;
    }
    let mut hi = peak_idx;
    while hi + 1 < slice.len() && slice[hi + 1] > floor {
        hi += 1;
    }
    if hi - lo < 2 {
        return None;
    }
    // center x on the peak for conditioning
    let xs: Vec<f64> = (lo..=hi).map(|i| i as f64 - peak_idx as f64).collect();
    let ys: Vec<f64> = (lo..=hi).map(|i| slice[i].ln()).collect();
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for ((&x, &y), i) in xs.iter().zip(&ys).zip(lo..=hi) {
        let w = slice[i] * slice[i];
        let row = [1.0, x, x * x];
        for i in 0..3 {
            aty[i] += w * row[i] * y;
            for j in 0..3 {
                ata[i][j] += w * row[i] * row[j];
            }
        }
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| ata[i][j]);
    let coef = m.lu().solve(&nalgebra::Vector3::from(aty))?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    if c2.is_nan() || c2 >= 0.0 {
        return None;
    }
    let sigma = (-1.0 / (2.0 * c2)).sqrt();
    let offset = -c1 / (2.0 * c2);
    let amp = (c0 - c1 * c1 / (4.0 * c2)).exp();
    let mut sq = 0.0;
    for (i, &y) in slice.iter().enumerate() {
        let x = i as f64 - peak_idx as f64 - offset;
        let model = amp * (-(x * x) / (2.0 * sigma * sigma)).exp();
        sq += ((y - model) / peak).powi(2);
    }
    Some(RangeFit {
        sigma,
        center: peak_idx as f64 + offset,
        rms: (sq / slice.len() as f64).sqrt(),
    })
}

struct DopplerFit {
    amplitude: f64,
    scale: f64,
    rms: f64,
}

/// Template `A * shape(|d - c| / s)` over `slice`; returns `(A, residual)`.
fn doppler_residual(slice: &[f64], center: f64, scale: f64) -> (f64, f64) {
    let mut fy = 0.0;
    let mut ff = 0.0;
    for (i, &y) in slice.iter().enumerate() {
        let f = doppler_shape((i as f64 - center).abs() / scale);
        fy += f * y;
        ff += f * f;
    }
    if ff == 0.0 {
        return (0.0, slice.iter().map(|y| y * y).sum());
    }
    let amp = (fy / ff).max(0.0);
    let res = slice
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = doppler_shape((i as f64 - center).abs() / scale);
            (y - amp * f).powi(2)
        })
        .sum();
    (amp, res)
}

/// Grid search over center and scale followed by a shrinking pattern search.
fn fit_doppler(slice: &[f64], s_min: f64, s_max: f64) -> DopplerFit {
    let (peak_idx, peak) = slice
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let mut best = (f64::INFINITY, peak_idx as f64, s_min);
    let steps = ((s_max - s_min) / 0.05).ceil().max(1.0) as usize;
    for ci in 0..=20 {
        let c = peak_idx as f64 - 0.5 + ci as f64 * 0.05;
        for si in 0..=steps {
            let s = (s_min + si as f64 * 0.05).min(s_max);
            let (_, res) = doppler_residual(slice, c, s);
            if res < best.0 {
                best = (res, c, s);
            }
        }
    }
    let (mut res, mut c, mut s) = best;
    let mut step = 0.025;
    while step > 1e-9 {
        let mut improved = false;
        for (dc, ds) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (nc, ns) = (c + dc, (s + ds).clamp(s_min, s_max));
            let (_, nres) = doppler_residual(slice, nc, ns);
            if nres < res {
                (res, c, s) = (nres, nc, ns);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let (amplitude, res) = doppler_residual(slice, c, s);
    let scale_ref = if peak > 0.0 { peak } else { 1.0 };
    DopplerFit {
        amplitude,
        scale: s,
        rms: (res / slice.len() as f64).sqrt() / scale_ref,
    }
}

/// Two-tap decomposition of one azimuth row: `u K(a - f) + v K(a - f - 1)`.
#[derive(Debug, Clone, Copy)]
struct AzimuthTaps {
    f: i64,
    u: f64,
    v: f64,
    residual: f64,
}

fn fit_row(row: &[f64], spectrum: &AzimuthSpectrum, peak: usize) -> AzimuthTaps {
    let norm: f64 = row.iter().map(|y| y * y).sum();
    let mut best = AzimuthTaps {
        f: peak as i64,
        u: 0.0,
        v: 0.0,
        residual: f64::INFINITY,
    };
    for f in [peak as i64 - 1, peak as i64] {
        if f < 0 {
            continue;
        }
        let b1 = |a: usize| spectrum.truncated_tap(a as i64 - f);
        let b2 = |a: usize| spectrum.truncated_tap(a as i64 - f - 1);
        let (mut s11, mut s12, mut s22, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (a, &y) in row.iter().enumerate() {
            let (p, q) = (b1(a), b2(a));
            s11 += p * p;
            s12 += p * q;
            s22 += q * q;
            y1 += p * y;
            y2 += q * y;
        }
        let det = s11 * s22 - s12 * s12;
        let (u, v) = if det.abs() > 1e-12 * s11 * s22 {
            ((y1 * s22 - y2 * s12) / det, (y2 * s11 - y1 * s12) / det)
        } else {
            (y1 / s11, 0.0)
        };
        let residual = row
            .iter()
            .enumerate()
            .map(|(a, &y)| (y - u * b1(a) - v * b2(a)).powi(2))
            .sum::<f64>()
            / norm;
        if residual < best.residual {
            best = AzimuthTaps { f, u, v, residual };
        }
    }
    best
}

struct AzimuthChoice {
    n_window: usize,
    p_window: f64,
    per_peak: Vec<AzimuthTaps>,
    rms: f64,
}

/// Candidate window minimizing the summed normalized row residual.
fn fit_azimuth(
    slices: &[&PeakSlices],
    pad_length: usize,
    search: &WindowSearch,
) -> Result<AzimuthChoice> {
    let mut best: Option<(f64, AzimuthChoice)> = None;
    for (n, p) in search.candidates() {
        let Ok(spectrum) = AzimuthSpectrum::new(n, p, pad_length) else {
            continue;
        };
        let per_peak: Vec<AzimuthTaps> = slices
            .iter()
            .map(|s| fit_row(&s.azimuth, &spectrum, s.bin[2]))
            .collect();
        let total: f64 = per_peak.iter().map(|t| t.residual).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            let rms = (total / per_peak.len() as f64).sqrt();
            best = Some((
                total,
                AzimuthChoice {
                    n_window: n,
                    p_window: p,
                    per_peak,
                    rms,
                },
            ));
        }
    }
    best.map(|(_, c)| c).ok_or_else(|| {
        Error::InvalidInput(format!(
            "no window candidate is valid for pad length {pad_length}"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadarGrid;
    use crate::synthesis::synthesize_fast;

    fn grid() -> RadarGrid {
        RadarGrid::new(64, 16, 64, 0.2, 0.13, 1.5).unwrap()
    }

    fn two_peaks() -> Vec<ReflectionPoint> {
        vec![
            ReflectionPoint::scene(14.3, 7.6, 30.2, 1.0, Some(1)).unwrap(),
            ReflectionPoint::scene(45.8, 8.3, 25.7, 0.7, Some(2)).unwrap(),
        ]
    }

    #[test]
    fn recovers_default_params() {
        let truth = WaveformParams::new(2.6, 0.6, 8, 0.1, 2.0).unwrap();
        let pts = two_peaks();
        let cube = synthesize_fast(&pts, &truth, &grid()).unwrap();
        let fit = fit_waveform_params(&cube, &pts, 64).unwrap();
        let p = fit.params;
        assert_eq!((p.n_window(), p.p_window()), (8, 0.1));
        assert!((p.sigma() - 2.6).abs() < 1e-6, "{}", p.sigma());
        assert!((p.g() - 0.6).abs() < 1e-6, "{}", p.g());
        assert!((p.s_doppler() - 2.0).abs() < 1e-4, "{}", p.s_doppler());
        assert_eq!(fit.peaks_used, 2);
        assert_eq!(fit.lobes, derive_lobe_params(8, 0.1, 64).unwrap());
        assert!(fit.residuals.azimuth < 1e-6);
    }

    #[test]
    fn crowded_peaks_are_rejected() {
        let truth = WaveformParams::default();
        let pts = vec![
            ReflectionPoint::scene(20.0, 8.0, 30.0, 1.0, None).unwrap(),
            ReflectionPoint::scene(24.0, 8.0, 40.0, 1.0, None).unwrap(),
        ];
        let cube = synthesize_fast(&pts, &truth, &grid()).unwrap();
        let err = fit_waveform_params(&cube, &pts, 64).unwrap_err();
        assert!(matches!(err, Error::InsufficientIsolatedPeaks(_)));
        assert!(err.to_string().contains("insufficient isolated peaks"));
        assert!(fit_waveform_params(&cube, &[], 64).is_err());
    }

    #[test]
    fn median_and_mean() {
        assert_eq!(aggregate(&[3.0, 1.0, 2.0], Aggregation::Median), 2.0);
        assert_eq!(aggregate(&[4.0, 1.0, 2.0, 3.0], Aggregation::Median), 2.5);
        assert_eq!(aggregate(&[1.0, 2.0, 6.0], Aggregation::Mean), 3.0);
    }

    #[test]
    fn range_fit_is_exact_on_gaussian() {
        let slice: Vec<f64> = (0..25)
            .map(|i| 0.8 * (-((i as f64 - 12.3f64).powi(2)) / (2.0 * 2.45 * 2.45)).exp())
            .collect();
        let fit = fit_range(&slice).unwrap();
        assert!((fit.sigma - 2.45).abs() < 1e-9);
        assert!((fit.center - 12.3).abs() < 1e-9);
    }

    #[test]
    fn peak_selection_drops_sidelobes_and_noise() {
        let p = |r: f64, d: f64, a: f64, i: f64| ReflectionPoint::scene(r, d, a, i, None).unwrap();
        let dets = [
            p(20.0, 8.0, 30.0, 1.0),
            p(20.0, 8.0, 50.0, 0.2),
            p(50.0, 8.0, 10.0, 0.6),
            p(60.0, 2.0, 10.0, 0.05),
            p(40.0, 8.0, 12.0, 0.5),
        ];
        let kept = select_isolated_peaks(&dets, &FitOptions::default(), 0.1);
        assert_eq!(kept, vec![dets[0], dets[2]]);
    }
}
