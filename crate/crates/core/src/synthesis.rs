//! Noise sampling and cube synthesis as an intensity-weighted superposition of
//! per-point PSFs.
//!
//! [`synthesize_naive`] evaluates every PSF cell directly and is the oracle.
//! [`synthesize_fast`] produces the same cube by splatting each point's range
//! and Doppler taps onto an azimuth lattice and convolving every touched
//! azimuth row once with the truncated spectrum. A linearly interpolated
//! fractional azimuth shift is identical to a two-tap splat onto the
//! neighbouring integer bins, so the fast path is exact up to rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{RadarCube, ScenePointSet};
use crate::environment::{build_environment_tensor, project_to_bins_with, DEFAULT_RADAR_K};
use crate::error::{Error, Result};
use crate::grid::RadarGrid;
use crate::params::WaveformParams;
use crate::psf::PsfModel;
use crate::scene::{check_points, ActorPoint, PointKind, ReflectionPoint, SensorPose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub count: usize,
    pub intensity_min: f64,
    pub intensity_max: f64,
    pub seed: u64,
    /// Scale intensities by the strongest scene point when synthesizing a scene.
    pub relative: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            count: 2000,
            intensity_min: 0.001,
            intensity_max: 0.05,
            seed: 0,
            relative: true,
        }
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            count: 0,
            ..Self::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.intensity_min, self.intensity_max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite("noise intensity range"));
        }
        if lo < 0.0 || lo > hi {
            return Err(Error::InvalidInput(format!(
                "noise intensity range [{lo}, {hi}] must satisfy 0 <= min <= max"
            )));
        }
        Ok(())
    }
}

/// Noise reflectors with uniform fractional bins and log-uniform intensities.
///
/// A zero lower bound makes the intensity uniform over `[0, max]`.
pub fn sample_noise_points(grid: &RadarGrid, cfg: &NoiseConfig) -> Result<Vec<ReflectionPoint>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.intensity_min, cfg.intensity_max);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let draw_bin = |rng: &mut ChaCha8Rng, n: usize| -> f64 {
        let v: f64 = rng.random_range(0.0..n as f64);
        // guard against rounding up to the exclusive bound
        v.min((n as f64).next_down())
    };
    let mut out = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let r = draw_bin(&mut rng, grid.n_range());
        let d = draw_bin(&mut rng, grid.n_doppler());
        let a = draw_bin(&mut rng, grid.n_azimuth());
        let u: f64 = rng.random();
        let intensity = if lo == hi {
            lo
        } else if lo == 0.0 {
            u * hi
        } else {
            (ln_lo + u * (ln_hi - ln_lo)).exp().clamp(lo, hi)
        };
        out.push(ReflectionPoint {
            r_bin: r,
            d_bin: d,
            a_bin: a,
            intensity,
            kind: PointKind::Noise,
            actor_id: None,
        });
    }
    Ok(out)
}

/// In-bounds bins `base - hw ..= base + hw` around the nearest bin to `center`.
fn axis_span(center: f64, hw: i64, n: usize) -> std::ops::RangeInclusive<i64> {
    let base = center.round() as i64;
    (base - hw).max(0)..=(base + hw).min(n as i64 - 1)
}

/// Direct per-cell evaluation of every point's PSF, accumulated in list order.
pub fn synthesize_naive(
    points: &[ReflectionPoint],
    params: &WaveformParams,
    grid: &RadarGrid,
) -> Result<RadarCube> {
    check_points(points, grid)?;
    let model = PsfModel::new(*params, grid)?;
    let mut values = vec![0.0; grid.len()];
    for p in points {
        for r in axis_span(p.r_bin, model.range_half_width(), grid.n_range()) {
            for d in axis_span(p.d_bin, model.doppler_half_width(), grid.n_doppler()) {
                let row = grid.index(r as usize, d as usize, 0);
                for a in 0..grid.n_azimuth() {
                    let w = model.range_weight(r as f64 - p.r_bin)
                        * model.doppler_weight(d as f64 - p.d_bin)
                        * model.azimuth_weight(a as f64 - p.a_bin);
                    values[row + a] += p.intensity * w;
                }
            }
        }
    }
    Ok(RadarCube::from_vec_unchecked(*grid, values))
}

/// Fast synthesis; matches [`synthesize_naive`] up to floating-point rounding.
///
/// Output is independent of the rayon thread count.
pub fn synthesize_fast(
    points: &[ReflectionPoint],
    params: &WaveformParams,
    grid: &RadarGrid,
) -> Result<RadarCube> {
    check_points(points, grid)?;
    let model = PsfModel::new(*params, grid)?;
    let [nr, nd, na] = grid.dims();
    let stride = na + 1;

    // azimuth lattice per (r, d) row, one extra slot for the upper splat tap
    let mut lattice = vec![0.0; nr * nd * stride];
    let mut touched = vec![false; nr * nd];
    let mut range_w = Vec::new();
    let mut doppler_w = Vec::new();
    for p in points {
        range_w.clear();
        for r in axis_span(p.r_bin, model.range_half_width(), nr) {
            let w = model.range_weight(r as f64 - p.r_bin);
            if w != 0.0 {
                range_w.push((r as usize, w * p.intensity));
            }
        }
        doppler_w.clear();
        for d in axis_span(p.d_bin, model.doppler_half_width(), nd) {
            let w = model.doppler_weight(d as f64 - p.d_bin);
            if w != 0.0 {
                doppler_w.push((d as usize, w));
            }
        }
        let a0 = p.a_bin.floor();
        let phi = p.a_bin - a0;
        let a0 = a0 as usize;
        for &(r, wr) in &range_w {
            for &(d, wd) in &doppler_w {
                let row = r * nd + d;
                let w = wr * wd;
                let base = row * stride + a0;
                lattice[base] += w * (1.0 - phi);
                lattice[base + 1] += w * phi;
                touched[row] = true;
            }
        }
    }

    let spectrum = model.spectrum();
    let (lo, hi) = spectrum.support_offsets();
    let c = spectrum.center() as i64;
    let taps = &spectrum.truncated()[(c + lo) as usize..=(c + hi) as usize];
    let mut values = vec![0.0; grid.len()];
    values
        .par_chunks_mut(na)
        .enumerate()
        .filter(|(row, _)| touched[*row])
        .for_each(|(row, out)| {
            let src = &lattice[row * stride..(row + 1) * stride];
            for (j, &v) in src.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let first = j as i64 + lo;
                let a_lo = first.max(0);
                let a_hi = (j as i64 + hi).min(na as i64 - 1);
                if a_lo > a_hi {
                    continue;
                }
                let k0 = (a_lo - first) as usize;
                let len = (a_hi - a_lo + 1) as usize;
                for (o, &k) in out[a_lo as usize..a_lo as usize + len]
                    .iter_mut()
                    .zip(&taps[k0..k0 + len])
                {
                    *o += v * k;
                }
            }
        });
    Ok(RadarCube::from_vec_unchecked(*grid, values))
}

/// A synthesized scene and the inputs needed to edit or score it.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSynthesis {
    pub cube: RadarCube,
    pub scene_points: ScenePointSet,
    /// Scene points followed by noise points.
    pub points: Vec<ReflectionPoint>,
}

/// Projected actors followed by sampled noise points. Relative noise is
/// scaled by the strongest projected actor.
pub fn scene_and_noise_points(
    actors: &[ActorPoint],
    pose: &SensorPose,
    grid: &RadarGrid,
    noise: &NoiseConfig,
    radar_k: f64,
) -> Result<Vec<ReflectionPoint>> {
    let mut points = project_to_bins_with(actors, pose, grid, radar_k)?;
    let mut noise_points = sample_noise_points(grid, noise)?;
    if noise.relative {
        let scale = points.iter().map(|p| p.intensity).fold(0.0, f64::max);
        if scale > 0.0 {
            for p in &mut noise_points {
                p.intensity *= scale;
            }
        }
    }
    points.extend(noise_points);
    Ok(points)
}

/// Projects actors, adds noise and synthesizes with the fast path.
pub fn synthesize_scene(
    actors: &[ActorPoint],
    pose: &SensorPose,
    grid: &RadarGrid,
    params: &WaveformParams,
    noise: &NoiseConfig,
) -> Result<SceneSynthesis> {
    synthesize_scene_with(actors, pose, grid, params, noise, DEFAULT_RADAR_K)
}

pub fn synthesize_scene_with(
    actors: &[ActorPoint],
    pose: &SensorPose,
    grid: &RadarGrid,
    params: &WaveformParams,
    noise: &NoiseConfig,
    radar_k: f64,
) -> Result<SceneSynthesis> {
    let points = scene_and_noise_points(actors, pose, grid, noise, radar_k)?;
    let (_, scene_points) = build_environment_tensor(&points, grid)?;
    let cube = synthesize_fast(&points, params, grid)?;
    Ok(SceneSynthesis {
        cube,
        scene_points,
        points,
    })
}
