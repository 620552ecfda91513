//! Parameter-sweep dataset generation with a recomputable manifest.
//!
//! Each cube draws `(sigma, g, N, p)` uniformly from the spec's value sets and
//! a noise seed from one master ChaCha8 stream, so a spec, a grid and a seed
//! fix every byte of the output. Random scenes place actors on range slots
//! more than `2 ceil(4 sigma_max)` bins apart so that every actor peak is
//! isolated for fitting.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::RadarCube;
use crate::error::{Error, Result};
use crate::grid::RadarGrid;
use crate::io::cube_file::{encode_cube, Dtype};
use crate::io::formats::{read_json, write_json, SceneFile};
use crate::params::{WaveformParams, DEFAULT_S_DOPPLER};
use crate::psf::range_half_width;
use crate::scene::{ActorPoint, ReflectionPoint, SensorPose};
use crate::environment::DEFAULT_RADAR_K;
use crate::synthesis::{synthesize_scene_with, NoiseConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Noise points per cell of the default configuration: 2000 on 256x64x256.
pub const DEFAULT_NOISE_DENSITY: f64 = 2000.0 / (256.0 * 64.0 * 256.0);

/// A scene count for random scenes, or scene files used in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SceneSource {
    Count(usize),
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub sigma_set: Vec<f64>,
    pub g_set: Vec<f64>,
    pub n_set: Vec<usize>,
    pub p_set: Vec<f64>,
    pub s_doppler: f64,
    pub scenes: SceneSource,
    pub seed: u64,
    /// Random scenes hold between these many actors, capped by the free
    /// range slots of the grid.
    pub actors_min: usize,
    pub actors_max: usize,
    /// Noise points per cube cell; the count is rounded to nearest.
    pub noise_density: f64,
    pub noise_intensity_min: f64,
    pub noise_intensity_max: f64,
    pub radar_k: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            sigma_set: vec![2.4, 2.5, 2.6, 2.7, 2.8],
            g_set: vec![0.5, 0.6, 0.7],
            n_set: vec![6, 7, 8, 9, 10],
            p_set: vec![0.1, 0.2, 0.3],
            s_doppler: DEFAULT_S_DOPPLER,
            scenes: SceneSource::Count(100),
            seed: 0,
            actors_min: 2,
            actors_max: 6,
            noise_density: DEFAULT_NOISE_DENSITY,
            noise_intensity_min: 0.001,
            noise_intensity_max: 0.05,
            radar_k: DEFAULT_RADAR_K,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("dataset spec: {msg}")));
        if self.sigma_set.is_empty()
            || self.g_set.is_empty()
            || self.n_set.is_empty()
            || self.p_set.is_empty()
        {
            return bad("sigma_set, g_set, n_set and p_set must be non-empty".into());
        }
        for &sigma in &self.sigma_set {
            for &g in &self.g_set {
                for &n in &self.n_set {
                    for &p in &self.p_set {
                        WaveformParams::new(sigma, g, n, p, self.s_doppler)?;
                    }
                }
            }
        }
        if self.actors_min == 0 || self.actors_min > self.actors_max {
            return bad(format!(
                "need 1 <= actors_min <= actors_max, got {} and {}",
                self.actors_min, self.actors_max
            ));
        }
        if !self.noise_density.is_finite() || self.noise_density < 0.0 {
            return bad(format!("noise_density = {} must be >= 0", self.noise_density));
        }
        if !self.radar_k.is_finite() || self.radar_k <= 0.0 {
            return bad(format!("radar_k = {} must be > 0", self.radar_k));
        }
        self.noise_template(0).validate()
    }

    pub fn scene_count(&self) -> usize {
        match &self.scenes {
            SceneSource::Count(n) => *n,
            SceneSource::Files(files) => files.len(),
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_set.iter().copied().fold(0.0, f64::max)
    }

    fn noise_template(&self, count: usize) -> NoiseConfig {
        NoiseConfig {
            count,
            intensity_min: self.noise_intensity_min,
            intensity_max: self.noise_intensity_max,
            seed: 0,
            relative: true,
        }
    }
}

/// Everything needed to recompute one cube bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub params: WaveformParams,
    pub scene: SceneFile,
    pub noise: NoiseConfig,
    pub radar_k: f64,
    /// Projected actor reflectors, the ground truth for fitting.
    pub scene_points: Vec<ReflectionPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub grid: RadarGrid,
    pub dtype: Dtype,
    pub spec: DatasetSpec,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        read_json(dir.as_ref().join(MANIFEST_FILE))
    }
}

/// Range slot centers at least `spacing` bins apart with `margin` bins clear
/// of either end.
fn range_slots(n_range: usize, margin: usize, spacing: usize) -> Vec<usize> {
    let mut slots = Vec::new();
    let mut r = margin;
    while r + 1 + margin <= n_range {
        slots.push(r);
        r += spacing;
    }
    slots
}

/// Random actors at isolated range slots, Doppler in the central half of the
/// axis, bearings in the central half of the field of view and intensities in
/// `[0.5, 1]` after the radar equation.
pub fn random_scene(
    rng: &mut impl Rng,
    grid: &RadarGrid,
    n_actors: usize,
    sigma_max: f64,
    radar_k: f64,
) -> Result<SceneFile> {
    let hw = range_half_width(sigma_max) as usize;
    // a fractional jitter below one bin keeps neighbours more than 2 hw apart
    let slots = range_slots(grid.n_range(), hw + 1, 2 * hw + 2);
    if slots.is_empty() {
        return Err(Error::InvalidGrid(format!(
            "{} range bins leave no room for an isolated actor with sigma {sigma_max}",
            grid.n_range()
        )));
    }
    let k = n_actors.min(slots.len());
    let mut chosen: Vec<usize> = sample(rng, slots.len(), k).into_iter().map(|i| slots[i]).collect();
    chosen.sort_unstable();

    let (nd, na) = (grid.n_doppler() as f64, grid.n_azimuth() as f64);
    let mut actors = Vec::with_capacity(k);
    for (i, slot) in chosen.into_iter().enumerate() {
        let r_bin = slot as f64 + rng.random_range(0.0..1.0);
        let d_bin = rng.random_range(0.25 * nd..0.75 * nd);
        let a_bin = rng.random_range(0.25 * na..0.75 * na);
        let intensity = rng.random_range(0.5..=1.0);
        let range = r_bin * grid.range_resolution();
        let bearing = grid.bin_to_bearing(a_bin);
        let v_radial = (d_bin - grid.doppler_center() as f64) * grid.doppler_resolution();
        let (s, c) = bearing.sin_cos();
        actors.push(ActorPoint::new(
            range * c,
            range * s,
            v_radial * c,
            v_radial * s,
            intensity * range.powi(4) / radar_k,
            i as u64 + 1,
        )?);
    }
    Ok(SceneFile {
        sensor_pose: SensorPose::default(),
        actors,
    })
}

fn pick<T: Copy>(rng: &mut impl Rng, set: &[T]) -> T {
    set[rng.random_range(0..set.len())]
}

/// Draws every entry from the master stream without synthesizing.
pub fn plan_dataset(spec: &DatasetSpec, grid: &RadarGrid) -> Result<Vec<ManifestEntry>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise_count = (spec.noise_density * grid.len() as f64).round() as usize;
    let width = spec.scene_count().saturating_sub(1).to_string().len().max(4);
    let mut entries = Vec::with_capacity(spec.scene_count());
    for i in 0..spec.scene_count() {
        let params = WaveformParams::new(
            pick(&mut rng, &spec.sigma_set),
            pick(&mut rng, &spec.g_set),
            pick(&mut rng, &spec.n_set),
            pick(&mut rng, &spec.p_set),
            spec.s_doppler,
        )?;
        let noise = spec.noise_template(noise_count).with_seed(rng.random());
        let scene = match &spec.scenes {
            SceneSource::Count(_) => {
                let n_actors = rng.random_range(spec.actors_min..=spec.actors_max);
                random_scene(&mut rng, grid, n_actors, spec.sigma_max(), spec.radar_k)?
            }
            SceneSource::Files(files) => read_json(&files[i])?,
        };
        entries.push(ManifestEntry {
            file: format!("cube_{i:0width$}.radc"),
            params,
            scene,
            noise,
            radar_k: spec.radar_k,
            scene_points: Vec::new(),
        });
    }
    Ok(entries)
}

/// Synthesizes one entry and returns the cube with its projected scene points.
pub fn synthesize_entry(
    entry: &ManifestEntry,
    grid: &RadarGrid,
) -> Result<(RadarCube, Vec<ReflectionPoint>)> {
    let s = synthesize_scene_with(
        &entry.scene.actors,
        &entry.scene.sensor_pose,
        grid,
        &entry.params,
        &entry.noise,
        entry.radar_k,
    )?;
    let n_scene = entry.scene.actors.len().min(s.points.len());
    let scene_points = s.points[..n_scene]
        .iter()
        .copied()
        .filter(|p| p.actor_id.is_some())
        .collect();
    Ok((s.cube, scene_points))
}

/// Writes every cube and `manifest.json` into `out_dir`, creating it if needed.
pub fn generate_dataset(
    spec: &DatasetSpec,
    grid: &RadarGrid,
    out_dir: impl AsRef<Path>,
    dtype: Dtype,
) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    let mut entries = plan_dataset(spec, grid)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    entries.par_iter_mut().try_for_each(|entry| -> Result<()> {
        let (cube, scene_points) = synthesize_entry(entry, grid)?;
        entry.scene_points = scene_points;
        let path = out_dir.join(&entry.file);
        fs::write(&path, encode_cube(&cube, dtype)?).map_err(|e| Error::io(&path, e))
    })?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        grid: *grid,
        dtype,
        spec: spec.clone(),
        entries,
    };
    write_json(out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
