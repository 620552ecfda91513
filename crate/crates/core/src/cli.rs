//! Command-line surface. Exit status is 0 on success, 1 on usage or
//! configuration errors and 2 on data errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::cfar::{cfar_extract, CfarConfig};
use crate::cube::{RadarCube, ScenePointSet};
use crate::dataset::{generate_dataset, DatasetSpec, SceneSource};
use crate::editing::{known_actor_ids, median_noise_intensity, remove_actor};
use crate::environment::DEFAULT_RADAR_K;
use crate::error::Error;
use crate::fit::{fit_waveform_params_with, select_isolated_peaks, Aggregation, FitOptions};
use crate::grid::RadarGrid;
use crate::io::cube_file::{read_cube_with, write_cube, Dtype};
use crate::io::formats::{read_json, write_json, EditOp, ParamsFile, SceneFile};
use crate::io::Config;
use crate::metrics::{frechet_stats_distance, ra_projection, MetricReport};
use crate::params::WaveformParams;
use crate::psf::WindowSearch;
use crate::render::render_slices;
use crate::scene::{PointKind, ReflectionPoint};
use crate::synthesis::{scene_and_noise_points, synthesize_fast, NoiseConfig};

/// CFAR peaks below this fraction of the strongest are not fitted.
const CFAR_PEAK_FLOOR: f64 = 0.1;

/// Keys accepted in a `--config` file.
pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "threads",
    "grid",
    "range_resolution",
    "doppler_resolution",
    "azimuth_fov",
    "dtype",
    "radar_k",
    "noise_count",
    "noise_intensity_min",
    "noise_intensity_max",
    "noise_relative",
    "cfar_guard",
    "cfar_train",
    "cfar_alpha",
    "cfar_min_peak",
    "fit_aggregation",
    "fit_sigma_max",
    "fit_s_min",
    "fit_s_max",
];

/// Bin counts written `RxDxA`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims(pub [usize; 3]);

impl FromStr for GridDims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split('x').collect();
        let dims: Option<Vec<usize>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
        match dims.as_deref() {
            Some(&[r, d, a]) => Ok(GridDims([r, d, a])),
            _ => Err(format!("expected RxDxA bin counts, got `{s}`")),
        }
    }
}

/// Per-axis widths `r,d,a`, or one width for all axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple(pub [usize; 3]);

impl FromStr for Triple {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Option<Vec<usize>> = s.split(',').map(|p| p.trim().parse().ok()).collect();
        match v.as_deref() {
            Some(&[w]) => Ok(Triple([w; 3])),
            Some(&[r, d, a]) => Ok(Triple([r, d, a])),
            _ => Err(format!("expected `n` or `r,d,a`, got `{s}`")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "radcube", version, about = "Analytical radar cube simulation")]
pub struct Cli {
    /// Seed for every random draw; default 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Grid bin counts `RxDxA` for synthesis; default 256x64x256.
    #[arg(long, global = true)]
    pub grid: Option<GridDims>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scene JSON and parameters to a cube file.
    Synth {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write every synthesized reflection point as JSON.
        #[arg(long)]
        points_out: Option<PathBuf>,
        #[arg(long)]
        noise_count: Option<usize>,
        #[arg(long)]
        dtype: Option<Dtype>,
    },
    /// CFAR detections of a cube as points JSON.
    Extract {
        cube: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        guard: Option<Triple>,
        #[arg(long)]
        train: Option<Triple>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        min_peak: Option<f64>,
    },
    /// Waveform parameters of a cube as params JSON.
    Fit {
        cube: PathBuf,
        /// Reference points with true intensities; scene points are used.
        /// Without them CFAR peaks are used and `g` is only relative.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        aggregation: Option<Aggregation>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full fit diagnostics as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Applies an edit script to a scene and synthesizes the result.
    Edit {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        points_out: Option<PathBuf>,
        #[arg(long)]
        noise_count: Option<usize>,
        #[arg(long)]
        dtype: Option<Dtype>,
    },
    /// Metric report comparing two cubes, or two directories of cubes.
    Metrics {
        sim: PathBuf,
        gt: PathBuf,
        /// Points JSON whose scene points define the scene bins.
        #[arg(long)]
        scene_points: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter-sweep dataset with a manifest.
    GenDataset {
        /// `default` or a dataset spec JSON file.
        #[arg(long, default_value = "default")]
        spec: String,
        #[arg(long)]
        scenes: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dtype: Option<Dtype>,
    },
    /// RA and RD max projections as `<out>_ra.png` and `<out>_rd.png`.
    Render {
        cube: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => CliError::Usage(e.to_string()),
            e => CliError::Data(e),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("radcube: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("radcube: {e}");
            2
        }
    }
}

struct Settings {
    config: Config,
    /// Seed from the flag or the config file, if either gave one.
    explicit_seed: Option<u64>,
    seed: u64,
    grid: RadarGrid,
}

impl Settings {
    fn load(cli: &Cli) -> CliResult<Self> {
        let config = match &cli.config {
            Some(path) => Config::load(path).map_err(|e| match e {
                Error::Io { .. } => CliError::Usage(e.to_string()),
                e => e.into(),
            })?,
            None => Config::default(),
        };
        config.check_keys(CONFIG_KEYS)?;
        let explicit_seed = match cli.seed {
            Some(seed) => Some(seed),
            None => config.get("seed")?,
        };
        let seed = explicit_seed.unwrap_or(0);
        let base = RadarGrid::default();
        let dims = match cli.grid {
            Some(d) => d,
            None => config
                .get("grid")?
                .unwrap_or(GridDims(base.dims())),
        };
        let grid = RadarGrid::new(
            dims.0[0],
            dims.0[1],
            dims.0[2],
            config.resolve("range_resolution", None, base.range_resolution())?,
            config.resolve("doppler_resolution", None, base.doppler_resolution())?,
            config.resolve("azimuth_fov", None, base.azimuth_fov())?,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Self {
            config,
            explicit_seed,
            seed,
            grid,
        })
    }

    fn dtype(&self, flag: Option<Dtype>) -> CliResult<Dtype> {
        Ok(self.config.resolve("dtype", flag, Dtype::F32)?)
    }

    fn radar_k(&self) -> CliResult<f64> {
        Ok(self.config.resolve("radar_k", None, DEFAULT_RADAR_K)?)
    }

    fn noise(&self, count: Option<usize>) -> CliResult<NoiseConfig> {
        let d = NoiseConfig::default();
        let cfg = NoiseConfig {
            count: self.config.resolve("noise_count", count, d.count)?,
            intensity_min: self.config.resolve("noise_intensity_min", None, d.intensity_min)?,
            intensity_max: self.config.resolve("noise_intensity_max", None, d.intensity_max)?,
            seed: self.seed,
            relative: self.config.resolve("noise_relative", None, d.relative)?,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    fn cfar(
        &self,
        guard: Option<Triple>,
        train: Option<Triple>,
        alpha: Option<f64>,
        min_peak: Option<f64>,
    ) -> CliResult<CfarConfig> {
        let d = CfarConfig::default();
        let cfg = CfarConfig {
            guard: self.config.resolve("cfar_guard", guard, Triple(d.guard))?.0,
            train: self.config.resolve("cfar_train", train, Triple(d.train))?.0,
            alpha: self.config.resolve("cfar_alpha", alpha, d.alpha)?,
            min_peak: self.config.resolve("cfar_min_peak", min_peak, d.min_peak)?,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    fn fit_options(&self, aggregation: Option<Aggregation>) -> CliResult<FitOptions> {
        let d = FitOptions::default();
        Ok(FitOptions {
            aggregation: self
                .config
                .resolve("fit_aggregation", aggregation, d.aggregation)?,
            sigma_max: self.config.resolve("fit_sigma_max", None, d.sigma_max)?,
            s_min: self.config.resolve("fit_s_min", None, d.s_min)?,
            s_max: self.config.resolve("fit_s_max", None, d.s_max)?,
            ..d
        })
    }

    fn read_cube(&self, path: &Path) -> CliResult<RadarCube> {
        Ok(read_cube_with(path, &self.grid)?)
    }

    fn read_params(&self, path: &Path) -> CliResult<WaveformParams> {
        let file: ParamsFile = read_json(path)?;
        Ok(file.resolve(self.grid.n_azimuth(), &WindowSearch::default())?)
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let settings = Settings::load(&cli)?;
    let threads = settings.config.resolve("threads", cli.threads, 0usize)?;
    if threads == 0 {
        return dispatch(cli.command, &settings);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &settings))
}

/// Pretty JSON to `out`, or to stdout.
fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    match out {
        Some(path) => Ok(write_json(path, value)?),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Error::io("<stdout>", e))?;
            Ok(())
        }
    }
}

fn dispatch(command: Command, s: &Settings) -> CliResult<()> {
    match command {
        Command::Synth {
            scene,
            params,
            out,
            points_out,
            noise_count,
            dtype,
        } => {
            let scene: SceneFile = read_json(&scene)?;
            let params = s.read_params(&params)?;
            let points = scene_points_with_noise(&scene, s, &s.noise(noise_count)?)?;
            let cube = synthesize_fast(&points, &params, &s.grid)?;
            write_cube(&out, &cube, s.dtype(dtype)?)?;
            if let Some(path) = points_out {
                write_json(path, &points)?;
            }
            Ok(())
        }
        Command::Extract {
            cube,
            out,
            guard,
            train,
            alpha,
            min_peak,
        } => {
            let cfg = s.cfar(guard, train, alpha, min_peak)?;
            let cube = s.read_cube(&cube)?;
            emit(out.as_deref(), &cfar_extract(&cube, &cfg)?)
        }
        Command::Fit {
            cube,
            points,
            aggregation,
            out,
            report,
        } => {
            let opts = s.fit_options(aggregation)?;
            let cube = s.read_cube(&cube)?;
            let peaks: Vec<ReflectionPoint> = match points {
                Some(path) => read_json::<Vec<ReflectionPoint>>(&path)?
                    .into_iter()
                    .filter(|p| p.kind == PointKind::Scene)
                    .collect(),
                None => {
                    eprintln!(
                        "radcube: no reference points, fitting CFAR peaks; g is relative to the peak values"
                    );
                    let detections = cfar_extract(&cube, &s.cfar(None, None, None, None)?)?;
                    select_isolated_peaks(&detections, &opts, CFAR_PEAK_FLOOR)
                }
            };
            let fit = fit_waveform_params_with(&cube, &peaks, cube.dims()[2], &opts)?;
            if let Some(path) = report {
                write_json(path, &fit)?;
            }
            emit(out.as_deref(), &ParamsFile::from(fit.params))
        }
        Command::Edit {
            scene,
            params,
            script,
            out,
            points_out,
            noise_count,
            dtype,
        } => {
            let scene: SceneFile = read_json(&scene)?;
            let params = s.read_params(&params)?;
            let script: Vec<EditOp> = read_json(&script)?;
            let (points, params) = apply_script(&scene, params, &script, s, &s.noise(noise_count)?)?;
            let cube = synthesize_fast(&points, &params, &s.grid)?;
            write_cube(&out, &cube, s.dtype(dtype)?)?;
            if let Some(path) = points_out {
                write_json(path, &points)?;
            }
            Ok(())
        }
        Command::Metrics {
            sim,
            gt,
            scene_points,
            out,
        } => {
            if sim.is_dir() && gt.is_dir() {
                return emit(out.as_deref(), &set_metrics(&sim, &gt, s)?);
            }
            let (sim, gt) = (s.read_cube(&sim)?, s.read_cube(&gt)?);
            let scene = match scene_points {
                Some(path) => {
                    let points: Vec<ReflectionPoint> = read_json(&path)?;
                    let bins = points
                        .iter()
                        .filter(|p| p.kind == PointKind::Scene)
                        .map(|p| p.nearest_bin(sim.grid()))
                        .collect();
                    Some(ScenePointSet::new(bins, sim.grid())?)
                }
                None => None,
            };
            emit(out.as_deref(), &MetricReport::compute(&sim, &gt, scene.as_ref())?)
        }
        Command::GenDataset {
            spec,
            scenes,
            out,
            dtype,
        } => {
            let mut spec = if spec == "default" {
                DatasetSpec::default()
            } else {
                read_json(&spec)?
            };
            if let Some(n) = scenes {
                spec.scenes = match spec.scenes {
                    SceneSource::Count(_) => SceneSource::Count(n),
                    SceneSource::Files(files) => {
                        if n > files.len() {
                            return Err(CliError::Usage(format!(
                                "--scenes {n} exceeds the {} scene files of the spec",
                                files.len()
                            )));
                        }
                        SceneSource::Files(files[..n].to_vec())
                    }
                };
            }
            if let Some(seed) = s.explicit_seed {
                spec.seed = seed;
            }
            let manifest = generate_dataset(&spec, &s.grid, &out, s.dtype(dtype)?)?;
            eprintln!(
                "radcube: wrote {} cubes to {}",
                manifest.entries.len(),
                out.display()
            );
            Ok(())
        }
        Command::Render { cube, out } => {
            let cube = s.read_cube(&cube)?;
            render_slices(&cube, &out)?;
            Ok(())
        }
    }
}

fn scene_points_with_noise(
    scene: &SceneFile,
    s: &Settings,
    noise: &NoiseConfig,
) -> CliResult<Vec<ReflectionPoint>> {
    Ok(scene_and_noise_points(
        &scene.actors,
        &scene.sensor_pose,
        &s.grid,
        noise,
        s.radar_k()?,
    )?)
}

/// Runs the script in order. Translations move the pose, attribute steps
/// update the parameters and removals apply to the points projected from the
/// final pose, so a removed actor stays removed after later translations.
fn apply_script(
    scene: &SceneFile,
    mut params: WaveformParams,
    script: &[EditOp],
    s: &Settings,
    noise: &NoiseConfig,
) -> CliResult<(Vec<ReflectionPoint>, WaveformParams)> {
    let mut pose = scene.sensor_pose;
    let mut removals = Vec::new();
    for op in script {
        match *op {
            EditOp::Translate { dx, dy, dheading } => pose = pose.moved(dx, dy, dheading)?,
            EditOp::Attrs { .. } => params = op.apply_attrs(params)?,
            EditOp::Remove {
                actor_id,
                noise_floor,
            } => {
                if !scene.actors.iter().any(|a| a.actor_id == actor_id) {
                    let mut known: Vec<u64> = scene.actors.iter().map(|a| a.actor_id).collect();
                    known.sort_unstable();
                    known.dedup();
                    return Err(Error::UnknownActor { id: actor_id, known }.into());
                }
                removals.push((actor_id, noise_floor));
            }
        }
    }
    let moved = SceneFile {
        sensor_pose: pose,
        actors: scene.actors.clone(),
    };
    let mut points = scene_points_with_noise(&moved, s, noise)?;
    let default_floor = median_noise_intensity(&points).unwrap_or(0.0);
    for (id, floor) in removals {
        // an actor that left the field of view has nothing left to remove
        if known_actor_ids(&points).contains(&id) {
            points = remove_actor(&points, id, floor.unwrap_or(default_floor))?;
        }
    }
    Ok((points, params))
}

#[derive(Debug, Serialize)]
struct PairReport {
    sim: String,
    gt: String,
    report: MetricReport,
}

#[derive(Debug, Serialize)]
struct SetReport {
    pairs: Vec<PairReport>,
    ppe_mean: f64,
    ppse_mean: f64,
    /// Frechet distance between the RA image feature statistics of the sets.
    frechet: f64,
}

fn cube_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "radc"))
        .collect();
    files.sort();
    Ok(files)
}

/// Pairs the sorted `.radc` files of two directories by position.
fn set_metrics(sim_dir: &Path, gt_dir: &Path, s: &Settings) -> CliResult<SetReport> {
    let (sim_files, gt_files) = (cube_files(sim_dir)?, cube_files(gt_dir)?);
    if sim_files.len() != gt_files.len() {
        return Err(Error::InvalidInput(format!(
            "{} holds {} cubes but {} holds {}",
            sim_dir.display(),
            sim_files.len(),
            gt_dir.display(),
            gt_files.len()
        ))
        .into());
    }
    let mut pairs = Vec::with_capacity(sim_files.len());
    let (mut ra_sim, mut ra_gt) = (Vec::new(), Vec::new());
    for (a, b) in sim_files.iter().zip(&gt_files) {
        let (sim, gt) = (s.read_cube(a)?, s.read_cube(b)?);
        pairs.push(PairReport {
            sim: a.display().to_string(),
            gt: b.display().to_string(),
            report: MetricReport::compute(&sim, &gt, None)?,
        });
        ra_sim.push(ra_projection(&sim));
        ra_gt.push(ra_projection(&gt));
    }
    let frechet = frechet_stats_distance(&ra_sim, &ra_gt)?;
    let n = pairs.len() as f64;
    Ok(SetReport {
        ppe_mean: pairs.iter().map(|p| p.report.ppe).sum::<f64>() / n,
        ppse_mean: pairs.iter().map(|p| p.report.ppse).sum::<f64>() / n,
        pairs,
        frechet,
    })
}
