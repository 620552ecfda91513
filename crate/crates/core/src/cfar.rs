//! Cell-averaging CFAR over the full 3D training shell, followed by a strict
//! 3x3x3 local-maximum filter and an absolute floor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::RadarCube;
use crate::error::{Error, Result};
use crate::scene::{PointKind, ReflectionPoint};

/// Guard and training widths are per axis, in (range, Doppler, azimuth) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfarConfig {
    pub guard: [usize; 3],
    pub train: [usize; 3],
    pub alpha: f64,
    pub min_peak: f64,
}

impl CfarConfig {
    pub fn uniform(guard: usize, train: usize, alpha: f64, min_peak: f64) -> Result<Self> {
        let cfg = Self {
            guard: [guard; 3],
            train: [train; 3],
            alpha,
            min_peak,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "CFAR training width {:?} must be >= 1 on every axis",
                self.train
            )));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "CFAR alpha = {} must be > 0",
                self.alpha
            )));
        }
        if !self.min_peak.is_finite() || self.min_peak < 0.0 {
            return Err(Error::InvalidInput(format!(
                "CFAR min_peak = {} must be >= 0",
                self.min_peak
            )));
        }
        Ok(())
    }
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self {
            guard: [2, 1, 2],
            train: [4, 2, 4],
            alpha: 2.0,
            min_peak: 0.0,
        }
    }
}

/// Inclusive 3D prefix sums with a zero border: `s[(r+1, d+1, a+1)]` is the
/// sum over `[0, r] x [0, d] x [0, a]`.
struct PrefixSum {
    dims: [usize; 3],
    s: Vec<f64>,
}

impl PrefixSum {
    fn new(cube: &RadarCube) -> Self {
        let [nr, nd, na] = cube.dims();
        let (sd, sa) = (nd + 1, na + 1);
        let mut s = vec![0.0; (nr + 1) * sd * sa];
        let at = |r: usize, d: usize, a: usize| (r * sd + d) * sa + a;
        for r in 0..nr {
            for d in 0..nd {
                let row = cube.row(r, d);
                for a in 0..na {
                    s[at(r + 1, d + 1, a + 1)] = row[a] + s[at(r, d + 1, a + 1)]
                        + s[at(r + 1, d, a + 1)]
                        + s[at(r + 1, d + 1, a)]
                        - s[at(r, d, a + 1)]
                        - s[at(r, d + 1, a)]
                        - s[at(r + 1, d, a)]
                        + s[at(r, d, a)];
                }
            }
        }
        Self {
            dims: [nr, nd, na],
            s,
        }
    }

    /// Sum over the half-open box `lo..hi` per axis.
    fn box_sum(&self, lo: [usize; 3], hi: [usize; 3]) -> f64 {
        let [_, nd, na] = self.dims;
        let at = |r: usize, d: usize, a: usize| self.s[(r * (nd + 1) + d) * (na + 1) + a];
        at(hi[0], hi[1], hi[2]) - at(lo[0], hi[1], hi[2]) - at(hi[0], lo[1], hi[2])
            - at(hi[0], hi[1], lo[2])
            + at(lo[0], lo[1], hi[2])
            + at(lo[0], hi[1], lo[2])
            + at(hi[0], lo[1], lo[2])
            - at(lo[0], lo[1], lo[2])
    }
}

/// Half-open box `center +- half` clipped to `0..n` per axis.
fn clipped_box(center: [usize; 3], half: [usize; 3], dims: [usize; 3]) -> ([usize; 3], [usize; 3]) {
    let mut lo = [0; 3];
    let mut hi = [0; 3];
    for i in 0..3 {
        lo[i] = center[i].saturating_sub(half[i]);
        hi[i] = (center[i] + half[i] + 1).min(dims[i]);
    }
    (lo, hi)
}

fn volume(lo: [usize; 3], hi: [usize; 3]) -> usize {
    (0..3).map(|i| hi[i] - lo[i]).product()
}

fn is_strict_local_max(cube: &RadarCube, r: usize, d: usize, a: usize) -> bool {
    let v = cube.get(r, d, a);
    let (lo, hi) = clipped_box([r, d, a], [1, 1, 1], cube.dims());
    for rr in lo[0]..hi[0] {
        for dd in lo[1]..hi[1] {
            for aa in lo[2]..hi[2] {
                if (rr, dd, aa) != (r, d, a) && cube.get(rr, dd, aa) >= v {
                    return false;
                }
            }
        }
    }
    true
}

/// Detections in range-major index order, with integer bins and the cell value
/// as intensity.
pub fn cfar_extract(cube: &RadarCube, cfg: &CfarConfig) -> Result<Vec<ReflectionPoint>> {
    cfg.validate()?;
    let dims = cube.dims();
    let [nr, nd, na] = dims;
    let prefix = PrefixSum::new(cube);
    let outer: [usize; 3] = std::array::from_fn(|i| cfg.guard[i] + cfg.train[i]);

    let detections = (0..nr)
        .into_par_iter()
        .flat_map_iter(|r| {
            let prefix = &prefix;
            (0..nd).flat_map(move |d| {
                (0..na).filter_map(move |a| {
                    let v = cube.get(r, d, a);
                    if v < cfg.min_peak || !is_strict_local_max(cube, r, d, a) {
                        return None;
                    }
                    let (olo, ohi) = clipped_box([r, d, a], outer, dims);
                    let (ilo, ihi) = clipped_box([r, d, a], cfg.guard, dims);
                    let count = volume(olo, ohi) - volume(ilo, ihi);
                    let mean = if count == 0 {
                        0.0
                    } else {
                        let shell = prefix.box_sum(olo, ohi) - prefix.box_sum(ilo, ihi);
                        shell.max(0.0) / count as f64
                    };
                    (v > cfg.alpha * mean).then_some(ReflectionPoint {
                        r_bin: r as f64,
                        d_bin: d as f64,
                        a_bin: a as f64,
                        intensity: v,
                        kind: PointKind::Scene,
                        actor_id: None,
                    })
                })
            })
        })
        .collect();
    Ok(detections)
}
