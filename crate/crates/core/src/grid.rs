use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest bin count accepted on any axis.
pub const MIN_BINS: usize = 8;

/// Bin counts and physical resolutions of the range, Doppler and azimuth axes.
///
/// Azimuth bins are linear in angle: the field of view, symmetric about
/// boresight, maps onto `[0, n_azimuth)` with boresight at `n_azimuth / 2`.
/// Zero radial velocity sits on Doppler bin `n_doppler / 2` (floor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct RadarGrid {
    n_range: usize,
    n_doppler: usize,
    n_azimuth: usize,
    range_resolution: f64,
    doppler_resolution: f64,
    azimuth_fov: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    n_range: usize,
    n_doppler: usize,
    n_azimuth: usize,
    range_resolution: f64,
    doppler_resolution: f64,
    azimuth_fov: f64,
}

impl TryFrom<RawGrid> for RadarGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        RadarGrid::new(
            raw.n_range,
            raw.n_doppler,
            raw.n_azimuth,
            raw.range_resolution,
            raw.doppler_resolution,
            raw.azimuth_fov,
        )
    }
}

impl RadarGrid {
    pub fn new(
        n_range: usize,
        n_doppler: usize,
        n_azimuth: usize,
        range_resolution: f64,
        doppler_resolution: f64,
        azimuth_fov: f64,
    ) -> Result<Self> {
        for (name, n) in [
            ("n_range", n_range),
            ("n_doppler", n_doppler),
            ("n_azimuth", n_azimuth),
        ] {
            if n < MIN_BINS {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n}, need at least {MIN_BINS}"
                )));
            }
            if n > u32::MAX as usize {
                return Err(Error::InvalidGrid(format!("{name} = {n} is too large")));
            }
        }
        for (name, v) in [
            ("range_resolution", range_resolution),
            ("doppler_resolution", doppler_resolution),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite("radar grid"));
            }
            if v <= 0.0 {
                return Err(Error::InvalidGrid(format!("{name} = {v} must be positive")));
            }
        }
        if !azimuth_fov.is_finite() {
            return Err(Error::NonFinite("radar grid"));
        }
        if !(azimuth_fov > 0.0 && azimuth_fov <= std::f64::consts::PI) {
            return Err(Error::InvalidGrid(format!(
                "azimuth_fov = {azimuth_fov} must lie in (0, pi]"
            )));
        }
        Ok(Self {
            n_range,
            n_doppler,
            n_azimuth,
            range_resolution,
            doppler_resolution,
            azimuth_fov,
        })
    }

    /// Same axes and resolutions with different bin counts.
    pub fn with_dims(&self, n_range: usize, n_doppler: usize, n_azimuth: usize) -> Result<Self> {
        Self::new(
            n_range,
            n_doppler,
            n_azimuth,
            self.range_resolution,
            self.doppler_resolution,
            self.azimuth_fov,
        )
    }

    pub fn n_range(&self) -> usize {
        self.n_range
    }

    pub fn n_doppler(&self) -> usize {
        self.n_doppler
    }

    pub fn n_azimuth(&self) -> usize {
        self.n_azimuth
    }

    pub fn range_resolution(&self) -> f64 {
        self.range_resolution
    }

    pub fn doppler_resolution(&self) -> f64 {
        self.doppler_resolution
    }

    pub fn azimuth_fov(&self) -> f64 {
        self.azimuth_fov
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.n_range, self.n_doppler, self.n_azimuth]
    }

    pub fn len(&self) -> usize {
        self.n_range * self.n_doppler * self.n_azimuth
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bin index of zero radial velocity.
    pub fn doppler_center(&self) -> usize {
        self.n_doppler / 2
    }

    pub fn max_range(&self) -> f64 {
        self.n_range as f64 * self.range_resolution
    }

    /// Fractional azimuth bin for a bearing relative to boresight (radians).
    pub fn bearing_to_bin(&self, bearing: f64) -> f64 {
        (bearing + 0.5 * self.azimuth_fov) / self.azimuth_fov * self.n_azimuth as f64
    }

    /// Inverse of [`RadarGrid::bearing_to_bin`].
    pub fn bin_to_bearing(&self, a_bin: f64) -> f64 {
        a_bin / self.n_azimuth as f64 * self.azimuth_fov - 0.5 * self.azimuth_fov
    }

    pub fn contains(&self, r_bin: f64, d_bin: f64, a_bin: f64) -> bool {
        (0.0..self.n_range as f64).contains(&r_bin)
            && (0.0..self.n_doppler as f64).contains(&d_bin)
            && (0.0..self.n_azimuth as f64).contains(&a_bin)
    }

    /// Row-major flat index, range outermost and azimuth innermost.
    #[inline]
    pub fn index(&self, r: usize, d: usize, a: usize) -> usize {
        (r * self.n_doppler + d) * self.n_azimuth + a
    }
}

impl Default for RadarGrid {
    /// 256 x 64 x 256 cube over 50 m, 0.13 m/s Doppler bins and a 90 degree field of view.
    fn default() -> Self {
        Self {
            n_range: 256,
            n_doppler: 64,
            n_azimuth: 256,
            range_resolution: 50.0 / 256.0,
            doppler_resolution: 0.13,
            azimuth_fov: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl fmt::Display for RadarGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.n_range, self.n_doppler, self.n_azimuth)
    }
}
