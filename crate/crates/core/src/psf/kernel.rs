use serde::{Deserialize, Serialize};

use super::window::AzimuthSpectrum;
use super::{doppler_half_width, doppler_value, range_half_width, range_value};
use crate::error::{Error, Result};
use crate::grid::RadarGrid;
use crate::params::WaveformParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub offset: i64,
    pub weight: f64,
}

/// Truncated per-axis tap lists whose outer product is the 3D kernel.
///
/// Offsets are relative to the integer bin nearest the reflector; the
/// remaining sub-bin shift is recorded in `center_phase` and already applied
/// to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableKernel {
    pub range_taps: Vec<Tap>,
    pub doppler_taps: Vec<Tap>,
    pub azimuth_taps: Vec<Tap>,
    pub center_phase: [f64; 3],
}

impl SeparableKernel {
    pub fn shape(&self) -> [usize; 3] {
        [
            self.range_taps.len(),
            self.doppler_taps.len(),
            self.azimuth_taps.len(),
        ]
    }

    /// Kernel weight at tap indices `(i, j, k)`.
    pub fn weight(&self, i: usize, j: usize, k: usize) -> f64 {
        self.range_taps[i].weight * self.doppler_taps[j].weight * self.azimuth_taps[k].weight
    }

    /// Kernel weight at bin offsets from the center, zero off the taps.
    pub fn weight_at(&self, dr: i64, dd: i64, da: i64) -> f64 {
        let find = |taps: &[Tap], o: i64| {
            taps.iter()
                .find(|t| t.offset == o)
                .map_or(0.0, |t| t.weight)
        };
        find(&self.range_taps, dr) * find(&self.doppler_taps, dd) * find(&self.azimuth_taps, da)
    }

    /// Dense row-major copy of the outer product.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.shape().iter().product());
        for r in &self.range_taps {
            for d in &self.doppler_taps {
                for a in &self.azimuth_taps {
                    out.push(r.weight * d.weight * a.weight);
                }
            }
        }
        out
    }
}

/// Waveform parameters bound to a grid, with the azimuth spectrum cached.
#[derive(Debug, Clone)]
pub struct PsfModel {
    params: WaveformParams,
    spectrum: AzimuthSpectrum,
    range_hw: i64,
    doppler_hw: i64,
}

impl PsfModel {
    pub fn new(params: WaveformParams, grid: &RadarGrid) -> Result<Self> {
        let spectrum =
            AzimuthSpectrum::new(params.n_window(), params.p_window(), grid.n_azimuth())?;
        Ok(Self {
            params,
            spectrum,
            range_hw: range_half_width(params.sigma()),
            doppler_hw: doppler_half_width(params.s_doppler()),
        })
    }

    pub fn params(&self) -> &WaveformParams {
        &self.params
    }

    pub fn spectrum(&self) -> &AzimuthSpectrum {
        &self.spectrum
    }

    pub fn range_half_width(&self) -> i64 {
        self.range_hw
    }

    pub fn doppler_half_width(&self) -> i64 {
        self.doppler_hw
    }

    #[inline]
    pub fn range_weight(&self, x: f64) -> f64 {
        range_value(self.params.sigma(), x)
    }

    #[inline]
    pub fn doppler_weight(&self, x: f64) -> f64 {
        doppler_value(self.params.g(), self.params.s_doppler(), x)
    }

    #[inline]
    pub fn azimuth_weight(&self, x: f64) -> f64 {
        self.spectrum.truncated_at(x)
    }

    /// Separable kernel for a reflector whose position is `phase` bins past
    /// its nearest integer bin.
    pub fn kernel(&self, phase: [f64; 3]) -> Result<SeparableKernel> {
        if phase.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kernel phase"));
        }
        if phase.iter().any(|v| v.abs() > 0.5) {
            return Err(Error::InvalidInput(format!(
                "kernel phase {phase:?} exceeds half a bin"
            )));
        }
        let [dr, dd, da] = phase;
        let range_taps = (-self.range_hw..=self.range_hw)
            .map(|k| Tap {
                offset: k,
                weight: self.range_weight(k as f64 - dr),
            })
            .collect();
        let doppler_taps = (-self.doppler_hw..=self.doppler_hw)
            .map(|k| Tap {
                offset: k,
                weight: self.doppler_weight(k as f64 - dd),
            })
            .collect();
        let (lo, hi) = self.spectrum.support_offsets();
        let mut azimuth_taps: Vec<Tap> = (lo - 1..=hi + 1)
            .map(|k| Tap {
                offset: k,
                weight: self.azimuth_weight(k as f64 - da),
            })
            .collect();
        while azimuth_taps.last().is_some_and(|t| t.weight == 0.0) {
            azimuth_taps.pop();
        }
        let lead = azimuth_taps.iter().take_while(|t| t.weight == 0.0).count();
        azimuth_taps.drain(..lead);
        Ok(SeparableKernel {
            range_taps,
            doppler_taps,
            azimuth_taps,
            center_phase: phase,
        })
    }
}

/// Truncated separable kernel for `params` on `grid` at sub-bin offsets.
pub fn psf_kernel(
    params: &WaveformParams,
    grid: &RadarGrid,
    phase: [f64; 3],
) -> Result<SeparableKernel> {
    PsfModel::new(*params, grid)?.kernel(phase)
}
