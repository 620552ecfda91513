//! JSON documents exchanged by the command-line tool.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{LobeParams, WaveformParams, DEFAULT_S_DOPPLER};
use crate::psf::{fit_window_from_lobes, WindowSearch};
use crate::scene::{ActorPoint, SensorPose};

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty-printed with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default)]
    pub sensor_pose: SensorPose,
    pub actors: Vec<ActorPoint>,
}

/// Waveform parameters given either by window `(n_window, p_window)` or by
/// lobe shape `(rs, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub sigma: f64,
    pub g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_doppler: Option<f64>,
}

impl ParamsFile {
    /// Resolves lobe targets through the window search at `pad_length`.
    pub fn resolve(&self, pad_length: usize, search: &WindowSearch) -> Result<WaveformParams> {
        let s = self.s_doppler.unwrap_or(DEFAULT_S_DOPPLER);
        match (self.n_window, self.p_window, self.rs, self.lambda) {
            (Some(n), Some(p), None, None) => WaveformParams::new(self.sigma, self.g, n, p, s),
            (None, None, Some(rs), Some(lambda)) => {
                let target = LobeParams::new(rs, lambda)?;
                let w = fit_window_from_lobes(&target, pad_length, search)?;
                WaveformParams::new(self.sigma, self.g, w.n_window, w.p_window, s)
            }
            _ => Err(Error::InvalidParams(
                "give either n_window and p_window, or rs and lambda".into(),
            )),
        }
    }
}

impl From<WaveformParams> for ParamsFile {
    fn from(p: WaveformParams) -> Self {
        Self {
            sigma: p.sigma(),
            g: p.g(),
            n_window: Some(p.n_window()),
            p_window: Some(p.p_window()),
            rs: None,
            lambda: None,
            s_doppler: Some(p.s_doppler()),
        }
    }
}

/// One step of an edit script.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum EditOp {
    Remove {
        actor_id: u64,
        /// Replacement intensity; defaults to the median noise intensity.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_floor: Option<f64>,
    },
    Translate {
        #[serde(default)]
        dx: f64,
        #[serde(default)]
        dy: f64,
        #[serde(default)]
        dheading: f64,
    },
    Attrs {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_window: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_window: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s_doppler: Option<f64>,
    },
}

impl EditOp {
    /// Applies an `attrs` step; other steps return `params` unchanged.
    pub fn apply_attrs(&self, params: WaveformParams) -> Result<WaveformParams> {
        match *self {
            EditOp::Attrs {
                sigma,
                g,
                n_window,
                p_window,
                s_doppler,
            } => WaveformParams::new(
                sigma.unwrap_or(params.sigma()),
                g.unwrap_or(params.g()),
                n_window.unwrap_or(params.n_window()),
                p_window.unwrap_or(params.p_window()),
                s_doppler.unwrap_or(params.s_doppler()),
            ),
            _ => Ok(params),
        }
    }
}
