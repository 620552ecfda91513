use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default Doppler support scale in bins.
pub const DEFAULT_S_DOPPLER: f64 = 2.0;

/// Radar-attribute parameter set driving the point spread function.
///
/// * `sigma`: standard deviation of the range Gaussian, in range bins.
/// * `g`: Doppler gradient; the Doppler profile peaks at `2 g`.
/// * `n_window`, `p_window`: length and taper of the azimuth window
///   `(1 - p) - p cos(2 pi n / (N - 1))`.
/// * `s_doppler`: Doppler support scale; the profile is zero beyond
///   `s_doppler` bins from its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct WaveformParams {
    sigma: f64,
    g: f64,
    n_window: usize,
    p_window: f64,
    s_doppler: f64,
}

#[derive(Deserialize)]
struct RawParams {
    sigma: f64,
    g: f64,
    n_window: usize,
    p_window: f64,
    #[serde(default = "default_s_doppler")]
    s_doppler: f64,
}

fn default_s_doppler() -> f64 {
    DEFAULT_S_DOPPLER
}

impl TryFrom<RawParams> for WaveformParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        WaveformParams::new(r.sigma, r.g, r.n_window, r.p_window, r.s_doppler)
    }
}

impl WaveformParams {
    pub fn new(sigma: f64, g: f64, n_window: usize, p_window: f64, s_doppler: f64) -> Result<Self> {
        if ![sigma, g, p_window, s_doppler].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("waveform parameters"));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParams(format!("sigma = {sigma} must be > 0")));
        }
        if g <= 0.0 {
            return Err(Error::InvalidParams(format!("g = {g} must be > 0")));
        }
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
        if s_doppler <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "s_doppler = {s_doppler} must be > 0"
            )));
        }
        Ok(Self {
            sigma,
            g,
            n_window,
            p_window,
            s_doppler,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn n_window(&self) -> usize {
        self.n_window
    }

    pub fn p_window(&self) -> f64 {
        self.p_window
    }

    pub fn s_doppler(&self) -> f64 {
        self.s_doppler
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(sigma, self.g, self.n_window, self.p_window, self.s_doppler)
    }

    pub fn with_g(self, g: f64) -> Result<Self> {
        Self::new(self.sigma, g, self.n_window, self.p_window, self.s_doppler)
    }

    pub fn with_window(self, n_window: usize, p_window: f64) -> Result<Self> {
        Self::new(self.sigma, self.g, n_window, p_window, self.s_doppler)
    }

    pub fn with_s_doppler(self, s_doppler: f64) -> Result<Self> {
        Self::new(self.sigma, self.g, self.n_window, self.p_window, s_doppler)
    }
}

impl Default for WaveformParams {
    /// Average attributes measured on a 77 GHz automotive dataset.
    fn default() -> Self {
        Self {
            sigma: 2.6,
            g: 0.6,
            n_window: 8,
            p_window: 0.1,
            s_doppler: DEFAULT_S_DOPPLER,
        }
    }
}

/// Azimuth beam shape summarized by main-lobe width and sidelobe ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobeParams {
    /// Null-to-null main-lobe width in azimuth bins.
    pub rs: f64,
    /// Highest sidelobe divided by the main-lobe peak.
    pub lambda: f64,
}

impl LobeParams {
    pub fn new(rs: f64, lambda: f64) -> Result<Self> {
        if !rs.is_finite() || !lambda.is_finite() {
            return Err(Error::NonFinite("lobe parameters"));
        }
        if rs <= 0.0 {
            return Err(Error::InvalidParams(format!("rs = {rs} must be > 0")));
        }
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidParams(format!(
                "lambda = {lambda} must lie in [0, 1)"
            )));
        }
        Ok(Self { rs, lambda })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_enforced() {
        assert!(WaveformParams::new(0.0, 0.6, 8, 0.1, 2.0).is_err());
        assert!(WaveformParams::new(2.6, 0.0, 8, 0.1, 2.0).is_err());
        assert!(WaveformParams::new(2.6, 0.6, 2, 0.1, 2.0).is_err());
        assert!(WaveformParams::new(2.6, 0.6, 8, 1.0, 2.0).is_err());
        assert!(WaveformParams::new(2.6, 0.6, 8, -0.1, 2.0).is_err());
        assert!(WaveformParams::new(2.6, 0.6, 8, 0.1, 0.0).is_err());
        assert!(WaveformParams::new(f64::NAN, 0.6, 8, 0.1, 2.0).is_err());
        assert!(WaveformParams::new(2.6, 0.6, 8, 0.0, 2.0).is_ok());
        assert!(LobeParams::new(10.0, 1.0).is_err());
        assert!(LobeParams::new(0.0, 0.1).is_err());
    }

    #[test]
    fn json_defaults_s_doppler() {
        let p: WaveformParams =
            serde_json::from_str(r#"{"sigma":2.4,"g":0.5,"n_window":10,"p_window":0.3}"#).unwrap();
        assert_eq!(p.s_doppler(), DEFAULT_S_DOPPLER);
        assert!(serde_json::from_str::<WaveformParams>(
            r#"{"sigma":-1,"g":0.5,"n_window":10,"p_window":0.3}"#
        )
        .is_err());
    }
}
