//! World-frame actors, the sensor pose and bin-space reflection points.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadarGrid;

/// Cartesian reflector in the sensor-centric world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorPoint {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
    /// Radar cross section in square meters.
    pub rcs: f64,
    pub actor_id: u64,
}

impl ActorPoint {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64, rcs: f64, actor_id: u64) -> Result<Self> {
        let a = Self {
            x,
            y,
            vx,
            vy,
            rcs,
            actor_id,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x, self.y, self.vx, self.vy, self.rcs]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("actor point"));
        }
        if self.rcs < 0.0 {
            return Err(Error::InvalidInput(format!(
                "actor {} has negative rcs {}",
                self.actor_id, self.rcs
            )));
        }
        Ok(())
    }
}

/// Sensor position, heading and ego velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorPose {
    pub x: f64,
    pub y: f64,
    /// Radians in `(-pi, pi]`.
    pub heading: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
}

impl Default for SensorPose {
    fn default() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            vx: 0.0,
            vy: 0.0,
        }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

impl SensorPose {
    /// Builds a pose, wrapping the heading into `(-pi, pi]`.
    pub fn new(x: f64, y: f64, heading: f64, vx: f64, vy: f64) -> Result<Self> {
        let p = Self {
            x,
            y,
            heading: wrap_angle(heading),
            vx,
            vy,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x, self.y, self.heading, self.vx, self.vy]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("sensor pose"));
        }
        if !(self.heading > -PI && self.heading <= PI) {
            return Err(Error::InvalidInput(format!(
                "heading {} outside (-pi, pi]",
                self.heading
            )));
        }
        Ok(())
    }

    /// Pose moved by a world-frame offset and rotated by `dheading`.
    pub fn moved(&self, dx: f64, dy: f64, dheading: f64) -> Result<Self> {
        Self::new(
            self.x + dx,
            self.y + dy,
            self.heading + dheading,
            self.vx,
            self.vy,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Scene,
    Noise,
}

/// One reflector in fractional bin coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionPoint {
    pub r_bin: f64,
    pub d_bin: f64,
    pub a_bin: f64,
    pub intensity: f64,
    pub kind: PointKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor_id: Option<u64>,
}

impl ReflectionPoint {
    pub fn scene(
        r_bin: f64,
        d_bin: f64,
        a_bin: f64,
        intensity: f64,
        actor_id: Option<u64>,
    ) -> Result<Self> {
        let p = Self {
            r_bin,
            d_bin,
            a_bin,
            intensity,
            kind: PointKind::Scene,
            actor_id,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn noise(r_bin: f64, d_bin: f64, a_bin: f64, intensity: f64) -> Result<Self> {
        let p = Self {
            r_bin,
            d_bin,
            a_bin,
            intensity,
            kind: PointKind::Noise,
            actor_id: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the grid-independent invariants.
    pub fn validate(&self) -> Result<()> {
        if ![self.r_bin, self.d_bin, self.a_bin, self.intensity]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("reflection point"));
        }
        if self.intensity < 0.0 {
            return Err(Error::InvalidInput(format!(
                "negative intensity {}",
                self.intensity
            )));
        }
        if self.kind == PointKind::Noise && self.actor_id.is_some() {
            return Err(Error::InvalidInput(
                "noise points cannot carry an actor id".into(),
            ));
        }
        Ok(())
    }

    pub fn in_bounds(&self, grid: &RadarGrid) -> bool {
        grid.contains(self.r_bin, self.d_bin, self.a_bin)
    }

    /// Nearest integer bin, clamped into the grid.
    pub fn nearest_bin(&self, grid: &RadarGrid) -> (usize, usize, usize) {
        let clamp = |v: f64, n: usize| (v.round().max(0.0) as usize).min(n - 1);
        (
            clamp(self.r_bin, grid.n_range()),
            clamp(self.d_bin, grid.n_doppler()),
            clamp(self.a_bin, grid.n_azimuth()),
        )
    }
}

/// Validates every point against `grid`, reporting the first failure by index.
pub fn check_points(points: &[ReflectionPoint], grid: &RadarGrid) -> Result<()> {
    for (index, p) in points.iter().enumerate() {
        p.validate()?;
        if !p.in_bounds(grid) {
            return Err(Error::PointOutOfBounds {
                index,
                r_bin: p.r_bin,
                d_bin: p.d_bin,
                a_bin: p.a_bin,
                grid: grid.to_string(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constructors_reject_bad_values() {
        assert!(ReflectionPoint::scene(1.0, 1.0, 1.0, -1.0, None).is_err());
        assert!(ReflectionPoint::noise(f64::NAN, 1.0, 1.0, 1.0).is_err());
        assert!(ActorPoint::new(1.0, 0.0, 0.0, 0.0, -0.5, 0).is_err());
        assert!(ActorPoint::new(f64::INFINITY, 0.0, 0.0, 0.0, 1.0, 0).is_err());
        assert!(SensorPose::new(0.0, f64::NAN, 0.0, 0.0, 0.0).is_err());
        let noisy_with_actor = ReflectionPoint {
            actor_id: Some(3),
            ..ReflectionPoint::noise(1.0, 1.0, 1.0, 1.0).unwrap()
        };
        assert!(noisy_with_actor.validate().is_err());
    }

    #[test]
    fn out_of_bounds_reports_index() {
        let grid = RadarGrid::new(8, 8, 8, 1.0, 1.0, 1.0).unwrap();
        let pts = vec![
            ReflectionPoint::scene(1.0, 1.0, 1.0, 1.0, None).unwrap(),
            ReflectionPoint::scene(8.0, 1.0, 1.0, 1.0, None).unwrap(),
        ];
        match check_points(&pts, &grid) {
            Err(Error::PointOutOfBounds { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
