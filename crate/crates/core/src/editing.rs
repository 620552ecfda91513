//! Scene edits. Every edit rewrites the synthesis inputs and re-synthesizes;
//! cube values are never touched directly.

use crate::cube::RadarCube;
use crate::error::{Error, Result};
use crate::grid::RadarGrid;
use crate::params::WaveformParams;
use crate::scene::{ActorPoint, PointKind, ReflectionPoint, SensorPose};
use crate::synthesis::{synthesize_fast, synthesize_scene, NoiseConfig};

/// Re-synthesizes the same points under new waveform parameters.
pub fn modify_attributes(
    points: &[ReflectionPoint],
    new_params: &WaveformParams,
    grid: &RadarGrid,
) -> Result<RadarCube> {
    synthesize_fast(points, new_params, grid)
}

/// Re-projects world-frame actors from `new_pose`, resamples noise and
/// synthesizes. `old_pose` is the capture pose and is only validated, since
/// actor coordinates do not depend on it.
pub fn translate_sensor(
    actors: &[ActorPoint],
    old_pose: &SensorPose,
    new_pose: &SensorPose,
    grid: &RadarGrid,
    params: &WaveformParams,
    noise: &NoiseConfig,
) -> Result<RadarCube> {
    old_pose.validate()?;
    Ok(synthesize_scene(actors, new_pose, grid, params, noise)?.cube)
}

/// Demotes every point of `actor_id` to a noise point of intensity `noise_floor`.
pub fn remove_actor(
    points: &[ReflectionPoint],
    actor_id: u64,
    noise_floor: f64,
) -> Result<Vec<ReflectionPoint>> {
    if !noise_floor.is_finite() || noise_floor < 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise floor {noise_floor} must be finite and >= 0"
        )));
    }
    if !points.iter().any(|p| p.actor_id == Some(actor_id)) {
        return Err(Error::UnknownActor {
            id: actor_id,
            known: known_actor_ids(points),
        });
    }
    Ok(points
        .iter()
        .map(|p| {
            if p.actor_id == Some(actor_id) {
                ReflectionPoint {
                    intensity: noise_floor,
                    kind: PointKind::Noise,
                    actor_id: None,
                    ..*p
                }
            } else {
                *p
            }
        })
        .collect())
}

/// Sorted distinct actor ids present in `points`.
pub fn known_actor_ids(points: &[ReflectionPoint]) -> Vec<u64> {
    let mut ids: Vec<u64> = points.iter().filter_map(|p| p.actor_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Median intensity of the noise points, if any.
pub fn median_noise_intensity(points: &[ReflectionPoint]) -> Option<f64> {
    let mut v: Vec<f64> = points
        .iter()
        .filter(|p| p.kind == PointKind::Noise)
        .map(|p| p.intensity)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{actor_polar, project_to_bins};
    use crate::fit::{fit_waveform_params_with, FitOptions};
    use crate::metrics::ra_projection;

    fn params() -> WaveformParams {
        WaveformParams::default()
    }

    fn grid() -> RadarGrid {
        RadarGrid::new(64, 16, 64, 0.4, 0.13, 1.5).unwrap()
    }

    #[test]
    fn identity_translation_is_bit_exact() {
        let g = RadarGrid::default();
        let actors = [
            ActorPoint::new(10.0, 1.0, -1.0, 0.0, 1.0, 1).unwrap(),
            ActorPoint::new(20.0, -3.0, 0.0, 0.5, 4.0, 2).unwrap(),
        ];
        let pose = SensorPose::new(1.0, 0.5, 0.1, 0.0, 0.0).unwrap();
        let noise = NoiseConfig::default().with_seed(11);
        let original = synthesize_scene(&actors, &pose, &g, &params(), &noise).unwrap().cube;
        let moved = translate_sensor(&actors, &pose, &pose, &g, &params(), &noise).unwrap();
        assert_eq!(original.values(), moved.values());
    }

    #[test]
    fn lateral_shift_geometry() {
        let actor = ActorPoint::new(10.0, 0.0, 0.0, 0.0, 1.0, 1).unwrap();
        let pose = SensorPose::default().moved(0.0, 5.0, 0.0).unwrap();
        let polar = actor_polar(&actor, &pose);
        assert!((polar.range - 125f64.sqrt()).abs() < 1e-12);
        assert!((polar.bearing - (-0.4636476090008061)).abs() < 1e-12);
        let g = RadarGrid::default();
        let p = project_to_bins(&[actor], &pose, &g).unwrap()[0];
        assert!((p.r_bin - 125f64.sqrt() / g.range_resolution()).abs() < 1e-9);
        let expect_a = (-0.4636476090008061 + g.azimuth_fov() / 2.0) / g.azimuth_fov() * 256.0;
        assert!((p.a_bin - expect_a).abs() < 1e-9);
    }

    #[test]
    fn rotation_shifts_bearing_only() {
        let actor = ActorPoint::new(10.0, 2.0, 0.0, 0.0, 1.0, 1).unwrap();
        let before = actor_polar(&actor, &SensorPose::default());
        let after = actor_polar(&actor, &SensorPose::new(0.0, 0.0, 0.2, 0.0, 0.0).unwrap());
        assert!((after.bearing - (before.bearing - 0.2)).abs() < 1e-12);
        assert_eq!(after.range, before.range);
    }

    #[test]
    fn remove_actor_contract() {
        let pts = vec![
            ReflectionPoint::scene(10.0, 5.0, 20.0, 1.0, Some(4)).unwrap(),
            ReflectionPoint::scene(40.0, 9.0, 30.0, 2.0, Some(9)).unwrap(),
            ReflectionPoint::noise(3.0, 3.0, 3.0, 0.01).unwrap(),
        ];
        let edited = remove_actor(&pts, 4, 0.02).unwrap();
        assert_eq!(edited.len(), 3);
        assert_eq!(edited[0].intensity, 0.02);
        assert_eq!(edited[0].kind, PointKind::Noise);
        assert_eq!(edited[0].actor_id, None);
        assert_eq!(&edited[1..], &pts[1..]);
        match remove_actor(&pts, 5, 0.0) {
            Err(Error::UnknownActor { id: 5, known }) => assert_eq!(known, vec![4, 9]),
            other => panic!("{other:?}"),
        }
        assert!(remove_actor(&pts, 4, -1.0).is_err());
    }

    #[test]
    fn removal_at_original_intensity_keeps_cube() {
        let pts = vec![
            ReflectionPoint::scene(10.0, 5.0, 20.0, 1.0, Some(4)).unwrap(),
            ReflectionPoint::noise(30.0, 3.0, 3.0, 0.01).unwrap(),
        ];
        let before = synthesize_fast(&pts, &params(), &grid()).unwrap();
        let edited = remove_actor(&pts, 4, 1.0).unwrap();
        let after = synthesize_fast(&edited, &params(), &grid()).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn removal_is_local() {
        let g = grid();
        let pts = vec![
            ReflectionPoint::scene(10.3, 5.2, 20.6, 1.0, Some(4)).unwrap(),
            ReflectionPoint::scene(40.0, 9.0, 30.0, 2.0, Some(9)).unwrap(),
            ReflectionPoint::noise(12.0, 6.0, 3.0, 0.01).unwrap(),
        ];
        let before = synthesize_fast(&pts, &params(), &g).unwrap();
        let after = synthesize_fast(&remove_actor(&pts, 4, 0.0).unwrap(), &params(), &g).unwrap();
        let alone = synthesize_naive_single(&pts[0], &g);
        for (i, ((b, a), k)) in before
            .values()
            .iter()
            .zip(after.values())
            .zip(alone.values())
            .enumerate()
        {
            if *k == 0.0 {
                assert_eq!(b, a, "cell {i} outside the support changed");
            }
        }
    }

    fn synthesize_naive_single(p: &ReflectionPoint, g: &RadarGrid) -> RadarCube {
        crate::synthesis::synthesize_naive(std::slice::from_ref(p), &params(), g).unwrap()
    }

    #[test]
    fn same_params_same_cube() {
        let pts = vec![ReflectionPoint::scene(10.3, 5.2, 20.6, 1.0, Some(4)).unwrap()];
        let a = synthesize_fast(&pts, &params(), &grid()).unwrap();
        let b = modify_attributes(&pts, &params(), &grid()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn changing_g_rescales_ra_image() {
        let pts = vec![
            ReflectionPoint::scene(14.3, 7.6, 30.2, 1.0, Some(1)).unwrap(),
            ReflectionPoint::scene(45.8, 8.3, 25.7, 0.7, Some(2)).unwrap(),
        ];
        let g = grid();
        let a = ra_projection(&modify_attributes(&pts, &params(), &g).unwrap());
        let b = ra_projection(&modify_attributes(&pts, &params().with_g(0.5).unwrap(), &g).unwrap());
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x / 1.2 - y / 1.0).abs() <= 1e-12 * x.max(1e-300));
        }
    }

    #[test]
    fn doubling_sigma_doubles_fitted_sigma() {
        let pts = vec![ReflectionPoint::scene(30.2, 7.6, 30.2, 1.0, Some(1)).unwrap()];
        let g = RadarGrid::new(96, 16, 64, 0.4, 0.13, 1.5).unwrap();
        let narrow = WaveformParams::new(2.5, 0.6, 8, 0.1, 2.0).unwrap();
        let wide = narrow.with_sigma(5.0).unwrap();
        let opts = FitOptions {
            sigma_max: 5.6,
            ..Default::default()
        };
        let fit = |p: &WaveformParams| {
            let cube = modify_attributes(&pts, p, &g).unwrap();
            fit_waveform_params_with(&cube, &pts, 64, &opts).unwrap().params.sigma()
        };
        assert!((fit(&wide) / fit(&narrow) - 2.0).abs() < 0.02);
    }

    #[test]
    fn median_noise() {
        let pts = vec![
            ReflectionPoint::noise(1.0, 1.0, 1.0, 0.3).unwrap(),
            ReflectionPoint::noise(1.0, 1.0, 1.0, 0.1).unwrap(),
            ReflectionPoint::scene(1.0, 1.0, 1.0, 9.0, Some(1)).unwrap(),
        ];
        assert!((median_noise_intensity(&pts).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(median_noise_intensity(&pts[2..]), None);
    }
}
