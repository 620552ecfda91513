//! Cube comparison metrics and 2D max projections.
//!
//! The Fréchet distance here uses fixed 16x16 block-mean pixel features of the
//! range-azimuth projections. Its values are not comparable to Inception-based
//! FID scores.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cube::{RadarCube, ScenePointSet};
use crate::error::{Error, Result};

/// Side length of the block-mean feature grid.
pub const FEATURE_SIDE: usize = 16;

/// Row-major 2D image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} values for a {rows}x{cols} image",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image"));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// Max over the Doppler axis; rows are range bins, columns azimuth bins.
pub fn ra_projection(cube: &RadarCube) -> Image {
    let [nr, nd, na] = cube.dims();
    let mut values = vec![0.0; nr * na];
    for r in 0..nr {
        let out = &mut values[r * na..(r + 1) * na];
        for d in 0..nd {
            for (o, &v) in out.iter_mut().zip(cube.row(r, d)) {
                *o = f64::max(*o, v);
            }
        }
    }
    Image {
        rows: nr,
        cols: na,
        values,
    }
}

/// Max over the azimuth axis; rows are range bins, columns Doppler bins.
pub fn rd_projection(cube: &RadarCube) -> Image {
    let [nr, nd, _] = cube.dims();
    let mut values = Vec::with_capacity(nr * nd);
    for r in 0..nr {
        for d in 0..nd {
            values.push(cube.row(r, d).iter().copied().fold(0.0, f64::max));
        }
    }
    Image {
        rows: nr,
        cols: nd,
        values,
    }
}

/// Mean absolute elementwise difference.
pub fn ppe(sim: &RadarCube, gt: &RadarCube) -> Result<f64> {
    sim.same_dims(gt)?;
    let total: f64 = sim
        .values()
        .iter()
        .zip(gt.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(total / sim.values().len() as f64)
}

/// Sum of absolute differences over the scene bins.
pub fn ppe_scene_sum(sim: &RadarCube, gt: &RadarCube, scene: &ScenePointSet) -> Result<f64> {
    sim.same_dims(gt)?;
    if scene.is_empty() {
        return Err(Error::EmptyScenePointSet);
    }
    let [nr, nd, na] = sim.dims();
    let mut total = 0.0;
    for &(r, d, a) in scene.indices() {
        if r >= nr || d >= nd || a >= na {
            return Err(Error::ScenePointOutOfBounds(r, d, a));
        }
        total += (sim.get(r, d, a) - gt.get(r, d, a)).abs();
    }
    Ok(total)
}

/// Mean absolute difference over the scene bins.
pub fn ppe_scene(sim: &RadarCube, gt: &RadarCube, scene: &ScenePointSet) -> Result<f64> {
    Ok(ppe_scene_sum(sim, gt, scene)? / scene.len() as f64)
}

/// Unnormalized forward 3D DFT of a row-major `[n0, n1, n2]` array.
pub fn fft3(values: &[f64], dims: [usize; 3]) -> Vec<Complex<f64>> {
    let [n0, n1, n2] = dims;
    assert_eq!(values.len(), n0 * n1 * n2);
    let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();

    let fft2 = planner.plan_fft_forward(n2);
    fft2.process(&mut data);

    let fft1 = planner.plan_fft_forward(n1);
    let mut line = vec![Complex::new(0.0, 0.0); n1];
    for i0 in 0..n0 {
        for i2 in 0..n2 {
            for (i1, c) in line.iter_mut().enumerate() {
                *c = data[(i0 * n1 + i1) * n2 + i2];
            }
            fft1.process(&mut line);
            for (i1, c) in line.iter().enumerate() {
                data[(i0 * n1 + i1) * n2 + i2] = *c;
            }
        }
    }

    let fft0 = planner.plan_fft_forward(n0);
    let mut line = vec![Complex::new(0.0, 0.0); n0];
    let plane = n1 * n2;
    for j in 0..plane {
        for (i0, c) in line.iter_mut().enumerate() {
            *c = data[i0 * plane + j];
        }
        fft0.process(&mut line);
        for (i0, c) in line.iter().enumerate() {
            data[i0 * plane + j] = *c;
        }
    }
    data
}

/// Mean magnitude of the spectral difference, computed as the spectrum of the
/// difference.
pub fn ppse(sim: &RadarCube, gt: &RadarCube) -> Result<f64> {
    sim.same_dims(gt)?;
    let diff: Vec<f64> = sim
        .values()
        .iter()
        .zip(gt.values())
        .map(|(a, b)| a - b)
        .collect();
    let spec = fft3(&diff, sim.dims());
    Ok(spec.iter().map(|c| c.norm()).sum::<f64>() / spec.len() as f64)
}

/// 256-dim block means over a 16x16 partition; block `i` along an axis of
/// length `n` spans `floor(i n / 16) .. max(floor((i + 1) n / 16), that + 1)`.
pub fn block_mean_features(image: &Image) -> Vec<f64> {
    let edges = |n: usize| -> Vec<(usize, usize)> {
        (0..FEATURE_SIDE)
            .map(|i| {
                let lo = (i * n / FEATURE_SIDE).min(n - 1);
                let hi = ((i + 1) * n / FEATURE_SIDE).max(lo + 1).min(n);
                (lo, hi)
            })
            .collect()
    };
    let rows = edges(image.rows);
    let cols = edges(image.cols);
    let mut out = Vec::with_capacity(FEATURE_SIDE * FEATURE_SIDE);
    for &(r0, r1) in &rows {
        for &(c0, c1) in &cols {
            let mut sum = 0.0;
            for r in r0..r1 {
                for c in c0..c1 {
                    sum += image.get(r, c);
                }
            }
            out.push(sum / ((r1 - r0) * (c1 - c0)) as f64);
        }
    }
    out
}

fn feature_matrix(images: &[Image]) -> Result<DMatrix<f64>> {
    let first = &images[0];
    let mut m = DMatrix::zeros(images.len(), FEATURE_SIDE * FEATURE_SIDE);
    for (i, img) in images.iter().enumerate() {
        if (img.rows, img.cols) != (first.rows, first.cols) {
            return Err(Error::DimensionMismatch(
                format!("{}x{}", first.rows, first.cols),
                format!("{}x{}", img.rows, img.cols),
            ));
        }
        for (j, v) in block_mean_features(img).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Feature mean and the centered features scaled so that `X^T X` is the
/// sample covariance.
fn moments(images: &[Image]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mut x = feature_matrix(images)?;
    let n = x.nrows();
    let mean = DVector::from_fn(x.ncols(), |j, _| x.column(j).sum() / n as f64);
    let scale = 1.0 / ((n - 1) as f64).sqrt();
    for mut row in x.row_iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - mean[j]) * scale;
        }
    }
    Ok((mean, x))
}

/// Fréchet distance between Gaussians fitted to block-mean features.
///
/// With `X_a, X_b` the scaled centered feature matrices, `Tr sqrt(S_a S_b)` is
/// the nuclear norm of `X_a X_b^T`, which avoids forming the 256x256
/// covariances and stays accurate for rank-deficient sets.
pub fn frechet_stats_distance(images_a: &[Image], images_b: &[Image]) -> Result<f64> {
    if images_a.len() < 2 || images_b.len() < 2 {
        return Err(Error::TooFewImages(images_a.len(), images_b.len()));
    }
    let (mu_a, xa) = moments(images_a)?;
    let (mu_b, xb) = moments(images_b)?;
    if (images_a[0].rows, images_a[0].cols) != (images_b[0].rows, images_b[0].cols) {
        return Err(Error::DimensionMismatch(
            format!("{}x{}", images_a[0].rows, images_a[0].cols),
            format!("{}x{}", images_b[0].rows, images_b[0].cols),
        ));
    }
    let cross = &xa * xb.transpose();
    let nuclear: f64 = cross.singular_values().iter().sum();
    let d = (&mu_a - &mu_b).norm_squared() + xa.norm_squared() + xb.norm_squared()
        - 2.0 * nuclear;
    Ok(d.max(0.0))
}

/// Fréchet distance from explicit moments, using the symmetric eigensolver on
/// `S_a^{1/2} S_b S_a^{1/2}` with negative eigenvalues clamped to zero.
pub fn frechet_from_moments(
    mu_a: &DVector<f64>,
    cov_a: &DMatrix<f64>,
    mu_b: &DVector<f64>,
    cov_b: &DMatrix<f64>,
) -> Result<f64> {
    let n = mu_a.len();
    if mu_b.len() != n || cov_a.shape() != (n, n) || cov_b.shape() != (n, n) {
        return Err(Error::InvalidInput("moment dimensions disagree".into()));
    }
    let sqrt_a = psd_sqrt(cov_a);
    let m = &sqrt_a * cov_b * &sqrt_a;
    let m = (&m + m.transpose()) * 0.5;
    let tr_sqrt: f64 = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let d = (mu_a - mu_b).norm_squared() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
    Ok(d.max(0.0))
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Sample mean and covariance of the block-mean features.
pub fn feature_moments(images: &[Image]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if images.len() < 2 {
        return Err(Error::TooFewImages(images.len(), images.len()));
    }
    let (mean, x) = moments(images)?;
    let cov = x.transpose() * x;
    Ok((mean, cov))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ppe: f64,
    /// Mean over the scene bins; absent without a scene point set.
    pub ppe_scene: Option<f64>,
    /// Sum over the scene bins.
    pub ppe_scene_sum: Option<f64>,
    pub ppse: f64,
    pub frechet: Option<f64>,
    pub cells: usize,
    pub scene_cells: usize,
}

impl MetricReport {
    pub fn compute(sim: &RadarCube, gt: &RadarCube, scene: Option<&ScenePointSet>) -> Result<Self> {
        let (ppe_scene_mean, ppe_scene_total, scene_cells) = match scene {
            Some(s) => (
                Some(ppe_scene(sim, gt, s)?),
                Some(ppe_scene_sum(sim, gt, s)?),
                s.len(),
            ),
            None => (None, None, 0),
        };
        Ok(Self {
            ppe: ppe(sim, gt)?,
            ppe_scene: ppe_scene_mean,
            ppe_scene_sum: ppe_scene_total,
            ppse: ppse(sim, gt)?,
            frechet: None,
            cells: sim.values().len(),
            scene_cells,
        })
    }
}
