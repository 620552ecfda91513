use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadarGrid;

/// Dense non-negative range x Doppler x azimuth tensor.
///
/// Values are stored row-major with range outermost and azimuth innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCube {
    grid: RadarGrid,
    values: Vec<f64>,
}

impl RadarCube {
    pub fn zeros(grid: RadarGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_vec(grid: RadarGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a {grid} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("radar cube"));
        }
        if let Some(i) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "negative cube value {} at element {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Skips validation; callers guarantee finite, non-negative values.
    pub(crate) fn from_vec_unchecked(grid: RadarGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &RadarGrid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, d: usize, a: usize) -> f64 {
        self.values[self.grid.index(r, d, a)]
    }

    /// Writes a value, rejecting anything negative or non-finite.
    pub fn set(&mut self, r: usize, d: usize, a: usize, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::NonFinite("radar cube"));
        }
        if v < 0.0 {
            return Err(Error::InvalidInput(format!("negative cube value {v}")));
        }
        let i = self.grid.index(r, d, a);
        self.values[i] = v;
        Ok(())
    }

    /// Contiguous azimuth row at `(r, d)`.
    pub fn row(&self, r: usize, d: usize) -> &[f64] {
        let start = self.grid.index(r, d, 0);
        &self.values[start..start + self.grid.n_azimuth()]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `(r, d, a)` of the largest value; first occurrence wins.
    pub fn argmax(&self) -> (usize, usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        self.unravel(best)
    }

    pub fn unravel(&self, i: usize) -> (usize, usize, usize) {
        let na = self.grid.n_azimuth();
        let nd = self.grid.n_doppler();
        (i / (nd * na), (i / na) % nd, i % na)
    }

    /// Every value multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidInput(format!("scale factor {c}")));
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        })
    }

    pub fn same_dims(&self, other: &RadarCube) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(
                self.grid.to_string(),
                other.grid.to_string(),
            ));
        }
        Ok(())
    }

    /// Frobenius norm of the difference divided by the norm of `reference`.
    pub fn relative_frobenius_error(&self, reference: &RadarCube) -> Result<f64> {
        self.same_dims(reference)?;
        let mut diff = 0.0;
        let mut norm = 0.0;
        for (a, b) in self.values.iter().zip(&reference.values) {
            diff += (a - b) * (a - b);
            norm += b * b;
        }
        Ok(if norm == 0.0 {
            diff.sqrt()
        } else {
            (diff / norm).sqrt()
        })
    }
}

/// Integer bins occupied by scene reflection points.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenePointSet {
    indices: Vec<(usize, usize, usize)>,
}

impl ScenePointSet {
    /// Sorts and de-duplicates `indices`, checking them against `grid`.
    pub fn new(mut indices: Vec<(usize, usize, usize)>, grid: &RadarGrid) -> Result<Self> {
        for &(r, d, a) in &indices {
            if r >= grid.n_range() || d >= grid.n_doppler() || a >= grid.n_azimuth() {
                return Err(Error::ScenePointOutOfBounds(r, d, a));
            }
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices })
    }

    /// Every cell of `grid`.
    pub fn full(grid: &RadarGrid) -> Self {
        let mut indices = Vec::with_capacity(grid.len());
        for r in 0..grid.n_range() {
            for d in 0..grid.n_doppler() {
                for a in 0..grid.n_azimuth() {
                    indices.push((r, d, a));
                }
            }
        }
        Self { indices }
    }

    pub fn indices(&self) -> &[(usize, usize, usize)] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, idx: (usize, usize, usize)) -> bool {
        self.indices.binary_search(&idx).is_ok()
    }
}
