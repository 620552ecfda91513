//! Binary cube files.
//!
//! ```text
//! offset size  field
//! 0      4     magic "RADC"
//! 4      2     version, u16 LE = 1
//! 6      4     n_range, u32 LE
//! 10     4     n_doppler, u32 LE
//! 14     4     n_azimuth, u32 LE
//! 18     1     dtype: 0 = f32 LE, 1 = f64 LE
//! 19     ...   values, range outermost, azimuth innermost
//! ```

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cube::RadarCube;
use crate::error::{CubeFormatError, Error, Result};
use crate::grid::RadarGrid;

pub const MAGIC: [u8; 4] = *b"RADC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

impl FromStr for Dtype {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f32" => Ok(Dtype::F32),
            "f64" => Ok(Dtype::F64),
            _ => Err(format!("unknown dtype `{s}`, expected f32 or f64")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeFileHeader {
    pub dims: [u32; 3],
    pub dtype: Dtype,
}

impl CubeFileHeader {
    /// Payload size in bytes; `None` when it overflows `usize`.
    pub fn payload_len(&self) -> Option<usize> {
        self.dims
            .iter()
            .try_fold(self.dtype.width(), |acc, &d| acc.checked_mul(d as usize))
    }
}

/// Serializes `cube`; f32 storage rounds each value to nearest.
pub fn encode_cube(cube: &RadarCube, dtype: Dtype) -> Result<Vec<u8>> {
    let dims = cube.dims();
    let mut out = Vec::with_capacity(HEADER_LEN + cube.values().len() * dtype.width());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in dims {
        let d = u32::try_from(d)
            .map_err(|_| Error::InvalidInput(format!("axis length {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.push(dtype.code());
    match dtype {
        Dtype::F32 => {
            for &v in cube.values() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Dtype::F64 => {
            for &v in cube.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_header(bytes: &[u8]) -> Result<CubeFileHeader, CubeFormatError> {
    if bytes.len() < MAGIC.len() {
        return Err(CubeFormatError::TruncatedHeader(bytes.len()));
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if magic != MAGIC {
        return Err(CubeFormatError::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(CubeFormatError::TruncatedHeader(bytes.len()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CubeFormatError::UnsupportedVersion(version));
    }
    let dim = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("length checked"));
    let dims = [dim(6), dim(10), dim(14)];
    let dtype = Dtype::from_code(bytes[18]).ok_or(CubeFormatError::UnsupportedDtype(bytes[18]))?;
    Ok(CubeFileHeader { dims, dtype })
}

/// Decodes a cube onto `template`'s resolutions with the file's bin counts.
pub fn decode_cube(bytes: &[u8], template: &RadarGrid) -> Result<RadarCube> {
    let header = decode_header(bytes)?;
    let [nr, nd, na] = header.dims;
    let payload = &bytes[HEADER_LEN..];
    let expected = header
        .payload_len()
        .ok_or(CubeFormatError::InvalidDims(nr, nd, na))?;
    if payload.len() < expected {
        return Err(CubeFormatError::TruncatedPayload {
            expected,
            found: payload.len(),
        }
        .into());
    }
    if payload.len() > expected {
        return Err(CubeFormatError::TrailingBytes(payload.len() - expected).into());
    }
    let grid = template
        .with_dims(nr as usize, nd as usize, na as usize)
        .map_err(|_| CubeFormatError::InvalidDims(nr, nd, na))?;
    let values: Vec<f64> = match header.dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    };
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(CubeFormatError::NonFiniteValue(i).into());
        }
        if *v < 0.0 {
            return Err(CubeFormatError::NegativeValue(i).into());
        }
    }
    Ok(RadarCube::from_vec_unchecked(grid, values))
}

pub fn write_cube(path: impl AsRef<Path>, cube: &RadarCube, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_cube(cube, dtype)?).map_err(|e| Error::io(path, e))
}

/// Reads a cube, taking resolutions and field of view from `template`.
pub fn read_cube_with(path: impl AsRef<Path>, template: &RadarGrid) -> Result<RadarCube> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cube(&bytes, template)
}

/// Reads a cube onto the default grid resolutions.
pub fn read_cube(path: impl AsRef<Path>) -> Result<RadarCube> {
    read_cube_with(path, &RadarGrid::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> RadarCube {
        let g = RadarGrid::new(8, 8, 9, 1.0, 1.0, 1.0).unwrap();
        let values = (0..g.len()).map(|i| (i as f64).sqrt() / 3.0).collect();
        RadarCube::from_vec(g, values).unwrap()
    }

    fn format_err(bytes: &[u8]) -> CubeFormatError {
        match decode_cube(bytes, &RadarGrid::default()) {
            Err(Error::CubeFormat(e)) => e,
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn f64_round_trip_is_bit_exact() {
        let c = cube();
        let bytes = encode_cube(&c, Dtype::F64).unwrap();
        let back = decode_cube(&bytes, c.grid()).unwrap();
        assert_eq!(back, c);
        assert_eq!(encode_cube(&back, Dtype::F64).unwrap(), bytes);
    }

    #[test]
    fn f32_file_round_trip_is_bit_exact() {
        let c = cube();
        let bytes = encode_cube(&c, Dtype::F32).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 8 * 9 * 4);
        let back = decode_cube(&bytes, c.grid()).unwrap();
        assert_eq!(encode_cube(&back, Dtype::F32).unwrap(), bytes);
        for (a, b) in back.values().iter().zip(c.values()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode_cube(&cube(), Dtype::F32).unwrap();
        assert_eq!(&bytes[..4], b"RADC");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[8, 0, 0, 0]);
        assert_eq!(&bytes[14..18], &[9, 0, 0, 0]);
        assert_eq!(bytes[18], 0);
    }

    #[test]
    fn distinct_errors() {
        let good = encode_cube(&cube(), Dtype::F32).unwrap();

        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert_eq!(format_err(&bad), CubeFormatError::BadMagic(*b"XXXX"));

        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(format_err(&bad), CubeFormatError::UnsupportedVersion(2));

        let mut bad = good.clone();
        bad[18] = 7;
        assert_eq!(format_err(&bad), CubeFormatError::UnsupportedDtype(7));

        assert_eq!(format_err(&good[..10]), CubeFormatError::TruncatedHeader(10));
        assert_eq!(
            format_err(&good[..good.len() - 1]),
            CubeFormatError::TruncatedPayload {
                expected: 8 * 8 * 9 * 4,
                found: 8 * 8 * 9 * 4 - 1
            }
        );
        let mut long = good.clone();
        long.push(0);
        assert_eq!(format_err(&long), CubeFormatError::TrailingBytes(1));

        let mut nan = good.clone();
        nan[HEADER_LEN + 8..HEADER_LEN + 12].copy_from_slice(&f32::NAN.to_le_bytes());
        assert_eq!(format_err(&nan), CubeFormatError::NonFiniteValue(2));

        let mut neg = good.clone();
        neg[HEADER_LEN + 4..HEADER_LEN + 8].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert_eq!(format_err(&neg), CubeFormatError::NegativeValue(1));

        assert_eq!(format_err(&two_cubed(8)), CubeFormatError::InvalidDims(2, 2, 2));
    }

    fn two_cubed(floats: usize) -> Vec<u8> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RADC");
        bytes.extend_from_slice(&1u16.to_le_bytes());
        for _ in 0..3 {
            bytes.extend_from_slice(&2u32.to_le_bytes());
        }
        bytes.push(0);
        bytes.extend(std::iter::repeat_n(0u8, floats * 4));
        bytes
    }

    #[test]
    fn short_payload_reported_before_dims() {
        assert_eq!(
            format_err(&two_cubed(7)),
            CubeFormatError::TruncatedPayload {
                expected: 32,
                found: 28
            }
        );
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.radc");
        write_cube(&path, &cube(), Dtype::F64).unwrap();
        assert_eq!(read_cube_with(&path, cube().grid()).unwrap(), cube());
        assert!(matches!(
            read_cube(dir.path().join("missing.radc")),
            Err(Error::Io { .. })
        ));
    }
}
