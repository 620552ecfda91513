//! Grayscale PNG views of the RA and RD max projections.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cube::RadarCube;
use crate::error::{Error, Result};
use crate::metrics::{ra_projection, rd_projection, Image};

/// Min-max normalized 8-bit pixels, `round(255 (v - min) / (max - min))`.
/// A flat image maps to all zeros.
pub fn to_gray(image: &Image) -> Vec<u8> {
    let (lo, hi) = image
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    image
        .values()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                (255.0 * (v - lo) / span).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// Rows of the image become PNG rows.
pub fn encode_png(image: &Image) -> Result<Vec<u8>> {
    let width = u32::try_from(image.cols())
        .map_err(|_| Error::InvalidInput("image too wide for PNG".into()))?;
    let height = u32::try_from(image.rows())
        .map_err(|_| Error::InvalidInput("image too tall for PNG".into()))?;
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, width, height);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&to_gray(image))?;
    writer.finish()?;
    Ok(out)
}

/// Writes `<prefix>_ra.png` (range x azimuth) and `<prefix>_rd.png`
/// (range x Doppler) and returns their paths.
pub fn render_slices(cube: &RadarCube, prefix: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let prefix = prefix.as_ref().as_os_str().to_owned();
    let with_suffix = |s: &str| {
        let mut p = prefix.clone();
        p.push(s);
        PathBuf::from(p)
    };
    let (ra_path, rd_path) = (with_suffix("_ra.png"), with_suffix("_rd.png"));
    for (path, image) in [
        (&ra_path, ra_projection(cube)),
        (&rd_path, rd_projection(cube)),
    ] {
        fs::write(path, encode_png(&image)?).map_err(|e| Error::io(path, e))?;
    }
    Ok((ra_path, rd_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadarGrid;

    fn grid() -> RadarGrid {
        RadarGrid::new(12, 8, 10, 1.0, 1.0, 1.0).unwrap()
    }

    fn decode(bytes: &[u8]) -> (u32, u32, Vec<u8>) {
        let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!(info.color_type, png::ColorType::Grayscale);
        assert_eq!(info.bit_depth, png::BitDepth::Eight);
        buf.truncate(info.buffer_size());
        (info.width, info.height, buf)
    }

    #[test]
    fn zero_cube_is_black() {
        let cube = RadarCube::zeros(grid());
        let (w, h, px) = decode(&encode_png(&ra_projection(&cube)).unwrap());
        assert_eq!((w, h), (10, 12));
        assert!(px.iter().all(|&p| p == 0));
    }

    #[test]
    fn hot_cell_is_one_white_pixel() {
        let mut cube = RadarCube::zeros(grid());
        cube.set(7, 2, 4, 3.5).unwrap();
        let (w, _, ra) = decode(&encode_png(&ra_projection(&cube)).unwrap());
        let white: Vec<usize> = (0..ra.len()).filter(|&i| ra[i] == 255).collect();
        assert_eq!(white, vec![7 * w as usize + 4]);
        assert_eq!(ra.iter().filter(|&&p| p != 0).count(), 1);

        let (w, _, rd) = decode(&encode_png(&rd_projection(&cube)).unwrap());
        assert_eq!(w, 8);
        let white: Vec<usize> = (0..rd.len()).filter(|&i| rd[i] == 255).collect();
        assert_eq!(white, vec![7 * 8 + 2]);
    }

    #[test]
    fn gray_levels_round() {
        let img = Image::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(to_gray(&img), vec![0, 128, 255]);
    }

    #[test]
    fn files_are_deterministic() {
        let g = grid();
        let values = (0..g.len()).map(|i| ((i * 31) % 17) as f64).collect();
        let cube = RadarCube::from_vec(g, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (ra1, rd1) = render_slices(&cube, dir.path().join("a")).unwrap();
        let (ra2, rd2) = render_slices(&cube, dir.path().join("b")).unwrap();
        assert!(ra1.ends_with("a_ra.png") && rd1.ends_with("a_rd.png"));
        assert_eq!(fs::read(ra1).unwrap(), fs::read(ra2).unwrap());
        assert_eq!(fs::read(rd1).unwrap(), fs::read(rd2).unwrap());
        assert!(render_slices(&cube, dir.path().join("missing/x")).is_err());
    }
}
