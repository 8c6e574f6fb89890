use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::orbit::SensorImage;

/// Zero-valued columns between the halves of a [`side_by_side`] image.
pub const SEPARATOR_WIDTH: usize = 2;
const MAXVAL: f64 = 65535.0;

/// Plain PGM (P2, maxval 65535), scaled so the brightest pixel is 65535.
/// Scaling is for display only; an all-zero image stays all zero.
pub fn write_pgm(image: &SensorImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (image.width(), image.height());
    let max = image.max();
    let scale = if max > 0.0 { MAXVAL / max } else { 0.0 };
    let mut out = format!("P2\n{w} {h}\n65535\n");
    for row in 0..h {
        for col in 0..w {
            let v = (image.get(row, col) * scale).round().clamp(0.0, MAXVAL) as u32;
            if col > 0 {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Concatenate two equally sized images with a dark separator and write
/// them as one PGM; both halves share one display scale.
pub fn side_by_side(left: &SensorImage, right: &SensorImage, path: impl AsRef<Path>) -> Result<()> {
    if left.width() != right.width() || left.height() != right.height() {
        return Err(Error::dim(
            "side_by_side",
            format!(
                "{}x{} vs {}x{}",
                left.width(),
                left.height(),
                right.width(),
                right.height()
            ),
        ));
    }
    let (w, h) = (left.width(), left.height());
    let total = 2 * w + SEPARATOR_WIDTH;
    let mut px = vec![0.0; total * h];
    for row in 0..h {
        for col in 0..w {
            px[row * total + col] = left.get(row, col);
            px[row * total + w + SEPARATOR_WIDTH + col] = right.get(row, col);
        }
    }
    write_pgm(&SensorImage::from_pixels(total, h, px)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(path: &Path) -> (usize, usize, Vec<u32>) {
        let text = fs::read_to_string(path).unwrap();
        let mut it = text.split_whitespace();
        assert_eq!(it.next(), Some("P2"));
        let w = it.next().unwrap().parse().unwrap();
        let h = it.next().unwrap().parse().unwrap();
        assert_eq!(it.next(), Some("65535"));
        (w, h, it.map(|t| t.parse().unwrap()).collect())
    }

    #[test]
    fn zero_image_writes_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.pgm");
        write_pgm(&SensorImage::zeros(3, 2), &p).unwrap();
        assert_eq!(values(&p), (3, 2, vec![0; 6]));
    }

    #[test]
    fn peak_maps_to_maxval() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let im = SensorImage::from_pixels(2, 2, vec![0.0, 0.25, 0.5, 0.125]).unwrap();
        write_pgm(&im, &p).unwrap();
        let (_, _, v) = values(&p);
        assert_eq!(v, vec![0, 32768, 65535, 16384]);
    }

    #[test]
    fn side_by_side_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.pgm");
        let a = SensorImage::from_pixels(3, 2, vec![1.0; 6]).unwrap();
        side_by_side(&a, &a, &p).unwrap();
        let (w, h, v) = values(&p);
        assert_eq!((w, h), (8, 2));
        assert_eq!(&v[..8], &[65535, 65535, 65535, 0, 0, 65535, 65535, 65535]);
        let b = SensorImage::zeros(2, 2);
        assert!(side_by_side(&a, &b, &p).is_err());
    }
}
