//! Filter visualisation as binary PGM (P5) images.

use std::fs;
use std::path::Path;

use srbm_core::data::MNIST_SIDE;
use srbm_core::{ModelParams, RbmParams};

use crate::error::{Error, Result};

/// Pixels between neighbouring tiles.
pub const SEPARATOR: usize = 2;
/// Gray level of separators and unused cells.
pub const SEPARATOR_LEVEL: u8 = 255;
/// Level used for a tile whose weights are all equal.
pub const FLAT_LEVEL: u8 = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Min-max normalises a tile to 0..=255.
pub fn normalise_tile(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return vec![FLAT_LEVEL; values.len()];
    }
    values.iter().map(|v| (255.0 * (v - lo) / range).round() as u8).collect()
}

/// Lays out square tiles on a `rows × cols` grid; `tile(r, c)` returns `None`
/// for empty cells.
fn tile_grid<F>(rows: usize, cols: usize, mut tile: F) -> GrayImage
where
    F: FnMut(usize, usize) -> Option<Vec<f64>>,
{
    let t = MNIST_SIDE;
    let width = cols * t + (cols - 1) * SEPARATOR;
    let height = rows * t + (rows - 1) * SEPARATOR;
    let mut pixels = vec![SEPARATOR_LEVEL; width * height];
    for r in 0..rows {
        for c in 0..cols {
            let Some(values) = tile(r, c) else { continue };
            let levels = normalise_tile(&values);
            let (x0, y0) = (c * (t + SEPARATOR), r * (t + SEPARATOR));
            for y in 0..t {
                let row = (y0 + y) * width + x0;
                pixels[row..row + t].copy_from_slice(&levels[y * t..(y + 1) * t]);
            }
        }
    }
    GrayImage { width, height, pixels }
}

fn check_visible(visible: usize) -> Result<()> {
    if visible != MNIST_SIDE * MNIST_SIDE {
        return Err(Error::UnsupportedShape(format!(
            "filter export needs {} visible units, model has {visible}",
            MNIST_SIDE * MNIST_SIDE
        )));
    }
    Ok(())
}

/// One row per gate, holding that gate's `K` subspace filters side by side.
pub fn subspace_filters(p: &ModelParams) -> Result<GrayImage> {
    let shape = p.shape();
    check_visible(shape.visible())?;
    let d = shape.visible();
    Ok(tile_grid(shape.gates(), shape.subspace(), |j, k| {
        Some((0..d).map(|i| p.weight(i, j, k)).collect())
    }))
}

/// Hidden-unit filters on a near-square grid, filled row by row.
pub fn rbm_filters(p: &RbmParams) -> Result<GrayImage> {
    check_visible(p.visible())?;
    let m = p.hidden();
    let cols = (1..=m).find(|c| c * c >= m).unwrap_or(1);
    let rows = m.div_ceil(cols);
    let w = p.w();
    Ok(tile_grid(rows, cols, |r, c| {
        let j = r * cols + c;
        (j < m).then(|| (0..p.visible()).map(|i| w[i * m + j]).collect())
    }))
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    fs::write(path, image.to_pgm()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use srbm_core::Shape;

    #[test]
    fn normalisation() {
        assert_eq!(normalise_tile(&[-1.0, 0.0, 1.0]), vec![0, 128, 255]);
        assert_eq!(normalise_tile(&[0.3; 4]), vec![128; 4]);
    }

    #[test]
    fn rbm_grid_is_square_ish() {
        let p = RbmParams::zeros(784, 5).unwrap();
        let img = rbm_filters(&p).unwrap();
        assert_eq!((img.width, img.height), (3 * 28 + 4, 2 * 28 + 2));
        assert_eq!(img.get(img.width - 1, img.height - 1), SEPARATOR_LEVEL);
        assert_eq!(img.get(0, 0), FLAT_LEVEL);
    }

    #[test]
    fn rejects_non_mnist_models() {
        let p = ModelParams::zeros(Shape::new(10, 2, 2).unwrap());
        assert!(matches!(subspace_filters(&p), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn header() {
        let img = GrayImage {
            width: 2,
            height: 1,
            pixels: vec![0, 255],
        };
        assert_eq!(img.to_pgm(), b"P5\n2 1\n255\n\x00\xff");
    }
}
