//! Retina-inspired preprocessing: luma conversion, automatic downsampling,
//! Laplacian-of-Gaussian filtering and the saturating nonlinearity.
//!
//! The filtered output feeds the patch coder; its zero-sum kernel makes the
//! representation invariant to constant luma offsets.

use crate::error::{Error, Result};
use crate::raster::Grid;

/// Standard deviation of the retinal LoG filter.
pub const LOG_SIGMA: f64 = 1.5;

/// Image whose samples lie strictly inside `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedImage {
    grid: Grid,
}

impl PreprocessedImage {
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn values(&self) -> &Grid {
        &self.grid
    }
}

/// Convert interleaved 8-bit RGB to luma in `[0, 1]` with BT.601 weights.
pub fn to_luma(rgb: &[u8], width: usize, height: usize) -> Result<Grid> {
    if rgb.len() != width * height * 3 {
        return Err(Error::invalid(format!(
            "RGB buffer length {} does not match {}x{}x3",
            rgb.len(),
            width,
            height
        )));
    }
    let data = rgb
        .chunks_exact(3)
        .map(|px| {
            let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
            (y / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    Grid::new(width, height, data)
}

/// Downsampling factor: `max(1, round(min(w, h) / 256))`.
pub fn downsample_factor(width: usize, height: usize) -> usize {
    let f = (width.min(height) as f64 / 256.0).round() as usize;
    f.max(1)
}

/// Low-pass a luma grid (values in `[0, 1]`) with an FxF box kernel and
/// decimate by F, where `F = max(1, round(min(w, h) / 256))`. `F = 1`
/// returns the input unchanged. Trailing rows/columns that do not fill a
/// full box are dropped.
pub fn auto_downsample(img: &Grid) -> Grid {
    let f = downsample_factor(img.width(), img.height());
    if f == 1 {
        return img.clone();
    }
    let ow = img.width() / f;
    let oh = img.height() / f;
    let count = (f * f) as f64;
    let mut data = Vec::with_capacity(ow * oh);
    for by in 0..oh {
        for bx in 0..ow {
            let mut acc = 0.0;
            for dy in 0..f {
                let row = img.row(by * f + dy);
                for dx in 0..f {
                    acc += row[bx * f + dx];
                }
            }
            // Accumulated rounding can push the mean of saturated blocks one
            // ulp past the input range; pin it back.
            data.push((acc / count).clamp(0.0, 1.0));
        }
    }
    Grid::new(ow, oh, data).expect("downsampled dimensions are valid")
}

/// A square convolution kernel with odd side length.
#[derive(Debug, Clone)]
pub struct Kernel {
    side: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn at(&self, kx: usize, ky: usize) -> f64 {
        self.data[ky * self.side + kx]
    }
}

/// Discrete Laplacian-of-Gaussian with support side `2*ceil(3*sigma) + 1`,
/// mean-centered so the kernel sums to zero exactly up to rounding.
pub fn log_kernel(sigma: f64) -> Result<Kernel> {
    let valid = sigma.is_finite() && sigma > 0.0;
    if !valid {
        return Err(Error::invalid("LoG sigma must be positive and finite"));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let side = (2 * radius + 1) as usize;
    let s2 = sigma * sigma;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * s2);
    let mut data = Vec::with_capacity(side * side);
    for y in -radius..=radius {
        for x in -radius..=radius {
            let r2 = (x * x + y * y) as f64;
            let g = norm * (-r2 / (2.0 * s2)).exp();
            data.push((r2 - 2.0 * s2) / (s2 * s2) * g);
        }
    }
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    for v in &mut data {
        *v -= mean;
    }
    Ok(Kernel { side, data })
}

/// 2D convolution with half-sample symmetric (mirror) boundary handling.
pub fn convolve_mirror(img: &Grid, kernel: &Kernel) -> Grid {
    let radius = (kernel.side / 2) as isize;
    let mut data = Vec::with_capacity(img.width() * img.height());
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut acc = 0.0;
            for ky in -radius..=radius {
                for kx in -radius..=radius {
                    let k = kernel.at((kx + radius) as usize, (ky + radius) as usize);
                    acc += k * img.get_mirror(x - kx, y - ky);
                }
            }
            data.push(acc);
        }
    }
    Grid::new(img.width(), img.height(), data).expect("same dimensions as input")
}

/// LGN-style preprocessing: LoG filter (sigma 1.5) followed by
/// `tanh(2*pi*response)`, keeping every sample strictly inside `(-1, 1)`.
pub fn preprocess(luma: &Grid) -> PreprocessedImage {
    let kernel = log_kernel(LOG_SIGMA).expect("fixed sigma is valid");
    preprocess_with(luma, &kernel)
}

/// Same as [`preprocess`] but with a caller-provided kernel, so batch callers
/// can build the kernel once.
pub fn preprocess_with(luma: &Grid, kernel: &Kernel) -> PreprocessedImage {
    let mut filtered = convolve_mirror(luma, kernel);
    let two_pi = 2.0 * std::f64::consts::PI;
    for v in filtered.data_mut() {
        *v = (two_pi * *v).tanh();
    }
    PreprocessedImage { grid: filtered }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_weights() {
        let g = to_luma(&[255, 255, 255, 0, 0, 0, 255, 0, 0], 3, 1).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.get(1, 0), 0.0);
        assert!((g.get(2, 0) - 0.299).abs() < 1e-12);
    }

    #[test]
    fn luma_rejects_bad_buffer() {
        assert!(to_luma(&[0, 0], 1, 1).is_err());
    }

    #[test]
    fn downsample_identity_at_256() {
        let img = Grid::filled(256, 256, 0.25);
        let out = auto_downsample(&img);
        assert_eq!(out.width(), 256);
        assert_eq!(out, img);
    }

    #[test]
    fn downsample_1024_to_256() {
        let img = Grid::filled(1024, 1024, 0.7);
        let out = auto_downsample(&img);
        assert_eq!((out.width(), out.height()), (256, 256));
        assert!(out.data().iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn downsample_constant_stays_constant() {
        let img = Grid::filled(600, 400, 0.3);
        let out = auto_downsample(&img);
        assert_eq!((out.width(), out.height()), (300, 200));
        assert!(out.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn downsample_keeps_saturated_images_in_range() {
        // Odd factor (F = 3): the box mean of all-ones blocks must not land
        // one ulp above 1.0.
        let img = Grid::filled(768, 768, 1.0);
        let out = auto_downsample(&img);
        assert_eq!((out.width(), out.height()), (256, 256));
        assert!(out.data().iter().all(|v| *v <= 1.0 && *v >= 0.0));
        crate::raster::ErpImage::new(out).unwrap();
    }

    #[test]
    fn log_kernel_shape_and_sum() {
        let k = log_kernel(1.5).unwrap();
        assert_eq!(k.side(), 11);
        let sum: f64 = k.data().iter().sum();
        assert!(sum.abs() < 1e-12, "kernel sum {sum}");
    }

    #[test]
    fn log_kernel_is_radially_symmetric() {
        let k = log_kernel(1.5).unwrap();
        let side = k.side();
        for y in 0..side {
            for x in 0..side {
                let a = k.at(x, y);
                assert_eq!(a, k.at(side - 1 - x, side - 1 - y));
                assert_eq!(a, k.at(y, x));
            }
        }
    }

    #[test]
    fn log_kernel_rejects_nonpositive_sigma() {
        assert!(log_kernel(0.0).is_err());
        assert!(log_kernel(-1.0).is_err());
    }

    #[test]
    fn preprocess_constant_is_zero() {
        let img = Grid::filled(32, 24, 0.42);
        let out = preprocess(&img);
        assert!(out.values().data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn preprocess_is_bounded() {
        let mut img = Grid::filled(20, 20, 0.0);
        for y in 0..20 {
            for x in 0..20 {
                img.set(x, y, if (x + y) % 2 == 0 { 1.0 } else { 0.0 });
            }
        }
        let out = preprocess(&img);
        assert!(out.values().data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn step_edge_response_is_antisymmetric() {
        // Vertical step 0 -> 1 between columns 31 and 32 of a 64-wide image.
        let w = 64;
        let mut img = Grid::filled(w, 16, 0.0);
        for y in 0..16 {
            for x in 32..w {
                img.set(x, y, 1.0);
            }
        }
        let out = preprocess(&img);
        let y = 8;
        for t in 0..6 {
            let right = out.values().get(32 + t, y);
            let left = out.values().get(31 - t, y);
            assert!(
                (left + right).abs() < 1e-9,
                "offset {t}: {left} vs {right}"
            );
        }
    }

    #[test]
    fn preprocess_ignores_constant_offset() {
        let mut img = Grid::filled(24, 24, 0.0);
        for y in 0..24 {
            for x in 0..24 {
                img.set(x, y, 0.5 * ((x * 7 + y * 3) % 5) as f64 / 5.0);
            }
        }
        let mut shifted = img.clone();
        for v in shifted.data_mut() {
            *v += 0.2;
        }
        let a = preprocess(&img);
        let b = preprocess(&shifted);
        for (x, y) in a.values().data().iter().zip(b.values().data()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn preprocess_is_deterministic() {
        let mut img = Grid::filled(16, 16, 0.0);
        for (i, v) in img.data_mut().iter_mut().enumerate() {
            *v = (i % 13) as f64 / 13.0;
        }
        let a = preprocess(&img);
        let b = preprocess(&img);
        assert_eq!(a.values().data(), b.values().data());
    }
}
