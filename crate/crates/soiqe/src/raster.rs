//! In-memory luma rasters and the equirectangular image types the pipeline
//! consumes.
//!
//! All pixel data is stored row-major as `f64` in `[0, 1]`. Decoding from
//! disk goes through [`crate::preproc::to_luma`] for RGB sources.

use std::path::Path;

use crate::error::{Error, Result};
use crate::preproc::to_luma;

/// A row-major grid of real-valued samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Sample with half-sample symmetric (mirror) boundary handling on both
    /// axes. Out-of-range indices are reflected back into the grid.
    #[inline]
    pub fn get_mirror(&self, x: isize, y: isize) -> f64 {
        let xi = mirror_index(x, self.width);
        let yi = mirror_index(y, self.height);
        self.data[yi * self.width + xi]
    }

    /// Bilinear sample at continuous coordinates with longitude-style column
    /// wraparound and row clamping. `fx`/`fy` are in pixel units where the
    /// center of pixel `(0, 0)` sits at `(0.0, 0.0)`.
    pub fn sample_wrap_x_clamp_y(&self, fx: f64, fy: f64) -> f64 {
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;

        let w = self.width as isize;
        let xa = (x0 as isize).rem_euclid(w) as usize;
        let xb = (x0 as isize + 1).rem_euclid(w) as usize;
        let ya = clamp_index(y0 as isize, self.height);
        let yb = clamp_index(y0 as isize + 1, self.height);

        let v00 = self.data[ya * self.width + xa];
        let v10 = self.data[ya * self.width + xb];
        let v01 = self.data[yb * self.width + xa];
        let v11 = self.data[yb * self.width + xb];

        let top = v00 + tx * (v10 - v00);
        let bot = v01 + tx * (v11 - v01);
        top + ty * (bot - top)
    }

    /// Non-overlapping `side`x`side` tiles in raster order; trailing partial
    /// tiles on the right/bottom edges are dropped.
    pub fn tiles(&self, side: usize) -> Vec<Vec<f64>> {
        let nx = self.width / side;
        let ny = self.height / side;
        let mut out = Vec::with_capacity(nx * ny);
        for by in 0..ny {
            for bx in 0..nx {
                let mut tile = Vec::with_capacity(side * side);
                for dy in 0..side {
                    let y = by * side + dy;
                    let x0 = bx * side;
                    tile.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + side]);
                }
                out.push(tile);
            }
        }
        out
    }
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Half-sample symmetric reflection: -1 -> 0, -2 -> 1, n -> n-1, n+1 -> n-2.
#[inline]
pub(crate) fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// An equirectangular panorama stored as luma in `[0, 1]`.
///
/// The horizontal axis spans longitude `[0, 360)` and the vertical axis spans
/// latitude `[+90, -90]` top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpImage {
    grid: Grid,
}

impl ErpImage {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.width() < 2 || grid.height() < 2 {
            return Err(Error::invalid("ERP image must be at least 2x2"));
        }
        if let Some(bad) = grid.data().iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::invalid(format!(
                "ERP luma sample {bad} outside [0, 1]"
            )));
        }
        Ok(ErpImage { grid })
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn luma(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    /// Decode a PNG/JPEG file to luma. RGB sources are converted with the
    /// BT.601 weights; grayscale sources are scaled by 1/255.
    pub fn load(path: &Path) -> Result<Self> {
        ErpImage::new(load_luma(path)?)
    }
}

/// Decode any supported image file to a luma grid in `[0, 1]`.
pub fn load_luma(path: &Path) -> Result<Grid> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    to_luma(rgb.as_raw(), w, h)
}

/// Save a luma grid as an 8-bit grayscale PNG.
pub fn save_gray_png(grid: &Grid, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = grid
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf = image::GrayImage::from_raw(grid.width() as u32, grid.height() as u32, bytes)
        .expect("buffer length matches dimensions");
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// A left/right pair of equirectangular panoramas with identical dimensions.
#[derive(Debug, Clone)]
pub struct ErpStereoPair {
    pub left: ErpImage,
    pub right: ErpImage,
}

impl ErpStereoPair {
    pub fn new(left: ErpImage, right: ErpImage) -> Result<Self> {
        if left.width() != right.width() || left.height() != right.height() {
            return Err(Error::invalid(format!(
                "stereo views differ in size: {}x{} vs {}x{}",
                left.width(),
                left.height(),
                right.width(),
                right.height()
            )));
        }
        Ok(ErpStereoPair { left, right })
    }
}
