//! Deterministic synthetic panoramas and distortion operators.
//!
//! Used by the test suite and the bundled fixture generator; also handy for
//! trying the scorer without real capture data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{ErpImage, ErpStereoPair, Grid};

/// Built-in texture families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// Superposed sinusoidal plaids.
    Waves,
    /// Soft-edged tile pattern over a vertical gradient.
    Tiles,
    /// Gaussian bumps over a horizontal ramp.
    Blobs,
}

impl SceneKind {
    pub const ALL: [SceneKind; 3] = [SceneKind::Waves, SceneKind::Tiles, SceneKind::Blobs];
}

/// Render a deterministic texture as an ERP luma image.
pub fn synthetic_erp(kind: SceneKind, width: usize, height: usize) -> ErpImage {
    let tau = std::f64::consts::TAU;
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        let v = (y as f64 + 0.5) / height as f64;
        for x in 0..width {
            let u = (x as f64 + 0.5) / width as f64;
            let t = match kind {
                SceneKind::Waves => {
                    0.5 + 0.22 * (tau * (5.0 * u + 3.0 * v)).sin()
                        + 0.14 * (tau * (11.0 * u - 7.0 * v)).sin()
                        + 0.08 * (tau * 17.0 * u).sin() * (tau * 2.0 * v).cos()
                }
                SceneKind::Tiles => {
                    let tiles = ((tau * 8.0 * u).sin() * (tau * 4.0 * v).sin() * 3.0).tanh();
                    0.5 + 0.35 * tiles + 0.1 * (v - 0.5)
                }
                SceneKind::Blobs => {
                    let mut acc = 0.35 + 0.25 * u;
                    for (cx, cy, s, a) in [
                        (0.2, 0.3, 0.05, 0.35),
                        (0.55, 0.6, 0.08, -0.3),
                        (0.8, 0.25, 0.04, 0.3),
                        (0.4, 0.75, 0.06, 0.25),
                        (0.7, 0.5, 0.03, -0.25),
                    ] {
                        let dx = u - cx;
                        let dy = v - cy;
                        acc += a * (-(dx * dx + dy * dy) / (2.0 * s * s)).exp();
                    }
                    acc
                }
            };
            data.push(t.clamp(0.02, 0.98));
        }
    }
    ErpImage::new(Grid::new(width, height, data).expect("dimensions are valid"))
        .expect("values are clamped into range")
}

/// Roll an ERP image by whole columns (a pure longitude rotation).
pub fn roll_columns(img: &ErpImage, shift: usize) -> ErpImage {
    let w = img.width();
    let h = img.height();
    let src = img.luma();
    let mut out = Grid::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            out.set((x + shift) % w, y, src.get(x, y));
        }
    }
    ErpImage::new(out).expect("rolling preserves the value range")
}

/// A stereo pair whose right view is the left view rotated slightly in
/// longitude, imitating a baseline offset.
pub fn stereo_scene(kind: SceneKind, width: usize, height: usize) -> ErpStereoPair {
    let left = synthetic_erp(kind, width, height);
    let right = roll_columns(&left, (width / 32).max(1));
    ErpStereoPair::new(left, right).expect("views share dimensions")
}

/// A stereo pair with identical left and right views.
pub fn symmetric_stereo_scene(kind: SceneKind, width: usize, height: usize) -> ErpStereoPair {
    let left = synthetic_erp(kind, width, height);
    ErpStereoPair::new(left.clone(), left).expect("views share dimensions")
}

/// Separable Gaussian blur with mirror boundaries; the kernel is normalized
/// to sum 1 so the value range is preserved.
pub fn gaussian_blur(img: &ErpImage, sigma: f64) -> ErpImage {
    assert!(sigma > 0.0);
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        kernel.push((-((i * i) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let w = img.width();
    let h = img.height();
    let src = img.luma();

    let mut horiz = Grid::filled(w, h, 0.0);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                acc += k * src.get_mirror(x + i as isize - radius, y);
            }
            horiz.set(x as usize, y as usize, acc);
        }
    }
    let mut out = Grid::filled(w, h, 0.0);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                acc += k * horiz.get_mirror(x, y + i as isize - radius);
            }
            out.set(x as usize, y as usize, acc.clamp(0.0, 1.0));
        }
    }
    ErpImage::new(out).expect("blur preserves the value range")
}

/// Add seeded Gaussian white noise (Box-Muller) and clamp back into `[0, 1]`.
pub fn add_white_noise(img: &ErpImage, sigma: f64, seed: u64) -> ErpImage {
    assert!(sigma >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = img.luma().clone();
    let mut spare: Option<f64> = None;
    for v in out.data_mut() {
        let n = match spare.take() {
            Some(s) => s,
            None => {
                let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.random_range(0.0..1.0);
                let mag = (-2.0 * u1.ln()).sqrt();
                let phase = std::f64::consts::TAU * u2;
                spare = Some(mag * phase.sin());
                mag * phase.cos()
            }
        };
        *v = (*v + sigma * n).clamp(0.0, 1.0);
    }
    ErpImage::new(out).expect("noise is clamped into range")
}

/// Distort both views of a pair identically.
pub fn distort_pair(
    pair: &ErpStereoPair,
    f: impl Fn(&ErpImage) -> ErpImage,
) -> ErpStereoPair {
    ErpStereoPair::new(f(&pair.left), f(&pair.right)).expect("distortion preserves dimensions")
}
