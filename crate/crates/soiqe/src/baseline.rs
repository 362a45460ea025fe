//! Sanity-baseline metric: plain PSNR over the raw ERP luma, averaged
//! across the two views. Needs no dictionary; useful for checking a
//! dataset/manifest before running the full evaluator.

use crate::error::{Error, Result};
use crate::raster::{ErpStereoPair, Grid};

/// PSNR ceiling reported for exact matches, in dB.
pub const PSNR_CAP_DB: f64 = 100.0;

/// PSNR between two luma grids with peak 1.0, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Grid, b: &Grid) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::invalid(format!(
            "PSNR inputs differ in size: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let n = (a.width() * a.height()) as f64;
    let mse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((-10.0 * mse.log10()).min(PSNR_CAP_DB))
}

/// Mean of the left-view and right-view PSNR of a stereo pair.
pub fn stereo_psnr(reference: &ErpStereoPair, distorted: &ErpStereoPair) -> Result<f64> {
    let left = psnr(reference.left.luma(), distorted.left.luma())?;
    let right = psnr(reference.right.luma(), distorted.right.luma())?;
    Ok(0.5 * (left + right))
}
