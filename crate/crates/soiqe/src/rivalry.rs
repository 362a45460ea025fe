//! Binocular rivalry scoring of one stereo viewport pair.
//!
//! Per block: similarity between reference and distorted codes, a prior from
//! variance-weighted coefficient magnitudes, a likelihood weight from the
//! competing prediction errors, and the error-map variance. Prior and error
//! variance are normalized between the two views; the viewport quality is
//! the sum of the per-view products.

use crate::error::{Error, Result};
use crate::pc::{CodingResult, Dictionary};

/// Per-block, per-view quantities before cross-view normalization.
#[derive(Debug, Clone, Copy)]
pub struct BlockScores {
    /// Code similarity between reference and distorted view, in `(0, 1]`
    /// for correlated codes.
    pub s: f64,
    /// Prior (variance-weighted coefficient magnitude), `>= 0`.
    pub v: f64,
    /// Likelihood weight; the pair across views sums to 1.
    pub ew: f64,
    /// Variance of the squared error map, `>= 0`.
    pub rr: f64,
}

/// Quality of one stereo viewport plus the per-view dominance weights
/// consumed by the fusion stage.
#[derive(Debug, Clone, Copy)]
pub struct ViewportQuality {
    pub q: f64,
    pub n_blocks: usize,
    pub w_left: f64,
    pub w_right: f64,
}

/// Normalize a non-negative pair to sum to one; an all-zero pair splits
/// evenly.
#[inline]
pub fn normalize_pair(a: f64, b: f64) -> (f64, f64) {
    let sum = a + b;
    if sum == 0.0 {
        (0.5, 0.5)
    } else {
        (a / sum, b / sum)
    }
}

/// Similarity between two coefficient vectors:
/// `mean_j (2*a_j*b_j + C) / (a_j^2 + b_j^2 + C)`. Equals 1 exactly iff the
/// vectors are identical.
pub fn block_similarity(r_ref: &[f64], r_dis: &[f64], c: f64) -> Result<f64> {
    let valid = c.is_finite() && c > 0.0;
    if !valid {
        return Err(Error::invalid("similarity constant C must be positive and finite"));
    }
    if r_ref.len() != r_dis.len() || r_ref.is_empty() {
        return Err(Error::invalid("coefficient vectors must have equal non-zero length"));
    }
    let sum: f64 = r_ref
        .iter()
        .zip(r_dis)
        .map(|(&a, &b)| (2.0 * a * b + c) / (a * a + b * b + c))
        .sum();
    Ok(sum / r_ref.len() as f64)
}

/// Prior of a hypothesis: variance-weighted coefficient magnitudes,
/// `sum_j Var(U_j) * |r_j|`.
pub fn block_prior(r_dis: &[f64], basis_variance: &[f64]) -> f64 {
    assert_eq!(r_dis.len(), basis_variance.len());
    r_dis
        .iter()
        .zip(basis_variance)
        .map(|(&r, &var)| var * r.abs())
        .sum()
}

/// Likelihood weights from two competing error maps, normalized so
/// `EW_L + EW_R = 1`. The view with the smaller squared error dominates.
/// Two exactly-zero maps split evenly.
pub fn likelihood_weights(e_left: &[f64], e_right: &[f64]) -> (f64, f64) {
    assert_eq!(e_left.len(), e_right.len());
    let sl: f64 = e_left.iter().map(|e| e * e).sum();
    let sr: f64 = e_right.iter().map(|e| e * e).sum();
    normalize_pair(sr, sl)
}

/// Distortion response: population variance of the squared error map.
pub fn error_variance(error_map: &[f64]) -> f64 {
    assert!(!error_map.is_empty());
    let n = error_map.len() as f64;
    let mean_sq = error_map.iter().map(|e| e * e).sum::<f64>() / n;
    error_map
        .iter()
        .map(|e| {
            let d = e * e - mean_sq;
            d * d
        })
        .sum::<f64>()
        / n
}

/// How a viewport quality aggregates its block terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockAggregation {
    /// Sum over blocks; scales with block count.
    Sum,
    /// Mean over blocks, for cross-resolution comparability.
    Mean,
}

/// Score one stereo viewport from the coded blocks of both views.
///
/// Each slice pairs the reference coding with the distorted coding of the
/// same block. Likelihood, prior and error variance come from the distorted
/// views only; prior and error variance are normalized across views with an
/// even split for all-zero pairs.
pub fn viewport_quality(
    blocks_left: &[(CodingResult, CodingResult)],
    blocks_right: &[(CodingResult, CodingResult)],
    dict: &Dictionary,
    c: f64,
    aggregation: BlockAggregation,
) -> Result<ViewportQuality> {
    if blocks_left.len() != blocks_right.len() {
        return Err(Error::invalid(format!(
            "left view has {} blocks, right view {}",
            blocks_left.len(),
            blocks_right.len()
        )));
    }
    if blocks_left.is_empty() {
        return Err(Error::invalid("viewport has no blocks"));
    }

    let variances = dict.basis_variance();
    let n = blocks_left.len();
    let mut q = 0.0;
    let mut w_left = 0.0;
    let mut w_right = 0.0;
    for ((ref_l, dis_l), (ref_r, dis_r)) in blocks_left.iter().zip(blocks_right) {
        let s_l = block_similarity(&ref_l.r, &dis_l.r, c)?;
        let s_r = block_similarity(&ref_r.r, &dis_r.r, c)?;
        let (ew_l, ew_r) = likelihood_weights(&dis_l.error, &dis_r.error);
        let (v_l, v_r) = normalize_pair(
            block_prior(&dis_l.r, variances),
            block_prior(&dis_r.r, variances),
        );
        let (rr_l, rr_r) = normalize_pair(
            error_variance(&dis_l.error),
            error_variance(&dis_r.error),
        );

        let dominance_l = v_l * ew_l * rr_l;
        let dominance_r = v_r * ew_r * rr_r;
        q += dominance_l * s_l + dominance_r * s_r;
        w_left += dominance_l;
        w_right += dominance_r;
    }

    w_left /= n as f64;
    w_right /= n as f64;
    if aggregation == BlockAggregation::Mean {
        q /= n as f64;
    }

    Ok(ViewportQuality {
        q,
        n_blocks: n,
        w_left,
        w_right,
    })
}
