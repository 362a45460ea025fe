//! Aggregation of per-viewport qualities into one score using content
//! weights (rivalry-weighted spatial information) and location weights
//! (a Laplace distribution over viewport latitude).

use crate::error::{Error, Result};
use crate::raster::Grid;

/// Laplace model of how often a latitude is looked at. Longitude is treated
/// as uniform.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LaplaceLatitudeModel {
    /// Location parameter in degrees.
    pub mu_deg: f64,
    /// Scale parameter in degrees.
    pub b_deg: f64,
}

impl Default for LaplaceLatitudeModel {
    fn default() -> Self {
        LaplaceLatitudeModel {
            mu_deg: 0.0,
            b_deg: 15.0,
        }
    }
}

impl LaplaceLatitudeModel {
    pub fn new(mu_deg: f64, b_deg: f64) -> Result<Self> {
        if !(b_deg > 0.0 && b_deg.is_finite() && mu_deg.is_finite()) {
            return Err(Error::invalid("Laplace scale must be positive and finite"));
        }
        Ok(LaplaceLatitudeModel { mu_deg, b_deg })
    }

    /// Density `(1 / 2b) * exp(-|lat - mu| / b)`.
    pub fn density(&self, latitude_deg: f64) -> f64 {
        (-((latitude_deg - self.mu_deg).abs()) / self.b_deg).exp() / (2.0 * self.b_deg)
    }
}

/// Spatial information: population standard deviation of the Sobel gradient
/// magnitude, with mirror boundary handling.
pub fn spatial_information(img: &Grid) -> Result<f64> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::invalid(format!(
            "spatial information needs at least 3x3 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let w = img.width() as isize;
    let h = img.height() as isize;
    let n = (img.width() * img.height()) as f64;

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = |dx: isize, dy: isize| img.get_mirror(x + dx, y + dy);
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let mag = (gx * gx + gy * gy).sqrt();
            sum += mag;
            sum_sq += mag * mag;
        }
    }
    let mean = sum / n;
    Ok((sum_sq / n - mean * mean).max(0.0).sqrt())
}

/// Content weight of a stereo viewport: spatial information of the two
/// distorted views combined with their rivalry dominance weights.
pub fn content_weight(
    dis_left: &Grid,
    dis_right: &Grid,
    w_left: f64,
    w_right: f64,
) -> Result<f64> {
    debug_assert!(w_left >= 0.0 && w_right >= 0.0);
    Ok(w_left * spatial_information(dis_left)? + w_right * spatial_information(dis_right)?)
}

/// Location weight of a viewport centered at the given latitude.
pub fn location_weight(center_latitude_deg: f64, model: &LaplaceLatitudeModel) -> f64 {
    model.density(center_latitude_deg)
}

/// Per-viewport record in the final fusion, exportable as CSV.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FusionRecord {
    pub index: usize,
    pub q: f64,
    pub cw: f64,
    pub lw: f64,
    /// Normalized fusion weight.
    pub w: f64,
}

/// How per-viewport weights are derived before normalization; variants are
/// registered by name and selected at runtime.
pub trait ViewWeighting: Send + Sync {
    fn name(&self) -> &'static str;

    /// Unnormalized weight from a viewport's content and location weights.
    fn weight(&self, cw: f64, lw: f64) -> f64;
}

impl std::fmt::Debug for dyn ViewWeighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ViewWeighting({})", self.name())
    }
}

/// Every viewport counts the same.
pub struct UniformWeighting;

impl ViewWeighting for UniformWeighting {
    fn name(&self) -> &'static str {
        "average"
    }

    fn weight(&self, _cw: f64, _lw: f64) -> f64 {
        1.0
    }
}

/// Weight by content only.
pub struct ContentWeighting;

impl ViewWeighting for ContentWeighting {
    fn name(&self) -> &'static str {
        "content"
    }

    fn weight(&self, cw: f64, _lw: f64) -> f64 {
        cw
    }
}

/// Weight by content and location.
pub struct ContentLocationWeighting;

impl ViewWeighting for ContentLocationWeighting {
    fn name(&self) -> &'static str {
        "content-location"
    }

    fn weight(&self, cw: f64, lw: f64) -> f64 {
        cw * lw
    }
}

pub static UNIFORM_WEIGHTING: UniformWeighting = UniformWeighting;
pub static CONTENT_WEIGHTING: ContentWeighting = ContentWeighting;
pub static CONTENT_LOCATION_WEIGHTING: ContentLocationWeighting = ContentLocationWeighting;

static WEIGHTING_REGISTRY: &[&dyn ViewWeighting] = &[
    &UNIFORM_WEIGHTING,
    &CONTENT_WEIGHTING,
    &CONTENT_LOCATION_WEIGHTING,
];

/// Look up a weighting policy by its registered name.
pub fn weighting_by_name(name: &str) -> Option<&'static dyn ViewWeighting> {
    WEIGHTING_REGISTRY.iter().copied().find(|w| w.name() == name)
}

/// Names of all registered weighting policies.
pub fn weighting_names() -> Vec<&'static str> {
    WEIGHTING_REGISTRY.iter().map(|w| w.name()).collect()
}

/// Fuse `(q, cw, lw)` records into one score with normalized `cw * lw`
/// weights. Returns the score and the normalized weight of every record.
pub fn fuse(records: &[(f64, f64, f64)]) -> Result<(f64, Vec<f64>)> {
    fuse_with(records, &CONTENT_LOCATION_WEIGHTING)
}

/// [`fuse`] under a caller-selected weighting policy. A zero total weight
/// falls back to uniform weights.
pub fn fuse_with(
    records: &[(f64, f64, f64)],
    policy: &dyn ViewWeighting,
) -> Result<(f64, Vec<f64>)> {
    if records.is_empty() {
        return Err(Error::invalid("cannot fuse zero viewports"));
    }
    let raw: Vec<f64> = records
        .iter()
        .map(|&(_, cw, lw)| policy.weight(cw, lw))
        .collect();
    if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("fusion weights must be finite and non-negative"));
    }
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = if total == 0.0 {
        vec![1.0 / records.len() as f64; records.len()]
    } else {
        raw.iter().map(|w| w / total).collect()
    };
    let q = records
        .iter()
        .zip(&weights)
        .map(|(&(q, _, _), &w)| w * q)
        .sum();
    Ok((q, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn si_of_constant_image_is_zero() {
        let img = Grid::filled(8, 8, 0.7);
        assert_eq!(spatial_information(&img).unwrap(), 0.0);
    }

    #[test]
    fn si_of_step_edge_is_transpose_invariant() {
        let n = 12;
        let mut v = Grid::filled(n, n, 0.0);
        let mut h = Grid::filled(n, n, 0.0);
        for y in 0..n {
            for x in 0..n {
                if x >= n / 2 {
                    v.set(x, y, 1.0);
                }
                if y >= n / 2 {
                    h.set(x, y, 1.0);
                }
            }
        }
        let si_v = spatial_information(&v).unwrap();
        let si_h = spatial_information(&h).unwrap();
        assert!(si_v > 0.0);
        assert!((si_v - si_h).abs() < 1e-12);
    }

    #[test]
    fn si_checkerboard_exceeds_constant() {
        let mut img = Grid::filled(8, 8, 0.0);
        for y in 0..8 {
            for x in 0..8 {
                if (x + y) % 2 == 0 {
                    img.set(x, y, 1.0);
                }
            }
        }
        assert!(spatial_information(&img).unwrap() > 0.0);
    }

    #[test]
    fn si_rejects_tiny_images() {
        assert!(spatial_information(&Grid::filled(2, 8, 0.0)).is_err());
    }

    #[test]
    fn content_weight_examples() {
        let flat = Grid::filled(8, 8, 0.4);
        assert_eq!(content_weight(&flat, &flat, 0.6, 0.9).unwrap(), 0.0);

        let mut edge = Grid::filled(8, 8, 0.0);
        for y in 0..8 {
            for x in 4..8 {
                edge.set(x, y, 1.0);
            }
        }
        let si = spatial_information(&edge).unwrap();
        let cw = content_weight(&edge, &edge, 0.5, 0.5).unwrap();
        assert!((cw - si).abs() < 1e-12);
    }

    #[test]
    fn content_weight_combines_measured_si_linearly() {
        let mut left = Grid::filled(8, 8, 0.0);
        let mut right = Grid::filled(8, 8, 0.0);
        for y in 0..8 {
            for x in 0..8 {
                if x >= 4 {
                    left.set(x, y, 1.0);
                }
                if (x + y) % 2 == 0 {
                    right.set(x, y, 0.8);
                }
            }
        }
        let si_l = spatial_information(&left).unwrap();
        let si_r = spatial_information(&right).unwrap();
        let cw = content_weight(&left, &right, 0.25, 0.125).unwrap();
        assert_eq!(cw, 0.25 * si_l + 0.125 * si_r);
    }

    #[test]
    fn laplace_density_properties() {
        let model = LaplaceLatitudeModel::default();
        assert_eq!(model.density(30.0), model.density(-30.0));
        assert!(model.density(0.0) > model.density(45.0));
        assert!(model.density(45.0) > model.density(90.0));
        let expected = (-1.0f64).exp() / 30.0;
        assert!((model.density(15.0) - expected).abs() < 1e-12);
        assert!((expected - 0.01226).abs() < 1e-5);
        assert!(LaplaceLatitudeModel::new(0.0, 0.0).is_err());
    }

    #[test]
    fn fuse_examples() {
        // All cw*lw equal: arithmetic mean.
        let (q, w) = fuse(&[(1.0, 2.0, 0.5), (3.0, 1.0, 1.0), (5.0, 4.0, 0.25)]).unwrap();
        assert!((q - 3.0).abs() < 1e-12);
        assert!(w.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));

        // Single record.
        let (q, w) = fuse(&[(2.5, 0.3, 0.1)]).unwrap();
        assert_eq!(q, 2.5);
        assert_eq!(w, vec![1.0]);

        // Hand example: q = (1*1 + 3*3) / 4.
        let (q, _) = fuse(&[(1.0, 1.0, 1.0), (3.0, 3.0, 1.0)]).unwrap();
        assert!((q - 2.5).abs() < 1e-12);
    }

    #[test]
    fn fuse_zero_weights_fall_back_to_uniform() {
        let (q, w) = fuse(&[(1.0, 0.0, 1.0), (3.0, 5.0, 0.0)]).unwrap();
        assert!((q - 2.0).abs() < 1e-12);
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn fuse_rejects_empty_input() {
        assert!(fuse(&[]).is_err());
    }

    #[test]
    fn fuse_weight_scale_invariance() {
        let recs = [(1.0, 2.0, 0.3), (4.0, 1.0, 0.9), (2.0, 5.0, 0.1)];
        let (q1, _) = fuse(&recs).unwrap();
        let scaled: Vec<_> = recs.iter().map(|&(q, cw, lw)| (q, cw * 37.0, lw)).collect();
        let (q2, _) = fuse(&scaled).unwrap();
        assert!((q1 - q2).abs() < 1e-12);
    }

    #[test]
    fn weighting_registry_resolves_names() {
        assert_eq!(weighting_by_name("average").unwrap().weight(3.0, 5.0), 1.0);
        assert_eq!(weighting_by_name("content").unwrap().weight(3.0, 5.0), 3.0);
        assert_eq!(
            weighting_by_name("content-location").unwrap().weight(3.0, 5.0),
            15.0
        );
        assert!(weighting_by_name("saliency").is_none());
        assert_eq!(
            weighting_names(),
            vec!["average", "content", "content-location"]
        );
    }

    #[test]
    fn fuse_with_uniform_ignores_weights() {
        let recs = [(1.0, 9.0, 9.0), (3.0, 0.0, 0.0)];
        let (q, _) = fuse_with(&recs, &UNIFORM_WEIGHTING).unwrap();
        assert!((q - 2.0).abs() < 1e-12);
    }
}
