//! Viewpoint sampling on the sphere and rectilinear (gnomonic) viewport
//! rendering from equirectangular panoramas.
//!
//! Sampling places `n0` viewpoints on the equator, then rings every
//! `theta = 360/n0` degrees of latitude with `floor(n0 * cos(lat))` points
//! each, and the poles exactly once.

use crate::error::{Error, Result};
use crate::raster::{ErpImage, ErpStereoPair, Grid};

/// A viewing direction on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Viewpoint {
    /// Longitude in degrees, `[0, 360)`.
    pub longitude_deg: f64,
    /// Latitude in degrees, `[-90, +90]`.
    pub latitude_deg: f64,
}

impl Viewpoint {
    pub fn new(longitude_deg: f64, latitude_deg: f64) -> Result<Self> {
        if !(0.0..360.0).contains(&longitude_deg) {
            return Err(Error::invalid(format!(
                "longitude {longitude_deg} outside [0, 360)"
            )));
        }
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(Error::invalid(format!(
                "latitude {latitude_deg} outside [-90, 90]"
            )));
        }
        Ok(Viewpoint {
            longitude_deg,
            latitude_deg,
        })
    }
}

/// A square rectilinear crop rendered from an ERP panorama.
#[derive(Debug, Clone)]
pub struct ViewportImage {
    pub center: Viewpoint,
    pub fov_deg: f64,
    grid: Grid,
}

impl ViewportImage {
    pub fn side(&self) -> usize {
        self.grid.width()
    }

    pub fn luma(&self) -> &Grid {
        &self.grid
    }
}

/// Latitude-adaptive viewpoint sampling.
///
/// The equator carries `n0` points at longitudes `k * 360/n0`. Each ring at
/// latitude `m * theta` (both hemispheres) carries `floor(n0 * cos(m*theta))`
/// points uniformly in longitude starting at 0. The poles are sampled exactly
/// once each. Ordering is deterministic: equator first, then rings by
/// increasing `|latitude|` with north before south, longitudes ascending.
pub fn sample_viewpoints(n0: u32) -> Result<Vec<Viewpoint>> {
    if n0 < 4 {
        return Err(Error::invalid(format!("n0 = {n0} must be at least 4")));
    }
    let theta = 360.0 / n0 as f64;
    let rings = (90.0 / theta).floor() as u32;

    let mut out = Vec::new();
    push_ring(&mut out, 0.0, n0);
    for m in 1..=rings {
        let lat = m as f64 * theta;
        if lat == 90.0 {
            break;
        }
        let count = (n0 as f64 * lat.to_radians().cos()).floor() as u32;
        push_ring(&mut out, lat, count);
        push_ring(&mut out, -lat, count);
    }
    // Poles are sampled once each regardless of where the last ring fell.
    out.push(Viewpoint {
        longitude_deg: 0.0,
        latitude_deg: 90.0,
    });
    out.push(Viewpoint {
        longitude_deg: 0.0,
        latitude_deg: -90.0,
    });
    Ok(out)
}

fn push_ring(out: &mut Vec<Viewpoint>, latitude_deg: f64, count: u32) {
    if count == 0 {
        return;
    }
    let step = 360.0 / count as f64;
    for k in 0..count {
        out.push(Viewpoint {
            longitude_deg: k as f64 * step,
            latitude_deg,
        });
    }
}

/// Default viewport raster size: matches the angular sampling density of the
/// source equator, clamped to the minimum legal side.
pub fn default_viewport_side(erp_width: usize, fov_deg: f64) -> usize {
    let side = (erp_width as f64 * fov_deg / 360.0).round() as usize;
    side.max(16)
}

#[derive(Clone, Copy)]
struct Vec3 {
    x: f64,
    y: f64,
    z: f64,
}

/// Unit direction for a (longitude, latitude) pair. Longitude 0 / latitude 0
/// maps to +z, east to +x, north to +y.
fn direction(lon_deg: f64, lat_deg: f64) -> Vec3 {
    let lon = lon_deg.to_radians();
    let lat = lat_deg.to_radians();
    Vec3 {
        x: lat.cos() * lon.sin(),
        y: lat.sin(),
        z: lat.cos() * lon.cos(),
    }
}

/// Render a square rectilinear viewport by gnomonic projection: each output
/// pixel is mapped through the tangent plane at `center` to a sphere
/// direction and the ERP is sampled bilinearly with longitude wraparound and
/// latitude clamping.
pub fn render_viewport(
    erp: &ErpImage,
    center: Viewpoint,
    fov_deg: f64,
    side: usize,
) -> Result<ViewportImage> {
    if side < 16 {
        return Err(Error::invalid(format!("viewport side {side} < 16")));
    }
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::invalid(format!("fov {fov_deg} outside (0, 180)")));
    }

    let lon0 = center.longitude_deg.to_radians();
    let lat0 = center.latitude_deg.to_radians();
    let forward = direction(center.longitude_deg, center.latitude_deg);
    // East and north tangent vectors at the center.
    let right = Vec3 {
        x: lon0.cos(),
        y: 0.0,
        z: -lon0.sin(),
    };
    let up = Vec3 {
        x: -lat0.sin() * lon0.sin(),
        y: lat0.cos(),
        z: -lat0.sin() * lon0.cos(),
    };

    let tan_half = (fov_deg.to_radians() / 2.0).tan();
    let w = erp.width() as f64;
    let h = erp.height() as f64;
    let grid = erp.luma();

    let mut data = Vec::with_capacity(side * side);
    for row in 0..side {
        let v = ((row as f64 + 0.5) / side as f64) * 2.0 - 1.0;
        let cy = -v * tan_half;
        for col in 0..side {
            let u = ((col as f64 + 0.5) / side as f64) * 2.0 - 1.0;
            let cx = u * tan_half;

            let dir = Vec3 {
                x: cx * right.x + cy * up.x + forward.x,
                y: cx * right.y + cy * up.y + forward.y,
                z: cx * right.z + cy * up.z + forward.z,
            };
            let norm = (dir.x * dir.x + dir.y * dir.y + dir.z * dir.z).sqrt();
            let lat = (dir.y / norm).clamp(-1.0, 1.0).asin().to_degrees();
            let mut lon = dir.x.atan2(dir.z).to_degrees();
            if lon < 0.0 {
                lon += 360.0;
            }

            let fx = lon / 360.0 * w - 0.5;
            let fy = (90.0 - lat) / 180.0 * h - 0.5;
            data.push(grid.sample_wrap_x_clamp_y(fx, fy).clamp(0.0, 1.0));
        }
    }

    Ok(ViewportImage {
        center,
        fov_deg,
        grid: Grid::new(side, side, data).expect("side x side grid"),
    })
}

/// Render one stereo viewport per sampled viewpoint, in sampling order.
pub fn extract_stereo_viewports(
    pair: &ErpStereoPair,
    n0: u32,
    fov_deg: f64,
    side: usize,
) -> Result<Vec<(ViewportImage, ViewportImage)>> {
    sample_viewpoints(n0)?
        .into_iter()
        .map(|vp| {
            let left = render_viewport(&pair.left, vp, fov_deg, side)?;
            let right = render_viewport(&pair.right, vp, fov_deg, side)?;
            Ok((left, right))
        })
        .collect()
}
