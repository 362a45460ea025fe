//! End-to-end scoring of one distorted stereo panorama against its
//! reference: downsample, render stereo viewports, preprocess, code patches,
//! score rivalry per viewport and fuse across viewports.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fusion::{
    content_weight, fuse_with, location_weight, FusionRecord, LaplaceLatitudeModel, ViewWeighting,
    CONTENT_LOCATION_WEIGHTING,
};
use crate::pc::{encode, Dictionary, PcHyperparams};
use crate::preproc::{auto_downsample, log_kernel, preprocess_with, Kernel, LOG_SIGMA};
use crate::raster::{ErpImage, ErpStereoPair};
use crate::rivalry::{viewport_quality, BlockAggregation};
use crate::viewport::{default_viewport_side, render_viewport, sample_viewpoints, Viewpoint};

/// Everything the scoring pipeline needs besides the inputs.
#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    /// Equator viewpoint count.
    pub n0: u32,
    /// Viewport field of view in degrees.
    pub fov_deg: f64,
    /// Viewport raster side; `None` derives it from the ERP width.
    pub viewport_side: Option<usize>,
    /// Similarity stabilization constant.
    pub c: f64,
    /// Latitude attention model for location weights.
    pub laplace: LaplaceLatitudeModel,
    /// Patch coder settings (alpha, sigma2, r_steps, r_lr, activation).
    pub hp: PcHyperparams,
    /// Viewport weighting policy for fusion.
    pub weighting: &'static dyn ViewWeighting,
    /// Sum or mean over blocks inside one viewport.
    pub aggregation: BlockAggregation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n0: 8,
            fov_deg: 90.0,
            viewport_side: None,
            c: 1e-4,
            laplace: LaplaceLatitudeModel::default(),
            hp: PcHyperparams::default(),
            weighting: &CONTENT_LOCATION_WEIGHTING,
            aggregation: BlockAggregation::Sum,
        }
    }
}

/// Per-viewport entry of the final score breakdown.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ViewportBreakdown {
    pub index: usize,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub q: f64,
    pub cw: f64,
    pub lw: f64,
    pub w: f64,
}

/// Full scoring result for one stereo pair.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScoreBreakdown {
    pub score: f64,
    pub viewport_side: usize,
    pub blocks_per_viewport: usize,
    pub per_viewport: Vec<ViewportBreakdown>,
}

impl ScoreBreakdown {
    pub fn fusion_records(&self) -> Vec<FusionRecord> {
        self.per_viewport
            .iter()
            .map(|v| FusionRecord {
                index: v.index,
                q: v.q,
                cw: v.cw,
                lw: v.lw,
                w: v.w,
            })
            .collect()
    }
}

/// Per-viewport breakdown CSV: `index, lat, lon, q, cw, lw, w`.
pub fn write_viewport_csv(breakdown: &ScoreBreakdown, path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(["index", "lat", "lon", "q", "cw", "lw", "w"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for v in &breakdown.per_viewport {
        w.write_record([
            v.index.to_string(),
            v.latitude_deg.to_string(),
            v.longitude_deg.to_string(),
            v.q.to_string(),
            v.cw.to_string(),
            v.lw.to_string(),
            v.w.to_string(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Score a distorted stereo panorama against its reference.
pub fn score_pair(
    reference: &ErpStereoPair,
    distorted: &ErpStereoPair,
    dict: &Dictionary,
    cfg: &PipelineConfig,
) -> Result<ScoreBreakdown> {
    cfg.hp.validate()?;
    if reference.left.width() != distorted.left.width()
        || reference.left.height() != distorted.left.height()
    {
        return Err(Error::invalid(format!(
            "reference is {}x{} but distorted is {}x{}",
            reference.left.width(),
            reference.left.height(),
            distorted.left.width(),
            distorted.left.height()
        )));
    }

    let ref_l = ErpImage::new(auto_downsample(reference.left.luma()))?;
    let ref_r = ErpImage::new(auto_downsample(reference.right.luma()))?;
    let dis_l = ErpImage::new(auto_downsample(distorted.left.luma()))?;
    let dis_r = ErpImage::new(auto_downsample(distorted.right.luma()))?;

    let side = cfg
        .viewport_side
        .unwrap_or_else(|| default_viewport_side(ref_l.width(), cfg.fov_deg));
    let patch = dict.patch_side();
    if side / patch == 0 {
        return Err(Error::invalid(format!(
            "viewport side {side} is smaller than the dictionary patch side {patch}"
        )));
    }

    let viewpoints = sample_viewpoints(cfg.n0)?;
    let kernel = log_kernel(LOG_SIGMA).expect("fixed sigma is valid");

    let scored: Vec<(f64, f64, f64)> = viewpoints
        .par_iter()
        .map(|&vp| score_viewpoint(vp, &ref_l, &ref_r, &dis_l, &dis_r, dict, cfg, side, &kernel))
        .collect::<Result<_>>()?;

    let (score, weights) = fuse_with(&scored, cfg.weighting)?;
    let per_viewport = viewpoints
        .iter()
        .enumerate()
        .map(|(index, vp)| ViewportBreakdown {
            index,
            latitude_deg: vp.latitude_deg,
            longitude_deg: vp.longitude_deg,
            q: scored[index].0,
            cw: scored[index].1,
            lw: scored[index].2,
            w: weights[index],
        })
        .collect();

    Ok(ScoreBreakdown {
        score,
        viewport_side: side,
        blocks_per_viewport: (side / patch) * (side / patch),
        per_viewport,
    })
}

#[allow(clippy::too_many_arguments)]
fn score_viewpoint(
    vp: Viewpoint,
    ref_l: &ErpImage,
    ref_r: &ErpImage,
    dis_l: &ErpImage,
    dis_r: &ErpImage,
    dict: &Dictionary,
    cfg: &PipelineConfig,
    side: usize,
    kernel: &Kernel,
) -> Result<(f64, f64, f64)> {
    let vp_ref_l = render_viewport(ref_l, vp, cfg.fov_deg, side)?;
    let vp_ref_r = render_viewport(ref_r, vp, cfg.fov_deg, side)?;
    let vp_dis_l = render_viewport(dis_l, vp, cfg.fov_deg, side)?;
    let vp_dis_r = render_viewport(dis_r, vp, cfg.fov_deg, side)?;

    let patch = dict.patch_side();
    let code_all = |img: &crate::viewport::ViewportImage| -> Result<Vec<crate::pc::CodingResult>> {
        let pre = preprocess_with(img.luma(), kernel);
        pre.values()
            .tiles(patch)
            .iter()
            .map(|tile| encode(tile, dict, &cfg.hp))
            .collect()
    };

    let coded_ref_l = code_all(&vp_ref_l)?;
    let coded_dis_l = code_all(&vp_dis_l)?;
    let coded_ref_r = code_all(&vp_ref_r)?;
    let coded_dis_r = code_all(&vp_dis_r)?;

    let blocks_left: Vec<_> = coded_ref_l.into_iter().zip(coded_dis_l).collect();
    let blocks_right: Vec<_> = coded_ref_r.into_iter().zip(coded_dis_r).collect();
    let vq = viewport_quality(&blocks_left, &blocks_right, dict, cfg.c, cfg.aggregation)?;

    // Content weight uses the raw distorted viewports, before retinal
    // filtering: it measures scene detail rather than filter response.
    let cw = content_weight(vp_dis_l.luma(), vp_dis_r.luma(), vq.w_left, vq.w_right)?;
    let lw = location_weight(vp.latitude_deg, &cfg.laplace);
    Ok((vq.q, cw, lw))
}
