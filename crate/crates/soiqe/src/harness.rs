//! Benchmark harness: dataset manifests, the five-parameter logistic mapping
//! and the PLCC / SROCC / RMSE / OR criteria.
//!
//! SROCC is computed on raw predictions; PLCC, RMSE and OR on predictions
//! mapped through the fitted logistic.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pc::Dictionary;
use crate::pipeline::{score_pair, PipelineConfig};
use crate::raster::{ErpImage, ErpStereoPair};

/// One dataset entry: a reference/distorted stereo pair and its subjective
/// score.
#[derive(Debug, Clone)]
pub struct ManifestRow {
    pub id: String,
    pub ref_left: PathBuf,
    pub ref_right: PathBuf,
    pub dis_left: PathBuf,
    pub dis_right: PathBuf,
    pub mos: f64,
    pub mos_std: Option<f64>,
    pub tags: Option<String>,
}

/// A parsed manifest. Paths are resolved relative to the manifest file.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    /// Read a UTF-8 CSV manifest with a header row. Required columns:
    /// `id, ref_left, ref_right, dis_left, dis_right, mos`;
    /// optional: `mos_std, tags`.
    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Format(format!("cannot read manifest {}: {e}", path.display())))?;

        let headers = reader
            .headers()
            .map_err(|e| Error::Format(format!("manifest header: {e}")))?
            .clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let required = |name: &str| {
            col(name).ok_or_else(|| Error::Format(format!("manifest is missing column '{name}'")))
        };
        let id_c = required("id")?;
        let rl_c = required("ref_left")?;
        let rr_c = required("ref_right")?;
        let dl_c = required("dis_left")?;
        let dr_c = required("dis_right")?;
        let mos_c = required("mos")?;
        let std_c = col("mos_std");
        let tags_c = col("tags");

        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record
                .map_err(|e| Error::Format(format!("manifest row {}: {e}", line + 2)))?;
            let field = |i: usize| record.get(i).unwrap_or("").to_string();
            let path_field = |i: usize, name: &str| -> Result<PathBuf> {
                let raw = field(i);
                if raw.is_empty() {
                    return Err(Error::Format(format!(
                        "manifest row {}: empty {name} path",
                        line + 2
                    )));
                }
                Ok(base.join(raw))
            };
            let mos: f64 = field(mos_c)
                .parse()
                .map_err(|_| Error::Format(format!("manifest row {}: bad mos", line + 2)))?;
            if !mos.is_finite() {
                return Err(Error::Format(format!(
                    "manifest row {}: mos must be finite",
                    line + 2
                )));
            }
            let mos_std = match std_c {
                Some(i) if !field(i).is_empty() => Some(field(i).parse().map_err(|_| {
                    Error::Format(format!("manifest row {}: bad mos_std", line + 2))
                })?),
                _ => None,
            };
            rows.push(ManifestRow {
                id: field(id_c),
                ref_left: path_field(rl_c, "ref_left")?,
                ref_right: path_field(rr_c, "ref_right")?,
                dis_left: path_field(dl_c, "dis_left")?,
                dis_right: path_field(dr_c, "dis_right")?,
                mos,
                mos_std,
                tags: tags_c.map(&field).filter(|t| !t.is_empty()),
            });
        }

        let mut seen = std::collections::HashSet::new();
        for row in &rows {
            if !seen.insert(row.id.clone()) {
                return Err(Error::Format(format!("duplicate manifest id '{}'", row.id)));
            }
        }
        Ok(DatasetManifest { rows })
    }
}

/// Parameters of the monotonic five-parameter logistic mapping.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LogisticParams {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub beta5: f64,
}

/// `y = beta1 * (1/2 - 1/(1 + exp(beta2 * (x - beta3)))) + beta4 * x + beta5`
pub fn logistic5(p: &LogisticParams, x: f64) -> f64 {
    let z = p.beta2 * (x - p.beta3);
    let u = 1.0 / (1.0 + z.exp());
    p.beta1 * (0.5 - u) + p.beta4 * x + p.beta5
}

/// A fitted logistic mapping.
#[derive(Debug, Clone, Copy)]
pub struct LogisticFit {
    pub params: LogisticParams,
    /// True when the damped fit was replaced by the linear fallback.
    pub fallback_linear: bool,
    pub rss: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn check_vectors(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "vector lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_len {
        return Err(Error::invalid(format!(
            "need at least {min_len} samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("inputs contain non-finite values"));
    }
    Ok(())
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let mut cov = 0.0;
    let mut var = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        var += (a - mx) * (a - mx);
    }
    if var == 0.0 {
        (0.0, my)
    } else {
        let slope = cov / var;
        (slope, my - slope * mx)
    }
}

fn rss_of(params: &LogisticParams, x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = b - logistic5(params, a);
            d * d
        })
        .sum()
}

/// Solve a 5x5 linear system by Gaussian elimination with partial pivoting.
fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let mut pivot = col;
        for row in col + 1..5 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col];
        for row in col + 1..5 {
            let f = a[row][col] / pivot_row[col];
            for (k, &pk) in pivot_row.iter().enumerate().skip(col) {
                a[row][k] -= f * pk;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 5];
    for col in (0..5).rev() {
        let mut acc = b[col];
        for k in col + 1..5 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Fit the five-parameter logistic by damped Gauss-Newton from a documented
/// initialization. The result never has a larger residual sum of squares than
/// the best linear fit.
pub fn fit_logistic(pred: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    check_vectors(pred, mos, 5)?;
    let pred_min = pred.iter().cloned().fold(f64::INFINITY, f64::min);
    let pred_max = pred.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if pred_min == pred_max {
        return Err(Error::invalid("predictions are constant; nothing to fit"));
    }
    let mos_min = mos.iter().cloned().fold(f64::INFINITY, f64::min);
    let mos_max = mos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // Initialization: beta1 = range(mos), beta2 = +-4/range(pred) signed by
    // the correlation, beta3 = mean(pred), beta4 = 0, beta5 = mean(mos).
    let corr_sign = {
        let mx = mean(pred);
        let my = mean(mos);
        let cov: f64 = pred
            .iter()
            .zip(mos)
            .map(|(&a, &b)| (a - mx) * (b - my))
            .sum();
        if cov < 0.0 {
            -1.0
        } else {
            1.0
        }
    };
    let mut params = LogisticParams {
        beta1: mos_max - mos_min,
        beta2: corr_sign * 4.0 / (pred_max - pred_min),
        beta3: mean(pred),
        beta4: 0.0,
        beta5: mean(mos),
    };
    let mut rss = rss_of(&params, pred, mos);
    let mut damping = 1e-3;

    for _ in 0..200 {
        // Jacobian of the model and residuals at the current parameters.
        let mut jtj = [[0.0; 5]; 5];
        let mut jtr = [0.0; 5];
        for (&x, &y) in pred.iter().zip(mos) {
            let z = params.beta2 * (x - params.beta3);
            let u = 1.0 / (1.0 + z.exp());
            let du = u * (1.0 - u);
            let j = [
                0.5 - u,
                params.beta1 * du * (x - params.beta3),
                -params.beta1 * du * params.beta2,
                x,
                1.0,
            ];
            let r = y - logistic5(&params, x);
            for a in 0..5 {
                jtr[a] += j[a] * r;
                for b in 0..5 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }

        let mut improved = false;
        for _ in 0..25 {
            let mut damped = jtj;
            for d in 0..5 {
                damped[d][d] += damping * (jtj[d][d] + 1e-12);
            }
            if let Some(step) = solve5(damped, jtr) {
                let candidate = LogisticParams {
                    beta1: params.beta1 + step[0],
                    beta2: params.beta2 + step[1],
                    beta3: params.beta3 + step[2],
                    beta4: params.beta4 + step[3],
                    beta5: params.beta5 + step[4],
                };
                let candidate_rss = rss_of(&candidate, pred, mos);
                if candidate_rss.is_finite() && candidate_rss < rss {
                    params = candidate;
                    rss = candidate_rss;
                    damping = (damping / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
            }
            damping *= 3.0;
        }
        if !improved {
            break;
        }
    }

    // The linear fit is the floor: fall back when the damped fit diverged or
    // ended up worse.
    let (slope, intercept) = linear_fit(pred, mos);
    let linear = LogisticParams {
        beta1: 0.0,
        beta2: 1.0,
        beta3: mean(pred),
        beta4: slope,
        beta5: intercept,
    };
    let linear_rss = rss_of(&linear, pred, mos);
    let all_finite = [
        params.beta1,
        params.beta2,
        params.beta3,
        params.beta4,
        params.beta5,
    ]
    .iter()
    .all(|v| v.is_finite());
    if !all_finite || !rss.is_finite() || rss > linear_rss {
        Ok(LogisticFit {
            params: linear,
            fallback_linear: true,
            rss: linear_rss,
        })
    } else {
        Ok(LogisticFit {
            params,
            fallback_linear: false,
            rss,
        })
    }
}

/// Pearson linear correlation coefficient.
pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_vectors(x, y, 3)?;
    let mx = mean(x);
    let my = mean(y);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "an input has zero variance".into(),
        ));
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks with average ranks for ties, 1-based.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite values"));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank-order correlation: Pearson over average ranks.
pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_vectors(x, y, 3)?;
    plcc(&average_ranks(x), &average_ranks(y))
}

/// Root-mean-square error.
pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_vectors(x, y, 3)?;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok((ss / x.len() as f64).sqrt())
}

/// Outlier ratio with per-item thresholds: the fraction of items where
/// `|mapped - mos| > 2 * mos_std`.
pub fn outlier_ratio_per_item(mapped: &[f64], mos: &[f64], mos_std: &[f64]) -> Result<f64> {
    check_vectors(mapped, mos, 1)?;
    check_vectors(mos, mos_std, 1)?;
    let n = mapped.len();
    let outliers = mapped
        .iter()
        .zip(mos)
        .zip(mos_std)
        .filter(|((&m, &s), &sd)| (m - s).abs() > 2.0 * sd)
        .count();
    Ok(outliers as f64 / n as f64)
}

/// Outlier ratio with a global threshold of twice the population standard
/// deviation of the residuals around the fit.
pub fn outlier_ratio_global(mapped: &[f64], mos: &[f64]) -> Result<f64> {
    check_vectors(mapped, mos, 1)?;
    let residuals: Vec<f64> = mos.iter().zip(mapped).map(|(&s, &m)| s - m).collect();
    let mu = mean(&residuals);
    let var = residuals.iter().map(|r| (r - mu) * (r - mu)).sum::<f64>() / residuals.len() as f64;
    let threshold = 2.0 * var.sqrt();
    let outliers = residuals.iter().filter(|r| r.abs() > threshold).count();
    Ok(outliers as f64 / residuals.len() as f64)
}

/// Per-item outcome of a benchmark run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ItemOutcome {
    pub id: String,
    pub raw_score: Option<f64>,
    pub mapped_score: Option<f64>,
    pub mos: f64,
    pub abs_error: Option<f64>,
    pub outlier: Option<bool>,
    pub error: Option<String>,
}

/// Echo of the configuration a report was produced under. Dictionary fields
/// are absent for metrics that do not use one.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConfigEcho {
    pub metric: String,
    pub n0: u32,
    pub fov_deg: f64,
    pub viewport_side: Option<usize>,
    pub c: f64,
    pub laplace_mu_deg: f64,
    pub laplace_b_deg: f64,
    pub weighting: String,
    pub activation: String,
    pub alpha: f64,
    pub sigma2: f64,
    pub r_steps: usize,
    pub r_lr: f64,
    pub dict_patch_side: Option<usize>,
    pub dict_n_basis: Option<usize>,
    pub dict_seed: Option<u64>,
    pub dict_meta: Option<String>,
}

impl ConfigEcho {
    fn from_pipeline(metric: &str, cfg: &PipelineConfig) -> Self {
        ConfigEcho {
            metric: metric.to_string(),
            n0: cfg.n0,
            fov_deg: cfg.fov_deg,
            viewport_side: cfg.viewport_side,
            c: cfg.c,
            laplace_mu_deg: cfg.laplace.mu_deg,
            laplace_b_deg: cfg.laplace.b_deg,
            weighting: cfg.weighting.name().to_string(),
            activation: cfg.hp.activation.name().to_string(),
            alpha: cfg.hp.alpha,
            sigma2: cfg.hp.sigma2,
            r_steps: cfg.hp.r_steps,
            r_lr: cfg.hp.r_lr,
            dict_patch_side: None,
            dict_n_basis: None,
            dict_seed: None,
            dict_meta: None,
        }
    }

    pub fn new(cfg: &PipelineConfig, dict: &Dictionary) -> Self {
        let mut echo = ConfigEcho::from_pipeline("soiqe", cfg);
        echo.dict_patch_side = Some(dict.patch_side());
        echo.dict_n_basis = Some(dict.n_basis());
        echo.dict_seed = Some(dict.seed());
        echo.dict_meta = Some(dict.meta().to_string());
        echo
    }

    /// Echo for the dictionary-free PSNR sanity baseline.
    pub fn psnr_baseline(cfg: &PipelineConfig) -> Self {
        ConfigEcho::from_pipeline("psnr-baseline", cfg)
    }
}

/// Aggregate benchmark metrics. Correlations are absent when undefined for
/// the dataset (see `degenerate`).
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricsReport {
    pub schema: u32,
    pub n_scored: usize,
    pub n_excluded: usize,
    pub plcc: Option<f64>,
    pub srocc: Option<f64>,
    pub rmse: Option<f64>,
    pub or_ratio: Option<f64>,
    pub or_rule: String,
    /// Residual-threshold variant, reported alongside when per-item standard
    /// deviations were available.
    pub or_ratio_global: Option<f64>,
    pub logistic: Option<LogisticParams>,
    pub logistic_fallback_linear: bool,
    pub degenerate: Option<String>,
    pub config: ConfigEcho,
}

/// Report plus per-item rows.
#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub report: MetricsReport,
    pub items: Vec<ItemOutcome>,
}

fn load_pair(left: &Path, right: &Path) -> Result<ErpStereoPair> {
    ErpStereoPair::new(ErpImage::load(left)?, ErpImage::load(right)?)
}

/// Score every manifest row through the full pipeline and compute the four
/// criteria. Unreadable items are excluded and recorded; a dataset on which
/// a correlation is undefined is flagged as degenerate rather than failing.
pub fn run_benchmark(
    manifest: &DatasetManifest,
    dict: &Dictionary,
    cfg: &PipelineConfig,
) -> Result<BenchmarkOutput> {
    run_benchmark_with(manifest, ConfigEcho::new(cfg, dict), |reference, distorted| {
        Ok(score_pair(reference, distorted, dict, cfg)?.score)
    })
}

/// [`run_benchmark`] under an arbitrary pair scorer, e.g. the PSNR sanity
/// baseline from [`crate::baseline`].
pub fn run_benchmark_with(
    manifest: &DatasetManifest,
    config: ConfigEcho,
    scorer: impl Fn(&ErpStereoPair, &ErpStereoPair) -> Result<f64> + Sync,
) -> Result<BenchmarkOutput> {
    if manifest.rows.is_empty() {
        return Err(Error::invalid("manifest has no rows"));
    }

    let raw: Vec<std::result::Result<f64, String>> = manifest
        .rows
        .par_iter()
        .map(|row| {
            let run = || -> Result<f64> {
                let reference = load_pair(&row.ref_left, &row.ref_right)?;
                let distorted = load_pair(&row.dis_left, &row.dis_right)?;
                scorer(&reference, &distorted)
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    let mut items: Vec<ItemOutcome> = manifest
        .rows
        .iter()
        .zip(&raw)
        .map(|(row, outcome)| ItemOutcome {
            id: row.id.clone(),
            raw_score: outcome.as_ref().ok().copied(),
            mapped_score: None,
            mos: row.mos,
            abs_error: None,
            outlier: None,
            error: outcome.as_ref().err().cloned(),
        })
        .collect();

    let scored_idx: Vec<usize> = (0..items.len())
        .filter(|&i| items[i].raw_score.is_some())
        .collect();
    let n_scored = scored_idx.len();
    let n_excluded = items.len() - n_scored;

    let preds: Vec<f64> = scored_idx
        .iter()
        .map(|&i| items[i].raw_score.unwrap())
        .collect();
    let moses: Vec<f64> = scored_idx.iter().map(|&i| items[i].mos).collect();
    let stds: Option<Vec<f64>> = scored_idx
        .iter()
        .map(|&i| manifest.rows[i].mos_std)
        .collect();

    let mut degenerate = None;
    let flag = |reason: String, degenerate: &mut Option<String>| {
        if degenerate.is_none() {
            *degenerate = Some(reason);
        }
    };

    let srocc_val = match srocc(&preds, &moses) {
        Ok(v) => Some(v),
        Err(e) => {
            flag(format!("SROCC undefined: {e}"), &mut degenerate);
            None
        }
    };

    let fit = match fit_logistic(&preds, &moses) {
        Ok(f) => Some(f),
        Err(e) => {
            flag(format!("logistic fit unavailable: {e}"), &mut degenerate);
            None
        }
    };

    let mut plcc_val = None;
    let mut rmse_val = None;
    let mut or_val = None;
    let mut or_global = None;
    let mut or_rule = String::from("unavailable");
    if let Some(fit) = &fit {
        let mapped: Vec<f64> = preds.iter().map(|&x| logistic5(&fit.params, x)).collect();
        for (slot, &i) in scored_idx.iter().enumerate() {
            let m = mapped[slot];
            items[i].mapped_score = Some(m);
            items[i].abs_error = Some((m - items[i].mos).abs());
        }
        plcc_val = match plcc(&mapped, &moses) {
            Ok(v) => Some(v),
            Err(e) => {
                flag(format!("PLCC undefined: {e}"), &mut degenerate);
                None
            }
        };
        rmse_val = rmse(&mapped, &moses).ok();

        let global = outlier_ratio_global(&mapped, &moses).ok();
        match &stds {
            Some(stds) => {
                or_val = outlier_ratio_per_item(&mapped, &moses, stds).ok();
                or_rule = String::from("abs_error > 2*mos_std");
                or_global = global;
                for (slot, &i) in scored_idx.iter().enumerate() {
                    items[i].outlier =
                        Some((mapped[slot] - moses[slot]).abs() > 2.0 * stds[slot]);
                }
            }
            None => {
                or_val = global;
                or_rule = String::from("abs_error > 2*residual_std");
                let mu = mean(&mapped.iter().zip(&moses).map(|(&m, &s)| s - m).collect::<Vec<_>>());
                let var = mapped
                    .iter()
                    .zip(&moses)
                    .map(|(&m, &s)| {
                        let r = s - m;
                        (r - mu) * (r - mu)
                    })
                    .sum::<f64>()
                    / n_scored.max(1) as f64;
                let threshold = 2.0 * var.sqrt();
                for (slot, &i) in scored_idx.iter().enumerate() {
                    items[i].outlier = Some((moses[slot] - mapped[slot]).abs() > threshold);
                }
            }
        }
    }

    if n_scored > 0 && preds.iter().all(|&p| p == preds[0]) {
        flag(
            "all raw predictions identical (distorted inputs may equal references)".into(),
            &mut degenerate,
        );
    }
    if n_scored == 0 {
        flag("no items could be scored".into(), &mut degenerate);
    }

    let report = MetricsReport {
        schema: 1,
        n_scored,
        n_excluded,
        plcc: plcc_val,
        srocc: srocc_val,
        rmse: rmse_val,
        or_ratio: or_val,
        or_rule,
        or_ratio_global: or_global,
        logistic: fit.as_ref().map(|f| f.params),
        logistic_fallback_linear: fit.as_ref().map(|f| f.fallback_linear).unwrap_or(false),
        degenerate,
        config,
    };
    Ok(BenchmarkOutput { report, items })
}

/// Serialize a report as pretty JSON with a trailing newline.
pub fn write_report_json(report: &MetricsReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Format(format!("report serialization: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Per-item CSV: `id, raw_score, mapped_score, mos, abs_error, outlier, error`.
pub fn write_items_csv(items: &[ItemOutcome], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(["id", "raw_score", "mapped_score", "mos", "abs_error", "outlier", "error"])
        .map_err(|e| Error::Format(e.to_string()))?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for item in items {
        w.write_record([
            item.id.clone(),
            fmt(item.raw_score),
            fmt(item.mapped_score),
            item.mos.to_string(),
            fmt(item.abs_error),
            item.outlier.map(|o| o.to_string()).unwrap_or_default(),
            item.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Scatter CSV of `mos, mapped_score` for scored items.
pub fn write_scatter_csv(items: &[ItemOutcome], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(["mos", "mapped_score"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for item in items {
        if let Some(m) = item.mapped_score {
            w.write_record([item.mos.to_string(), m.to_string()])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
