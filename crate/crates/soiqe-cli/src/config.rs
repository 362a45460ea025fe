//! Plain-text `key=value` configuration files and their merge with
//! command-line flags. Flags win over file entries, which win over defaults;
//! the `SOIQE_DICT` environment variable supplies the dictionary path when
//! neither does.

use std::path::{Path, PathBuf};

use soiqe::error::Error;
use soiqe::fusion::{weighting_by_name, weighting_names, LaplaceLatitudeModel};
use soiqe::pc::{activation_by_name, activation_names};
use soiqe::pipeline::PipelineConfig;
use soiqe::rivalry::BlockAggregation;

/// Pipeline-related settings collected from one source (file or flags).
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub n0: Option<u32>,
    pub fov: Option<f64>,
    pub viewport_side: Option<usize>,
    pub c: Option<f64>,
    pub laplace_mu: Option<f64>,
    pub laplace_b: Option<f64>,
    pub activation: Option<String>,
    pub fusion: Option<String>,
    pub alpha: Option<f64>,
    pub sigma2: Option<f64>,
    pub r_steps: Option<usize>,
    pub r_lr: Option<f64>,
    pub mean_blocks: Option<bool>,
    pub threads: Option<usize>,
    pub dict: Option<PathBuf>,
}

impl Overrides {
    /// Later sources win; `self` is the weaker layer.
    pub fn overlaid_with(mut self, stronger: Overrides) -> Overrides {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if stronger.$field.is_some() { self.$field = stronger.$field; })*
            };
        }
        take!(
            n0, fov, viewport_side, c, laplace_mu, laplace_b, activation, fusion, alpha, sigma2,
            r_steps, r_lr, mean_blocks, threads, dict
        );
        self
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("config value '{value}' is invalid for {key}")))
}

/// Parse a config file: one `key=value` per line, `#` comments and blank
/// lines ignored.
pub fn parse_config_file(path: &Path) -> Result<Overrides, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = Overrides::default();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!(
                "config line {}: expected key=value, got '{line}'",
                line_no + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "n0" => out.n0 = Some(parse(key, value)?),
            "fov" => out.fov = Some(parse(key, value)?),
            "viewport_side" => {
                out.viewport_side = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "c" => out.c = Some(parse(key, value)?),
            "laplace_mu" => out.laplace_mu = Some(parse(key, value)?),
            "laplace_b" => out.laplace_b = Some(parse(key, value)?),
            "activation" => out.activation = Some(value.to_string()),
            "fusion" => out.fusion = Some(value.to_string()),
            "alpha" => out.alpha = Some(parse(key, value)?),
            "sigma2" => out.sigma2 = Some(parse(key, value)?),
            "r_steps" => out.r_steps = Some(parse(key, value)?),
            "r_lr" => out.r_lr = Some(parse(key, value)?),
            "mean_blocks" => out.mean_blocks = Some(parse(key, value)?),
            "threads" => out.threads = Some(parse(key, value)?),
            "dict" => out.dict = Some(PathBuf::from(value)),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "config line {}: unknown key '{other}'",
                    line_no + 1
                )))
            }
        }
    }
    Ok(out)
}

/// Resolved settings ready to run with.
pub struct Resolved {
    pub pipeline: PipelineConfig,
    pub dict_path: Option<PathBuf>,
    pub threads: usize,
}

/// Apply overrides on top of the defaults and validate strategy names.
pub fn resolve(overrides: Overrides) -> Result<Resolved, Error> {
    let mut cfg = PipelineConfig::default();
    if let Some(n0) = overrides.n0 {
        cfg.n0 = n0;
    }
    if let Some(fov) = overrides.fov {
        cfg.fov_deg = fov;
    }
    cfg.viewport_side = overrides.viewport_side.or(cfg.viewport_side);
    if let Some(c) = overrides.c {
        cfg.c = c;
    }
    cfg.laplace = LaplaceLatitudeModel::new(
        overrides.laplace_mu.unwrap_or(cfg.laplace.mu_deg),
        overrides.laplace_b.unwrap_or(cfg.laplace.b_deg),
    )?;
    if let Some(name) = &overrides.activation {
        cfg.hp.activation = activation_by_name(name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown activation '{name}'; available: {}",
                activation_names().join(", ")
            ))
        })?;
    }
    if let Some(name) = &overrides.fusion {
        cfg.weighting = weighting_by_name(name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown fusion policy '{name}'; available: {}",
                weighting_names().join(", ")
            ))
        })?;
    }
    if let Some(alpha) = overrides.alpha {
        cfg.hp.alpha = alpha;
    }
    if let Some(sigma2) = overrides.sigma2 {
        cfg.hp.sigma2 = sigma2;
    }
    if let Some(r_steps) = overrides.r_steps {
        cfg.hp.r_steps = r_steps;
    }
    if let Some(r_lr) = overrides.r_lr {
        cfg.hp.r_lr = r_lr;
    }
    if overrides.mean_blocks.unwrap_or(false) {
        cfg.aggregation = BlockAggregation::Mean;
    }

    let dict_path = overrides
        .dict
        .or_else(|| std::env::var_os("SOIQE_DICT").map(PathBuf::from));

    Ok(Resolved {
        pipeline: cfg,
        dict_path,
        threads: overrides.threads.unwrap_or(0),
    })
}
