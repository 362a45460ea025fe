//! `soiqe` command-line interface.
//!
//! Subcommands: `score` (one stereo pair), `benchmark` (a manifest of
//! pairs), `train-dict` (dictionary training) and `viewports` (projection
//! debugging). Exit codes: 0 success, 2 I/O, 3 validation, 4 missing model.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use soiqe::baseline::stereo_psnr;
use soiqe::error::Error;
use soiqe::harness::{
    run_benchmark, run_benchmark_with, write_items_csv, write_report_json, write_scatter_csv,
    ConfigEcho, DatasetManifest,
};
use soiqe::pc::{load_training_patches, train_dictionary, Dictionary, PcHyperparams};
use soiqe::pipeline::score_pair;
use soiqe::raster::{save_gray_png, ErpImage, ErpStereoPair};
use soiqe::viewport::{default_viewport_side, render_viewport, sample_viewpoints};

use config::{parse_config_file, resolve, Overrides, Resolved};

#[derive(Parser)]
#[command(
    name = "soiqe",
    version,
    about = "Full-reference quality evaluator for stereoscopic 360-degree images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one distorted stereo panorama against its reference
    Score(ScoreArgs),
    /// Score every pair in a manifest and report PLCC/SROCC/RMSE/OR
    Benchmark(BenchmarkArgs),
    /// Train a patch dictionary from a directory of 2D images
    TrainDict(TrainDictArgs),
    /// Render the sampled viewports of an ERP image as PNG files
    Viewports(ViewportsArgs),
}

/// Flags shared by the scoring commands; unset values fall back to the
/// config file and then to defaults.
#[derive(Args, Debug, Default)]
struct PipelineArgs {
    /// Optional key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dictionary file (or set SOIQE_DICT)
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Equator viewpoint count
    #[arg(long)]
    n0: Option<u32>,
    /// Field of view in degrees
    #[arg(long)]
    fov: Option<f64>,
    /// Viewport raster side in pixels (default: derived from the ERP width)
    #[arg(long)]
    viewport_side: Option<usize>,
    /// Similarity stabilization constant
    #[arg(long)]
    c: Option<f64>,
    /// Laplace location parameter in degrees
    #[arg(long)]
    laplace_mu: Option<f64>,
    /// Laplace scale parameter in degrees
    #[arg(long)]
    laplace_b: Option<f64>,
    /// Generative activation: identity or tanh
    #[arg(long)]
    activation: Option<String>,
    /// Fusion policy: average, content or content-location
    #[arg(long)]
    fusion: Option<String>,
    /// Coefficient regularizer weight
    #[arg(long)]
    alpha: Option<f64>,
    /// Noise variance of the data term
    #[arg(long)]
    sigma2: Option<f64>,
    /// Coefficient descent iterations per patch
    #[arg(long)]
    r_steps: Option<usize>,
    /// Coefficient descent step size
    #[arg(long)]
    r_lr: Option<f64>,
    /// Average viewport quality over blocks instead of summing
    #[arg(long)]
    mean_blocks: bool,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<Resolved, Error> {
        let from_file = match &self.config {
            Some(path) => parse_config_file(path)?,
            None => Overrides::default(),
        };
        let from_flags = Overrides {
            n0: self.n0,
            fov: self.fov,
            viewport_side: self.viewport_side,
            c: self.c,
            laplace_mu: self.laplace_mu,
            laplace_b: self.laplace_b,
            activation: self.activation.clone(),
            fusion: self.fusion.clone(),
            alpha: self.alpha,
            sigma2: self.sigma2,
            r_steps: self.r_steps,
            r_lr: self.r_lr,
            mean_blocks: if self.mean_blocks { Some(true) } else { None },
            threads: self.threads,
            dict: self.dict.clone(),
        };
        resolve(from_file.overlaid_with(from_flags))
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Reference left-view ERP image
    #[arg(long)]
    ref_left: PathBuf,
    /// Reference right-view ERP image
    #[arg(long)]
    ref_right: PathBuf,
    /// Distorted left-view ERP image
    #[arg(long)]
    dis_left: PathBuf,
    /// Distorted right-view ERP image
    #[arg(long)]
    dis_right: PathBuf,
    /// Write the score JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-viewport breakdown as CSV
    #[arg(long)]
    per_viewport: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Dataset manifest CSV
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for the output files
    #[arg(long)]
    out_dir: PathBuf,
    /// Report file name inside --out-dir
    #[arg(long, default_value = "report.json")]
    report: String,
    /// Per-item CSV file name inside --out-dir
    #[arg(long, default_value = "per_item.csv")]
    per_item: String,
    /// Optional scatter-data CSV file name inside --out-dir
    #[arg(long)]
    scatter: Option<String>,
    /// Pair scorer: "soiqe" or the dictionary-free "psnr" sanity baseline
    #[arg(long, default_value = "soiqe")]
    metric: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct TrainDictArgs {
    /// Directory of 2D grayscale or RGB training images
    #[arg(long)]
    corpus: PathBuf,
    /// Patch side in pixels
    #[arg(long, default_value_t = 16)]
    patch: usize,
    /// Number of basis vectors
    #[arg(long, default_value_t = 1024)]
    basis: usize,
    /// Training seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dictionary file
    #[arg(long)]
    out: PathBuf,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Dictionary step size
    #[arg(long)]
    dict_lr: Option<f64>,
    /// Minibatch size (0 = full corpus)
    #[arg(long)]
    batch: Option<usize>,
    /// Dictionary regularizer weight
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct ViewportsArgs {
    /// ERP image to project
    #[arg(long)]
    input: PathBuf,
    /// Equator viewpoint count
    #[arg(long, default_value_t = 8)]
    n0: u32,
    /// Field of view in degrees
    #[arg(long, default_value_t = 90.0)]
    fov: f64,
    /// Viewport raster side (default: derived from the ERP width)
    #[arg(long)]
    side: Option<usize>,
    /// Directory for the PNG files
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Image { .. } => 2,
        Error::MissingDictionary(_) => 4,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::TrainDict(args) => cmd_train_dict(args),
        Command::Viewports(args) => cmd_viewports(args),
    }
}

fn load_dictionary(path: &Option<PathBuf>) -> Result<Dictionary, Error> {
    let path = path.as_ref().ok_or_else(|| {
        Error::MissingDictionary(
            "no dictionary configured; pass --dict, set dict= in the config file, or set SOIQE_DICT"
                .into(),
        )
    })?;
    if !path.exists() {
        return Err(Error::MissingDictionary(format!(
            "dictionary file {} does not exist",
            path.display()
        )));
    }
    Dictionary::read_from(path)
}

fn in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T, Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn cmd_score(args: ScoreArgs) -> Result<(), Error> {
    let resolved = args.pipeline.resolve()?;
    let dict = load_dictionary(&resolved.dict_path)?;

    let reference = ErpStereoPair::new(
        ErpImage::load(&args.ref_left)?,
        ErpImage::load(&args.ref_right)?,
    )?;
    let distorted = ErpStereoPair::new(
        ErpImage::load(&args.dis_left)?,
        ErpImage::load(&args.dis_right)?,
    )?;

    let cfg = resolved.pipeline;
    let breakdown = in_pool(resolved.threads, || {
        score_pair(&reference, &distorted, &dict, &cfg)
    })??;

    let payload = serde_json::json!({
        "schema": 1,
        "score": breakdown.score,
        "viewport_side": breakdown.viewport_side,
        "blocks_per_viewport": breakdown.blocks_per_viewport,
        "per_viewport": breakdown.per_viewport,
        "config": ConfigEcho::new(&cfg, &dict),
    });
    let mut text = serde_json::to_string_pretty(&payload)
        .map_err(|e| Error::Format(format!("score serialization: {e}")))?;
    text.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?,
        None => print!("{text}"),
    }

    if let Some(path) = &args.per_viewport {
        soiqe::pipeline::write_viewport_csv(&breakdown, path)?;
    }
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), Error> {
    let resolved = args.pipeline.resolve()?;
    let manifest = DatasetManifest::load(&args.manifest)?;

    let cfg = resolved.pipeline;
    let output = match args.metric.as_str() {
        "soiqe" => {
            let dict = load_dictionary(&resolved.dict_path)?;
            in_pool(resolved.threads, || run_benchmark(&manifest, &dict, &cfg))??
        }
        "psnr" => in_pool(resolved.threads, || {
            run_benchmark_with(&manifest, ConfigEcho::psnr_baseline(&cfg), stereo_psnr)
        })??,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown metric '{other}'; available: soiqe, psnr"
            )))
        }
    };

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    let report_path = args.out_dir.join(&args.report);
    let items_path = args.out_dir.join(&args.per_item);
    write_report_json(&output.report, &report_path)?;
    write_items_csv(&output.items, &items_path)?;
    if let Some(name) = &args.scatter {
        write_scatter_csv(&output.items, &args.out_dir.join(name))?;
    }

    let r = &output.report;
    println!(
        "scored {} items ({} excluded)",
        r.n_scored, r.n_excluded
    );
    let show = |name: &str, v: Option<f64>| match v {
        Some(v) => println!("{name}: {v:.4}"),
        None => println!("{name}: undefined"),
    };
    show("PLCC", r.plcc);
    show("SROCC", r.srocc);
    show("RMSE", r.rmse);
    show("OR", r.or_ratio);
    if let Some(reason) = &r.degenerate {
        println!("degenerate dataset: {reason}");
    }
    println!("report: {}", report_path.display());
    println!("per-item: {}", items_path.display());
    Ok(())
}

fn cmd_train_dict(args: TrainDictArgs) -> Result<(), Error> {
    let resolved = args.pipeline.resolve()?;
    let mut hp: PcHyperparams = resolved.pipeline.hp;
    hp.seed = args.seed;
    if let Some(epochs) = args.epochs {
        hp.dict_epochs = epochs;
    }
    if let Some(lr) = args.dict_lr {
        hp.dict_lr = lr;
    }
    if let Some(batch) = args.batch {
        hp.batch_size = batch;
    }
    if let Some(lambda) = args.lambda {
        hp.lambda = lambda;
    }

    let patches = load_training_patches(&args.corpus, args.patch)?;
    eprintln!(
        "training {}x{} dictionary on {} patches from {}",
        args.basis,
        args.patch * args.patch,
        patches.len(),
        args.corpus.display()
    );
    let corpus_id = args
        .corpus
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| args.corpus.display().to_string());
    let dict = in_pool(resolved.threads, || {
        train_dictionary(&patches, args.patch, args.basis, &hp, &corpus_id)
    })??;
    dict.write_to(&args.out)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn fmt_angle(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn cmd_viewports(args: ViewportsArgs) -> Result<(), Error> {
    let erp = ErpImage::load(&args.input)?;
    let side = args
        .side
        .unwrap_or_else(|| default_viewport_side(erp.width(), args.fov));
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    for (index, vp) in sample_viewpoints(args.n0)?.iter().enumerate() {
        let rendered = render_viewport(&erp, *vp, args.fov, side)?;
        let name = format!(
            "vp_{index}_{}_{}.png",
            fmt_angle(vp.latitude_deg),
            fmt_angle(vp.longitude_deg)
        );
        save_gray_png(rendered.luma(), &args.out_dir.join(name))?;
    }
    Ok(())
}
