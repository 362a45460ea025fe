//! Full-reference quality assessment for stereoscopic omnidirectional
//! images.
//!
//! The pipeline converts a stereo equirectangular pair into latitude-sampled
//! rectilinear viewports, scores each viewport with a predictive-coding
//! binocular rivalry model over a learned patch dictionary, and fuses the
//! per-viewport scores with content and location weights. A benchmark
//! harness maps predictions through a five-parameter logistic and reports
//! PLCC, SROCC, RMSE and outlier ratio against subjective scores.

pub mod baseline;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod pc;
pub mod pipeline;
pub mod preproc;
pub mod raster;
pub mod rivalry;
pub mod synth;
pub mod viewport;

pub use error::{Error, Result};
pub use pc::{Dictionary, PcHyperparams};
pub use pipeline::{score_pair, PipelineConfig, ScoreBreakdown};
pub use raster::{ErpImage, ErpStereoPair};
