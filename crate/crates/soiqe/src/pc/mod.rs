//! Single-level predictive coding: a learned dictionary of patch patterns,
//! per-patch inference of hypothesis coefficients by gradient descent, and
//! dictionary training by alternating optimization.
//!
//! A patch `I` is modeled as `I = f(U r) + n`. Inference minimizes
//!
//! ```text
//! E = (1/sigma^2) * ||I - f(U r)||^2 + alpha * sum(log(1 + r_i^2))
//!     + lambda * sum(U_ij^2)
//! ```
//!
//! over `r`; training alternates inference with gradient steps on `U`.

mod activation;
mod format;

pub use activation::{
    activation_by_name, activation_names, Activation, IdentityActivation, TanhActivation,
    IDENTITY, TANH,
};

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::preproc::{auto_downsample, log_kernel, preprocess_with, LOG_SIGMA};
use crate::raster::load_luma;

/// Backtracking line-search depth for one descent step.
const MAX_HALVINGS: usize = 10;

/// Hyperparameters for inference and dictionary training.
#[derive(Debug, Clone, Copy)]
pub struct PcHyperparams {
    /// Weight of the coefficient regularizer `alpha * sum(log(1 + r^2))`.
    pub alpha: f64,
    /// Weight of the dictionary regularizer `lambda * sum(U^2)`.
    pub lambda: f64,
    /// Gaussian noise variance in the data term.
    pub sigma2: f64,
    /// Gradient-descent iterations per patch.
    pub r_steps: usize,
    /// Base step size for coefficient updates.
    pub r_lr: f64,
    /// Training epochs over the whole corpus.
    pub dict_epochs: usize,
    /// Base step size for dictionary updates, decayed by 0.95 per epoch.
    pub dict_lr: f64,
    /// Minibatch size for training; 0 uses the full corpus per batch.
    pub batch_size: usize,
    /// Seed for dictionary initialization and patch shuffling.
    pub seed: u64,
    /// Generative-model activation.
    pub activation: &'static dyn Activation,
}

impl Default for PcHyperparams {
    fn default() -> Self {
        PcHyperparams {
            alpha: 0.05,
            lambda: 1e-4,
            sigma2: 1.0,
            r_steps: 50,
            r_lr: 0.1,
            dict_epochs: 40,
            dict_lr: 0.5,
            batch_size: 0,
            seed: 0,
            activation: &IDENTITY,
        }
    }
}

impl PcHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2 must be positive"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha must be non-negative"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        if !(self.r_lr > 0.0 && self.r_lr.is_finite()) {
            return Err(Error::invalid("r_lr must be positive"));
        }
        if !(self.dict_lr > 0.0 && self.dict_lr.is_finite()) {
            return Err(Error::invalid("dict_lr must be positive"));
        }
        if self.r_steps == 0 {
            return Err(Error::invalid("r_steps must be at least 1"));
        }
        Ok(())
    }
}

/// A learned dictionary of `n_basis` patterns over `patch_side^2` pixels.
///
/// Rows of `basis` are the patterns; `basis_variance[j]` caches the
/// population variance of pattern `j`'s entries.
#[derive(Clone, PartialEq)]
pub struct Dictionary {
    patch_side: usize,
    n_basis: usize,
    basis: Vec<f64>,
    basis_variance: Vec<f64>,
    sq_sum: f64,
    seed: u64,
    meta: String,
}

impl std::fmt::Debug for Dictionary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dictionary")
            .field("patch_side", &self.patch_side)
            .field("n_basis", &self.n_basis)
            .field("seed", &self.seed)
            .field("meta", &self.meta)
            .finish_non_exhaustive()
    }
}

impl Dictionary {
    pub fn new(patch_side: usize, basis: Vec<f64>, seed: u64, meta: String) -> Result<Self> {
        if patch_side < 4 {
            return Err(Error::invalid(format!("patch side {patch_side} < 4")));
        }
        let dim = patch_side * patch_side;
        if basis.is_empty() || !basis.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "basis length {} is not a positive multiple of {}",
                basis.len(),
                dim
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("basis contains non-finite entries"));
        }
        let n_basis = basis.len() / dim;
        let basis_variance = (0..n_basis)
            .map(|j| population_variance(&basis[j * dim..(j + 1) * dim]))
            .collect();
        let sq_sum = basis.iter().map(|v| v * v).sum();
        Ok(Dictionary {
            patch_side,
            n_basis,
            basis,
            basis_variance,
            sq_sum,
            seed,
            meta,
        })
    }

    pub fn patch_side(&self) -> usize {
        self.patch_side
    }

    /// L^2, the pixel count of one patch.
    pub fn patch_dim(&self) -> usize {
        self.patch_side * self.patch_side
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn basis_row(&self, j: usize) -> &[f64] {
        let d = self.patch_dim();
        &self.basis[j * d..(j + 1) * d]
    }

    pub fn basis_variance(&self) -> &[f64] {
        &self.basis_variance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> &str {
        &self.meta
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        format::write(self, path)
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        format::read(path)
    }
}

pub(crate) fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// The outcome of encoding one patch.
#[derive(Debug, Clone)]
pub struct CodingResult {
    /// Hypothesis coefficients, one per basis vector.
    pub r: Vec<f64>,
    /// Top-down prediction `f(U r)`.
    pub prediction: Vec<f64>,
    /// Prediction error `patch - prediction`.
    pub error: Vec<f64>,
    /// Final objective value.
    pub objective: f64,
}

fn check_patch(patch: &[f64], dim: usize) -> Result<()> {
    if patch.len() != dim {
        return Err(Error::invalid(format!(
            "patch length {} does not match dictionary dimension {}",
            patch.len(),
            dim
        )));
    }
    if patch.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("patch contains non-finite values"));
    }
    Ok(())
}

/// `lin = U r` over the row-major basis.
fn synthesize(basis: &[f64], dim: usize, r: &[f64], lin: &mut [f64]) {
    lin.fill(0.0);
    for (j, &rj) in r.iter().enumerate() {
        if rj == 0.0 {
            continue;
        }
        let row = &basis[j * dim..(j + 1) * dim];
        for (o, &b) in lin.iter_mut().zip(row) {
            *o += rj * b;
        }
    }
}

fn apply_activation(act: &dyn Activation, lin: &[f64], pred: &mut [f64]) {
    for (p, &x) in pred.iter_mut().zip(lin) {
        *p = act.apply(x);
    }
}

fn data_term(patch: &[f64], pred: &[f64], sigma2: f64) -> f64 {
    let ss: f64 = patch
        .iter()
        .zip(pred)
        .map(|(p, f)| (p - f) * (p - f))
        .sum();
    ss / sigma2
}

fn coeff_penalty(r: &[f64], alpha: f64) -> f64 {
    alpha * r.iter().map(|v| (1.0 + v * v).ln()).sum::<f64>()
}

/// Full objective for a patch/coefficient pair, including the dictionary
/// regularizer.
pub fn objective(patch: &[f64], r: &[f64], dict: &Dictionary, hp: &PcHyperparams) -> Result<f64> {
    hp.validate()?;
    check_patch(patch, dict.patch_dim())?;
    if r.len() != dict.n_basis() {
        return Err(Error::invalid(format!(
            "coefficient length {} does not match {} basis vectors",
            r.len(),
            dict.n_basis()
        )));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("coefficients contain non-finite values"));
    }
    let dim = dict.patch_dim();
    let mut lin = vec![0.0; dim];
    let mut pred = vec![0.0; dim];
    synthesize(&dict.basis, dim, r, &mut lin);
    apply_activation(hp.activation, &lin, &mut pred);
    Ok(data_term(patch, &pred, hp.sigma2) + coeff_penalty(r, hp.alpha) + hp.lambda * dict.sq_sum)
}

/// Gradient of the objective with respect to `r`, using the precomputed
/// pre-activation `lin` and prediction `pred`.
#[allow(clippy::too_many_arguments)]
fn grad_r_inner(
    basis: &[f64],
    dim: usize,
    patch: &[f64],
    r: &[f64],
    lin: &[f64],
    pred: &[f64],
    hp: &PcHyperparams,
    wres: &mut [f64],
    grad: &mut [f64],
) {
    // wres[l] = (patch - pred)_l * f'(lin_l)
    for ((w, (&p, &f)), &x) in wres.iter_mut().zip(patch.iter().zip(pred)).zip(lin) {
        *w = (p - f) * hp.activation.derivative(x);
    }
    let scale = -2.0 / hp.sigma2;
    for (j, g) in grad.iter_mut().enumerate() {
        let row = &basis[j * dim..(j + 1) * dim];
        let dot: f64 = row.iter().zip(wres.iter()).map(|(b, w)| b * w).sum();
        let rj = r[j];
        *g = scale * dot + 2.0 * hp.alpha * rj / (1.0 + rj * rj);
    }
}

/// Analytic gradient of the objective with respect to the coefficients.
pub fn grad_r(patch: &[f64], r: &[f64], dict: &Dictionary, hp: &PcHyperparams) -> Result<Vec<f64>> {
    hp.validate()?;
    check_patch(patch, dict.patch_dim())?;
    if r.len() != dict.n_basis() {
        return Err(Error::invalid("coefficient length mismatch"));
    }
    let dim = dict.patch_dim();
    let mut lin = vec![0.0; dim];
    let mut pred = vec![0.0; dim];
    synthesize(&dict.basis, dim, r, &mut lin);
    apply_activation(hp.activation, &lin, &mut pred);
    let mut wres = vec![0.0; dim];
    let mut grad = vec![0.0; dict.n_basis()];
    grad_r_inner(
        &dict.basis,
        dim,
        patch,
        r,
        &lin,
        &pred,
        hp,
        &mut wres,
        &mut grad,
    );
    Ok(grad)
}

/// Analytic gradient of the objective with respect to the dictionary,
/// row-major by basis index like [`Dictionary::basis`].
pub fn grad_dict(
    patch: &[f64],
    r: &[f64],
    dict: &Dictionary,
    hp: &PcHyperparams,
) -> Result<Vec<f64>> {
    hp.validate()?;
    check_patch(patch, dict.patch_dim())?;
    if r.len() != dict.n_basis() {
        return Err(Error::invalid("coefficient length mismatch"));
    }
    let dim = dict.patch_dim();
    let mut lin = vec![0.0; dim];
    let mut pred = vec![0.0; dim];
    synthesize(&dict.basis, dim, r, &mut lin);
    apply_activation(hp.activation, &lin, &mut pred);
    let mut wres = vec![0.0; dim];
    for ((w, (&p, &f)), &x) in wres.iter_mut().zip(patch.iter().zip(&pred)).zip(&lin) {
        *w = (p - f) * hp.activation.derivative(x);
    }
    let scale = -2.0 / hp.sigma2;
    let mut grad = vec![0.0; dict.basis.len()];
    for (j, &rj) in r.iter().enumerate() {
        let out = &mut grad[j * dim..(j + 1) * dim];
        let row = &dict.basis[j * dim..(j + 1) * dim];
        for ((g, &w), &u) in out.iter_mut().zip(&wres).zip(row) {
            *g = scale * rj * w + 2.0 * hp.lambda * u;
        }
    }
    Ok(grad)
}

struct EncodeState {
    r: Vec<f64>,
    lin: Vec<f64>,
    pred: Vec<f64>,
    objective: f64,
}

fn encode_state(
    basis: &[f64],
    dim: usize,
    sq_sum: f64,
    patch: &[f64],
    hp: &PcHyperparams,
) -> Result<EncodeState> {
    let k = basis.len() / dim;
    let act = hp.activation;
    let h_u = hp.lambda * sq_sum;

    let mut r = vec![0.0; k];
    let mut lin = vec![0.0; dim];
    let mut pred = vec![0.0; dim];
    apply_activation(act, &lin, &mut pred);
    let mut obj = data_term(patch, &pred, hp.sigma2) + h_u;
    if !obj.is_finite() {
        return Err(Error::NumericFailure {
            step: 0,
            detail: format!("initial objective {obj} is not finite"),
        });
    }

    let mut wres = vec![0.0; dim];
    let mut grad = vec![0.0; k];
    let mut r_new = vec![0.0; k];
    let mut lin_new = vec![0.0; dim];
    let mut pred_new = vec![0.0; dim];
    let mut trace = vec![obj];

    for step in 0..hp.r_steps {
        grad_r_inner(basis, dim, patch, &r, &lin, &pred, hp, &mut wres, &mut grad);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericFailure {
                step,
                detail: format!("non-finite gradient; objective trace {trace:?}"),
            });
        }

        let mut lr = hp.r_lr;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            for ((rn, &rv), &g) in r_new.iter_mut().zip(&r).zip(&grad) {
                *rn = rv - lr * g;
            }
            synthesize(basis, dim, &r_new, &mut lin_new);
            apply_activation(act, &lin_new, &mut pred_new);
            let obj_new = data_term(patch, &pred_new, hp.sigma2)
                + coeff_penalty(&r_new, hp.alpha)
                + h_u;
            if obj_new.is_finite() && obj_new <= obj {
                std::mem::swap(&mut r, &mut r_new);
                std::mem::swap(&mut lin, &mut lin_new);
                std::mem::swap(&mut pred, &mut pred_new);
                obj = obj_new;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if !accepted {
            // No descent at any tested step size; further steps would repeat
            // the same rejection.
            break;
        }
        if trace.len() < 8 {
            trace.push(obj);
        }
    }

    Ok(EncodeState {
        r,
        lin,
        pred,
        objective: obj,
    })
}

/// Infer hypothesis coefficients for one patch by backtracking gradient
/// descent from `r = 0`. The objective never increases across accepted steps.
pub fn encode(patch: &[f64], dict: &Dictionary, hp: &PcHyperparams) -> Result<CodingResult> {
    hp.validate()?;
    check_patch(patch, dict.patch_dim())?;
    let state = encode_state(&dict.basis, dict.patch_dim(), dict.sq_sum, patch, hp)?;
    let error: Vec<f64> = patch
        .iter()
        .zip(&state.pred)
        .map(|(p, f)| p - f)
        .collect();
    Ok(CodingResult {
        r: state.r,
        prediction: state.pred,
        error,
        objective: state.objective,
    })
}

fn quantize_f32(v: f64) -> f64 {
    v as f32 as f64
}

/// Train a dictionary by alternating optimization: each batch encodes its
/// patches against the current dictionary, then applies one mean-gradient
/// step to the basis. Deterministic for a fixed seed and corpus order.
pub fn train_dictionary(
    patches: &[Vec<f64>],
    patch_side: usize,
    n_basis: usize,
    hp: &PcHyperparams,
    corpus_id: &str,
) -> Result<Dictionary> {
    train_dictionary_observed(patches, patch_side, n_basis, hp, corpus_id, |_, _| {})
}

/// [`train_dictionary`] with an observer called after every epoch with the
/// raw basis state, for convergence logging.
pub fn train_dictionary_observed(
    patches: &[Vec<f64>],
    patch_side: usize,
    n_basis: usize,
    hp: &PcHyperparams,
    corpus_id: &str,
    mut on_epoch: impl FnMut(usize, &[f64]),
) -> Result<Dictionary> {
    hp.validate()?;
    if patch_side < 4 {
        return Err(Error::invalid(format!("patch side {patch_side} < 4")));
    }
    if n_basis == 0 {
        return Err(Error::invalid("dictionary must have at least one basis"));
    }
    if patches.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    if patches.len() < n_basis {
        return Err(Error::invalid(format!(
            "corpus yields {} patches, fewer than {} basis vectors",
            patches.len(),
            n_basis
        )));
    }
    let dim = patch_side * patch_side;
    for p in patches {
        check_patch(p, dim)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let init_scale = 0.5 / patch_side as f64;
    let mut basis: Vec<f64> = (0..n_basis * dim)
        .map(|_| rng.random_range(-init_scale..init_scale))
        .collect();

    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.shuffle(&mut rng);

    let batch = if hp.batch_size == 0 {
        patches.len()
    } else {
        hp.batch_size.min(patches.len())
    };

    let mut lr = hp.dict_lr;
    let mut grad = vec![0.0; basis.len()];
    let mut wres = vec![0.0; dim];
    for epoch in 0..hp.dict_epochs {
        for chunk in order.chunks(batch) {
            grad.fill(0.0);
            let sq_sum: f64 = basis.iter().map(|v| v * v).sum();
            for &idx in chunk {
                let patch = &patches[idx];
                let state = encode_state(&basis, dim, sq_sum, patch, hp)?;
                for ((w, (&p, &f)), &x) in wres
                    .iter_mut()
                    .zip(patch.iter().zip(&state.pred))
                    .zip(&state.lin)
                {
                    *w = (p - f) * hp.activation.derivative(x);
                }
                let scale = -2.0 / hp.sigma2;
                for (j, &rj) in state.r.iter().enumerate() {
                    if rj == 0.0 {
                        continue;
                    }
                    let out = &mut grad[j * dim..(j + 1) * dim];
                    for (g, &w) in out.iter_mut().zip(&wres) {
                        *g += scale * rj * w;
                    }
                }
            }
            // Mean data gradient plus the regularizer term, applied once.
            let inv = 1.0 / chunk.len() as f64;
            for (u, g) in basis.iter_mut().zip(&grad) {
                let total = g * inv + 2.0 * hp.lambda * *u;
                *u -= lr * total;
            }
        }
        lr *= 0.95;
        on_epoch(epoch, &basis);
    }

    // The on-disk format stores f32; round now so write/read round-trips
    // bit-exactly.
    for v in &mut basis {
        *v = quantize_f32(*v);
    }
    let meta = format!(
        "corpus={corpus_id};alpha={};lambda={};sigma2={};r_steps={};r_lr={};epochs={};dict_lr={};batch={};activation={}",
        hp.alpha,
        hp.lambda,
        hp.sigma2,
        hp.r_steps,
        hp.r_lr,
        hp.dict_epochs,
        hp.dict_lr,
        hp.batch_size,
        hp.activation.name(),
    );
    Dictionary::new(patch_side, basis, hp.seed, meta)
}

/// Load every PNG/JPEG in a directory (sorted by file name), preprocess it
/// like the scoring pipeline (downsample, LoG, tanh), and cut it into
/// non-overlapping `patch_side` x `patch_side` patches.
pub fn load_training_patches(dir: &Path, patch_side: usize) -> Result<Vec<Vec<f64>>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
                Some(ref ext) if ext == "png" || ext == "jpg" || ext == "jpeg"
            )
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::invalid(format!(
            "no PNG/JPEG images found in {}",
            dir.display()
        )));
    }

    let kernel = log_kernel(LOG_SIGMA).expect("fixed sigma is valid");
    let mut patches = Vec::new();
    for file in &files {
        let luma = load_luma(file)?;
        let small = auto_downsample(&luma);
        let pre = preprocess_with(&small, &kernel);
        patches.extend(pre.values().tiles(patch_side));
    }
    if patches.is_empty() {
        return Err(Error::invalid(
            "corpus images are smaller than one patch".to_string(),
        ));
    }
    Ok(patches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_hp() -> PcHyperparams {
        PcHyperparams::default()
    }

    /// Gram-Schmidt orthonormalization of two deterministic vectors.
    fn orthonormal_toy_dictionary(patch_side: usize) -> Dictionary {
        let dim = patch_side * patch_side;
        let mut a: Vec<f64> = (0..dim).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.4).collect();
        let mut b: Vec<f64> = (0..dim).map(|i| ((i * 5 + 1) % 13) as f64 / 13.0 - 0.5).collect();
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut a {
            *v /= na;
        }
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        for (y, x) in b.iter_mut().zip(&a) {
            *y -= dot * x;
        }
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut b {
            *v /= nb;
        }
        let mut basis = a;
        basis.extend(b);
        Dictionary::new(patch_side, basis, 0, String::new()).unwrap()
    }

    fn deterministic_patch(dim: usize, salt: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(salt);
        (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect()
    }

    #[test]
    fn dictionary_validates_inputs() {
        assert!(Dictionary::new(3, vec![0.0; 9], 0, String::new()).is_err());
        assert!(Dictionary::new(4, vec![], 0, String::new()).is_err());
        assert!(Dictionary::new(4, vec![0.0; 17], 0, String::new()).is_err());
        assert!(Dictionary::new(4, vec![f64::NAN; 16], 0, String::new()).is_err());
    }

    #[test]
    fn variance_cache_matches_brute_force() {
        let dict = orthonormal_toy_dictionary(4);
        for j in 0..dict.n_basis() {
            let row = dict.basis_row(j);
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / row.len() as f64;
            assert!((dict.basis_variance()[j] - var).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_zero_patch_zero_r() {
        let dict = orthonormal_toy_dictionary(4);
        let hp = toy_hp();
        let zero = vec![0.0; 16];
        let r0 = vec![0.0; 2];
        let expected = hp.lambda * dict.basis().iter().map(|v| v * v).sum::<f64>();
        assert!((objective(&zero, &r0, &dict, &hp).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn objective_zero_r_is_data_plus_regularizer() {
        let dict = orthonormal_toy_dictionary(4);
        let hp = toy_hp();
        let patch = deterministic_patch(16, 5);
        let r0 = vec![0.0; 2];
        let expected = patch.iter().map(|v| v * v).sum::<f64>() / hp.sigma2
            + hp.lambda * dict.basis().iter().map(|v| v * v).sum::<f64>();
        assert!((objective(&patch, &r0, &dict, &hp).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn objective_matches_independent_reimplementation() {
        // Independent oracle: same formula, different term/summation order.
        let patch_side = 4;
        let dim = 16;
        let k = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let basis: Vec<f64> = (0..k * dim).map(|_| rng.random_range(-0.3..0.3)).collect();
        let dict = Dictionary::new(patch_side, basis.clone(), 0, String::new()).unwrap();
        let hp = toy_hp();
        let patch = deterministic_patch(dim, 11);
        let r: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();

        let mut oracle = 0.0;
        for j in (0..k).rev() {
            oracle += hp.alpha * (1.0 + r[j] * r[j]).ln();
        }
        for l in (0..dim).rev() {
            let mut pred = 0.0;
            for j in 0..k {
                pred += basis[j * dim + l] * r[j];
            }
            let e = patch[l] - pred;
            oracle += e * e / hp.sigma2;
        }
        for v in basis.iter().rev() {
            oracle += hp.lambda * v * v;
        }

        let got = objective(&patch, &r, &dict, &hp).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn grad_r_matches_finite_differences() {
        let dict = orthonormal_toy_dictionary(4);
        let hp = toy_hp();
        let patch = deterministic_patch(16, 3);
        let r = vec![0.4, -0.9];
        let grad = grad_r(&patch, &r, &dict, &hp).unwrap();
        let h = 1e-5;
        for j in 0..2 {
            let mut rp = r.clone();
            let mut rm = r.clone();
            rp[j] += h;
            rm[j] -= h;
            let fd = (objective(&patch, &rp, &dict, &hp).unwrap()
                - objective(&patch, &rm, &dict, &hp).unwrap())
                / (2.0 * h);
            let denom = fd.abs().max(1.0);
            assert!((grad[j] - fd).abs() / denom < 1e-4);
        }
    }

    #[test]
    fn tanh_model_gradients_match_finite_differences() {
        let dict = orthonormal_toy_dictionary(4);
        let hp = PcHyperparams {
            activation: &TANH,
            ..PcHyperparams::default()
        };
        let patch = deterministic_patch(16, 29);
        let r = vec![0.7, -1.2];
        let h = 1e-5;

        let g_r = grad_r(&patch, &r, &dict, &hp).unwrap();
        for j in 0..2 {
            let mut rp = r.clone();
            let mut rm = r.clone();
            rp[j] += h;
            rm[j] -= h;
            let fd = (objective(&patch, &rp, &dict, &hp).unwrap()
                - objective(&patch, &rm, &dict, &hp).unwrap())
                / (2.0 * h);
            assert!((g_r[j] - fd).abs() / fd.abs().max(1e-3) < 1e-4);
        }

        let g_u = grad_dict(&patch, &r, &dict, &hp).unwrap();
        for entry in (0..32).step_by(5) {
            let mut up = dict.basis().to_vec();
            let mut dn = dict.basis().to_vec();
            up[entry] += h;
            dn[entry] -= h;
            let dp = Dictionary::new(4, up, 0, String::new()).unwrap();
            let dm = Dictionary::new(4, dn, 0, String::new()).unwrap();
            let fd = (objective(&patch, &r, &dp, &hp).unwrap()
                - objective(&patch, &r, &dm, &hp).unwrap())
                / (2.0 * h);
            assert!((g_u[entry] - fd).abs() / fd.abs().max(1e-3) < 1e-4);
        }

        // The saturating model still encodes without raising the objective.
        let out = encode(&patch, &dict, &hp).unwrap();
        let at_zero = objective(&patch, &[0.0, 0.0], &dict, &hp).unwrap();
        assert!(out.objective <= at_zero + 1e-12);
    }

    #[test]
    fn grad_r_zero_at_origin_with_zero_patch() {
        let dict = orthonormal_toy_dictionary(4);
        let hp = toy_hp();
        let grad = grad_r(&[0.0; 16], &[0.0, 0.0], &dict, &hp).unwrap();
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn coefficient_penalty_gradient_at_one() {
        // d/dr alpha*log(1+r^2) at r=1 is alpha.
        let hp = toy_hp();
        let h = 1e-7;
        let fd = (coeff_penalty(&[1.0 + h], hp.alpha) - coeff_penalty(&[1.0 - h], hp.alpha))
            / (2.0 * h);
        assert!((fd - hp.alpha).abs() < 1e-8);
    }

    #[test]
    fn encode_zero_patch_stays_at_origin() {
        let dict = orthonormal_toy_dictionary(4);
        let hp = toy_hp();
        let out = encode(&[0.0; 16], &dict, &hp).unwrap();
        assert!(out.r.iter().all(|v| v.abs() < 1e-6));
        assert!(out.error.iter().all(|v| *v == 0.0));
        let h_u = hp.lambda * dict.basis().iter().map(|v| v * v).sum::<f64>();
        assert!((out.objective - h_u).abs() < 1e-15);
    }

    #[test]
    fn encode_recovers_basis_coefficient() {
        let dict = orthonormal_toy_dictionary(4);
        let mut hp = toy_hp();
        hp.alpha = 1e-6;
        let c = 0.8;
        let patch: Vec<f64> = dict.basis_row(0).iter().map(|v| c * v).collect();
        let out = encode(&patch, &dict, &hp).unwrap();
        assert!((out.r[0] - c).abs() < 1e-3, "r = {:?}", out.r);
        assert!(out.r[1].abs() < 1e-3);
    }

    #[test]
    fn encode_never_increases_objective() {
        let dict = orthonormal_toy_dictionary(4);
        let hp = toy_hp();
        for salt in 0..200 {
            let patch = deterministic_patch(16, salt);
            let out = encode(&patch, &dict, &hp).unwrap();
            let at_zero = objective(&patch, &[0.0; 2], &dict, &hp).unwrap();
            assert!(out.objective <= at_zero + 1e-12);
        }
    }

    #[test]
    fn encode_reports_numeric_failure_on_overflowing_patches() {
        // Finite but enormous values overflow the squared data term.
        let dict = orthonormal_toy_dictionary(4);
        let hp = toy_hp();
        let patch = vec![1e200; 16];
        match encode(&patch, &dict, &hp) {
            Err(Error::NumericFailure { step, .. }) => assert_eq!(step, 0),
            other => panic!("expected numeric failure, got {other:?}"),
        }
    }

    #[test]
    fn encode_error_is_exactly_patch_minus_prediction() {
        let dict = orthonormal_toy_dictionary(4);
        let hp = toy_hp();
        let patch = deterministic_patch(16, 42);
        let out = encode(&patch, &dict, &hp).unwrap();
        for ((e, p), f) in out.error.iter().zip(&patch).zip(&out.prediction) {
            assert_eq!(*e, p - f);
        }
    }

    fn toy_corpus(patch_side: usize) -> Vec<Vec<f64>> {
        // Two fixed orthogonal patterns plus tiny seeded noise.
        let dim = patch_side * patch_side;
        let mut a = vec![0.0; dim];
        let mut b = vec![0.0; dim];
        for i in 0..dim {
            a[i] = if i % 2 == 0 { 0.5 } else { -0.5 };
            b[i] = if (i / patch_side).is_multiple_of(2) { 0.5 } else { -0.5 };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut corpus = Vec::new();
        for t in 0..40 {
            let base = if t % 2 == 0 { &a } else { &b };
            let scale = 0.5 + 0.5 * ((t % 5) as f64 / 5.0);
            corpus.push(
                base.iter()
                    .map(|v| scale * v + rng.random_range(-0.01..0.01))
                    .collect(),
            );
        }
        corpus
    }

    fn mean_recon_error(patches: &[Vec<f64>], basis: &[f64], patch_side: usize) -> f64 {
        let dim = patch_side * patch_side;
        let dict = Dictionary::new(patch_side, basis.to_vec(), 0, String::new()).unwrap();
        let hp = toy_hp();
        let total: f64 = patches
            .iter()
            .map(|p| {
                let out = encode(p, &dict, &hp).unwrap();
                out.error.iter().map(|e| e * e).sum::<f64>() / dim as f64
            })
            .sum();
        total / patches.len() as f64
    }

    #[test]
    fn training_reduces_reconstruction_error() {
        let corpus = toy_corpus(4);
        let mut hp = toy_hp();
        hp.dict_epochs = 12;
        hp.seed = 5;
        let mut first_epoch = None;
        let mut last_epoch = None;
        train_dictionary_observed(&corpus, 4, 2, &hp, "toy", |epoch, basis| {
            let err = mean_recon_error(&corpus, basis, 4);
            if epoch == 0 {
                first_epoch = Some(err);
            }
            last_epoch = Some(err);
        })
        .unwrap();
        let (first, last) = (first_epoch.unwrap(), last_epoch.unwrap());
        assert!(
            last <= 0.5 * first,
            "reconstruction error {first} -> {last}"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = toy_corpus(4);
        let mut hp = toy_hp();
        hp.dict_epochs = 4;
        hp.seed = 17;
        let a = train_dictionary(&corpus, 4, 2, &hp, "toy").unwrap();
        let b = train_dictionary(&corpus, 4, 2, &hp, "toy").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heldout_objective_is_nonincreasing() {
        let corpus = toy_corpus(4);
        let (train, held): (Vec<_>, Vec<_>) = (0..corpus.len()).partition(|i| i % 4 != 0);
        let train: Vec<Vec<f64>> = train.into_iter().map(|i| corpus[i].clone()).collect();
        let held: Vec<Vec<f64>> = held.into_iter().map(|i| corpus[i].clone()).collect();
        let mut hp = toy_hp();
        hp.dict_epochs = 10;
        hp.seed = 23;
        let mut prev = f64::INFINITY;
        train_dictionary_observed(&train, 4, 2, &hp, "toy", |_, basis| {
            let dict = Dictionary::new(4, basis.to_vec(), 0, String::new()).unwrap();
            let mean: f64 = held
                .iter()
                .map(|p| encode(p, &dict, &hp).unwrap().objective)
                .sum::<f64>()
                / held.len() as f64;
            assert!(mean <= prev + 1e-6, "held-out objective rose: {prev} -> {mean}");
            prev = mean;
        })
        .unwrap();
    }

    #[test]
    fn training_invariant_to_corpus_duplication() {
        let corpus = toy_corpus(4);
        let doubled: Vec<Vec<f64>> = corpus.iter().chain(corpus.iter()).cloned().collect();
        let mut hp = toy_hp();
        hp.dict_epochs = 3;
        hp.seed = 31;
        hp.batch_size = 0; // full corpus per batch
        let a = train_dictionary(&corpus, 4, 2, &hp, "toy").unwrap();
        let b = train_dictionary(&doubled, 4, 2, &hp, "toy").unwrap();
        for (x, y) in a.basis().iter().zip(b.basis()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn training_rejects_bad_corpora() {
        let hp = toy_hp();
        assert!(train_dictionary(&[], 4, 2, &hp, "x").is_err());
        let one = vec![vec![0.0; 16]];
        assert!(train_dictionary(&one, 4, 2, &hp, "x").is_err());
        let bad = vec![vec![0.0; 15], vec![0.0; 16]];
        assert!(train_dictionary(&bad, 4, 2, &hp, "x").is_err());
    }
}
