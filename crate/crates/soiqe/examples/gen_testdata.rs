//! Regenerates the bundled test fixtures under `testdata/`:
//!
//! - `corpus2d/`: 20 synthetic grayscale textures for dictionary training
//! - `smoke/`: a 12-item benchmark manifest with reference/distorted stereo
//!   ERP images
//! - `toy_dict.sopc`: a small dictionary (128 basis vectors of 8x8 patches)
//!   trained on the corpus
//!
//! Everything is seeded; rerunning produces byte-identical files.
//!
//! Usage: cargo run --release -p soiqe --example gen_testdata

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soiqe::pc::{train_dictionary, PcHyperparams};
use soiqe::raster::{save_gray_png, Grid};
use soiqe::synth::{add_white_noise, distort_pair, gaussian_blur, stereo_scene, SceneKind};

fn testdata_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata")
}

/// A deterministic 2D texture for the training corpus.
fn corpus_texture(index: usize, side: usize) -> Grid {
    let tau = std::f64::consts::TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + index as u64);
    let mut data = Vec::with_capacity(side * side);
    match index % 5 {
        0 => {
            // Oriented sinusoidal plaid.
            let fa = rng.random_range(3.0..9.0);
            let fb = rng.random_range(5.0..14.0);
            let ang: f64 = rng.random_range(0.0..tau);
            for y in 0..side {
                for x in 0..side {
                    let u = x as f64 / side as f64;
                    let v = y as f64 / side as f64;
                    let a = (tau * fa * (u * ang.cos() + v * ang.sin())).sin();
                    let b = (tau * fb * (u * ang.sin() - v * ang.cos())).sin();
                    data.push(0.5 + 0.25 * a + 0.2 * b);
                }
            }
        }
        1 => {
            // Checkerboard with a random cell size.
            let cell = rng.random_range(6..20usize);
            for y in 0..side {
                for x in 0..side {
                    let on = (x / cell + y / cell) % 2 == 0;
                    data.push(if on { 0.8 } else { 0.2 });
                }
            }
        }
        2 => {
            // Gaussian bump field.
            let bumps: Vec<(f64, f64, f64, f64)> = (0..10)
                .map(|_| {
                    (
                        rng.random_range(0.0..1.0),
                        rng.random_range(0.0..1.0),
                        rng.random_range(0.02..0.12),
                        rng.random_range(-0.4..0.4),
                    )
                })
                .collect();
            for y in 0..side {
                for x in 0..side {
                    let u = x as f64 / side as f64;
                    let v = y as f64 / side as f64;
                    let mut acc: f64 = 0.5;
                    for &(cx, cy, s, amp) in &bumps {
                        let d2 = (u - cx) * (u - cx) + (v - cy) * (v - cy);
                        acc += amp * (-d2 / (2.0 * s * s)).exp();
                    }
                    data.push(acc);
                }
            }
        }
        3 => {
            // Smoothed noise: random pixels box-averaged twice.
            let mut noise: Vec<f64> = (0..side * side)
                .map(|_| rng.random_range(0.0..1.0))
                .collect();
            for _ in 0..2 {
                let mut next = noise.clone();
                for y in 1..side - 1 {
                    for x in 1..side - 1 {
                        let mut acc = 0.0;
                        for dy in 0..3 {
                            for dx in 0..3 {
                                acc += noise[(y + dy - 1) * side + (x + dx - 1)];
                            }
                        }
                        next[y * side + x] = acc / 9.0;
                    }
                }
                noise = next;
            }
            data = noise;
        }
        _ => {
            // Ramps with a few hard edges.
            let edges: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..0.9)).collect();
            for y in 0..side {
                for x in 0..side {
                    let u = x as f64 / side as f64;
                    let v = y as f64 / side as f64;
                    let mut t = 0.3 + 0.4 * u + 0.2 * v;
                    for &e in &edges {
                        if u > e {
                            t += 0.08;
                        }
                    }
                    data.push(t);
                }
            }
        }
    }
    for v in &mut data {
        *v = v.clamp(0.02, 0.98);
    }
    Grid::new(side, side, data).expect("square texture")
}

fn write_corpus(root: &Path) {
    let dir = root.join("corpus2d");
    fs::create_dir_all(&dir).expect("create corpus dir");
    for i in 0..20 {
        let tex = corpus_texture(i, 160);
        save_gray_png(&tex, &dir.join(format!("tex_{i:02}.png"))).expect("write texture");
    }
    println!("wrote {}", dir.display());
}

fn write_smoke(root: &Path) {
    let dir = root.join("smoke");
    let images = dir.join("images");
    fs::create_dir_all(&images).expect("create smoke dir");

    let w = 192;
    let h = 96;
    let scenes = [
        ("waves", SceneKind::Waves),
        ("tiles", SceneKind::Tiles),
        ("blobs", SceneKind::Blobs),
    ];

    let mut manifest = String::from("id,ref_left,ref_right,dis_left,dis_right,mos,mos_std,tags\n");
    for (si, (name, kind)) in scenes.iter().enumerate() {
        let reference = stereo_scene(*kind, w, h);
        let ref_l = format!("images/{name}_ref_L.png");
        let ref_r = format!("images/{name}_ref_R.png");
        save_gray_png(reference.left.luma(), &dir.join(&ref_l)).expect("write ref");
        save_gray_png(reference.right.luma(), &dir.join(&ref_r)).expect("write ref");

        // Two blur levels and two noise levels per scene, with invented MOS
        // values that decrease with distortion strength.
        type Distortion = (String, Box<dyn Fn(&soiqe::ErpImage) -> soiqe::ErpImage>, f64);
        let distortions: [Distortion; 4] = [
            (
                format!("{name}_blur1"),
                Box::new(|img| gaussian_blur(img, 0.8)),
                4.2,
            ),
            (
                format!("{name}_blur2"),
                Box::new(|img| gaussian_blur(img, 1.8)),
                3.0,
            ),
            (
                format!("{name}_noise1"),
                Box::new(move |img| add_white_noise(img, 0.02, 500 + si as u64)),
                3.9,
            ),
            (
                format!("{name}_noise2"),
                Box::new(move |img| add_white_noise(img, 0.06, 600 + si as u64)),
                2.4,
            ),
        ];
        for (level, (id, op, mos)) in distortions.iter().enumerate() {
            let distorted = distort_pair(&reference, op);
            let dis_l = format!("images/{id}_L.png");
            let dis_r = format!("images/{id}_R.png");
            save_gray_png(distorted.left.luma(), &dir.join(&dis_l)).expect("write dis");
            save_gray_png(distorted.right.luma(), &dir.join(&dis_r)).expect("write dis");
            let mos = mos - 0.1 * si as f64;
            let std = 0.25 + 0.05 * level as f64;
            let tag = if level < 2 { "blur,sym" } else { "noise,sym" };
            manifest.push_str(&format!(
                "{id},{ref_l},{ref_r},{dis_l},{dis_r},{mos},{std},\"{tag}\"\n"
            ));
        }
    }
    fs::write(dir.join("manifest.csv"), manifest).expect("write manifest");
    println!("wrote {}", dir.display());
}

fn write_toy_dictionary(root: &Path) {
    let patches =
        soiqe::pc::load_training_patches(&root.join("corpus2d"), 8).expect("load corpus");
    let hp = PcHyperparams {
        seed: 7,
        dict_epochs: 15,
        batch_size: 64,
        r_steps: 30,
        ..PcHyperparams::default()
    };
    let dict = train_dictionary(&patches, 8, 128, &hp, "corpus2d").expect("train toy dictionary");
    let path = root.join("toy_dict.sopc");
    dict.write_to(&path).expect("write dictionary");
    println!("wrote {}", path.display());
}

fn main() {
    let root = testdata_root();
    fs::create_dir_all(&root).expect("create testdata root");
    write_corpus(&root);
    write_smoke(&root);
    write_toy_dictionary(&root);
}
