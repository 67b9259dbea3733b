#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spstyle_core::{RgbImage, SemanticMask};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spstyle"))
}

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    bin().args(args).output().expect("spawn spstyle")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A deterministic stand-in for a photograph: smooth shading, a few colored
/// discs and mild noise.
pub fn test_photo(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut r = rng(seed);
    let discs: Vec<(f64, f64, f64, [f64; 3])> = (0..6)
        .map(|_| {
            (
                r.random_range(0.0..width as f64),
                r.random_range(0.0..height as f64),
                r.random_range(3.0..(width.min(height) as f64 / 3.0).max(4.0)),
                [
                    r.random_range(0.0..255.0),
                    r.random_range(0.0..255.0),
                    r.random_range(0.0..255.0),
                ],
            )
        })
        .collect();
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 / width as f64, y as f64 / height as f64);
            let mut px = [
                60.0 + 150.0 * fx,
                40.0 + 120.0 * fy,
                180.0 - 100.0 * fx * fy,
            ];
            for &(cx, cy, rad, col) in &discs {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                if d < rad {
                    let t = 1.0 - d / rad;
                    for c in 0..3 {
                        px[c] = px[c] * (1.0 - t) + col[c] * t;
                    }
                }
            }
            for v in px {
                let noisy = v + r.random_range(-6.0..6.0);
                data.push(noisy.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RgbImage::new(width, height, data).unwrap()
}

pub fn random_image(width: usize, height: usize, r: &mut ChaCha8Rng) -> RgbImage {
    let data = (0..width * height * 3).map(|_| r.random::<u8>()).collect();
    RgbImage::new(width, height, data).unwrap()
}

/// Random mask from a handful of seeded Voronoi regions, optionally with a
/// single-pixel label planted at a random position.
pub fn random_mask(
    width: usize,
    height: usize,
    labels: usize,
    single_pixel: bool,
    r: &mut ChaCha8Rng,
) -> SemanticMask {
    let sites: Vec<(f64, f64, u32)> = (0..labels * 2)
        .map(|i| {
            (
                r.random_range(0.0..width as f64),
                r.random_range(0.0..height as f64),
                (i % labels) as u32,
            )
        })
        .collect();
    let mut data: Vec<u32> = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            sites
                .iter()
                .min_by(|a, b| {
                    let da = (a.0 - x).powi(2) + (a.1 - y).powi(2);
                    let db = (b.0 - x).powi(2) + (b.1 - y).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap()
                .2
        })
        .collect();
    let mut count = labels;
    if single_pixel {
        let at = r.random_range(0..width * height);
        data[at] = labels as u32;
        count += 1;
    }
    SemanticMask::new(width, height, data, count).unwrap()
}

pub fn write_inputs(dir: &Path, img: &RgbImage, mask: &SemanticMask) -> (PathBuf, PathBuf) {
    let image = dir.join("image.png");
    let m = dir.join("mask.png");
    spstyle_core::io::write_rgb_png(&image, img).unwrap();
    spstyle_core::io::write_mask_png(&m, mask).unwrap();
    (image, m)
}
