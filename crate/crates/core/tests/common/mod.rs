#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdlimit::io::load_image;
use rdlimit::transforms::ImagePlane;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn fuzz_corpus(target: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target)
}

pub fn natural_image(name: &str) -> ImagePlane {
    load_image(data_dir().join(format!("{name}.pgm"))).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_image(width: usize, height: usize, seed: u64) -> ImagePlane {
    let mut r = rng(seed);
    let samples = (0..width * height).map(|_| r.random::<f64>()).collect();
    ImagePlane::new(width, height, samples).unwrap()
}

/// Gaussian R(D) in bits, written out independently of the library.
pub fn oracle_rate(variance: f64, distortion: f64) -> f64 {
    if distortion >= variance {
        0.0
    } else {
        0.5 * (variance / distortion).log2()
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = mean(values);
    let n = values.len() as f64;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn assert_close(actual: f64, expected: f64, tol: f64) {
    assert!(
        (actual - expected).abs() <= tol,
        "{actual} differs from {expected} by more than {tol}"
    );
}
