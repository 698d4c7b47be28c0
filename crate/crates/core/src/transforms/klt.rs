use nalgebra::{DMatrix, SymmetricEigen};

use super::{Basis, ImagePlane, TransformSpec};
use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest one span the null
/// space.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KltFit {
    pub spec: TransformSpec,
    /// Block covariance eigenvalues, non-increasing, one per channel.
    pub eigenvalues: Vec<f64>,
    /// Set when the covariance was rank deficient and the null space was
    /// completed deterministically.
    pub rank_deficient: bool,
    pub num_blocks: usize,
}

/// Fit a Karhunen–Loève basis to the block covariance of `images`.
///
/// Blocks are gathered with the same padding as [`super::analyze`]. The
/// eigenvectors come from a Householder tridiagonalization followed by
/// implicit QR; each is signed so its largest-magnitude entry (first on ties)
/// is positive, and basis rows are ordered by descending eigenvalue.
pub fn fit_klt(images: &[ImagePlane], block_size: usize) -> Result<KltFit> {
    // reuse the block-size validation of the DCT constructor
    TransformSpec::dct(block_size)?;
    let b = block_size;
    let d = b * b;

    let mut blocks: Vec<f64> = Vec::new();
    for image in images {
        let rows = image.height().div_ceil(b);
        let cols = image.width().div_ceil(b);
        for br in 0..rows {
            for bc in 0..cols {
                for y in 0..b {
                    for x in 0..b {
                        blocks.push(image.get_symmetric(br * b + y, bc * b + x));
                    }
                }
            }
        }
    }
    let count = blocks.len() / d;
    if count < d {
        return Err(Error::InsufficientData(format!(
            "KLT with block size {b} needs at least {d} blocks, got {count}"
        )));
    }

    // Shift by the first block, then center in a second pass; constant
    // inputs then give an exactly zero covariance.
    let shift = blocks[..d].to_vec();
    for block in blocks.chunks_exact_mut(d) {
        for (v, s) in block.iter_mut().zip(&shift) {
            *v -= s;
        }
    }
    let n = count as f64;
    let mut mean = vec![0.0; d];
    for block in blocks.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(block) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for block in blocks.chunks_exact(d) {
        for i in 0..d {
            centered[i] = block[i] - mean[i];
        }
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let c = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }

    let eigen = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let largest = eigen.eigenvalues[order[0]].max(0.0);
    let threshold = RANK_TOLERANCE * largest;

    let mut eigenvalues = Vec::with_capacity(d);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(d);
    for &k in &order {
        let lambda = eigen.eigenvalues[k];
        if largest > 0.0 && lambda > threshold {
            vectors.push(eigen.eigenvectors.column(k).iter().copied().collect());
            eigenvalues.push(lambda);
        }
    }
    let rank = vectors.len();
    let rank_deficient = rank < d;
    if rank_deficient {
        complete_basis(&mut vectors, d);
        eigenvalues.resize(d, 0.0);
    }
    for v in &mut vectors {
        canonical_sign(v);
    }

    let rows: Vec<f64> = vectors.into_iter().flatten().collect();
    let basis = Basis::from_rows(d, rows).map_err(|e| Error::Numerical {
        stage: "KLT eigendecomposition",
        detail: e.to_string(),
    })?;
    Ok(KltFit {
        spec: TransformSpec::klt(b, basis)?,
        eigenvalues,
        rank_deficient,
        num_blocks: count,
    })
}

/// Extend orthonormal `vectors` to a basis of R^d by Gram–Schmidt over the
/// standard basis vectors e₀, e₁, … in order.
fn complete_basis(vectors: &mut Vec<Vec<f64>>, d: usize) {
    for axis in 0..d {
        if vectors.len() == d {
            break;
        }
        let mut candidate = vec![0.0; d];
        candidate[axis] = 1.0;
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for v in vectors.iter() {
                let dot: f64 = v.iter().zip(&candidate).map(|(a, b)| a * b).sum();
                for (c, x) in candidate.iter_mut().zip(v) {
                    *c -= dot * x;
                }
            }
        }
        let norm = candidate.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-6 {
            candidate.iter_mut().for_each(|c| *c /= norm);
            vectors.push(candidate);
        }
    }
}

fn canonical_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{analyze, TransformKind};

    fn noise_image(seed: u64, w: usize, h: usize) -> ImagePlane {
        use crate::rng::{Domain, NoiseStream};
        let s = NoiseStream::new(seed, Domain::SyntheticField).sequence(w * h);
        ImagePlane::new(w, h, s).unwrap()
    }

    #[test]
    fn white_noise_gives_flat_spectrum() {
        let fit = fit_klt(&[noise_image(1, 256, 256)], 4).unwrap();
        assert_eq!(fit.spec.kind(), TransformKind::Klt);
        assert!(!fit.rank_deficient);
        assert!(fit.spec.basis().orthonormality_error() < 1e-10);
        for &l in &fit.eigenvalues {
            assert!((l - 1.0).abs() < 0.15, "{l}");
        }
    }

    #[test]
    fn constant_corpus_is_completed() {
        let img = ImagePlane::filled(32, 32, 0.7).unwrap();
        let fit = fit_klt(&[img], 4).unwrap();
        assert!(fit.rank_deficient);
        assert!(fit.eigenvalues.iter().all(|&l| l == 0.0));
        assert!(fit.spec.basis().orthonormality_error() < 1e-10);
        // deterministic: completing the empty set gives the standard basis
        assert_eq!(fit.spec.basis(), &Basis::identity(16));
    }

    #[test]
    fn rank_one_corpus() {
        // every block is a multiple of one fixed pattern
        let mut s = Vec::new();
        for i in 0..64 {
            for j in 0..64 {
                let scale = ((i / 4) * 16 + j / 4) as f64;
                s.push(scale * (1.0 + ((i % 4) * 4 + j % 4) as f64));
            }
        }
        let fit = fit_klt(&[ImagePlane::new(64, 64, s).unwrap()], 4).unwrap();
        assert!(fit.rank_deficient);
        assert!(fit.eigenvalues[0] > 0.0);
        assert!(fit.eigenvalues[1..].iter().all(|&l| l == 0.0));
        assert!(fit.spec.basis().orthonormality_error() < 1e-10);
    }

    #[test]
    fn signs_and_ordering() {
        let fit = fit_klt(&[noise_image(3, 128, 128)], 2).unwrap();
        for w in fit.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for k in 0..4 {
            let row = fit.spec.basis().row(k);
            let pivot = row
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn too_few_blocks() {
        let img = noise_image(1, 8, 8);
        assert!(matches!(
            fit_klt(&[img], 4),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn klt_round_trips() {
        let img = noise_image(9, 70, 77);
        let fit = fit_klt(std::slice::from_ref(&img), 8).unwrap();
        let lat = analyze(&img, &fit.spec).unwrap();
        let back = crate::transforms::synthesize(&lat, &fit.spec).unwrap();
        for (a, b) in img.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
