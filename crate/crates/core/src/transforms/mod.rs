//! Orthonormal block transforms standing in for a learned analysis/synthesis
//! pair.
//!
//! An image is cut into `b × b` blocks (symmetric edge padding when the
//! dimensions are not multiples of `b`), each block is flattened row-major
//! and multiplied by a `b² × b²` orthonormal basis. Coefficient `k` of every
//! block goes to channel `k`, so a [`LatentGrid`] holds `b²` subband images
//! of `block_rows × block_cols` coefficients each. The identity transform
//! uses `b = 1`: one channel that is the image itself.
//!
//! Because every basis is orthonormal, squared error is preserved between
//! pixel and latent domains (up to padding, which is cropped away).

mod dct;
mod klt;

pub use dct::dct_basis;
pub use klt::{fit_klt, KltFit};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Tolerance on `BᵀB = I` for a basis to count as orthonormal.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_BLOCK_SIZE: usize = 8;

/// A single-channel image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if width.checked_mul(height) != Some(samples.len()) {
            return Err(Error::invalid(format!(
                "{width}x{height} image needs {} samples, got {}",
                width.saturating_mul(height),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample #{i} is not finite")));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    /// Sample at a possibly out-of-range position, mirrored symmetrically
    /// about the edges (`… b a | a b c … x y z | z y …`).
    fn get_symmetric(&self, row: usize, col: usize) -> f64 {
        self.get(reflect(row, self.height), reflect(col, self.width))
    }
}

fn reflect(i: usize, n: usize) -> usize {
    let m = i % (2 * n);
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Transform coefficients laid out `[channel][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    channels: usize,
    block_rows: usize,
    block_cols: usize,
    block_size: usize,
    source_width: usize,
    source_height: usize,
    coefficients: Vec<f64>,
}

impl LatentGrid {
    /// A grid with explicit contents; `block_size² == channels` is required.
    pub fn new(
        block_size: usize,
        block_rows: usize,
        block_cols: usize,
        source_width: usize,
        source_height: usize,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        let channels = block_size * block_size;
        if block_size == 0 || block_rows == 0 || block_cols == 0 {
            return Err(Error::invalid("latent grid dimensions must be positive"));
        }
        if coefficients.len() != channels * block_rows * block_cols {
            return Err(Error::invalid(format!(
                "latent grid {channels}x{block_rows}x{block_cols} needs {} coefficients, got {}",
                channels * block_rows * block_cols,
                coefficients.len()
            )));
        }
        if source_width > block_cols * block_size
            || source_height > block_rows * block_size
            || source_width == 0
            || source_height == 0
        {
            return Err(Error::invalid("source dimensions do not fit the grid"));
        }
        Ok(Self {
            channels,
            block_rows,
            block_cols,
            block_size,
            source_width,
            source_height,
            coefficients,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn source_width(&self) -> usize {
        self.source_width
    }

    pub fn source_height(&self) -> usize {
        self.source_height
    }

    /// Number of coefficients in one channel.
    pub fn channel_len(&self) -> usize {
        self.block_rows * self.block_cols
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    #[inline]
    pub fn index(&self, channel: usize, row: usize, col: usize) -> usize {
        (channel * self.block_rows + row) * self.block_cols + col
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.coefficients[self.index(channel, row, col)]
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f64) {
        let i = self.index(channel, row, col);
        self.coefficients[i] = value;
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        let n = self.channel_len();
        &self.coefficients[channel * n..(channel + 1) * n]
    }

    /// Same geometry, new contents.
    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Result<Self> {
        Self::new(
            self.block_size,
            self.block_rows,
            self.block_cols,
            self.source_width,
            self.source_height,
            coefficients,
        )
    }

    /// Latent coefficients per source pixel (1 without padding).
    pub fn latents_per_pixel(&self) -> f64 {
        self.len() as f64 / (self.source_width * self.source_height) as f64
    }
}

/// A square orthonormal matrix; row `k` is the `k`-th basis vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    dim: usize,
    rows: Vec<f64>,
}

impl Basis {
    /// Validates orthonormality within [`ORTHONORMAL_TOLERANCE`].
    pub fn from_rows(dim: usize, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 || rows.len() != dim * dim {
            return Err(Error::invalid(format!(
                "basis of dimension {dim} needs {} entries, got {}",
                dim * dim,
                rows.len()
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("basis entries must be finite"));
        }
        let basis = Self { dim, rows };
        let err = basis.orthonormality_error();
        if !(err <= ORTHONORMAL_TOLERANCE) {
            return Err(Error::invalid(format!(
                "basis is not orthonormal (max |BBᵀ - I| = {err:e})"
            )));
        }
        Ok(basis)
    }

    pub fn identity(dim: usize) -> Self {
        let mut rows = vec![0.0; dim * dim];
        for i in 0..dim {
            rows[i * dim + i] = 1.0;
        }
        Self { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k * self.dim..(k + 1) * self.dim]
    }

    /// Largest absolute entry of `BBᵀ − I`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let dot: f64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn forward(&self, block: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.row(k).iter().zip(block).map(|(a, b)| a * b).sum();
        }
    }

    fn inverse(&self, coeffs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (k, &c) in coeffs.iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(self.row(k)) {
                *o += c * b;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Identity,
    Dct,
    Klt,
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Dct => "dct",
            TransformKind::Klt => "klt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    kind: TransformKind,
    block_size: usize,
    basis: Basis,
}

impl TransformSpec {
    pub fn identity() -> Self {
        Self {
            kind: TransformKind::Identity,
            block_size: 1,
            basis: Basis::identity(1),
        }
    }

    pub fn dct(block_size: usize) -> Result<Self> {
        check_block_size(block_size)?;
        Ok(Self {
            kind: TransformKind::Dct,
            block_size,
            basis: dct_basis(block_size),
        })
    }

    pub fn klt(block_size: usize, basis: Basis) -> Result<Self> {
        check_block_size(block_size)?;
        if basis.dim() != block_size * block_size {
            return Err(Error::invalid(format!(
                "KLT basis has dimension {} but block size {block_size} needs {}",
                basis.dim(),
                block_size * block_size
            )));
        }
        Ok(Self {
            kind: TransformKind::Klt,
            block_size,
            basis,
        })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// Side of the blocks the transform operates on (1 for identity).
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// The KLT basis, when this is a KLT.
    pub fn klt_basis(&self) -> Option<&Basis> {
        (self.kind == TransformKind::Klt).then_some(&self.basis)
    }
}

fn check_block_size(block_size: usize) -> Result<()> {
    if block_size == 0 || !block_size.is_power_of_two() || block_size > 64 {
        return Err(Error::invalid(format!(
            "block size must be a power of two in 1..=64, got {block_size}"
        )));
    }
    Ok(())
}

/// Forward block transform.
pub fn analyze(image: &ImagePlane, spec: &TransformSpec) -> Result<LatentGrid> {
    let b = spec.block_size;
    let block_rows = image.height.div_ceil(b);
    let block_cols = image.width.div_ceil(b);
    let channels = b * b;
    let plane = block_rows * block_cols;

    // blocks[br][bc][k], then scattered into channel-major order
    let per_row: Vec<Vec<f64>> = (0..block_rows)
        .into_par_iter()
        .map(|br| {
            let mut out = vec![0.0; block_cols * channels];
            let mut block = vec![0.0; channels];
            for bc in 0..block_cols {
                for y in 0..b {
                    for x in 0..b {
                        block[y * b + x] = image.get_symmetric(br * b + y, bc * b + x);
                    }
                }
                spec.basis
                    .forward(&block, &mut out[bc * channels..(bc + 1) * channels]);
            }
            out
        })
        .collect();

    let mut coefficients = vec![0.0; channels * plane];
    for (br, row) in per_row.iter().enumerate() {
        for bc in 0..block_cols {
            for k in 0..channels {
                coefficients[k * plane + br * block_cols + bc] = row[bc * channels + k];
            }
        }
    }
    if coefficients.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            stage: "analysis transform",
            detail: "non-finite coefficient".into(),
        });
    }
    LatentGrid::new(
        b,
        block_rows,
        block_cols,
        image.width,
        image.height,
        coefficients,
    )
}

/// Inverse block transform, cropped back to the source dimensions.
pub fn synthesize(latents: &LatentGrid, spec: &TransformSpec) -> Result<ImagePlane> {
    let b = spec.block_size;
    if latents.block_size != b {
        return Err(Error::invalid(format!(
            "latents were produced with block size {}, transform uses {b}",
            latents.block_size
        )));
    }
    let (w, h) = (latents.source_width, latents.source_height);
    let channels = b * b;
    let rows: Vec<Vec<f64>> = (0..latents.block_rows)
        .into_par_iter()
        .map(|br| {
            let mut strip = vec![0.0; b * latents.block_cols * b];
            let stride = latents.block_cols * b;
            let mut coeffs = vec![0.0; channels];
            let mut block = vec![0.0; channels];
            for bc in 0..latents.block_cols {
                for (k, c) in coeffs.iter_mut().enumerate() {
                    *c = latents.get(k, br, bc);
                }
                spec.basis.inverse(&coeffs, &mut block);
                for y in 0..b {
                    for x in 0..b {
                        strip[y * stride + bc * b + x] = block[y * b + x];
                    }
                }
            }
            strip
        })
        .collect();

    let stride = latents.block_cols * b;
    let mut samples = Vec::with_capacity(w * h);
    for row in 0..h {
        let strip = &rows[row / b];
        let y = row % b;
        samples.extend_from_slice(&strip[y * stride..y * stride + w]);
    }
    ImagePlane::new(w, h, samples).map_err(|_| Error::Numerical {
        stage: "synthesis transform",
        detail: "non-finite reconstruction".into(),
    })
}

/// Anything with a shape and a flat list of samples.
pub trait SampleGrid {
    fn shape(&self) -> Vec<usize>;
    fn values(&self) -> &[f64];
}

impl SampleGrid for ImagePlane {
    fn shape(&self) -> Vec<usize> {
        vec![self.height, self.width]
    }

    fn values(&self) -> &[f64] {
        &self.samples
    }
}

impl SampleGrid for LatentGrid {
    fn shape(&self) -> Vec<usize> {
        vec![self.channels, self.block_rows, self.block_cols]
    }

    fn values(&self) -> &[f64] {
        &self.coefficients
    }
}

/// Mean squared difference of two equally shaped grids.
pub fn mse<T: SampleGrid>(a: &T, b: &T) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            left: format!("{:?}", a.shape()),
            right: format!("{:?}", b.shape()),
        });
    }
    let (x, y) = (a.values(), b.values());
    Ok(x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / x.len() as f64)
}

/// PSNR in dB for samples normalized to [0, 1].
pub fn psnr(mse: f64) -> f64 {
    10.0 * (1.0 / mse).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ImagePlane {
        let s = (0..w * h)
            .map(|i| ((i * 37 % 101) as f64) / 101.0 + 0.01 * (i as f64).sin())
            .collect();
        ImagePlane::new(w, h, s).unwrap()
    }

    #[test]
    fn plane_validation() {
        assert!(ImagePlane::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ImagePlane::new(0, 2, vec![]).is_err());
        assert!(ImagePlane::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn identity_is_pass_through() {
        let img = ramp(13, 7);
        let spec = TransformSpec::identity();
        let lat = analyze(&img, &spec).unwrap();
        assert_eq!(lat.channels(), 1);
        assert_eq!(lat.coefficients(), img.samples());
        assert_eq!(synthesize(&lat, &spec).unwrap(), img);
    }

    #[test]
    fn dct_of_constant() {
        let img = ImagePlane::filled(16, 16, 0.3).unwrap();
        let spec = TransformSpec::dct(8).unwrap();
        let lat = analyze(&img, &spec).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((lat.get(0, r, c) - 0.3 * 8.0).abs() < 1e-12);
                for k in 1..64 {
                    assert!(lat.get(k, r, c).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn round_trip_with_padding() {
        let spec = TransformSpec::dct(8).unwrap();
        for (w, h) in [(16, 16), (13, 21), (3, 5), (1, 1)] {
            let img = ramp(w, h);
            let lat = analyze(&img, &spec).unwrap();
            let back = synthesize(&lat, &spec).unwrap();
            let err = img
                .samples()
                .iter()
                .zip(back.samples())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "{w}x{h}: {err}");
        }
    }

    #[test]
    fn zeroed_ac_gives_block_means() {
        let img = ramp(16, 8);
        let spec = TransformSpec::dct(8).unwrap();
        let mut lat = analyze(&img, &spec).unwrap();
        let plane = lat.channel_len();
        for v in &mut lat.coefficients_mut()[plane..] {
            *v = 0.0;
        }
        let out = synthesize(&lat, &spec).unwrap();
        for bc in 0..2 {
            let mut mean = 0.0;
            for y in 0..8 {
                for x in 0..8 {
                    mean += img.get(y, bc * 8 + x);
                }
            }
            mean /= 64.0;
            for y in 0..8 {
                for x in 0..8 {
                    assert!((out.get(y, bc * 8 + x) - mean).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetric_padding_mirrors_edges() {
        assert_eq!(reflect(0, 3), 0);
        assert_eq!(reflect(3, 3), 2);
        assert_eq!(reflect(5, 3), 0);
        assert_eq!(reflect(6, 3), 0);
        assert_eq!(reflect(7, 1), 0);
    }

    #[test]
    fn mse_examples() {
        let a = ImagePlane::filled(4, 3, 0.0).unwrap();
        let b = ImagePlane::filled(4, 3, 1.0).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
        let c = ImagePlane::filled(3, 4, 1.0).unwrap();
        assert!(matches!(mse(&a, &c), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(TransformSpec::dct(6).is_err());
        assert!(TransformSpec::dct(0).is_err());
        assert!(TransformSpec::klt(2, Basis::identity(3)).is_err());
        assert!(Basis::from_rows(2, vec![1.0, 1.0, 0.0, 1.0]).is_err());
        let lat = analyze(&ramp(8, 8), &TransformSpec::dct(4).unwrap()).unwrap();
        assert!(synthesize(&lat, &TransformSpec::dct(8).unwrap()).is_err());
    }
}
