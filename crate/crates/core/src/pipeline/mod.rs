//! End-to-end simulation of the theoretical rate-distortion limit.
//!
//! One run goes:
//!
//! 1. analyze the image into latents `y`;
//! 2. pass 1: fit the context model on the clean latents, predict every
//!    position from clean neighbors and take residual energies
//!    `v_n = max((y_n − μ_n)², floor)`;
//! 3. reverse water-fill `{v_n}` with total budget `budget · N`;
//! 4. pass 2: walk each channel in raster order predicting `μ̂_n` from the
//!    already perturbed values, and send the residual `y_n − μ̂_n` through
//!    the test channel with parameters `(v_n, D_n)`; suppressed samples
//!    reconstruct to `μ̂_n`;
//! 5. synthesize and measure pixel MSE.
//!
//! The rate is the analytical `(1/N)·Σ max(0, ½·log2(v_n/D_n))`; nothing is
//! entropy coded. Pass 1 exists because allocation needs every `v_n` before
//! the sequential walk can start; the gap between the clean residual
//! energies and those seen during the walk is reported as
//! [`RunDiagnostics::residual_drift`].
//!
//! With [`Quantizer::Uniform`] step 4 instead rounds `r/Δ` to integers with
//! `Δ = √(12·budget)` (uniform noise of variance `budget`) and the rate is
//! the bin code length under N(0, v_n/Δ²).

mod ablation;
mod curve;

pub use ablation::{component_ablation, component_ablation_multi, AblationArm, AblationTable};
pub use curve::{common_distortions, RDCurve, RDPoint};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::context::{
    clean_residuals, fit_context, predict_in_channel, ChannelView, ContextKind, ContextModelSpec,
};
use crate::error::{Error, Result};
use crate::gaussian_rd::{uniform_bin_rate, DEFAULT_VARIANCE_FLOOR};
use crate::rng::{derive_seed, Domain, NoiseStream};
use crate::test_channel::{per_sample_distortion, ChannelParams};
use crate::transforms::{analyze, mse, psnr, synthesize, ImagePlane, LatentGrid, TransformSpec};
use crate::waterfill::{rate_from_parts, reverse_water_fill, SourceSpec, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantizer {
    TestChannel,
    Uniform,
}

impl Quantizer {
    pub fn name(&self) -> &'static str {
        match self {
            Quantizer::TestChannel => "test-channel",
            Quantizer::Uniform => "uniform",
        }
    }
}

/// How the per-latent variance fed to allocation is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum VarianceModel {
    /// Each latent's own residual energy `r_n²`.
    #[default]
    SampleEnergy,
    /// The mean residual energy of the latent's channel, shared by all of its
    /// positions.
    ChannelMoment,
}

impl VarianceModel {
    pub fn name(&self) -> &'static str {
        match self {
            VarianceModel::SampleEnergy => "sample",
            VarianceModel::ChannelMoment => "channel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub transform: TransformSpec,
    pub context: ContextModelSpec,
    pub quantizer: Quantizer,
    pub variance_model: VarianceModel,
    /// Mean distortion per latent; one value, or a strictly increasing sweep.
    pub budgets: Vec<f64>,
    pub seed: u64,
    pub variance_floor: f64,
}

impl PipelineConfig {
    pub fn new(transform: TransformSpec, budget: f64) -> Self {
        Self {
            transform,
            context: ContextModelSpec::none(),
            quantizer: Quantizer::TestChannel,
            variance_model: VarianceModel::SampleEnergy,
            budgets: vec![budget],
            seed: 0,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }

    pub fn with_context(mut self, context: ContextModelSpec) -> Self {
        self.context = context;
        self
    }

    pub fn with_quantizer(mut self, quantizer: Quantizer) -> Self {
        self.quantizer = quantizer;
        self
    }

    pub fn with_variance_model(mut self, model: VarianceModel) -> Self {
        self.variance_model = model;
        self
    }

    pub fn with_budgets(mut self, budgets: Vec<f64>) -> Self {
        self.budgets = budgets;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_variance_floor(mut self, floor: f64) -> Self {
        self.variance_floor = floor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.is_empty() {
            return Err(Error::invalid("no budget given"));
        }
        for &b in &self.budgets {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::invalid(format!("budget must be positive, got {b}")));
            }
        }
        if self.budgets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("budget sweep must be strictly increasing"));
        }
        if !(self.variance_floor > 0.0 && self.variance_floor.is_finite()) {
            return Err(Error::invalid("variance floor must be positive"));
        }
        Ok(())
    }

    /// Stable identifier of everything that determines a run except the
    /// budget and the input.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"rdlimit-config-v1");
        h.update(self.transform.kind().name().as_bytes());
        h.update((self.transform.block_size() as u64).to_le_bytes());
        for v in self.transform.basis().rows() {
            h.update(v.to_le_bytes());
        }
        h.update(self.context.kind().name().as_bytes());
        for o in self.context.neighborhood() {
            h.update(o.dy.to_le_bytes());
            h.update(o.dx.to_le_bytes());
        }
        if let Some(coeffs) = self.context.coefficients() {
            for w in coeffs.iter().flatten() {
                h.update(w.to_le_bytes());
            }
        }
        h.update(self.quantizer.name().as_bytes());
        h.update(self.variance_model.name().as_bytes());
        h.update(self.seed.to_le_bytes());
        h.update(self.variance_floor.to_le_bytes());
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Per-run quantities beyond the operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDiagnostics {
    pub num_latents: usize,
    pub water_level: f64,
    /// Fraction of latents with positive rate.
    pub active_fraction: f64,
    /// MSE between clean and reconstructed latents.
    pub latent_mse: f64,
    /// Mean of the channel's closed-form per-sample distortion.
    pub expected_latent_mse: f64,
    /// Mean clean residual energy (pass 1, before flooring).
    pub clean_energy: f64,
    /// Mean residual energy met during the perturbed walk (pass 2).
    pub walk_energy: f64,
    /// `walk_energy / clean_energy − 1`.
    pub residual_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub point: RDPoint,
    pub diagnostics: RunDiagnostics,
    pub reconstruction: ImagePlane,
}

/// Budget-independent state of a run: latents, fitted context and the
/// variances allocation works from.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    image: ImagePlane,
    latents: LatentGrid,
    context: ContextModelSpec,
    variances: Vec<f64>,
    clean_energy: f64,
}

impl PreparedImage {
    pub fn latents(&self) -> &LatentGrid {
        &self.latents
    }

    pub fn context(&self) -> &ContextModelSpec {
        &self.context
    }

    /// Floored variances fed to water-filling.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }
}

/// Steps 1–2: analysis, context fit and clean residual energies.
pub fn prepare(image: &ImagePlane, config: &PipelineConfig) -> Result<PreparedImage> {
    config.validate()?;
    let latents = analyze(image, &config.transform)?;
    let context = fit_context(&latents, &config.context)?;
    let residuals = clean_residuals(&latents, &context)?;
    let energies: Vec<f64> = residuals
        .residuals
        .coefficients()
        .iter()
        .map(|r| r * r)
        .collect();
    let clean_energy = energies.iter().sum::<f64>() / energies.len() as f64;
    let floor = config.variance_floor;
    let variances = match config.variance_model {
        VarianceModel::SampleEnergy => energies.iter().map(|&e| e.max(floor)).collect(),
        VarianceModel::ChannelMoment => {
            let n = latents.channel_len();
            energies
                .chunks(n)
                .flat_map(|ch| {
                    let m = (ch.iter().sum::<f64>() / n as f64).max(floor);
                    std::iter::repeat(m).take(n)
                })
                .collect()
        }
    };
    if !clean_energy.is_finite() {
        return Err(Error::Numerical {
            stage: "context residuals",
            detail: "non-finite residual energy".into(),
        });
    }
    Ok(PreparedImage {
        image: image.clone(),
        latents,
        context,
        variances,
        clean_energy,
    })
}

/// Steps 3–6 at one budget.
pub fn simulate(
    prepared: &PreparedImage,
    config: &PipelineConfig,
    budget: f64,
) -> Result<RunReport> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::invalid(format!(
            "budget must be positive, got {budget}"
        )));
    }
    let latents = &prepared.latents;
    let n = latents.len();
    let plane = latents.channel_len();
    let (rows, cols) = (latents.block_rows(), latents.block_cols());
    let ctx = &prepared.context;
    let kind = ctx.kind();
    let v = &prepared.variances;

    let (distortions, water_level, step) = match config.quantizer {
        Quantizer::TestChannel => {
            let sources = SourceSpec::new(v.clone())?;
            let alloc = reverse_water_fill(&sources, budget * n as f64, DEFAULT_TOLERANCE)?;
            (alloc.distortions, alloc.water_level, 1.0)
        }
        Quantizer::Uniform => (Vec::new(), 0.0, (12.0 * budget).sqrt()),
    };
    let noise = NoiseStream::new(config.seed, Domain::ChannelNoise);

    struct ChannelOut {
        values: Vec<f64>,
        walk_energy: f64,
        rate_bits: f64,
        expected_sq_error: f64,
    }

    let outputs: Vec<ChannelOut> = (0..latents.channels())
        .into_par_iter()
        .map(|ch| -> Result<ChannelOut> {
            let weights = ctx.channel_weights(ch)?;
            let clean = latents.channel(ch);
            let base = ch * plane;
            let mut out = vec![0.0; plane];
            let mut draws = vec![0.0; plane];
            if config.quantizer == Quantizer::TestChannel {
                noise.fill(base as u64, &mut draws);
            }
            let mut walk_energy = 0.0;
            let mut rate_bits = 0.0;
            let mut expected = 0.0;
            for r in 0..rows {
                for c in 0..cols {
                    let i = r * cols + c;
                    let mean = if kind == ContextKind::None {
                        0.0
                    } else {
                        let view = ChannelView {
                            values: &out,
                            rows,
                            cols,
                        };
                        predict_in_channel(view, r, c, kind, ctx.neighborhood(), weights)
                    };
                    let residual = clean[i] - mean;
                    walk_energy += residual * residual;
                    let var = v[base + i];
                    out[i] = match config.quantizer {
                        Quantizer::TestChannel => {
                            let params = ChannelParams::new(var, distortions[base + i])?;
                            expected += per_sample_distortion(&params);
                            if params.is_suppressed() {
                                mean
                            } else {
                                mean + params.transmit(residual, draws[i])
                            }
                        }
                        Quantizer::Uniform => {
                            let scaled = residual / step;
                            let floor = config.variance_floor;
                            rate_bits +=
                                uniform_bin_rate(scaled, (var / (step * step)).max(floor))?;
                            expected += step * step / 12.0;
                            mean + step * scaled.round()
                        }
                    };
                }
            }
            Ok(ChannelOut {
                values: out,
                walk_energy,
                rate_bits,
                expected_sq_error: expected,
            })
        })
        .collect::<Result<_>>()?;

    let mut coefficients = Vec::with_capacity(n);
    let (mut walk_energy, mut uniform_bits, mut expected) = (0.0, 0.0, 0.0);
    for o in &outputs {
        coefficients.extend_from_slice(&o.values);
        walk_energy += o.walk_energy;
        uniform_bits += o.rate_bits;
        expected += o.expected_sq_error;
    }
    if coefficients.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical {
            stage: "test channel walk",
            detail: "non-finite perturbed latent".into(),
        });
    }
    let perturbed = latents.with_coefficients(coefficients)?;

    let latent_rate = match config.quantizer {
        Quantizer::TestChannel => rate_from_parts(v, &distortions)?,
        Quantizer::Uniform => uniform_bits / n as f64,
    };
    let active = match config.quantizer {
        Quantizer::TestChannel => v.iter().zip(&distortions).filter(|(a, d)| d < a).count(),
        Quantizer::Uniform => n,
    };

    let reconstruction = synthesize(&perturbed, &config.transform)?;
    let distortion_mse = mse(&prepared.image, &reconstruction)?;
    let latent_mse = mse(latents, &perturbed)?;
    let walk_energy = walk_energy / n as f64;
    let residual_drift = if prepared.clean_energy > 0.0 {
        walk_energy / prepared.clean_energy - 1.0
    } else {
        0.0
    };

    let point = RDPoint {
        rate: latent_rate * latents.latents_per_pixel(),
        latent_rate,
        distortion_mse,
        psnr_db: psnr(distortion_mse),
        budget,
        config_digest: config.digest(),
    };
    Ok(RunReport {
        point,
        diagnostics: RunDiagnostics {
            num_latents: n,
            water_level,
            active_fraction: active as f64 / n as f64,
            latent_mse,
            expected_latent_mse: expected / n as f64,
            clean_energy: prepared.clean_energy,
            walk_energy,
            residual_drift,
        },
        reconstruction,
    })
}

fn single_budget(config: &PipelineConfig) -> Result<f64> {
    config.validate()?;
    match config.budgets.as_slice() {
        [b] => Ok(*b),
        _ => Err(Error::invalid("run_once needs exactly one budget")),
    }
}

/// Full run at the config's single budget, with diagnostics.
pub fn run_detailed(image: &ImagePlane, config: &PipelineConfig) -> Result<RunReport> {
    let budget = single_budget(config)?;
    simulate(&prepare(image, config)?, config, budget)
}

/// Full run at the config's single budget.
pub fn run_once(image: &ImagePlane, config: &PipelineConfig) -> Result<RDPoint> {
    run_detailed(image, config).map(|r| r.point)
}

/// Uniform scalar quantization at the config's single budget.
pub fn uniform_baseline(image: &ImagePlane, config: &PipelineConfig) -> Result<RDPoint> {
    if config.quantizer != Quantizer::Uniform {
        return Err(Error::invalid("uniform baseline needs quantizer = uniform"));
    }
    run_once(image, config)
}

/// Sweep at least two budgets over every image; see [`run_batch`].
pub fn run_sweep(images: &[ImagePlane], config: &PipelineConfig) -> Result<RDCurve> {
    if config.budgets.len() < 2 {
        return Err(Error::invalid("a sweep needs at least two budgets"));
    }
    run_batch(images, config)
}

/// Run every budget of `config` on every image and average rate and
/// distortion per budget.
///
/// Image `i` runs with seed `derive_seed(config.seed, i)` so images do not
/// share noise; a single image keeps `config.seed`.
pub fn run_batch(images: &[ImagePlane], config: &PipelineConfig) -> Result<RDCurve> {
    config.validate()?;
    if images.is_empty() {
        return Err(Error::invalid("sweep needs at least one image"));
    }
    let prepared: Vec<(PreparedImage, PipelineConfig)> = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let cfg = config
                .clone()
                .with_seed(image_seed(config.seed, i, images.len()));
            prepare(img, &cfg).map(|p| (p, cfg))
        })
        .collect::<Result<_>>()?;

    let points: Vec<RDPoint> = config
        .budgets
        .par_iter()
        .map(|&budget| {
            let runs: Vec<RDPoint> = prepared
                .iter()
                .map(|(p, cfg)| simulate(p, cfg, budget).map(|r| r.point))
                .collect::<Result<_>>()?;
            let k = runs.len() as f64;
            let mean = |f: fn(&RDPoint) -> f64| runs.iter().map(f).sum::<f64>() / k;
            let distortion_mse = mean(|p| p.distortion_mse);
            Ok(RDPoint {
                rate: mean(|p| p.rate),
                latent_rate: mean(|p| p.latent_rate),
                distortion_mse,
                psnr_db: psnr(distortion_mse),
                budget,
                config_digest: config.digest(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(RDCurve::from_points(points))
}

/// Single images keep the configured seed; multi-image sweeps derive one per
/// image.
fn image_seed(seed: u64, index: usize, count: usize) -> u64 {
    if count == 1 {
        seed
    } else {
        derive_seed(seed, index as u64)
    }
}
