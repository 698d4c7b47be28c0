//! Simulated Gaussian test channel `ŷ = η·y + z`, `z ~ N(0, D)`.
//!
//! With `η = √(1 − D/σ²)` the mutual information between input and output
//! is exactly ½·log2(σ²/D), the Gaussian R(D). When `D ≥ σ²` the sample
//! carries no rate and the channel outputs exactly zero.
//!
//! The channel preserves mutual information, not per-sample MSE: its
//! squared error is `(1 − η)²σ² + D`, which is what
//! [`per_sample_distortion`] reports.

use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::rng::{Domain, NoiseStream, CHUNK_LEN};
use crate::stats::{grouped_jackknife, Moments};

/// Minimum sample count accepted by [`mc_mutual_information`].
pub const MIN_MC_SAMPLES: usize = 10_000;
const JACKKNIFE_GROUPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    signal_variance: f64,
    noise_variance: f64,
    eta: f64,
}

impl ChannelParams {
    pub fn new(signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let eta = scaling_factor(signal_variance, noise_variance)?;
        Ok(Self {
            signal_variance,
            noise_variance,
            eta,
        })
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Zero-rate regime: the output is identically zero.
    pub fn is_suppressed(&self) -> bool {
        self.noise_variance >= self.signal_variance
    }

    /// Channel output for one input given a standard normal draw.
    #[inline]
    pub fn transmit(&self, input: f64, standard_draw: f64) -> f64 {
        if self.is_suppressed() {
            0.0
        } else {
            self.eta * input + standard_draw * self.noise_variance.sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
    pub seed: u64,
    pub params: ChannelParams,
}

/// `√(1 − D/σ²)`, or 0 when `D ≥ σ²`.
pub fn scaling_factor(signal_variance: f64, noise_variance: f64) -> Result<f64> {
    ensure_finite("signal_variance", signal_variance)?;
    ensure_finite("noise_variance", noise_variance)?;
    if signal_variance <= 0.0 {
        return Err(Error::invalid(format!(
            "signal variance must be positive, got {signal_variance}"
        )));
    }
    if noise_variance < 0.0 {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    if noise_variance >= signal_variance {
        return Ok(0.0);
    }
    Ok((1.0 - noise_variance / signal_variance).sqrt())
}

/// Push `inputs` through the channel. Draw `i` of the noise is the `i`-th
/// standard normal of the `(seed, ChannelNoise)` stream.
pub fn apply_channel(inputs: &[f64], params: ChannelParams, seed: u64) -> ChannelRealization {
    let noise = NoiseStream::new(seed, Domain::ChannelNoise);
    let mut outputs = vec![0.0; inputs.len()];
    if !params.is_suppressed() {
        outputs
            .par_chunks_mut(CHUNK_LEN)
            .zip(inputs.par_chunks(CHUNK_LEN))
            .enumerate()
            .for_each(|(chunk, (out, inp))| {
                noise.fill((chunk * CHUNK_LEN) as u64, out);
                for (o, &x) in out.iter_mut().zip(inp) {
                    *o = params.transmit(x, *o);
                }
            });
    }
    ChannelRealization {
        inputs: inputs.to_vec(),
        outputs,
        seed,
        params,
    }
}

/// Expected squared error of the channel for an input of the given variance.
pub fn per_sample_distortion(params: &ChannelParams) -> f64 {
    if params.is_suppressed() {
        params.signal_variance
    } else {
        (1.0 - params.eta).powi(2) * params.signal_variance + params.noise_variance
    }
}

/// A Monte Carlo estimate in bits with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub bits: f64,
    pub std_error: f64,
}

impl MiEstimate {
    /// Distance from `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.bits - target) / self.std_error
    }
}

/// Gaussian mutual information ½·log2(Var ŷ / Var(ŷ | y)) from sample
/// moments of `(y, ŷ)` pairs drawn through the channel.
///
/// Inputs come from `(seed, SourceSamples)`, channel noise from
/// `(seed, ChannelNoise)`. The standard error is a delete-one-group
/// jackknife over 100 contiguous groups.
pub fn mc_mutual_information(
    signal_variance: f64,
    noise_variance: f64,
    num_samples: usize,
    seed: u64,
) -> Result<MiEstimate> {
    let params = ChannelParams::new(signal_variance, noise_variance)?;
    if noise_variance <= 0.0 {
        return Err(Error::invalid(
            "noise variance must be positive for a finite MI",
        ));
    }
    if num_samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {num_samples}"
        )));
    }
    if params.is_suppressed() {
        // Constant output: no information crosses the channel.
        return Ok(MiEstimate {
            bits: 0.0,
            std_error: 0.0,
        });
    }

    let realization = simulate_channel(params, num_samples, seed);
    let group_len = num_samples.div_ceil(JACKKNIFE_GROUPS);
    let groups: Vec<Moments<2>> = realization
        .inputs
        .par_chunks(group_len)
        .zip(realization.outputs.par_chunks(group_len))
        .map(|(ys, yh)| {
            let mut m = Moments::default();
            for (&a, &b) in ys.iter().zip(yh) {
                m.push([a, b]);
            }
            m
        })
        .collect();

    let (bits, std_error) = grouped_jackknife(&groups, scalar_gaussian_mi)
        .ok_or_else(|| Error::Estimation("degenerate sample covariance".into()))?;
    Ok(MiEstimate { bits, std_error })
}

/// `num_samples` N(0, σ²) inputs from `(seed, SourceSamples)` pushed
/// through the channel; the realization behind [`mc_mutual_information`].
pub fn simulate_channel(
    params: ChannelParams,
    num_samples: usize,
    seed: u64,
) -> ChannelRealization {
    let sd = params.signal_variance.sqrt();
    let inputs: Vec<f64> = NoiseStream::new(seed, Domain::SourceSamples)
        .sequence(num_samples)
        .into_iter()
        .map(|g| g * sd)
        .collect();
    apply_channel(&inputs, params, seed)
}

/// Unbiased sample variance with a grouped-jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    pub std_error: f64,
}

pub fn sample_variance(values: &[f64]) -> Result<VarianceEstimate> {
    if values.len() < JACKKNIFE_GROUPS * 2 {
        return Err(Error::InsufficientData(format!(
            "need at least {} values, got {}",
            JACKKNIFE_GROUPS * 2,
            values.len()
        )));
    }
    let group_len = values.len().div_ceil(JACKKNIFE_GROUPS);
    let groups: Vec<Moments<1>> = values
        .par_chunks(group_len)
        .map(|c| {
            let mut m = Moments::default();
            c.iter().for_each(|&v| m.push([v]));
            m
        })
        .collect();
    let (value, std_error) = grouped_jackknife(&groups, |m| Some(m.cov(0, 0)))
        .ok_or_else(|| Error::Estimation("degenerate sample".into()))?;
    Ok(VarianceEstimate { value, std_error })
}

fn scalar_gaussian_mi(m: &Moments<2>) -> Option<f64> {
    let var_in = m.cov(0, 0);
    let var_out = m.cov(1, 1);
    let cross = m.cov(0, 1);
    if !(var_in > 0.0 && var_out > 0.0) {
        return None;
    }
    let conditional = var_out - cross * cross / var_in;
    if !(conditional > 0.0) {
        return None;
    }
    Some(0.5 * (var_out / conditional).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_examples() {
        assert_eq!(scaling_factor(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(scaling_factor(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(scaling_factor(1.0, 2.0).unwrap(), 0.0);
        assert!((scaling_factor(1.0, 0.25).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!(scaling_factor(0.0, 0.1).is_err());
        assert!(scaling_factor(1.0, -0.1).is_err());
    }

    #[test]
    fn scaling_solves_the_mi_equation() {
        // bisection on η for ½log2(1 + η²σ²/D) = ½log2(σ²/D) at σ²=1, D=0.25
        let mi = |eta: f64| 0.5 * (1.0 + eta * eta / 0.25).log2();
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mi(mid) < 1.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((lo - scaling_factor(1.0, 0.25).unwrap()).abs() < 1e-12);
        assert!((lo - 0.86603).abs() < 1e-5);
    }

    #[test]
    fn params_preserve_output_variance() {
        let p = ChannelParams::new(3.0, 1.2).unwrap();
        assert!((p.eta().powi(2) * 3.0 + 1.2 - 3.0).abs() < 1e-14);
    }

    #[test]
    fn identity_and_suppression() {
        let xs = [0.3, -1.0, 2.5];
        let r = apply_channel(&xs, ChannelParams::new(1.0, 0.0).unwrap(), 3);
        assert_eq!(r.outputs, xs);
        let r = apply_channel(&xs, ChannelParams::new(1.0, 1.0).unwrap(), 3);
        assert!(r.outputs.iter().all(|&v| v == 0.0));
        let r = apply_channel(&xs, ChannelParams::new(1.0, 5.0).unwrap(), 3);
        assert!(r.outputs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_realizations() {
        let xs: Vec<f64> = (0..5000).map(|i| (i as f64).sin()).collect();
        let p = ChannelParams::new(0.5, 0.1).unwrap();
        let a = apply_channel(&xs, p, 99);
        let b = apply_channel(&xs, p, 99);
        assert_eq!(a, b);
        let c = apply_channel(&xs, p, 100);
        assert_ne!(a.outputs, c.outputs);
        let draw = NoiseStream::new(99, Domain::ChannelNoise).standard_normal(4321);
        assert_eq!(a.outputs[4321], p.eta() * xs[4321] + draw * 0.1f64.sqrt());
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(
            per_sample_distortion(&ChannelParams::new(1.0, 0.0).unwrap()),
            0.0
        );
        let d = per_sample_distortion(&ChannelParams::new(1.0, 0.25).unwrap());
        assert!((d - ((1.0 - 0.75f64.sqrt()).powi(2) + 0.25)).abs() < 1e-15);
        assert!((d - 0.2679).abs() < 1e-4);
        assert_eq!(
            per_sample_distortion(&ChannelParams::new(1.0, 1.0).unwrap()),
            1.0
        );
        assert_eq!(
            per_sample_distortion(&ChannelParams::new(1.0, 3.0).unwrap()),
            1.0
        );
    }

    #[test]
    fn sample_mse_matches_closed_form() {
        let n = 400_000;
        let xs = NoiseStream::new(5, Domain::SourceSamples).sequence(n);
        let p = ChannelParams::new(1.0, 0.25).unwrap();
        let r = apply_channel(&xs, p, 5);
        let errs: Vec<f64> = xs
            .iter()
            .zip(&r.outputs)
            .map(|(a, b)| (a - b).powi(2))
            .collect();
        let mean = errs.iter().sum::<f64>() / n as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - per_sample_distortion(&p)).abs() < 4.0 * se);
    }

    #[test]
    fn mi_examples() {
        let e = mc_mutual_information(1.0, 0.25, 200_000, 1).unwrap();
        assert!(e.z_score(1.0).abs() < 3.0, "{e:?}");
        let e = mc_mutual_information(4.0, 1.0, 200_000, 2).unwrap();
        assert!(e.z_score(1.0).abs() < 3.0, "{e:?}");
        let e = mc_mutual_information(1.0, 0.999_999, 200_000, 3).unwrap();
        assert!(e.bits.abs() < 1e-3);
        let e = mc_mutual_information(1.0, 1.0, 200_000, 3).unwrap();
        assert_eq!(e.bits, 0.0);
    }

    #[test]
    fn mi_rejects_bad_requests() {
        assert!(mc_mutual_information(1.0, 0.25, 100, 1).is_err());
        assert!(mc_mutual_information(1.0, 0.0, 20_000, 1).is_err());
        assert!(mc_mutual_information(0.0, 0.25, 20_000, 1).is_err());
    }
}
