//! Rate of a correlated Gaussian pair versus the independence assumption.
//!
//! Both components share variance σ² and pass through independent additive
//! channels `X̂ = X + Z`, `Z ~ N(0, D)`. Coding them jointly costs
//! ½·log2(((σ² + D)² − ρ²σ⁴) / D²) bits; treating them as independent costs
//! log2(1 + σ²/D). The difference is what an independence-based allocation
//! overestimates.

use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::rng::{Domain, NoiseStream};
use crate::stats::{grouped_jackknife, Moments};
use crate::test_channel::{MiEstimate, MIN_MC_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedPair {
    variance: f64,
    rho: f64,
    distortion: f64,
}

impl CorrelatedPair {
    pub fn new(variance: f64, rho: f64, distortion: f64) -> Result<Self> {
        ensure_finite("variance", variance)?;
        ensure_finite("rho", rho)?;
        ensure_finite("distortion", distortion)?;
        if variance < 0.0 {
            return Err(Error::invalid("pair variance must be non-negative"));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::invalid(format!("correlation {rho} outside [-1, 1]")));
        }
        if distortion <= 0.0 {
            return Err(Error::invalid("pair distortion must be positive"));
        }
        Ok(Self {
            variance,
            rho,
            distortion,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn distortion(&self) -> f64 {
        self.distortion
    }
}

/// Total bits for both components coded independently.
pub fn rate_independent(pair: &CorrelatedPair) -> f64 {
    (1.0 + pair.variance / pair.distortion).log2()
}

/// Total bits for the pair coded jointly.
pub fn rate_correlated(pair: &CorrelatedPair) -> Result<f64> {
    let s = pair.variance;
    let d = pair.distortion;
    let r = pair.rho.abs();
    // det [[s+d, ρs], [ρs, s+d]] = (s+d)² · (1 − rs/(s+d)) · (1 + rs/(s+d)),
    // so the joint rate is the independent one plus a term that is exactly
    // zero at ρ = 0.
    let lower = (s * (1.0 - r) + d) / (s + d);
    let upper = (s * (1.0 + r) + d) / (s + d);
    if !(lower > 0.0 && upper > 0.0) {
        return Err(Error::Numerical {
            stage: "pair covariance",
            detail: format!("non-positive determinant factor {lower}"),
        });
    }
    Ok(rate_independent(pair) + 0.5 * (lower.log2() + upper.log2()))
}

/// Bits overestimated by assuming independence.
pub fn correlation_overestimate(pair: &CorrelatedPair) -> Result<f64> {
    Ok(rate_independent(pair) - rate_correlated(pair)?)
}

/// Monte Carlo estimate of I((X, Y); (X̂, Ŷ)) from sample covariance
/// determinants, with grouped-jackknife standard error.
pub fn mc_pair_mutual_information(
    pair: &CorrelatedPair,
    num_samples: usize,
    seed: u64,
) -> Result<MiEstimate> {
    if num_samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {num_samples}"
        )));
    }
    if pair.rho.abs() >= 1.0 || pair.variance == 0.0 {
        return Err(Error::Estimation(
            "source covariance is singular; the regression estimator needs |rho| < 1".into(),
        ));
    }
    let sd = pair.variance.sqrt();
    let cross = (1.0 - pair.rho * pair.rho).sqrt();
    let noise_sd = pair.distortion.sqrt();
    let src = NoiseStream::new(seed, Domain::PairSources).sequence(2 * num_samples);
    let noise = NoiseStream::new(seed, Domain::PairNoise).sequence(2 * num_samples);

    let group_len = num_samples.div_ceil(100);
    let groups: Vec<Moments<4>> = src
        .par_chunks(2 * group_len)
        .zip(noise.par_chunks(2 * group_len))
        .map(|(s, z)| {
            let mut m = Moments::default();
            for (g, e) in s.chunks_exact(2).zip(z.chunks_exact(2)) {
                let x = sd * g[0];
                let y = sd * (pair.rho * g[0] + cross * g[1]);
                m.push([x, y, x + noise_sd * e[0], y + noise_sd * e[1]]);
            }
            m
        })
        .collect();

    let (bits, std_error) = grouped_jackknife(&groups, joint_gaussian_mi)
        .ok_or_else(|| Error::Estimation("degenerate sample covariance".into()))?;
    Ok(MiEstimate { bits, std_error })
}

type Mat2 = [[f64; 2]; 2];

fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// ½·log2(|Σ_out| / |Σ_out|in|) for components (in0, in1, out0, out1).
fn joint_gaussian_mi(m: &Moments<4>) -> Option<f64> {
    let block = |r: usize, c: usize| -> Mat2 {
        [
            [m.cov(r, c), m.cov(r, c + 1)],
            [m.cov(r + 1, c), m.cov(r + 1, c + 1)],
        ]
    };
    let ss = block(0, 0);
    let hs = block(2, 0);
    let hh = block(2, 2);
    let det_ss = det2(&ss);
    if !(det_ss > 0.0) {
        return None;
    }
    let inv_ss = [
        [ss[1][1] / det_ss, -ss[0][1] / det_ss],
        [-ss[1][0] / det_ss, ss[0][0] / det_ss],
    ];
    // Σ_hh − Σ_hs Σ_ss⁻¹ Σ_sh
    let mut cond = hh;
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    acc += hs[i][k] * inv_ss[k][l] * hs[j][l];
                }
            }
            cond[i][j] -= acc;
        }
    }
    let det_hh = det2(&hh);
    let det_cond = det2(&cond);
    if !(det_hh > 0.0 && det_cond > 0.0) {
        return None;
    }
    Some(0.5 * (det_hh / det_cond).log2())
}
