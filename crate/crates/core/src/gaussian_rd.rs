//! Closed-form rate-distortion quantities for zero-mean Gaussian sources.
//!
//! Everything is computed in nats internally and converted to bits once, at
//! the public boundary. The exception is [`expected_code_length`], which is
//! a cross-entropy and is reported in nats like the differential entropy and
//! KL divergence it decomposes into.
//!
//! | Function | Quantity |
//! |----------|----------|
//! | [`rate_gaussian`] | R(D) = max(0, ½·log2(σ²/D)) |
//! | [`expected_code_length`] | ½·ln(2π·v) + m/(2v) |
//! | [`rate_uniform_quantizer`] | −log2 P(bin of width 1 around y) under N(0, y²) |
//! | [`shannon_gap_constant`] | ½·log2(πe/6) ≈ 0.2546 bits |

use std::f64::consts::{E, LN_2, PI, SQRT_2};

use crate::error::{ensure_finite, Error, Result};

/// Distortion of a unit-step uniform quantizer, Δ²/12 with Δ = 1.
pub const UNIFORM_NOISE_DISTORTION: f64 = 1.0 / 12.0;

/// Variance floor applied to near-zero latents before evaluating bin masses.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-9;

#[inline]
pub(crate) fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

/// A zero-mean Gaussian source N(0, variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSource {
    variance: f64,
}

impl GaussianSource {
    pub fn new(variance: f64) -> Result<Self> {
        ensure_finite("variance", variance)?;
        if variance < 0.0 {
            return Err(Error::invalid(format!(
                "variance must be non-negative, got {variance}"
            )));
        }
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// R(D) of this source in bits per sample.
    pub fn rate(&self, distortion: f64) -> Result<f64> {
        rate_gaussian(self.variance, distortion)
    }
}

/// Uniform-quantizer rate, test-channel rate and their difference for one
/// variance, all in bits per sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub variance: f64,
    pub rate_uniform: f64,
    pub rate_optimal: f64,
    pub gap: f64,
}

/// Gaussian rate-distortion function in bits per sample.
///
/// Returns exactly zero when `distortion >= variance`.
pub fn rate_gaussian(variance: f64, distortion: f64) -> Result<f64> {
    ensure_finite("variance", variance)?;
    ensure_finite("distortion", distortion)?;
    if variance < 0.0 || distortion < 0.0 {
        return Err(Error::invalid(format!(
            "variance and distortion must be non-negative, got ({variance}, {distortion})"
        )));
    }
    if distortion >= variance {
        return Ok(0.0);
    }
    if distortion == 0.0 {
        return Err(Error::InfiniteRate { variance });
    }
    Ok(nats_to_bits(0.5 * (variance / distortion).ln()))
}

/// Expected code length, in nats, of N(0, ·) samples with the given second
/// moment when coded with a zero-mean Gaussian model of `model_variance`.
pub fn expected_code_length(second_moment: f64, model_variance: f64) -> Result<f64> {
    ensure_finite("second_moment", second_moment)?;
    ensure_finite("model_variance", model_variance)?;
    if second_moment < 0.0 {
        return Err(Error::invalid("second moment must be non-negative"));
    }
    if model_variance <= 0.0 {
        return Err(Error::invalid(format!(
            "model variance must be positive, got {model_variance}"
        )));
    }
    Ok(0.5 * (2.0 * PI * model_variance).ln() + second_moment / (2.0 * model_variance))
}

/// The model variance that minimizes [`expected_code_length`]: the second
/// moment itself.
pub fn argmin_model_variance(second_moment: f64) -> f64 {
    second_moment
}

/// Differential entropy of N(0, variance) in nats.
pub fn differential_entropy(variance: f64) -> Result<f64> {
    ensure_finite("variance", variance)?;
    if variance <= 0.0 {
        return Err(Error::invalid(
            "differential entropy needs a positive variance",
        ));
    }
    Ok(0.5 * (2.0 * PI * E * variance).ln())
}

/// KL(N(0, p) ‖ N(0, q)) in nats.
pub fn kl_divergence(p_variance: f64, q_variance: f64) -> Result<f64> {
    ensure_finite("p_variance", p_variance)?;
    ensure_finite("q_variance", q_variance)?;
    if p_variance <= 0.0 || q_variance <= 0.0 {
        return Err(Error::invalid("KL divergence needs positive variances"));
    }
    let ratio = p_variance / q_variance;
    Ok(0.5 * (ratio - 1.0 - ratio.ln()))
}

/// Natural log of the standard normal upper tail Q(x) = P(Z > x).
///
/// Switches to the asymptotic series far in the tail where `erfc` underflows.
fn ln_upper_tail(x: f64) -> f64 {
    if x < 35.0 {
        (0.5 * libm::erfc(x / SQRT_2)).ln()
    } else {
        let inv2 = 1.0 / (x * x);
        let series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2));
        -0.5 * x * x - (x * (2.0 * PI).sqrt()).ln() + series.ln()
    }
}

/// Natural log of P(lo < Z < hi) for a standard normal Z, with `lo < hi`.
///
/// Both tails are evaluated through `erfc` on non-negative arguments so that
/// masses far from the origin keep full relative precision.
fn ln_standard_normal_mass(lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    if lo >= 0.0 {
        let ln_lo = ln_upper_tail(lo);
        let ln_hi = ln_upper_tail(hi);
        ln_lo + (-(ln_hi - ln_lo).exp()).ln_1p()
    } else if hi <= 0.0 {
        ln_standard_normal_mass(-hi, -lo)
    } else {
        let outside = 0.5 * libm::erfc(hi / SQRT_2) + 0.5 * libm::erfc(-lo / SQRT_2);
        (-outside).ln_1p()
    }
}

/// Bits needed to code the unit-width bin centred on `value` under
/// N(0, `variance`).
pub fn uniform_bin_rate(value: f64, variance: f64) -> Result<f64> {
    ensure_finite("value", value)?;
    ensure_finite("variance", variance)?;
    if variance <= 0.0 {
        return Err(Error::invalid(format!(
            "bin rate needs a positive variance, got {variance}"
        )));
    }
    let sigma = variance.sqrt();
    let centre = value.abs();
    let ln_mass = ln_standard_normal_mass((centre - 0.5) / sigma, (centre + 0.5) / sigma);
    // The mass never exceeds one, but rounding can leave a -0.0 or a 1-ulp excess.
    Ok(nats_to_bits(-ln_mass).max(0.0))
}

/// Per-sample code length of a unit-step uniform quantizer when the entropy
/// model variance is the sample's own energy `max(y², variance_floor)`.
pub fn rate_uniform_quantizer(latent_value: f64, variance_floor: f64) -> Result<f64> {
    ensure_finite("latent_value", latent_value)?;
    ensure_finite("variance_floor", variance_floor)?;
    if variance_floor <= 0.0 {
        return Err(Error::invalid("variance floor must be positive"));
    }
    uniform_bin_rate(
        latent_value,
        (latent_value * latent_value).max(variance_floor),
    )
}

/// ½·log2(πe/6): the high-rate excess of entropy-coded uniform scalar
/// quantization over the Gaussian R(D).
pub fn shannon_gap_constant() -> f64 {
    0.5 * (PI * E / 6.0).log2()
}

/// Uniform-quantizer versus Gaussian test-channel rates over `variances` at a
/// fixed `distortion` (usually [`UNIFORM_NOISE_DISTORTION`]).
///
/// The uniform rate is evaluated for the sample `y = √variance`.
pub fn rate_gap_curve(variances: &[f64], distortion: f64) -> Result<Vec<RatePair>> {
    ensure_finite("distortion", distortion)?;
    if distortion <= 0.0 {
        return Err(Error::invalid("distortion must be positive"));
    }
    variances
        .iter()
        .map(|&variance| {
            ensure_finite("variance", variance)?;
            if variance < 0.0 {
                return Err(Error::invalid(format!("negative variance {variance}")));
            }
            let rate_uniform = rate_uniform_quantizer(variance.sqrt(), DEFAULT_VARIANCE_FLOOR)?;
            let rate_optimal = rate_gaussian(variance, distortion)?;
            Ok(RatePair {
                variance,
                rate_uniform,
                rate_optimal,
                gap: rate_uniform - rate_optimal,
            })
        })
        .collect()
}

/// `count` points spaced evenly in log between `min` and `max` inclusive.
pub fn log_variance_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) {
        return Err(Error::invalid(format!(
            "bad log grid bounds [{min}, {max}]"
        )));
    }
    match count {
        0 => Ok(Vec::new()),
        1 => Ok(vec![min]),
        _ => {
            let (lo, hi) = (min.ln(), max.ln());
            let step = (hi - lo) / (count - 1) as f64;
            Ok((0..count)
                .map(|i| {
                    if i == 0 {
                        min
                    } else if i == count - 1 {
                        max
                    } else {
                        (lo + step * i as f64).exp()
                    }
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// P(lo < Z < hi) by composite Simpson quadrature of the normal density.
    fn normal_mass_quadrature(lo: f64, hi: f64) -> f64 {
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let mut acc = pdf(lo) + pdf(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(lo + h * i as f64);
        }
        acc * h / 3.0
    }

    #[test]
    fn rate_gaussian_examples() {
        assert_eq!(rate_gaussian(1.0, 1.0).unwrap(), 0.0);
        assert!((rate_gaussian(1.0, 0.25).unwrap() - 1.0).abs() < 1e-15);
        let r = rate_gaussian(9.0, 1.0 / 12.0).unwrap();
        assert!((r - 0.5 * 108f64.log2()).abs() < 1e-14);
        assert!((r - 3.3774).abs() < 1e-4);
    }

    #[test]
    fn rate_gaussian_errors() {
        assert!(matches!(
            rate_gaussian(1.0, 0.0),
            Err(Error::InfiniteRate { .. })
        ));
        assert_eq!(rate_gaussian(0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(
            rate_gaussian(-1.0, 0.5),
            Err(Error::InvalidArgument(_))
        ));
        assert!(rate_gaussian(f64::NAN, 0.5).is_err());
        assert!(rate_gaussian(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn code_length_examples() {
        let at_min = expected_code_length(1.0, 1.0).unwrap();
        assert!((at_min - 0.5 * ((2.0 * PI).ln() + 1.0)).abs() < 1e-15);
        assert!((at_min - 1.4189).abs() < 1e-4);
        let off = expected_code_length(1.0, 2.0).unwrap();
        assert!((off - 1.5155).abs() < 1e-4);
        assert!(off > at_min);
        let a = expected_code_length(0.0, 1.0).unwrap();
        let b = expected_code_length(0.0, 2.0).unwrap();
        assert!((a - 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!(b > a);
        assert!(expected_code_length(1.0, 0.0).is_err());
    }

    #[test]
    fn argmin_is_identity() {
        for m in [1.0, 0.0, 2.5] {
            assert_eq!(argmin_model_variance(m), m);
        }
    }

    #[test]
    fn uniform_rate_matches_quadrature() {
        for (y, expect) in [(1.0, 2.0485), (3.0, 3.632)] {
            let r = rate_uniform_quantizer(y, DEFAULT_VARIANCE_FLOOR).unwrap();
            let s: f64 = y;
            let oracle = -normal_mass_quadrature((y - 0.5) / s, (y + 0.5) / s).log2();
            assert!((r - oracle).abs() < 1e-10, "{r} vs {oracle}");
            assert!((r - expect).abs() < 1e-3);
        }
        let r0 = rate_uniform_quantizer(0.0, 1e-12).unwrap();
        assert!(r0.abs() < 1e-12);
    }

    #[test]
    fn far_tail_bins_stay_finite() {
        // value far outside the model spread: the mass underflows erfc
        let r = uniform_bin_rate(40.0, 1.0).unwrap();
        assert!(r.is_finite());
        // Q(39.5) dominates: -log2 Q(39.5) ~ 39.5²/2/ln2
        let approx = (0.5 * 39.5 * 39.5 + (39.5 * (2.0 * PI).sqrt()).ln()) / LN_2;
        assert!((r - approx).abs() < 1e-2);
        let tight = uniform_bin_rate(3.0, 1e-9).unwrap();
        assert!(tight.is_finite() && tight > 1e9);
    }

    #[test]
    fn gap_constant() {
        let g = shannon_gap_constant();
        assert!((g - 0.254).abs() < 1e-3);
        assert!((g - 0.5 * (2.0 * PI * E / 12.0).log2()).abs() < 1e-15);
        let curve = rate_gap_curve(&[1e6 / 12.0], UNIFORM_NOISE_DISTORTION).unwrap();
        assert!((curve[0].gap - g).abs() < 1e-3);
    }

    #[test]
    fn gap_curve_threshold() {
        let curve = rate_gap_curve(&[0.01, 1.0 / 12.0, 1.0], UNIFORM_NOISE_DISTORTION).unwrap();
        assert_eq!(curve[0].rate_optimal, 0.0);
        assert!(curve[0].rate_uniform > 0.0);
        assert_eq!(curve[1].rate_optimal, 0.0);
        for p in &curve {
            assert_eq!(p.gap, p.rate_uniform - p.rate_optimal);
        }
    }

    #[test]
    fn kl_decomposition() {
        for (m, v) in [(1.0, 2.0), (0.3, 0.05), (7.0, 7.0)] {
            let lhs = expected_code_length(m, v).unwrap() - differential_entropy(m).unwrap();
            let rhs = kl_divergence(m, v).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_variance_grid(1e-3, 1e3, 7).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1e3);
        assert!((g[3] - 1.0).abs() < 1e-12);
        assert!(log_variance_grid(0.0, 1.0, 3).is_err());
    }
}
