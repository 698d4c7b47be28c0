//! Reverse water-filling over independent Gaussian sources.
//!
//! Given variances σᵢ² and a total distortion budget D, the rate-optimal
//! allocation is Dᵢ = min(σᵢ², α) with the water level α chosen so that
//! Σ Dᵢ = D. The level is found by bisection on the monotone map
//! α ↦ Σ min(σᵢ², α); once the bracket has pinned down which sources sit
//! above the water, α is recomputed exactly from that active set so that
//! the KKT structure holds without bisection residue.

use crate::error::{ensure_finite, Error, Result};
use crate::gaussian_rd::nats_to_bits;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;

/// A non-empty collection of Gaussian source variances.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    variances: Vec<f64>,
}

impl SourceSpec {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::invalid("source set is empty"));
        }
        for (i, &v) in variances.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "variance #{i} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self { variances })
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    pub fn total_variance(&self) -> f64 {
        self.variances.iter().sum()
    }

    fn max_variance(&self) -> f64 {
        self.variances.iter().copied().fold(0.0, f64::max)
    }

    fn filled(&self, level: f64) -> f64 {
        self.variances.iter().map(|&v| v.min(level)).sum()
    }
}

/// Result of reverse water-filling.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub distortions: Vec<f64>,
    pub water_level: f64,
    /// Summed over sources, in bits.
    pub total_rate: f64,
}

impl Allocation {
    /// Bits allotted to each source.
    pub fn rates(&self, sources: &SourceSpec) -> Vec<f64> {
        sources
            .variances()
            .iter()
            .zip(&self.distortions)
            .map(|(&v, &d)| source_rate(v, d))
            .collect()
    }

    /// Whether source `i` receives a positive rate.
    pub fn is_active(&self, sources: &SourceSpec, i: usize) -> bool {
        self.distortions[i] < sources.variances()[i]
    }
}

#[inline]
fn source_rate(variance: f64, distortion: f64) -> f64 {
    if distortion >= variance || variance == 0.0 {
        0.0
    } else {
        nats_to_bits(0.5 * (variance / distortion).ln())
    }
}

/// Allocate `budget` total distortion across `sources`.
///
/// Convergence means `|Σ Dᵢ − budget| ≤ tolerance · budget`.
pub fn reverse_water_fill(sources: &SourceSpec, budget: f64, tolerance: f64) -> Result<Allocation> {
    ensure_finite("budget", budget)?;
    ensure_finite("tolerance", tolerance)?;
    if budget <= 0.0 {
        return Err(Error::invalid(format!(
            "budget must be positive, got {budget}"
        )));
    }
    if tolerance <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }

    let total = sources.total_variance();
    if budget >= total {
        return Ok(Allocation {
            distortions: sources.variances().to_vec(),
            water_level: sources.max_variance(),
            total_rate: 0.0,
        });
    }

    let target = tolerance * budget;
    let (mut lo, mut hi) = (0.0, sources.max_variance());
    let mut level = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        level = 0.5 * (lo + hi);
        let filled = sources.filled(level);
        residual = filled - budget;
        if residual.abs() <= target {
            break;
        }
        if residual > 0.0 {
            hi = level;
        } else {
            lo = level;
        }
        if hi - lo <= f64::EPSILON * hi {
            level = 0.5 * (lo + hi);
            residual = sources.filled(level) - budget;
            break;
        }
    }
    if residual.abs() > target {
        return Err(Error::Convergence {
            iterations,
            residual: residual.abs() / budget,
        });
    }

    let level = refine_level(sources, budget, level).unwrap_or(level);
    let distortions: Vec<f64> = sources.variances().iter().map(|&v| v.min(level)).collect();
    let total_rate = sources
        .variances()
        .iter()
        .zip(&distortions)
        .map(|(&v, &d)| source_rate(v, d))
        .sum();
    Ok(Allocation {
        distortions,
        water_level: level,
        total_rate,
    })
}

/// Exact water level for the active set implied by a bisection estimate.
///
/// Sources within a relative hair of the estimate are treated as inactive
/// (allocated their full variance), which resolves ties at the water level.
/// Returns `None` when the recomputed level contradicts its own active set.
fn refine_level(sources: &SourceSpec, budget: f64, estimate: f64) -> Option<f64> {
    let cut = estimate * (1.0 + 1e-9);
    let mut active = 0usize;
    let mut inactive_sum = 0.0;
    for &v in sources.variances() {
        if v > cut {
            active += 1;
        } else {
            inactive_sum += v;
        }
    }
    if active == 0 {
        return None;
    }
    let level = (budget - inactive_sum) / active as f64;
    let consistent = level > 0.0
        && sources.variances().iter().all(|&v| {
            if v > cut {
                v > level
            } else {
                v <= level * (1.0 + 1e-8)
            }
        });
    consistent.then_some(level)
}

/// Mean rate per source, in bits, implied by an allocation.
pub fn allocation_rate(sources: &SourceSpec, alloc: &Allocation) -> Result<f64> {
    rate_from_parts(sources.variances(), &alloc.distortions)
}

pub(crate) fn rate_from_parts(variances: &[f64], distortions: &[f64]) -> Result<f64> {
    if variances.len() != distortions.len() {
        return Err(Error::invalid(format!(
            "allocation has {} distortions for {} sources",
            distortions.len(),
            variances.len()
        )));
    }
    let mut sum = 0.0;
    for (i, (&v, &d)) in variances.iter().zip(distortions).enumerate() {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::invalid(format!("distortion #{i} is invalid: {d}")));
        }
        if d > v * (1.0 + 1e-9) + f64::MIN_POSITIVE {
            return Err(Error::invalid(format!(
                "distortion #{i} ({d}) exceeds its variance ({v})"
            )));
        }
        if d == 0.0 && v > 0.0 {
            return Err(Error::InfiniteRate { variance: v });
        }
        sum += source_rate(v, d);
    }
    Ok(sum / variances.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> SourceSpec {
        SourceSpec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn three_source_example() {
        let s = spec(&[4.0, 1.0, 0.25]);
        let a = reverse_water_fill(&s, 0.75, DEFAULT_TOLERANCE).unwrap();
        assert!((a.water_level - 0.25).abs() < 1e-12);
        for d in &a.distortions {
            assert!((d - 0.25).abs() < 1e-12);
        }
        let rates = a.rates(&s);
        assert!((rates[0] - 2.0).abs() < 1e-12);
        assert!((rates[1] - 1.0).abs() < 1e-12);
        assert_eq!(rates[2], 0.0);
        assert!((a.total_rate - 3.0).abs() < 1e-12);
        assert!((allocation_rate(&s, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_covers_everything() {
        let s = spec(&[1.0, 2.0, 3.0]);
        let a = reverse_water_fill(&s, 6.0, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(a.distortions, vec![1.0, 2.0, 3.0]);
        assert_eq!(a.total_rate, 0.0);
        assert_eq!(a.water_level, 3.0);
        assert_eq!(allocation_rate(&s, &a).unwrap(), 0.0);
    }

    #[test]
    fn single_source_reduces_to_rd() {
        let s = spec(&[1.0]);
        let a = reverse_water_fill(&s, 0.25, DEFAULT_TOLERANCE).unwrap();
        assert!((a.distortions[0] - 0.25).abs() < 1e-12);
        assert!((a.total_rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_sources() {
        let s = spec(&[0.0, 2.0, 0.0, 1.0]);
        let a = reverse_water_fill(&s, 1.0, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(a.distortions[0], 0.0);
        assert_eq!(a.distortions[2], 0.0);
        assert!((a.distortions[1] - 0.5).abs() < 1e-12);
        assert!((a.distortions[3] - 0.5).abs() < 1e-12);
        assert_eq!(a.rates(&s)[0], 0.0);
    }

    #[test]
    fn ties_at_the_water_level() {
        let s = spec(&[1.0, 1.0, 1.0, 1.0]);
        let a = reverse_water_fill(&s, 2.0, DEFAULT_TOLERANCE).unwrap();
        for d in &a.distortions {
            assert!((d - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SourceSpec::new(vec![]).is_err());
        assert!(SourceSpec::new(vec![1.0, f64::NAN]).is_err());
        assert!(SourceSpec::new(vec![-1.0]).is_err());
        let s = spec(&[1.0]);
        assert!(reverse_water_fill(&s, 0.0, DEFAULT_TOLERANCE).is_err());
        assert!(reverse_water_fill(&s, 0.5, 0.0).is_err());
    }

    #[test]
    fn impossible_tolerance_reports_residual() {
        let s = spec(&[1e10, 3.3e-7, 1.7]);
        match reverse_water_fill(&s, 1.0, 1e-300) {
            Err(Error::Convergence { iterations, .. }) => assert!(iterations > 0),
            Ok(a) => {
                // reaching the budget exactly is also acceptable
                let sum: f64 = a.distortions.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-300);
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn allocation_rate_length_mismatch() {
        let s = spec(&[1.0, 2.0]);
        let a = Allocation {
            distortions: vec![1.0],
            water_level: 1.0,
            total_rate: 0.0,
        };
        assert!(matches!(
            allocation_rate(&s, &a),
            Err(Error::InvalidArgument(_))
        ));
    }
}
