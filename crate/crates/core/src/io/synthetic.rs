//! Gaussian test fields.

use crate::error::{Error, Result};
use crate::rng::{Domain, NoiseStream};
use crate::transforms::ImagePlane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    IidGaussian,
    Ar1Field,
}

impl SyntheticKind {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::IidGaussian => "iid",
            SyntheticKind::Ar1Field => "ar1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSourceSpec {
    pub kind: SyntheticKind,
    pub width: usize,
    pub height: usize,
    pub variance: f64,
    /// Used by [`SyntheticKind::Ar1Field`] only.
    pub ar_coefficient: f64,
    pub seed: u64,
}

impl SyntheticSourceSpec {
    pub fn iid_gaussian(width: usize, height: usize, variance: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::IidGaussian,
            width,
            height,
            variance,
            ar_coefficient: 0.0,
            seed,
        }
    }

    pub fn ar1_field(width: usize, height: usize, variance: f64, a: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::Ar1Field,
            width,
            height,
            variance,
            ar_coefficient: a,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("synthetic field must be non-empty"));
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::invalid(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if self.kind == SyntheticKind::Ar1Field && !(self.ar_coefficient.abs() < 1.0) {
            return Err(Error::invalid(format!(
                "AR coefficient must lie in (-1, 1), got {}",
                self.ar_coefficient
            )));
        }
        Ok(())
    }
}

/// Draw the field described by `spec`.
///
/// The AR(1) field is the separable Markov field with covariance
/// `σ²·a^|Δrow|·a^|Δcol|`: the first row and column are stationary 1-D AR(1)
/// sequences and the interior follows
/// `x[i,j] = a·x[i,j−1] + a·x[i−1,j] − a²·x[i−1,j−1] + e`,
/// `Var e = σ²(1−a²)²`. Sample `(i, j)` consumes draw `i·width + j` of the
/// synthetic-field stream, so `a = 0` reproduces the i.i.d. field exactly.
pub fn generate_source(spec: &SyntheticSourceSpec) -> Result<ImagePlane> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let z = NoiseStream::new(spec.seed, Domain::SyntheticField).sequence(w * h);
    let sigma = spec.variance.sqrt();
    let samples = match spec.kind {
        SyntheticKind::IidGaussian => z.iter().map(|v| sigma * v).collect(),
        SyntheticKind::Ar1Field => {
            let a = spec.ar_coefficient;
            let edge = sigma * (1.0 - a * a).sqrt();
            let inner = sigma * (1.0 - a * a);
            let mut x = vec![0.0; w * h];
            for i in 0..h {
                for j in 0..w {
                    let k = i * w + j;
                    x[k] = match (i, j) {
                        (0, 0) => sigma * z[k],
                        (0, _) => a * x[k - 1] + edge * z[k],
                        (_, 0) => a * x[k - w] + edge * z[k],
                        _ => a * x[k - 1] + a * x[k - w] - a * a * x[k - w - 1] + inner * z[k],
                    };
                }
            }
            x
        }
    };
    ImagePlane::new(w, h, samples)
}
