use crate::error::{Error, Result};

/// One operating point of a simulated codec.
#[derive(Debug, Clone, PartialEq)]
pub struct RDPoint {
    /// Bits per source pixel.
    pub rate: f64,
    /// Bits per latent coefficient.
    pub latent_rate: f64,
    /// Pixel-domain MSE against the original.
    pub distortion_mse: f64,
    /// `10·log10(1 / mse)`; meaningful for [0, 1]-normalized pixels.
    pub psnr_db: f64,
    /// Requested mean latent distortion.
    pub budget: f64,
    pub config_digest: String,
}

/// Operating points sorted by rate with dominated points removed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RDCurve {
    points: Vec<RDPoint>,
}

impl RDCurve {
    /// Sort by rate (then distortion) and drop every point for which another
    /// point has both lower-or-equal rate and lower-or-equal distortion, with
    /// at least one strict.
    pub fn from_points(mut points: Vec<RDPoint>) -> Self {
        points.sort_by(|a, b| {
            a.rate
                .total_cmp(&b.rate)
                .then(a.distortion_mse.total_cmp(&b.distortion_mse))
                .then(a.budget.total_cmp(&b.budget))
        });
        let mut kept: Vec<RDPoint> = Vec::with_capacity(points.len());
        // Scanning by increasing rate, a point survives only if it improves on
        // the best distortion seen so far.
        let mut best = f64::INFINITY;
        for p in points {
            if p.distortion_mse < best {
                best = p.distortion_mse;
                kept.push(p);
            }
        }
        Self { points: kept }
    }

    pub fn points(&self) -> &[RDPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pixel MSE range covered by the curve.
    pub fn distortion_range(&self) -> Option<(f64, f64)> {
        let lo = self
            .points
            .iter()
            .map(|p| p.distortion_mse)
            .reduce(f64::min)?;
        let hi = self
            .points
            .iter()
            .map(|p| p.distortion_mse)
            .reduce(f64::max)?;
        Some((lo, hi))
    }

    /// Rate (bits per pixel) at pixel MSE `mse`, interpolated linearly in
    /// `log(mse)` between neighboring points. `None` outside the curve.
    pub fn rate_at_distortion(&self, mse: f64) -> Option<f64> {
        if !(mse > 0.0) || self.points.is_empty() {
            return None;
        }
        // distortions are strictly decreasing along the pruned curve
        let pts = &self.points;
        let (lo, hi) = self.distortion_range()?;
        if mse < lo || mse > hi {
            return None;
        }
        for w in pts.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if mse <= a.distortion_mse && mse >= b.distortion_mse {
                let span = a.distortion_mse.ln() - b.distortion_mse.ln();
                if span == 0.0 {
                    return Some(a.rate.min(b.rate));
                }
                let t = (a.distortion_mse.ln() - mse.ln()) / span;
                return Some(a.rate + t * (b.rate - a.rate));
            }
        }
        pts.iter().find(|p| p.distortion_mse == mse).map(|p| p.rate)
    }
}

/// Pixel MSE values, log-spaced, inside the overlap of all `curves`.
pub fn common_distortions(curves: &[&RDCurve], count: usize) -> Result<Vec<f64>> {
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for c in curves {
        let (a, b) = c
            .distortion_range()
            .ok_or_else(|| Error::invalid("empty curve"))?;
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(Error::InsufficientData(format!(
            "curves do not overlap in distortion ([{lo:e}, {hi:e}])"
        )));
    }
    let (l, h) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            (l + t * (h - l)).exp().clamp(lo, hi)
        })
        .collect())
}
