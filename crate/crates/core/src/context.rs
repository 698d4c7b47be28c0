//! Causal mean prediction within each latent channel.
//!
//! Positions are visited in per-channel raster order; a prediction may only
//! read neighbors that strictly precede the current position. The residual
//! `y − μ̂` is what gets coded, so better prediction means lower residual
//! energy and lower rate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian_rd::{rate_gaussian, DEFAULT_VARIANCE_FLOOR};
use crate::transforms::LatentGrid;

/// Relative ridge added to the normal equations of [`fit_context`].
pub const RIDGE_FACTOR: f64 = 1e-6;
/// Fewer fully interior positions than this and a channel cannot be fitted.
pub const MIN_FIT_POSITIONS: usize = 10;

/// A causal neighbor relative to the current position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Offset {
    pub dy: i32,
    pub dx: i32,
}

impl Offset {
    pub const LEFT: Offset = Offset { dy: 0, dx: -1 };
    pub const UP: Offset = Offset { dy: -1, dx: 0 };
    pub const UP_LEFT: Offset = Offset { dy: -1, dx: -1 };
    pub const UP_RIGHT: Offset = Offset { dy: -1, dx: 1 };

    /// Strictly before the current position in raster order.
    pub fn is_causal(&self) -> bool {
        self.dy < 0 || (self.dy == 0 && self.dx < 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContextKind {
    None,
    CausalAverage,
    CausalLsq,
}

impl ContextKind {
    pub fn name(&self) -> &'static str {
        match self {
            ContextKind::None => "none",
            ContextKind::CausalAverage => "avg",
            ContextKind::CausalLsq => "lsq",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextModelSpec {
    kind: ContextKind,
    neighborhood: Vec<Offset>,
    coefficients: Option<Vec<Vec<f64>>>,
}

impl Default for ContextModelSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl ContextModelSpec {
    pub fn none() -> Self {
        Self {
            kind: ContextKind::None,
            neighborhood: vec![Offset::LEFT, Offset::UP],
            coefficients: None,
        }
    }

    pub fn causal_average() -> Self {
        Self {
            kind: ContextKind::CausalAverage,
            ..Self::none()
        }
    }

    /// Unfitted least-squares predictor; see [`fit_context`].
    pub fn causal_lsq() -> Self {
        Self {
            kind: ContextKind::CausalLsq,
            ..Self::none()
        }
    }

    pub fn new(
        kind: ContextKind,
        neighborhood: Vec<Offset>,
        coefficients: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let spec = Self {
            kind,
            neighborhood,
            coefficients,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_neighborhood(mut self, neighborhood: Vec<Offset>) -> Result<Self> {
        self.neighborhood = neighborhood;
        self.coefficients = None;
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> ContextKind {
        self.kind
    }

    pub fn neighborhood(&self) -> &[Offset] {
        &self.neighborhood
    }

    /// Per-channel weights, one per neighborhood offset.
    pub fn coefficients(&self) -> Option<&[Vec<f64>]> {
        self.coefficients.as_deref()
    }

    pub fn is_fitted(&self) -> bool {
        self.kind != ContextKind::CausalLsq || self.coefficients.is_some()
    }

    fn validate(&self) -> Result<()> {
        if let Some(bad) = self.neighborhood.iter().find(|o| !o.is_causal()) {
            return Err(Error::invalid(format!(
                "offset ({}, {}) is not causal in raster order",
                bad.dy, bad.dx
            )));
        }
        if self.kind != ContextKind::None && self.neighborhood.is_empty() {
            return Err(Error::invalid("context neighborhood is empty"));
        }
        if let Some(coeffs) = &self.coefficients {
            if let Some(c) = coeffs.iter().find(|c| c.len() != self.neighborhood.len()) {
                return Err(Error::invalid(format!(
                    "{} weights for {} neighbors",
                    c.len(),
                    self.neighborhood.len()
                )));
            }
            if coeffs.iter().flatten().any(|w| !w.is_finite()) {
                return Err(Error::invalid("context weights must be finite"));
            }
        }
        Ok(())
    }

    /// Weights for one channel, checked against the grid.
    pub(crate) fn channel_weights(&self, channel: usize) -> Result<Option<&[f64]>> {
        if self.kind != ContextKind::CausalLsq {
            return Ok(None);
        }
        let coeffs = self
            .coefficients
            .as_ref()
            .ok_or_else(|| Error::invalid("least-squares context has not been fitted"))?;
        coeffs
            .get(channel)
            .map(|w| Some(w.as_slice()))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "context fitted for {} channels, channel {channel} requested",
                    coeffs.len()
                ))
            })
    }
}

/// One channel of a grid, read-only.
#[derive(Clone, Copy)]
pub(crate) struct ChannelView<'a> {
    pub values: &'a [f64],
    pub rows: usize,
    pub cols: usize,
}

impl ChannelView<'_> {
    #[inline]
    fn neighbor(&self, row: usize, col: usize, o: Offset) -> Option<f64> {
        let r = row as i64 + o.dy as i64;
        let c = col as i64 + o.dx as i64;
        if r < 0 || c < 0 || r >= self.rows as i64 || c >= self.cols as i64 {
            None
        } else {
            Some(self.values[r as usize * self.cols + c as usize])
        }
    }
}

/// Prediction at `(row, col)` of one channel; the spec must be valid and
/// the weights (if any) must match its neighborhood.
#[inline]
pub(crate) fn predict_in_channel(
    view: ChannelView<'_>,
    row: usize,
    col: usize,
    kind: ContextKind,
    neighborhood: &[Offset],
    weights: Option<&[f64]>,
) -> f64 {
    match kind {
        ContextKind::None => 0.0,
        ContextKind::CausalAverage => {
            let (mut sum, mut n) = (0.0, 0usize);
            for &o in neighborhood {
                if let Some(v) = view.neighbor(row, col, o) {
                    sum += v;
                    n += 1;
                }
            }
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        }
        ContextKind::CausalLsq => {
            let w = weights.expect("weights checked by caller");
            neighborhood
                .iter()
                .zip(w)
                .map(|(&o, &wk)| view.neighbor(row, col, o).map_or(0.0, |v| wk * v))
                .sum()
        }
    }
}

/// Grid position of a latent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub channel: usize,
    pub row: usize,
    pub col: usize,
}

/// Predicted mean at `position` from the already-decoded values in
/// `decoded_so_far`. Only causal neighbors are read.
pub fn predict_mean(
    decoded_so_far: &LatentGrid,
    position: Position,
    spec: &ContextModelSpec,
) -> Result<f64> {
    spec.validate()?;
    let Position { channel, row, col } = position;
    if channel >= decoded_so_far.channels()
        || row >= decoded_so_far.block_rows()
        || col >= decoded_so_far.block_cols()
    {
        return Err(Error::invalid(format!(
            "position {position:?} outside the grid"
        )));
    }
    let weights = spec.channel_weights(channel)?;
    let view = ChannelView {
        values: decoded_so_far.channel(channel),
        rows: decoded_so_far.block_rows(),
        cols: decoded_so_far.block_cols(),
    };
    Ok(predict_in_channel(
        view,
        row,
        col,
        spec.kind,
        &spec.neighborhood,
        weights,
    ))
}

/// Residuals and the means they were taken against.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualGrid {
    pub residuals: LatentGrid,
    pub predicted_means: LatentGrid,
}

/// Predict every position from the clean latents themselves.
pub fn clean_residuals(latents: &LatentGrid, spec: &ContextModelSpec) -> Result<ResidualGrid> {
    spec.validate()?;
    let (rows, cols) = (latents.block_rows(), latents.block_cols());
    let mut means = vec![0.0; latents.len()];
    if spec.kind != ContextKind::None {
        for ch in 0..latents.channels() {
            let weights = spec.channel_weights(ch)?;
            let view = ChannelView {
                values: latents.channel(ch),
                rows,
                cols,
            };
            let base = ch * rows * cols;
            for r in 0..rows {
                for c in 0..cols {
                    means[base + r * cols + c] =
                        predict_in_channel(view, r, c, spec.kind, &spec.neighborhood, weights);
                }
            }
        }
    }
    let residuals: Vec<f64> = latents
        .coefficients()
        .iter()
        .zip(&means)
        .map(|(y, m)| y - m)
        .collect();
    Ok(ResidualGrid {
        residuals: latents.with_coefficients(residuals)?,
        predicted_means: latents.with_coefficients(means)?,
    })
}

/// Fit per-channel least-squares weights on clean latents.
///
/// Uses positions whose whole neighborhood lies inside the grid and solves
/// `(XᵀX/n + λI) w = Xᵀt/n` with `λ` = [`RIDGE_FACTOR`] times the channel's
/// mean squared value. All-zero channels get zero weights, and so does any
/// channel whose fitted prediction fails to lower the summed log residual
/// energy, the quantity the high-rate allocation cost follows. Specs of
/// other kinds are returned unchanged.
pub fn fit_context(latents: &LatentGrid, spec: &ContextModelSpec) -> Result<ContextModelSpec> {
    spec.validate()?;
    if spec.kind != ContextKind::CausalLsq {
        return Ok(spec.clone());
    }
    let k = spec.neighborhood.len();
    let (rows, cols) = (latents.block_rows(), latents.block_cols());
    let mut coefficients = Vec::with_capacity(latents.channels());
    for ch in 0..latents.channels() {
        let view = ChannelView {
            values: latents.channel(ch),
            rows,
            cols,
        };
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        let mut energy = 0.0;
        let mut n = 0usize;
        let mut feats = vec![0.0; k];
        for r in 0..rows {
            'pos: for c in 0..cols {
                for (f, &o) in feats.iter_mut().zip(&spec.neighborhood) {
                    match view.neighbor(r, c, o) {
                        Some(v) => *f = v,
                        None => continue 'pos,
                    }
                }
                let target = view.values[r * cols + c];
                n += 1;
                energy += target * target;
                for i in 0..k {
                    rhs[i] += feats[i] * target;
                    for j in 0..k {
                        gram[(i, j)] += feats[i] * feats[j];
                    }
                }
            }
        }
        if n < MIN_FIT_POSITIONS {
            return Err(Error::InsufficientData(format!(
                "channel {ch} has {n} interior positions, need {MIN_FIT_POSITIONS}"
            )));
        }
        let nf = n as f64;
        let energy = energy / nf;
        if energy == 0.0 {
            coefficients.push(vec![0.0; k]);
            continue;
        }
        gram /= nf;
        rhs /= nf;
        for i in 0..k {
            gram[(i, i)] += RIDGE_FACTOR * energy;
        }
        let weights = gram
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::Numerical {
                stage: "context fit",
                detail: format!("normal equations of channel {ch} are singular"),
            })?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical {
                stage: "context fit",
                detail: format!("non-finite weights in channel {ch}"),
            });
        }
        let weights: Vec<f64> = weights.iter().copied().collect();
        let fitted = log_energy(view, &spec.neighborhood, Some(&weights));
        if fitted < log_energy(view, &spec.neighborhood, None) {
            coefficients.push(weights);
        } else {
            coefficients.push(vec![0.0; k]);
        }
    }
    Ok(ContextModelSpec {
        kind: spec.kind,
        neighborhood: spec.neighborhood.clone(),
        coefficients: Some(coefficients),
    })
}

/// `Σ ln max(r², floor)` over a channel, with residuals taken against clean
/// neighbors; `None` weights predict zero.
fn log_energy(view: ChannelView<'_>, neighborhood: &[Offset], weights: Option<&[f64]>) -> f64 {
    let mut total = 0.0;
    for r in 0..view.rows {
        for c in 0..view.cols {
            let mean = match weights {
                Some(w) => {
                    predict_in_channel(view, r, c, ContextKind::CausalLsq, neighborhood, Some(w))
                }
                None => 0.0,
            };
            let e = view.values[r * view.cols + c] - mean;
            total += (e * e).max(DEFAULT_VARIANCE_FLOOR).ln();
        }
    }
    total
}

/// Rate of a residual with the given energy at distortion `distortion`.
pub fn residual_rate(residual_energy: f64, distortion: f64) -> Result<f64> {
    rate_gaussian(residual_energy, distortion)
}
