//! Parsers for command-line values.

use crate::error::{Error, Result};

/// `"WxH"` with positive decimal width and height.
pub fn parse_size(text: &str) -> Result<(usize, usize)> {
    let (w, h) = text
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::invalid(format!("size must look like WxH, got {text:?}")))?;
    let dim = |s: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(v) if v > 0 && v <= 1 << 16 => Ok(v),
            _ => Err(Error::invalid(format!(
                "invalid dimension {s:?} in size {text:?}"
            ))),
        }
    };
    Ok((dim(w)?, dim(h)?))
}

/// Comma-separated positive finite values in strictly increasing order.
pub fn parse_budget_list(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
                _ => Err(Error::invalid(format!("invalid budget {s:?}"))),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("budget sweep must be strictly increasing"));
    }
    Ok(values)
}
