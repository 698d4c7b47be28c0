use std::f64::consts::PI;

use super::Basis;

/// Orthonormal 1-D DCT-II matrix, `c[k][n] = α_k cos(π(2n+1)k / 2N)`.
fn dct_1d(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let nf = n as f64;
    for k in 0..n {
        let alpha = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        for i in 0..n {
            m[k * n + i] = alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos();
        }
    }
    m
}

/// Separable 2-D DCT-II as a `b² × b²` basis acting on row-major blocks.
///
/// Row `u·b + v` holds the basis image for vertical frequency `u` and
/// horizontal frequency `v`.
pub fn dct_basis(block_size: usize) -> Basis {
    let b = block_size;
    let c = dct_1d(b);
    let d = b * b;
    let mut rows = vec![0.0; d * d];
    for u in 0..b {
        for v in 0..b {
            let k = u * b + v;
            for y in 0..b {
                for x in 0..b {
                    rows[k * d + y * b + x] = c[u * b + y] * c[v * b + x];
                }
            }
        }
    }
    Basis { dim: d, rows }
}
