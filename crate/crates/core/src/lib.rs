//! Theoretical rate-distortion limits of transform coding.
//!
//! The crate simulates an idealized lossy codec: an orthonormal block
//! transform, optional causal context prediction of latent means, reverse
//! water-filling of a distortion budget, and per-latent Gaussian test
//! channels. Rates are analytical code lengths, never bitstreams.
//!
//! ```
//! use rdlimit::waterfill::{reverse_water_fill, SourceSpec, DEFAULT_TOLERANCE};
//!
//! let sources = SourceSpec::new(vec![4.0, 1.0, 0.25]).unwrap();
//! let alloc = reverse_water_fill(&sources, 0.75, DEFAULT_TOLERANCE).unwrap();
//! assert!((alloc.water_level - 0.25).abs() < 1e-9);
//! ```

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod context;
pub mod correlation;
pub mod error;
pub mod gaussian_rd;
pub mod io;
pub mod pipeline;
pub mod rng;
mod stats;
pub mod test_channel;
pub mod transforms;
pub mod waterfill;

pub use error::{Error, ErrorKind, Result};
