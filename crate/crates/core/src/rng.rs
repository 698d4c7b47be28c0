//! Seeded, order-independent Gaussian draws.
//!
//! A stream is addressed by `(seed, domain, index)`. Indices are grouped in
//! chunks of [`CHUNK_LEN`]; chunk `c` of domain `d` is the ChaCha8 stream
//! `(d << 48) | c` of a generator seeded with `ChaCha8Rng::seed_from_u64(seed)`,
//! and standard normals are taken from it sequentially with the ziggurat
//! sampler of `rand_distr`. Any slice of the index space can therefore be
//! materialized independently, and chunk-aligned parallel fills reproduce the
//! sequential result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub const CHUNK_LEN: usize = 1024;

/// Independent purposes get disjoint stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Domain {
    ChannelNoise = 1,
    SourceSamples = 2,
    PairSources = 3,
    PairNoise = 4,
    SyntheticField = 5,
    Mutation = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
    domain: Domain,
}

impl NoiseStream {
    pub fn new(seed: u64, domain: Domain) -> Self {
        Self { seed, domain }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((self.domain as u64) << 48) | chunk);
        rng
    }

    /// The draw at `index`. Costs up to one chunk of generation.
    pub fn standard_normal(&self, index: u64) -> f64 {
        let mut out = [0.0];
        self.fill(index, &mut out);
        out[0]
    }

    /// Fill `out` with draws `start .. start + out.len()`.
    pub fn fill(&self, start: u64, out: &mut [f64]) {
        let chunk_len = CHUNK_LEN as u64;
        let mut pos = 0usize;
        while pos < out.len() {
            let index = start + pos as u64;
            let chunk = index / chunk_len;
            let offset = (index % chunk_len) as usize;
            let take = (CHUNK_LEN - offset).min(out.len() - pos);
            let mut rng = self.chunk_rng(chunk);
            for _ in 0..offset {
                let _: f64 = StandardNormal.sample(&mut rng);
            }
            for slot in &mut out[pos..pos + take] {
                *slot = StandardNormal.sample(&mut rng);
            }
            pos += take;
        }
    }

    /// Draws `0 .. len`, generated chunk-parallel.
    pub fn sequence(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        out.par_chunks_mut(CHUNK_LEN)
            .enumerate()
            .for_each(|(chunk, slot)| self.fill((chunk * CHUNK_LEN) as u64, slot));
        out
    }
}

/// Derive a child seed; used to give each image or configuration of a sweep
/// its own stream family without collisions.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    // SplitMix64 finalizer over the combined word.
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
