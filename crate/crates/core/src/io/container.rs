//! Binary container for fitted KLT bases and context coefficients.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! 0   4  magic "RDLB"
//! 4   1  version (1)
//! 5   1  payload kind: 1 = KLT basis, 2 = context coefficients
//! 6   2  reserved, zero
//! 8   .. payload
//! ```
//!
//! KLT payload: `u32 block_size`, then `(block_size²)²` f64 basis entries,
//! row-major, row `k` being the `k`-th basis vector.
//!
//! Context payload: `u8 kind` (0 none, 1 avg, 2 lsq), `u8 has_weights`,
//! `u16` reserved, `u32 offsets`, then `offsets × (i32 dy, i32 dx)`; if
//! weights are present, `u32 channels` followed by `channels × offsets` f64.

use crate::context::{ContextKind, ContextModelSpec, Offset};
use crate::error::{Error, Result};
use crate::transforms::{Basis, TransformKind, TransformSpec};

pub const MAGIC: &[u8; 4] = b"RDLB";
pub const VERSION: u8 = 1;
const KIND_KLT: u8 = 1;
const KIND_CONTEXT: u8 = 2;
const HEADER_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum ContainerPayload {
    Klt(TransformSpec),
    Context(ContextModelSpec),
}

pub fn encode_container(payload: &ContainerPayload) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    match payload {
        ContainerPayload::Klt(spec) => {
            if spec.kind() != TransformKind::Klt {
                return Err(Error::invalid(
                    "only KLT transforms are stored in containers",
                ));
            }
            out.extend_from_slice(&[KIND_KLT, 0, 0]);
            out.extend_from_slice(&(spec.block_size() as u32).to_le_bytes());
            for v in spec.basis().rows() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        ContainerPayload::Context(spec) => {
            out.extend_from_slice(&[KIND_CONTEXT, 0, 0]);
            let kind = match spec.kind() {
                ContextKind::None => 0u8,
                ContextKind::CausalAverage => 1,
                ContextKind::CausalLsq => 2,
            };
            out.push(kind);
            out.push(spec.coefficients().is_some() as u8);
            out.extend_from_slice(&[0, 0]);
            out.extend_from_slice(&(spec.neighborhood().len() as u32).to_le_bytes());
            for o in spec.neighborhood() {
                out.extend_from_slice(&o.dy.to_le_bytes());
                out.extend_from_slice(&o.dx.to_le_bytes());
            }
            if let Some(coeffs) = spec.coefficients() {
                out.extend_from_slice(&(coeffs.len() as u32).to_le_bytes());
                for w in coeffs.iter().flatten() {
                    out.extend_from_slice(&w.to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

pub fn decode_container(bytes: &[u8]) -> Result<ContainerPayload> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::parse(0, "missing RDLB magic"));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "container version {version}"
        )));
    }
    let kind_at = r.pos;
    let kind = r.u8()?;
    let reserved_at = r.pos;
    if r.take(2)? != [0, 0] {
        return Err(Error::parse(reserved_at, "reserved bytes must be zero"));
    }
    debug_assert_eq!(r.pos, HEADER_LEN);
    let payload = match kind {
        KIND_KLT => {
            let at = r.pos;
            let b = r.u32()? as usize;
            if !(1..=64).contains(&b) || !b.is_power_of_two() {
                return Err(Error::parse(at, format!("invalid block size {b}")));
            }
            let dim = b * b;
            let rows_at = r.pos;
            let rows = r.f64s(dim * dim)?;
            let basis =
                Basis::from_rows(dim, rows).map_err(|e| Error::parse(rows_at, e.to_string()))?;
            let spec = TransformSpec::klt(b, basis).map_err(|e| Error::parse(at, e.to_string()))?;
            ContainerPayload::Klt(spec)
        }
        KIND_CONTEXT => {
            let at = r.pos;
            let kind = match r.u8()? {
                0 => ContextKind::None,
                1 => ContextKind::CausalAverage,
                2 => ContextKind::CausalLsq,
                k => return Err(Error::parse(at, format!("unknown context kind {k}"))),
            };
            let flag_at = r.pos;
            let has_weights = match r.u8()? {
                0 => false,
                1 => true,
                f => return Err(Error::parse(flag_at, format!("invalid weight flag {f}"))),
            };
            let reserved_at = r.pos;
            if r.take(2)? != [0, 0] {
                return Err(Error::parse(reserved_at, "reserved bytes must be zero"));
            }
            let count_at = r.pos;
            let count = r.u32()? as usize;
            if count > 64 {
                return Err(Error::parse(
                    count_at,
                    format!("{count} offsets is too many"),
                ));
            }
            let mut neighborhood = Vec::with_capacity(count);
            for _ in 0..count {
                let dy = r.i32()?;
                let dx = r.i32()?;
                neighborhood.push(Offset { dy, dx });
            }
            let coefficients = if has_weights {
                let ch_at = r.pos;
                let channels = r.u32()? as usize;
                if channels == 0 || channels > 64 * 64 {
                    return Err(Error::parse(
                        ch_at,
                        format!("invalid channel count {channels}"),
                    ));
                }
                let flat = r.f64s(channels * count)?;
                Some(if count == 0 {
                    vec![Vec::new(); channels]
                } else {
                    flat.chunks(count).map(<[f64]>::to_vec).collect()
                })
            } else {
                None
            };
            let spec = ContextModelSpec::new(kind, neighborhood, coefficients)
                .map_err(|e| Error::parse(at, e.to_string()))?;
            ContainerPayload::Context(spec)
        }
        k => return Err(Error::parse(kind_at, format!("unknown payload kind {k}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::parse(r.pos, "trailing bytes after payload"));
    }
    Ok(payload)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::parse(self.bytes.len(), "unexpected end of container"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::parse(self.pos, "payload length overflows"))?;
        let at = self.pos;
        let raw = self.take(len)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::parse(at + 8 * i, "non-finite value"));
        }
        Ok(values)
    }
}
