//! Field file formats.
//!
//! Binary layout (all little-endian):
//!
//! | offset | size | content                                        |
//! |--------|------|------------------------------------------------|
//! | 0      | 4    | magic `SGRF`                                   |
//! | 4      | 4    | format version, `u32` = 1                      |
//! | 8      | 4    | flags: bit 0 space-time, bit 1 imaginary half  |
//! | 12     | 12   | `N`, `M`, `T` as `u32` (`T = 1` when spatial)  |
//! | 24     | 8    | seed, `u64`                                    |
//! | 32     | 8·NMT| values, `f64`, colatitude fastest, then ring, then time |
//!
//! CSV layout: `lon_deg,colat_deg[,time],value`, one row per point, values
//! in shortest round-trip decimal form.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{FieldRealization, FieldShape, Pair};
use crate::grid::{SphereGrid, TimeGrid};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"SGRF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

const FLAG_SPACETIME: u32 = 1;
const FLAG_PAIR_B: u32 = 2;

pub fn write_binary<T: Real, W: Write>(mut w: W, field: &FieldRealization<T>) -> Result<()> {
    let s = field.shape;
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::domain("field shape", format!("{v} exceeds u32")))
    };
    let mut flags = 0;
    if s.spacetime {
        flags |= FLAG_SPACETIME;
    }
    if field.pair == Pair::B {
        flags |= FLAG_PAIR_B;
    }
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&flags.to_le_bytes());
    header.extend_from_slice(&dim(s.n_lon)?.to_le_bytes());
    header.extend_from_slice(&dim(s.n_colat)?.to_le_bytes());
    header.extend_from_slice(&dim(s.n_time)?.to_le_bytes());
    header.extend_from_slice(&field.seed.to_le_bytes());
    w.write_all(&header)?;
    let mut payload = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        payload.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    w.write_all(&payload)?;
    Ok(())
}

fn format_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        reason: reason.into(),
    }
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

/// Parses a binary field. The replicate index is not stored and reads as 0.
pub fn read_binary_bytes(bytes: &[u8]) -> Result<FieldRealization<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            format!("header needs {HEADER_LEN} bytes"),
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(format_err(0, "bad magic, expected SGRF"));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let flags = u32_at(bytes, 8);
    if flags & !(FLAG_SPACETIME | FLAG_PAIR_B) != 0 {
        return Err(format_err(8, format!("unknown flags {flags:#x}")));
    }
    let (n, m, t) = (
        u32_at(bytes, 12) as usize,
        u32_at(bytes, 16) as usize,
        u32_at(bytes, 20) as usize,
    );
    let spacetime = flags & FLAG_SPACETIME != 0;
    if n == 0 || m == 0 || t == 0 || (!spacetime && t != 1) {
        return Err(format_err(
            12,
            format!("invalid dimensions N={n} M={m} T={t}"),
        ));
    }
    let seed = u64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
    let count = n
        .checked_mul(m)
        .and_then(|v| v.checked_mul(t))
        .ok_or_else(|| format_err(12, "dimensions overflow"))?;
    let expected = count
        .checked_mul(8)
        .and_then(|v| v.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err(12, "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(format_err(
            bytes.len().min(expected),
            format!(
                "payload is {} bytes, header implies {}",
                bytes.len() - HEADER_LEN,
                expected - HEADER_LEN
            ),
        ));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let shape = if spacetime {
        FieldShape::spacetime(t, n, m)
    } else {
        FieldShape::spatial(n, m)
    };
    Ok(FieldRealization {
        values,
        shape,
        seed,
        replicate: 0,
        pair: if flags & FLAG_PAIR_B != 0 {
            Pair::B
        } else {
            Pair::A
        },
    })
}

pub fn read_binary<R: Read>(mut r: R) -> Result<FieldRealization<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    read_binary_bytes(&bytes)
}

/// One row per point: `lon_deg,colat_deg[,time],value`.
pub fn write_csv<T: Real, W: Write>(
    mut w: W,
    field: &FieldRealization<T>,
    grid: &SphereGrid<T>,
    tgrid: Option<&TimeGrid<T>>,
) -> Result<()> {
    let s = field.shape;
    if s.n_lon != grid.n_lon() || s.n_colat != grid.n_colat() {
        return Err(Error::domain("field", "shape does not match the grid"));
    }
    let times = match (s.spacetime, tgrid) {
        (true, Some(tg)) if tg.steps() == s.n_time => Some(tg.times()),
        (true, _) => {
            return Err(Error::domain(
                "field",
                "space-time field needs a matching time grid",
            ))
        }
        (false, _) => None,
    };
    let mut out = String::with_capacity(s.len() * 40);
    out.push_str(if times.is_some() {
        "lon_deg,colat_deg,time,value\n"
    } else {
        "lon_deg,colat_deg,value\n"
    });
    use std::fmt::Write as _;
    for t in 0..s.n_time {
        for ring in 0..s.n_lon {
            let lon = 360.0 * (ring + 1) as f64 / s.n_lon as f64;
            for j in 0..s.n_colat {
                let colat = 180.0 * (j + 1) as f64 / s.n_colat as f64;
                let v = field.get(t, ring, j).as_f64();
                match times {
                    Some(ts) => writeln!(out, "{lon},{colat},{},{v}", ts[t].as_f64()),
                    None => writeln!(out, "{lon},{colat},{v}"),
                }
                .expect("writing to a String");
            }
        }
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}
