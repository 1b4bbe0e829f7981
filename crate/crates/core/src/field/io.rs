//! Binary grid container and graymap export.
//!
//! Grid layout (little-endian):
//!
//! | offset | size | content                      |
//! |--------|------|------------------------------|
//! | 0      | 4    | magic `TBFG`                 |
//! | 4      | 4    | version (u32)                |
//! | 8      | 4    | N (u32)                      |
//! | 12     | 8    | pitch (f64)                  |
//! | 20     | 1    | plane code (u8)              |
//! | 21     | 11   | zero                         |
//! | 32     | 16N² | (re, im) f64 pairs, row-major |

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64;

use super::{ComplexField, Plane, RealField};
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"TBFG";
pub const GRID_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

pub fn write_grid(f: &ComplexField, mut w: impl Write) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(GRID_MAGIC);
    header[4..8].copy_from_slice(&GRID_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(f.n() as u32).to_le_bytes());
    header[12..20].copy_from_slice(&f.pitch().to_le_bytes());
    header[20] = f.plane().code();
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(16 * f.n() * f.n());
    for z in f.data().iter() {
        body.extend_from_slice(&z.re.to_le_bytes());
        body.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_grid(mut r: impl Read) -> Result<ComplexField> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..4] != GRID_MAGIC {
        return Err(Error::Format("bad grid magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != GRID_VERSION {
        return Err(Error::Format(format!("unsupported grid version {version}")));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let pitch = f64::from_le_bytes(header[12..20].try_into().unwrap());
    let plane = Plane::from_code(header[20]).ok_or_else(|| Error::Format(format!("unknown plane code {}", header[20])))?;
    let mut body = vec![0u8; 16 * n * n];
    r.read_exact(&mut body)?;
    let mut vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let data = Array2::from_shape_simple_fn((n, n), || {
        let re = vals.next().unwrap();
        let im = vals.next().unwrap();
        Complex64::new(re, im)
    });
    ComplexField::new(data, pitch, plane)
}

/// 16-bit binary graymap (P5) of a real map, linearly scaled from its min to
/// its max. Returns the `(min, max)` used so callers can record the scale.
pub fn write_pgm16(f: &RealField, mut w: impl Write) -> Result<(f64, f64)> {
    let (rows, cols) = f.dim();
    let lo = f.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = f.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    write!(w, "P5\n{cols} {rows}\n65535\n")?;
    let mut body = Vec::with_capacity(rows * cols * 2);
    for v in f.data().iter() {
        let level = (((v - lo) / span) * 65535.0).round().clamp(0.0, 65535.0) as u16;
        body.extend_from_slice(&level.to_be_bytes());
    }
    w.write_all(&body)?;
    Ok((lo, hi))
}
