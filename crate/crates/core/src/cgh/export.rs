use std::io::{BufRead, BufReader, Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ConstantDisk, QuantizedHologram, Termination};
use crate::error::{Error, Result};

/// Metadata stored next to the 8-bit hologram image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HologramSidecar {
    pub n: usize,
    /// Hologram sample pitch in meters.
    pub pitch: f64,
    pub disk: ConstantDisk,
    pub compression_factor: f64,
    pub final_overlap: f64,
    pub termination: Termination,
    pub cost_history: Vec<(usize, f64)>,
}

/// Writes the hologram as an 8-bit binary graymap and its JSON sidecar.
pub fn write_hologram(holo: &QuantizedHologram, sidecar: &HologramSidecar, mut pgm: impl Write, json: impl Write) -> Result<()> {
    let (rows, cols) = holo.levels.dim();
    if rows != sidecar.n || cols != sidecar.n || holo.disk != sidecar.disk {
        return Err(Error::ShapeMismatch("sidecar does not describe this hologram".into()));
    }
    write!(pgm, "P5\n{cols} {rows}\n255\n")?;
    let body: Vec<u8> = holo.levels.iter().copied().collect();
    pgm.write_all(&body)?;
    serde_json::to_writer_pretty(json, sidecar).map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

fn header_token(r: &mut impl BufRead) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        let ch = byte[0] as char;
        if ch == '#' && tok.is_empty() {
            let mut skip = String::new();
            r.read_line(&mut skip)?;
            continue;
        }
        if ch.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(tok);
        }
        tok.push(ch);
    }
}

pub fn read_hologram(pgm: impl Read, json: impl Read) -> Result<(QuantizedHologram, HologramSidecar)> {
    let sidecar: HologramSidecar = serde_json::from_reader(json).map_err(|e| Error::Format(format!("hologram sidecar: {e}")))?;
    let mut r = BufReader::new(pgm);
    if header_token(&mut r)? != "P5" {
        return Err(Error::Format("hologram image is not a binary graymap".into()));
    }
    let mut num = || -> Result<usize> { header_token(&mut r)?.parse().map_err(|_| Error::Format("bad graymap header".into())) };
    let (cols, rows, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(Error::Format(format!("hologram image must be 8-bit, maxval {maxval}")));
    }
    if rows != sidecar.n || cols != sidecar.n {
        return Err(Error::ShapeMismatch(format!("image {rows}x{cols} vs sidecar n = {}", sidecar.n)));
    }
    let mut body = vec![0u8; rows * cols];
    r.read_exact(&mut body)?;
    let levels = Array2::from_shape_vec((rows, cols), body).expect("length checked");
    Ok((QuantizedHologram { levels, disk: sidecar.disk }, sidecar))
}
