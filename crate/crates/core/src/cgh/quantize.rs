use std::f64::consts::PI;

use ndarray::Array2;

use super::{apply_constant_phase_disk, wrap_phase, ConstantDisk, PhasePattern};
use crate::error::Result;

/// 8-bit device image: level `m` encodes phase `2π·m/256`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedHologram {
    pub levels: Array2<u8>,
    pub disk: ConstantDisk,
}

pub fn quantize_level(phi: f64) -> u8 {
    ((wrap_phase(phi) / (2.0 * PI) * 256.0).round() as u32 % 256) as u8
}

/// Round-to-nearest on the wrapped phase; `2π` folds back to level 0.
pub fn quantize_8bit(phase: &PhasePattern) -> QuantizedHologram {
    QuantizedHologram { levels: phase.phi().mapv(quantize_level), disk: *phase.disk() }
}

/// Inverse map; the disk is restored at its exact (unquantized) value.
pub fn dequantize(holo: &QuantizedHologram) -> Result<PhasePattern> {
    let phi = holo.levels.mapv(|m| m as f64 * 2.0 * PI / 256.0);
    apply_constant_phase_disk(&phi, holo.disk)
}
