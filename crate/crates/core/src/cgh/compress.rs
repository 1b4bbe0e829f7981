use ndarray::{Array2, Zip};
use num_complex::Complex64;

use super::{apply_constant_phase_disk, wrap_phase, PhasePattern};
use crate::error::{Error, Result};
use crate::field::ComplexField;

/// Number of compression factors tried across the search range.
pub const COMPRESSION_SAMPLES: usize = 64;

#[derive(Debug, Clone)]
pub struct Compression {
    pub phase: PhasePattern,
    /// Chosen factor `s` in `φ' = s·φ`.
    pub factor: f64,
    /// Un-diffracted fraction at the chosen factor.
    pub dc_fraction: f64,
    /// Un-diffracted fraction of the input pattern (`s = 1`).
    pub dc_fraction_before: f64,
    /// Set when the pattern is constant and compression cannot matter.
    pub note: Option<String>,
}

/// `|Σ E₀e^{iφ}|² / (Σ|E₀|)²`: the share of the reflected field that would
/// stay in the zero order, 1 for a flat phase.
pub fn dc_fraction(e0: &ComplexField, phi: &Array2<f64>) -> f64 {
    let s = Zip::from(e0.data()).and(phi).fold(Complex64::new(0.0, 0.0), |acc, z, &p| acc + z.norm() * Complex64::from_polar(1.0, p));
    let total: f64 = e0.data().iter().map(|z| z.norm()).sum();
    if total == 0.0 {
        return 0.0;
    }
    s.norm_sqr() / (total * total)
}

/// Scans `s` over `range` and keeps the factor minimizing the zero-order
/// fraction. The pattern is wrapped to `[0, 2π)` first; the disk keeps its
/// value.
pub fn phase_compress(phase: &PhasePattern, e0: &ComplexField, range: (f64, f64)) -> Result<Compression> {
    if e0.n() != phase.n() {
        return Err(Error::ShapeMismatch(format!("pump grid {} vs phase grid {}", e0.n(), phase.n())));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::Config(format!("compression range ({lo}, {hi}) is invalid")));
    }
    let wrapped = phase.wrapped();
    let first = wrapped[[0, 0]];
    let before = dc_fraction(e0, phase.phi());
    if wrapped.iter().all(|&p| p == first) {
        return Ok(Compression {
            phase: apply_constant_phase_disk(&wrapped, *phase.disk())?,
            factor: 1.0,
            dc_fraction: before,
            dc_fraction_before: before,
            note: Some("no structure: constant phase, compression has no effect".into()),
        });
    }
    let scaled = |s: f64| -> Result<PhasePattern> {
        let disk = *phase.disk();
        apply_constant_phase_disk(&wrapped.mapv(|p| wrap_phase(s * p)), disk)
    };
    let mut best = (1.0, f64::INFINITY);
    for i in 0..COMPRESSION_SAMPLES {
        let s = if COMPRESSION_SAMPLES == 1 { hi } else { lo + (hi - lo) * i as f64 / (COMPRESSION_SAMPLES - 1) as f64 };
        let f = dc_fraction(e0, scaled(s)?.phi());
        if f < best.1 {
            best = (s, f);
        }
    }
    Ok(Compression { phase: scaled(best.0)?, factor: best.0, dc_fraction: best.1, dc_fraction_before: before, note: None })
}
