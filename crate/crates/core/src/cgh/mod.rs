//! Phase-hologram design for the pump (mixed-region amplitude freedom with a
//! conjugate-gradient search, zero-order compression and 8-bit export).
//!
//! The design variable is the unwrapped phase `φ` on the pump grid. The far
//! field produced by the squared pump `u² = (E₀e^{iφ})²` is compared with the
//! target only inside the signal mask:
//!
//! ```text
//! E_out = dft(u²) / ‖u²‖,   O = Σ_signal Re{T̄·E_out},   C = 10^d (1 − O)²
//! ```
//!
//! Because the transform is unitary, `O = Re Σ_ρ conj(g)·u² / ‖u²‖` with
//! `g = idft(T·mask)`, so one inverse transform up front makes every cost
//! and gradient evaluation transform-free.

mod compress;
mod export;
mod optimize;
pub mod patterns;
mod quantize;

pub use compress::{dc_fraction, phase_compress, Compression, COMPRESSION_SAMPLES};
pub use export::{read_hologram, write_hologram, HologramSidecar};
pub use optimize::{conjugate_gradient_minimize, CghResult, InitialGuess, OptimizerConfig, Termination};
pub use quantize::{dequantize, quantize_8bit, QuantizedHologram};

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dft2_centered, idft2_centered, ComplexField, Plane};

/// Fixed-phase disk at the hologram center that sets the local-oscillator
/// phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantDisk {
    /// Grid index `(row, col)` of the disk center.
    pub center: (usize, usize),
    /// Radius in samples; a sample belongs to the disk when its distance
    /// from the center is at most this.
    pub radius: f64,
    /// Phase in radians.
    pub value: f64,
}

impl ConstantDisk {
    /// Centered disk with radius 2% of the grid edge.
    pub fn default_for(n: usize) -> Self {
        Self { center: (n / 2, n / 2), radius: 0.02 * n as f64, value: 0.0 }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let di = i as f64 - self.center.0 as f64;
        let dj = j as f64 - self.center.1 as f64;
        di * di + dj * dj <= self.radius * self.radius
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.radius >= 0.0 && self.radius < n as f64 / 2.0) {
            return Err(Error::Contract(format!("disk radius {} must lie in [0, N/2 = {})", self.radius, n / 2)));
        }
        if self.center.0 >= n || self.center.1 >= n {
            return Err(Error::Contract(format!("disk center {:?} is outside the {n}x{n} grid", self.center)));
        }
        if !self.value.is_finite() {
            return Err(Error::Contract("disk phase must be finite".into()));
        }
        Ok(())
    }

    /// `true` outside the disk, i.e. on the free optimization variables.
    pub fn free_mask(&self, n: usize) -> Array2<bool> {
        Array2::from_shape_fn((n, n), |(i, j)| !self.contains(i, j))
    }
}

/// Phase grid (radians, unwrapped) whose disk samples all equal the disk value.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePattern {
    phi: Array2<f64>,
    disk: ConstantDisk,
}

impl PhasePattern {
    pub fn phi(&self) -> &Array2<f64> {
        &self.phi
    }

    pub fn disk(&self) -> &ConstantDisk {
        &self.disk
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    /// Same pattern with the disk moved to a new phase.
    pub fn with_disk_value(&self, value: f64) -> Result<Self> {
        apply_constant_phase_disk(&self.phi, ConstantDisk { value, ..self.disk })
    }

    /// Phase wrapped to `[0, 2π)`.
    pub fn wrapped(&self) -> Array2<f64> {
        self.phi.mapv(wrap_phase)
    }
}

pub fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Overwrites disk samples with the disk phase. Idempotent.
pub fn apply_constant_phase_disk(phi: &Array2<f64>, disk: ConstantDisk) -> Result<PhasePattern> {
    let (r, c) = phi.dim();
    if r != c {
        return Err(Error::Sizing(format!("phase grid must be square, got {r}x{c}")));
    }
    disk.validate(r)?;
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("phase contains non-finite samples".into()));
    }
    let mut phi = phi.clone();
    for ((i, j), v) in phi.indexed_iter_mut() {
        if disk.contains(i, j) {
            *v = disk.value;
        }
    }
    Ok(PhasePattern { phi, disk })
}

/// Complex far-field target with its signal and noise regions.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    target: ComplexField,
    signal: Array2<bool>,
    noise: Array2<bool>,
}

impl TargetSpec {
    /// Validates the masks and rescales `target` to unit energy over the
    /// signal region. Values outside the signal region are zeroed.
    pub fn new(target: ComplexField, signal: Array2<bool>, noise: Array2<bool>) -> Result<Self> {
        let dim = target.data().dim();
        if signal.dim() != dim || noise.dim() != dim {
            return Err(Error::ShapeMismatch(format!("masks {:?}/{:?} vs target {dim:?}", signal.dim(), noise.dim())));
        }
        if !signal.iter().any(|&s| s) {
            return Err(Error::EmptySignalMask);
        }
        if Zip::from(&signal).and(&noise).fold(false, |acc, &s, &n| acc || (s && n)) {
            return Err(Error::Contract("signal and noise masks overlap".into()));
        }
        let e: f64 = Zip::from(target.data()).and(&signal).fold(0.0, |acc, z, &s| acc + if s { z.norm_sqr() } else { 0.0 });
        if e == 0.0 {
            return Err(Error::Degenerate("target has no energy inside the signal region".into()));
        }
        let scale = 1.0 / e.sqrt();
        let data = Zip::from(target.data()).and(&signal).map_collect(|&z, &s| if s { z * scale } else { Complex64::new(0.0, 0.0) });
        let target = ComplexField::new(data, target.pitch(), Plane::FarField)?;
        Ok(Self { target, signal, noise })
    }

    pub fn target(&self) -> &ComplexField {
        &self.target
    }

    pub fn signal(&self) -> &Array2<bool> {
        &self.signal
    }

    pub fn noise(&self) -> &Array2<bool> {
        &self.noise
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }
}

fn check_shapes(e0: &ComplexField, n: usize) -> Result<()> {
    if e0.n() != n {
        return Err(Error::ShapeMismatch(format!("pump grid {} vs phase grid {n}", e0.n())));
    }
    Ok(())
}

/// Unit-energy far field of the squared, phase-shaped pump.
pub fn forward_model(e0: &ComplexField, phase: &PhasePattern) -> Result<ComplexField> {
    check_shapes(e0, phase.n())?;
    let sq = Zip::from(e0.data()).and(phase.phi()).map_collect(|&z, &p| (z * Complex64::from_polar(1.0, p)).powu(2));
    let sq = ComplexField::new(sq, e0.pitch(), e0.plane())?;
    let norm = sq.energy().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate("pump field is identically zero".into()));
    }
    let out = dft2_centered(&sq)?;
    Ok(out.map(|z| z / norm)?.with_plane(Plane::FarField))
}

/// `Σ_signal Re{T̄·E_out}`.
pub fn signal_overlap(e_out: &ComplexField, target: &TargetSpec) -> Result<f64> {
    if e_out.n() != target.n() {
        return Err(Error::ShapeMismatch(format!("far field {} vs target {}", e_out.n(), target.n())));
    }
    Ok(Zip::from(e_out.data())
        .and(target.target().data())
        .and(target.signal())
        .fold(0.0, |acc, e, t, &s| if s { acc + (t.conj() * e).re } else { acc }))
}

/// `C = 10^d·(1 − O)²` with the overlap taken over the signal region only.
pub fn cost(e_out: &ComplexField, target: &TargetSpec, d: f64) -> Result<f64> {
    let o = signal_overlap(e_out, target)?;
    Ok(10f64.powf(d) * (1.0 - o) * (1.0 - o))
}

/// Precomputed pieces shared by every cost/gradient evaluation.
pub(crate) struct Objective {
    /// `E₀²/‖E₀²‖`.
    e0sq: Array2<Complex64>,
    /// `idft(T·mask)`.
    g: Array2<Complex64>,
    free: Array2<bool>,
    scale: f64,
}

impl Objective {
    pub(crate) fn new(e0: &ComplexField, target: &TargetSpec, disk: &ConstantDisk, d: f64) -> Result<Self> {
        check_shapes(e0, target.n())?;
        disk.validate(e0.n())?;
        let mut e0sq = e0.data().mapv(|z| z * z);
        let norm = e0sq.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate("pump field is identically zero".into()));
        }
        e0sq.mapv_inplace(|z| z / norm);
        let g = idft2_centered(target.target())?.into_data();
        Ok(Self { e0sq, g, free: disk.free_mask(e0.n()), scale: 10f64.powf(d) })
    }

    pub(crate) fn overlap(&self, phi: &Array2<f64>) -> f64 {
        Zip::from(&self.g).and(&self.e0sq).and(phi).fold(0.0, |acc, g, a, &p| acc + (g.conj() * a * Complex64::from_polar(1.0, 2.0 * p)).re)
    }

    pub(crate) fn cost(&self, phi: &Array2<f64>) -> f64 {
        let r = 1.0 - self.overlap(phi);
        self.scale * r * r
    }

    /// Cost, with `grad` overwritten by `∂C/∂φ` (zero on disk samples).
    pub(crate) fn cost_and_gradient(&self, phi: &Array2<f64>, grad: &mut Array2<f64>) -> f64 {
        let i2 = Complex64::new(0.0, 2.0);
        let mut o = 0.0;
        Zip::from(&mut *grad).and(&self.g).and(&self.e0sq).and(phi).for_each(|gr, g, a, &p| {
            let t = g.conj() * a * Complex64::from_polar(1.0, 2.0 * p);
            o += t.re;
            *gr = (t * i2).re;
        });
        let factor = -2.0 * self.scale * (1.0 - o);
        Zip::from(&mut *grad).and(&self.free).for_each(|gr, &f| *gr = if f { *gr * factor } else { 0.0 });
        self.scale * (1.0 - o) * (1.0 - o)
    }
}

/// Analytic `∂C/∂φ` per phase sample; disk samples are exactly zero.
pub fn cost_gradient(phase: &PhasePattern, e0: &ComplexField, target: &TargetSpec, d: f64) -> Result<Array2<f64>> {
    check_shapes(e0, phase.n())?;
    let obj = Objective::new(e0, target, phase.disk(), d)?;
    let mut grad = Array2::zeros(phase.phi().dim());
    obj.cost_and_gradient(phase.phi(), &mut grad);
    Ok(grad)
}

#[cfg(test)]
mod tests;
