//! Forward model from a structured pump to the far-field cross-correlation
//! of the twin beams.
//!
//! The chain is: pump field at the cell center → angular spectrum →
//! self-convolution Φ over the summed transverse momentum `q` → far-field
//! relabeling `x = f·q/k` → `Re{Φ e^{-2iΔφ_p}}` sampled at camera pixels.

mod config;
mod map;
mod phase_matching;

pub use config::{OpticalConfig, SincWeight};
pub use map::{CorrelationMap, PixelRoi};
pub use phase_matching::{phase_mismatch_weight, sinc_weight_at_q, KzModel};

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{dft2_centered, ComplexField, Plane};

/// Share of the squared-pump energy allowed in the outer border before the
/// self-convolution is considered aliased.
pub const WRAP_LIMIT: f64 = 1e-6;
/// Border width, as a fraction of the grid edge, inspected for wraparound.
pub const WRAP_BORDER: f64 = 0.1;

/// Transverse angular spectrum of the pump on the k grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    field: ComplexField,
}

impl AngularSpectrum {
    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    /// rad/m per sample.
    pub fn k_pitch(&self) -> f64 {
        self.field.pitch()
    }
}

/// Φ sampled on the summed-momentum grid (pitch in rad/m).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionMap {
    field: ComplexField,
}

impl ConvolutionMap {
    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn q_pitch(&self) -> f64 {
        self.field.pitch()
    }
}

fn require_cell_center(pump: &ComplexField) -> Result<()> {
    if pump.plane() != Plane::CellCenter {
        return Err(Error::Contract(format!("pump must be tagged CellCenter, got {:?}", pump.plane())));
    }
    Ok(())
}

pub fn angular_spectrum(pump: &ComplexField) -> Result<AngularSpectrum> {
    require_cell_center(pump)?;
    Ok(AngularSpectrum { field: dft2_centered(pump)? })
}

/// Fraction of Σ|pump²|² lying in the outer [`WRAP_BORDER`] of the grid.
pub fn border_fraction(pump: &ComplexField) -> f64 {
    let n = pump.n();
    let b = ((n as f64 * WRAP_BORDER).ceil() as usize).max(1);
    let (mut edge, mut total) = (0.0, 0.0);
    for ((i, j), z) in pump.data().indexed_iter() {
        let e = z.norm_sqr().powi(2);
        total += e;
        if i < b || j < b || i >= n - b || j >= n - b {
            edge += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

/// Φ(q) = Σ_k A(k)·A(q−k), computed as `N·dft2(pump²)`.
///
/// The pump grid must already carry enough zero padding that the squared
/// field is negligible near the edges; otherwise the circular convolution
/// would alias and a [`Error::Wraparound`] is returned.
pub fn pump_self_convolution(pump: &ComplexField) -> Result<ConvolutionMap> {
    require_cell_center(pump)?;
    let fraction = border_fraction(pump);
    if fraction >= WRAP_LIMIT {
        return Err(Error::Wraparound { fraction, limit: WRAP_LIMIT });
    }
    let n = pump.n() as f64;
    let sq = pump.map(|z| z * z)?;
    let spectrum = dft2_centered(&sq)?;
    let field = spectrum.map(|z| z * n)?;
    Ok(ConvolutionMap { field })
}

/// Far-field coordinate of a transverse wavenumber.
pub fn q_to_x(q: f64, cfg: &OpticalConfig) -> f64 {
    cfg.focal_length * q / cfg.k()
}

/// Far-field sampling of a q grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldScale {
    pub pitch_m: f64,
    pub pitch_px: f64,
}

/// Relabels a Φ grid onto far-field position; the data are untouched.
pub fn kmap_to_farfield(phi: &ConvolutionMap, cfg: &OpticalConfig) -> Result<(ComplexField, FarFieldScale)> {
    let pitch_m = q_to_x(phi.q_pitch(), cfg);
    let scale = FarFieldScale { pitch_m, pitch_px: pitch_m / cfg.emccd_pixel };
    let field = phi.field.clone().with_pitch(pitch_m)?.with_plane(Plane::FarField);
    Ok((field, scale))
}

/// Far-field pitch of the transform of a pump sampled at `pump_pitch`.
pub fn farfield_pitch(n: usize, pump_pitch: f64, cfg: &OpticalConfig) -> f64 {
    q_to_x(2.0 * PI / (n as f64 * pump_pitch), cfg)
}

/// Complex Φ evaluated at camera-pixel displacements `ξ` over `roi`.
///
/// Evaluated as a separable matrix Fourier transform of the squared pump,
/// so the camera pixel need not coincide with the natural far-field pitch.
/// The sinc phase-matching factor is applied when enabled in `cfg`.
pub fn phi_at_pixels(pump: &ComplexField, cfg: &OpticalConfig, roi: PixelRoi) -> Result<Array2<Complex64>> {
    require_cell_center(pump)?;
    cfg.validate()?;
    let n = pump.n();
    let p = pump.pitch();
    let half_span = cfg.focal_length * cfg.wavelength / (2.0 * p);
    let reach = roi.half_rows.max(roi.half_cols) as f64 * cfg.emccd_pixel;
    if reach > half_span {
        return Err(Error::Bounds(format!("ROI reaches {:.3e} m but the far-field half span is {half_span:.3e} m", reach)));
    }
    let q_per_px = cfg.emccd_pixel * cfg.k() / cfg.focal_length;
    let c = (n / 2) as f64;
    let kernel = |half: usize| {
        Array2::from_shape_fn((2 * half + 1, n), |(m, x)| {
            let q = (m as f64 - half as f64) * q_per_px;
            Complex64::from_polar(1.0, -q * (x as f64 - c) * p)
        })
    };
    let er = kernel(roi.half_rows);
    let ec = kernel(roi.half_cols);
    let sq = pump.data().mapv(|z| z * z);
    let mut phi = er.dot(&sq).dot(&ec.t());
    if cfg.sinc != SincWeight::Off {
        let model = if cfg.sinc == SincWeight::Paraxial { KzModel::Paraxial } else { KzModel::Exact };
        for ((i, j), v) in phi.indexed_iter_mut() {
            let q = [(j as f64 - roi.half_cols as f64) * q_per_px, (i as f64 - roi.half_rows as f64) * q_per_px];
            *v *= sinc_weight_at_q(q, cfg, model)?;
        }
    }
    Ok(phi)
}

/// `Re{Φ(ξ)·e^{-2iΔφ_p}}` at camera pixels, in arbitrary linear units.
pub fn predict_cross_correlation(pump: &ComplexField, delta_phi_p: f64, cfg: &OpticalConfig, roi: PixelRoi) -> Result<CorrelationMap> {
    let phi = phi_at_pixels(pump, cfg, roi)?;
    let rot = Complex64::from_polar(1.0, -2.0 * delta_phi_p);
    CorrelationMap::new(phi.mapv(|z| (z * rot).re))
}

/// `E₀·e^{iφ}` on the pump grid.
pub fn structured_pump(e0: &ComplexField, phase: &Array2<f64>) -> Result<ComplexField> {
    if phase.dim() != e0.data().dim() {
        return Err(Error::ShapeMismatch(format!("phase {:?} vs field {:?}", phase.dim(), e0.data().dim())));
    }
    let data = ndarray::Zip::from(e0.data()).and(phase).map_collect(|&z, &ph| z * Complex64::from_polar(1.0, ph));
    ComplexField::new(data, e0.pitch(), e0.plane())
}

/// Flat-phase Gaussian `exp(-ρ²/w²)` at the cell center.
pub fn gaussian_pump(n: usize, pitch: f64, waist: f64) -> Result<ComplexField> {
    ComplexField::from_fn(n, pitch, Plane::CellCenter, |x, y| Complex64::new((-(x * x + y * y) / (waist * waist)).exp(), 0.0))
}
