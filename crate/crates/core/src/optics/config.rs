use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether and how the phase-matching sinc multiplies Φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SincWeight {
    #[default]
    Off,
    Paraxial,
    Exact,
}

/// Geometry and gain of the setup. Waists are 1/e² intensity radii, i.e.
/// half of the usual quoted beam diameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticalConfig {
    pub wavelength: f64,
    pub focal_length: f64,
    pub cell_length: f64,
    pub pump_waist_radius: f64,
    pub probe_waist_radius: f64,
    pub probe_pump_angle: f64,
    pub emccd_pixel: f64,
    /// Sample pitch of the hologram grid as imaged into the cell.
    pub slm_pixel: f64,
    pub gain: f64,
    pub sinc: SincWeight,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        Self {
            wavelength: 794.98e-9,
            focal_length: 0.5,
            cell_length: 12e-3,
            pump_waist_radius: 2.2e-3,
            probe_waist_radius: 0.2e-3,
            probe_pump_angle: 0.4_f64.to_radians(),
            emccd_pixel: 16e-6,
            slm_pixel: 12.5e-6,
            gain: 2.6,
            sinc: SincWeight::Off,
        }
    }
}

impl OpticalConfig {
    /// Reduced geometry for an `n`-sample hologram grid: the grid pitch is
    /// chosen so one far-field sample lands on exactly one camera pixel, and
    /// the pump waist fills a fifth of the grid.
    pub fn desk(n: usize) -> Self {
        let base = Self::default();
        let slm_pixel = base.focal_length * base.wavelength / (n as f64 * base.emccd_pixel);
        Self { slm_pixel, pump_waist_radius: n as f64 * slm_pixel / 5.0, ..base }
    }

    /// Vacuum wavenumber, rad/m.
    pub fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("focal_length", self.focal_length),
            ("cell_length", self.cell_length),
            ("pump_waist_radius", self.pump_waist_radius),
            ("probe_waist_radius", self.probe_waist_radius),
            ("probe_pump_angle", self.probe_pump_angle),
            ("emccd_pixel", self.emccd_pixel),
            ("slm_pixel", self.slm_pixel),
            ("gain", self.gain),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("optics.{name} must be positive, got {v}")));
            }
        }
        if self.probe_pump_angle >= 0.1 {
            return Err(Error::Config(format!("optics.probe_pump_angle {} rad leaves the paraxial regime (< 0.1)", self.probe_pump_angle)));
        }
        Ok(())
    }
}
