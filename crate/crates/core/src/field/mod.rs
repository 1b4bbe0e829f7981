//! Sampled fields and the transform conventions shared by every stage.
//!
//! All grids are stored row-major with the origin (DC for spectra, optical
//! axis for positions) at index `(n/2, n/2)`. Transforms are unitary, so
//! Parseval's equality holds without extra constants.

mod io;
mod ops;
mod transform;

pub use io::{read_grid, write_grid, write_pgm16, GRID_MAGIC, GRID_VERSION};
pub use ops::{crop_centered, embed_and_crop, embed_centered, refine_centered, rotate180, rotate180_array};
pub use transform::{dft2_centered, idft2_centered, Dft2};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid edge accepted anywhere in the crate.
pub const MIN_GRID: usize = 8;

/// Optical plane a complex grid is sampled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    Slm,
    CellCenter,
    FarField,
}

impl Plane {
    pub fn code(self) -> u8 {
        match self {
            Plane::Slm => 0,
            Plane::CellCenter => 1,
            Plane::FarField => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Plane::Slm),
            1 => Some(Plane::CellCenter),
            2 => Some(Plane::FarField),
            _ => None,
        }
    }
}

/// Square grid of complex amplitudes with a physical sample pitch.
///
/// In the SLM and cell-center planes `pitch` is meters per sample; in the
/// far-field plane it is the pitch of whatever coordinate the producer states
/// (transverse wavenumber for spectra, meters after [`crate::optics::kmap_to_farfield`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    data: Array2<Complex64>,
    pitch: f64,
    plane: Plane,
}

impl ComplexField {
    pub fn new(data: Array2<Complex64>, pitch: f64, plane: Plane) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows != cols {
            return Err(Error::Sizing(format!("complex field must be square, got {rows}x{cols}")));
        }
        if rows < MIN_GRID {
            return Err(Error::Sizing(format!("grid edge {rows} is below the minimum {MIN_GRID}")));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::Contract(format!("pitch must be positive and finite, got {pitch}")));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Contract("complex field contains non-finite samples".into()));
        }
        Ok(Self { data, pitch, plane })
    }

    pub fn zeros(n: usize, pitch: f64, plane: Plane) -> Result<Self> {
        Self::new(Array2::zeros((n, n)), pitch, plane)
    }

    /// Builds a field by evaluating `f(x, y)` at the physical coordinates of each
    /// sample, `x` along columns and `y` along rows, both zero at the center index.
    pub fn from_fn(n: usize, pitch: f64, plane: Plane, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let c = (n / 2) as f64;
        let data = Array2::from_shape_fn((n, n), |(i, j)| f((j as f64 - c) * pitch, (i as f64 - c) * pitch));
        Self::new(data, pitch, plane)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn plane(&self) -> Plane {
        self.plane
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    pub fn with_plane(mut self, plane: Plane) -> Self {
        self.plane = plane;
        self
    }

    pub fn with_pitch(mut self, pitch: f64) -> Result<Self> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::Contract(format!("pitch must be positive and finite, got {pitch}")));
        }
        self.pitch = pitch;
        Ok(self)
    }

    /// Σ|f|².
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Copy scaled to unit energy. Fails on an all-zero field.
    pub fn normalized(&self) -> Result<Self> {
        let e = self.energy();
        if e == 0.0 {
            return Err(Error::Degenerate("cannot normalize an all-zero field".into()));
        }
        let s = 1.0 / e.sqrt();
        Ok(Self { data: self.data.mapv(|z| z * s), pitch: self.pitch, plane: self.plane })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::new(self.data.mapv(f), self.pitch, self.plane)
    }

    pub fn real_part(&self) -> RealField {
        RealField { data: self.data.mapv(|z| z.re), pitch: self.pitch }
    }
}

/// Real-valued sampled map. Rectangular shapes are allowed so the same type
/// carries camera images, fluctuation images and correlation maps.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    data: Array2<f64>,
    pitch: f64,
}

impl RealField {
    pub fn new(data: Array2<f64>, pitch: f64) -> Result<Self> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::Contract(format!("pitch must be positive and finite, got {pitch}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("real field contains non-finite samples".into()));
        }
        Ok(Self { data, pitch })
    }

    pub fn zeros(rows: usize, cols: usize, pitch: f64) -> Result<Self> {
        Self::new(Array2::zeros((rows, cols)), pitch)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn to_complex(&self, plane: Plane) -> Result<ComplexField> {
        ComplexField::new(self.data.mapv(|v| Complex64::new(v, 0.0)), self.pitch, plane)
    }
}

/// Pearson correlation of two equally long sample sets. `None` when either
/// input is constant.
pub fn pearson<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> Option<f64> {
    let (mut n, mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in a.into_iter().zip(b) {
        n += 1.0;
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    if n < 2.0 {
        return None;
    }
    let cov = sab - sa * sb / n;
    let va = saa - sa * sa / n;
    let vb = sbb - sb * sb / n;
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}
