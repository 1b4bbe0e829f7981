use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{write_pgm16, RealField};

/// Odd-sized window of camera-pixel displacements, `ξ ∈ [-half, half]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRoi {
    pub half_rows: usize,
    pub half_cols: usize,
}

impl PixelRoi {
    pub fn square(half: usize) -> Self {
        Self { half_rows: half, half_cols: half }
    }

    pub fn dim(&self) -> (usize, usize) {
        (2 * self.half_rows + 1, 2 * self.half_cols + 1)
    }
}

/// Real map over displacement `ξ` in camera pixels; `ξ = 0` at the middle
/// sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap {
    values: Array2<f64>,
}

impl CorrelationMap {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r % 2 == 0 || c % 2 == 0 {
            return Err(Error::Sizing(format!("correlation maps have odd edges, got {r}x{c}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("correlation map contains non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn roi(&self) -> PixelRoi {
        let (r, c) = self.values.dim();
        PixelRoi { half_rows: r / 2, half_cols: c / 2 }
    }

    /// Value at displacement `(dr, dc)` pixels from the center.
    pub fn at(&self, dr: isize, dc: isize) -> f64 {
        let roi = self.roi();
        self.values[[(roi.half_rows as isize + dr) as usize, (roi.half_cols as isize + dc) as usize]]
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `xi_row_px,xi_col_px,value` rows, row-major.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let roi = self.roi();
        writeln!(w, "xi_row_px,xi_col_px,value")?;
        for ((i, j), v) in self.values.indexed_iter() {
            let dr = i as isize - roi.half_rows as isize;
            let dc = j as isize - roi.half_cols as isize;
            writeln!(w, "{dr},{dc},{v:e}")?;
        }
        Ok(())
    }

    /// 16-bit graymap plus the `(min, max)` that maps to `0..65535`.
    pub fn write_image(&self, w: impl Write) -> Result<(f64, f64)> {
        write_pgm16(&RealField::new(self.values.clone(), 1.0)?, w)
    }
}
