//! Ready-made targets.

use ndarray::Array2;
use num_complex::Complex64;

use super::TargetSpec;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Plane};

fn offsets(n: usize) -> impl Fn(usize, usize) -> (f64, f64) {
    let c = (n / 2) as f64;
    move |i, j| (j as f64 - c, i as f64 - c)
}

fn square_window(n: usize, half: f64) -> Array2<bool> {
    let xy = offsets(n);
    Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = xy(i, j);
        x.abs() < half && y.abs() < half
    })
}

/// Two Gaussian spots (1/e amplitude radius `spot_radius`) at column offsets
/// `±separation` from the center. The signal region is a disk of
/// `signal_radius` around each spot; everything else is noise region.
pub fn two_spots(n: usize, separation: f64, spot_radius: f64, signal_radius: f64, pitch: f64) -> Result<TargetSpec> {
    if separation + signal_radius >= (n / 2) as f64 {
        return Err(Error::Bounds(format!("spots at ±{separation} with radius {signal_radius} do not fit a {n} grid")));
    }
    let xy = offsets(n);
    let spot = |x: f64, y: f64, cx: f64| (-((x - cx).powi(2) + y * y) / (spot_radius * spot_radius)).exp();
    let t = Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = xy(i, j);
        Complex64::new(spot(x, y, separation) + spot(x, y, -separation), 0.0)
    });
    let signal = Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = xy(i, j);
        (x - separation).hypot(y) <= signal_radius || (x + separation).hypot(y) <= signal_radius
    });
    let noise = signal.mapv(|s| !s);
    TargetSpec::new(ComplexField::new(t, pitch, Plane::FarField)?, signal, noise)
}

/// Binary "OU" glyph drawn with thin strokes, sized for a 128 grid and
/// scaled linearly to `n`. Signal region: the central `±n/4` square.
pub fn ou_glyph(n: usize, pitch: f64) -> Result<TargetSpec> {
    let s = n as f64 / 128.0;
    let xy = offsets(n);
    let ring = |x: f64, y: f64, cx: f64, r0: f64, th: f64| ((x - cx).hypot(y) - r0).abs() <= th / 2.0;
    let glyph = Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = xy(i, j);
        let (x, y) = (x / s, y / s);
        let o = ring(x, y, -13.0, 9.0, 3.0);
        let bars = (x - 13.0).abs() <= 9.0 && (x - 13.0).abs() >= 6.0 && (-9.0..=0.0).contains(&y);
        let bowl = ring(x, y, 13.0, 7.5, 3.0) && y > 0.0;
        if o || bars || bowl {
            1.0
        } else {
            0.0
        }
    });
    from_amplitude(&glyph, None, n as f64 / 4.0, pitch)
}

/// Target from an amplitude image (and optional phase) with a centered
/// square signal window of half-width `signal_half` samples.
pub fn from_amplitude(amplitude: &Array2<f64>, phase: Option<&Array2<f64>>, signal_half: f64, pitch: f64) -> Result<TargetSpec> {
    let (r, c) = amplitude.dim();
    if r != c {
        return Err(Error::Sizing(format!("target image must be square, got {r}x{c}")));
    }
    if let Some(p) = phase {
        if p.dim() != amplitude.dim() {
            return Err(Error::ShapeMismatch(format!("phase {:?} vs amplitude {:?}", p.dim(), amplitude.dim())));
        }
    }
    let signal = square_window(r, signal_half);
    let noise = signal.mapv(|s| !s);
    let t = Array2::from_shape_fn((r, r), |(i, j)| Complex64::from_polar(amplitude[[i, j]], phase.map_or(0.0, |p| p[[i, j]])));
    TargetSpec::new(ComplexField::new(t, pitch, Plane::FarField)?, signal, noise)
}
