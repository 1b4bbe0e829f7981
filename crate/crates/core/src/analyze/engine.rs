use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::AnalysisConfig;
use crate::error::{Error, Result};
use crate::optics::CorrelationMap;

/// Zero-padded transform-domain correlator for one window geometry.
///
/// The template is the central `patch` of the first image; the map at
/// displacement `ξ` is `Σ_{i ∈ patch} a[i]·b[i − ξ]` for `|ξ| ≤ max_shift`
/// per axis. The padding covers the largest shift, so nothing wraps.
pub struct CorrelationEngine {
    window: (usize, usize),
    patch: (usize, usize),
    origin: (usize, usize),
    shift: (usize, usize),
    padded: (usize, usize),
    row_fft: [Arc<dyn Fft<f64>>; 2],
    col_fft: [Arc<dyn Fft<f64>>; 2],
}

impl CorrelationEngine {
    pub fn new(window: (usize, usize), cfg: &AnalysisConfig) -> Result<Self> {
        cfg.validate()?;
        let patch = (cfg.patch[0], cfg.patch[1]);
        let shift = (cfg.max_shift[0], cfg.max_shift[1]);
        let mut origin = (0, 0);
        for (axis, (&w, (&p, &sft))) in [window.0, window.1].iter().zip([patch.0, patch.1].iter().zip([shift.0, shift.1].iter())).enumerate() {
            if p > w {
                return Err(Error::Bounds(format!("patch of {p} exceeds the {w}-pixel window on axis {axis}")));
            }
            let o = (w - p) / 2;
            if o < sft || o + p + sft > w {
                return Err(Error::Bounds(format!("displacement {sft} leaves the overlap on axis {axis}: patch {p} in a {w}-pixel window")));
            }
            if axis == 0 {
                origin.0 = o;
            } else {
                origin.1 = o;
            }
        }
        let padded = (window.0 + shift.0, window.1 + shift.1);
        let mut planner = FftPlanner::new();
        let row_fft = [planner.plan_fft_forward(padded.1), planner.plan_fft_inverse(padded.1)];
        let col_fft = [planner.plan_fft_forward(padded.0), planner.plan_fft_inverse(padded.0)];
        Ok(Self { window, patch, origin, shift, padded, row_fft, col_fft })
    }

    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    pub fn map_dim(&self) -> (usize, usize) {
        (2 * self.shift.0 + 1, 2 * self.shift.1 + 1)
    }

    fn fft2(&self, data: &mut Array2<Complex64>, dir: usize) {
        let rows = &self.row_fft[dir];
        let mut scratch = vec![Complex64::default(); rows.get_inplace_scratch_len().max(self.col_fft[dir].get_inplace_scratch_len())];
        rows.process_with_scratch(data.as_slice_mut().expect("standard layout"), &mut scratch);
        let mut t = data.t().as_standard_layout().into_owned();
        self.col_fft[dir].process_with_scratch(t.as_slice_mut().expect("standard layout"), &mut scratch);
        data.assign(&t.t());
    }

    fn padded(&self, a: ArrayView2<f64>, patch_only: bool) -> Array2<Complex64> {
        let mut buf = Array2::zeros(self.padded);
        if patch_only {
            let (o, p) = (self.origin, self.patch);
            buf.slice_mut(s![o.0..o.0 + p.0, o.1..o.1 + p.1])
                .zip_mut_with(&a.slice(s![o.0..o.0 + p.0, o.1..o.1 + p.1]), |b, &v| *b = Complex64::new(v, 0.0));
        } else {
            buf.slice_mut(s![..self.window.0, ..self.window.1]).zip_mut_with(&a, |b, &v| *b = Complex64::new(v, 0.0));
        }
        buf
    }

    fn check(&self, a: &ArrayView2<f64>) -> Result<()> {
        if a.dim() != self.window {
            return Err(Error::ShapeMismatch(format!("image {:?} vs engine window {:?}", a.dim(), self.window)));
        }
        Ok(())
    }

    /// `Σ_{i ∈ patch} a[i]·b[i − ξ]`.
    pub fn correlate(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&a)?;
        self.check(&b)?;
        let mut fa = self.padded(a, true);
        let mut fb = self.padded(b, false);
        self.fft2(&mut fa, 0);
        self.fft2(&mut fb, 0);
        Zip::from(&mut fa).and(&fb).for_each(|x, &y| *x *= y.conj());
        self.fft2(&mut fa, 1);
        let (lr, lc) = self.padded;
        let scale = 1.0 / (lr * lc) as f64;
        let (sr, sc) = (self.shift.0 as isize, self.shift.1 as isize);
        Ok(Array2::from_shape_fn(self.map_dim(), |(i, j)| {
            let (dr, dc) = (i as isize - sr, j as isize - sc);
            let (r, c) = (dr.rem_euclid(lr as isize) as usize, dc.rem_euclid(lc as isize) as usize);
            fa[[r, c]].re * scale
        }))
    }

    /// Sliding-sum evaluation of [`Self::correlate`], for checking.
    pub fn correlate_direct(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&a)?;
        self.check(&b)?;
        let (o, p) = (self.origin, self.patch);
        let (sr, sc) = (self.shift.0 as isize, self.shift.1 as isize);
        Ok(Array2::from_shape_fn(self.map_dim(), |(i, j)| {
            let (dr, dc) = (i as isize - sr, j as isize - sc);
            let mut acc = 0.0;
            for r in o.0..o.0 + p.0 {
                for c in o.1..o.1 + p.1 {
                    acc += a[[r, c]] * b[[(r as isize - dr) as usize, (c as isize - dc) as usize]];
                }
            }
            acc
        }))
    }
}

/// Replaces samples within `radius` of the map center by the mean of a row
/// and a column linear interpolation between the nearest retained samples.
pub fn fill_center(map: &mut Array2<f64>, radius: usize) -> Result<()> {
    let (rows, cols) = map.dim();
    let (cr, cc) = (rows / 2, cols / 2);
    if radius >= cr || radius >= cc {
        return Err(Error::Bounds(format!("exclusion radius {radius} reaches the map edge ({rows}x{cols})")));
    }
    let r2 = (radius * radius) as isize;
    let excluded = |i: usize, j: usize| {
        let (di, dj) = (i as isize - cr as isize, j as isize - cc as isize);
        di * di + dj * dj <= r2
    };
    let src = map.clone();
    let lerp = |lo: (usize, f64), hi: (usize, f64), at: usize| {
        let t = (at - lo.0) as f64 / (hi.0 - lo.0) as f64;
        lo.1 + t * (hi.1 - lo.1)
    };
    for i in cr - radius..=cr + radius {
        for j in cc - radius..=cc + radius {
            if !excluded(i, j) {
                continue;
            }
            let mut left = j;
            while excluded(i, left) {
                left -= 1;
            }
            let mut right = j;
            while excluded(i, right) {
                right += 1;
            }
            let mut up = i;
            while excluded(up, j) {
                up -= 1;
            }
            let mut down = i;
            while excluded(down, j) {
                down += 1;
            }
            let row = lerp((left, src[[i, left]]), (right, src[[i, right]]), j);
            let col = lerp((up, src[[up, j]]), (down, src[[down, j]]), i);
            map[[i, j]] = 0.5 * (row + col);
        }
    }
    Ok(())
}

/// Single-pair cross-correlation: the conjugate image is rotated by 180°
/// and correlated against the central probe patch.
pub fn cross_correlation_map(engine: &CorrelationEngine, probe: ArrayView2<f64>, conjugate: ArrayView2<f64>) -> Result<CorrelationMap> {
    let rotated = conjugate.slice(s![..;-1, ..;-1]);
    CorrelationMap::new(engine.correlate(probe, rotated)?)
}

/// Single-image auto-correlation with the self-overlap peak excised.
pub fn auto_correlation_map(engine: &CorrelationEngine, image: ArrayView2<f64>, exclusion_radius: usize) -> Result<CorrelationMap> {
    let mut m = engine.correlate(image, image)?;
    fill_center(&mut m, exclusion_radius)?;
    CorrelationMap::new(m)
}
