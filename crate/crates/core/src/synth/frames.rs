use std::io::{Read, Write};

use ndarray::{s, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gauss, QuadratureSource};
use crate::error::{Error, Result};

/// Shortest interval the camera supports between kinetics frames.
pub const MIN_FRAME_SEPARATION_S: f64 = 51e-6;

/// Largest fraction of clamped pixels before a run is flagged.
pub const CLAMP_FLAG_FRACTION: f64 = 1e-3;

/// EMCCD response, in photoelectron-equivalent counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorModel {
    pub quantum_efficiency: f64,
    /// Excess-noise factor `F` of the EM register; variance scales by `F²`.
    pub excess_noise_factor: f64,
    pub read_noise: f64,
    pub saturation: f64,
    pub pixel_pitch: f64,
    pub rows: usize,
    pub cols: usize,
    pub frame_separation_s: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            quantum_efficiency: 0.9,
            excess_noise_factor: std::f64::consts::SQRT_2,
            read_noise: 1.0,
            saturation: 65535.0,
            pixel_pitch: 16e-6,
            rows: 170,
            cols: 512,
            frame_separation_s: 60e-6,
        }
    }
}

impl DetectorModel {
    /// Unit efficiency, no excess or read noise, saturation at the 16-bit ceiling.
    pub fn ideal(rows: usize, cols: usize) -> Self {
        Self { quantum_efficiency: 1.0, excess_noise_factor: 1.0, read_noise: 0.0, rows, cols, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.quantum_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Config(format!("quantum efficiency must lie in (0, 1], got {eta}")));
        }
        if !(self.excess_noise_factor >= 1.0) {
            return Err(Error::Config(format!("excess-noise factor must be at least 1, got {}", self.excess_noise_factor)));
        }
        if !(self.read_noise >= 0.0) {
            return Err(Error::Config(format!("read noise must be non-negative, got {}", self.read_noise)));
        }
        if !(self.saturation > 0.0 && self.saturation <= u16::MAX as f64) {
            return Err(Error::Config(format!("saturation must lie in (0, 65535], got {}", self.saturation)));
        }
        if !(self.pixel_pitch > 0.0) {
            return Err(Error::Config("pixel pitch must be positive".into()));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("frame must be nonempty".into()));
        }
        if !(self.frame_separation_s >= MIN_FRAME_SEPARATION_S) {
            return Err(Error::Config(format!(
                "frame separation {:.1e} s is below the {MIN_FRAME_SEPARATION_S:.0e} s camera floor",
                self.frame_separation_s
            )));
        }
        Ok(())
    }
}

/// Bright seeded probe and conjugate profiles acting as local oscillators.
///
/// Centers are `[row, col]` in frame pixels; the waist is the 1/e² intensity
/// radius. `peak_counts` is the detected count level at either center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalOscillator {
    pub probe_center: [f64; 2],
    pub conjugate_center: [f64; 2],
    pub waist_px: f64,
    pub peak_counts: f64,
    /// Pump phase offset; the conjugate quadrature turns by twice this.
    pub delta_phi_p: f64,
}

impl LocalOscillator {
    /// Probe centered in the left half of the frame, conjugate in the right
    /// half, peaking at 90% of saturation.
    pub fn centered(det: &DetectorModel) -> Self {
        let r = det.rows as f64 / 2.0;
        Self {
            probe_center: [r, det.cols as f64 / 4.0],
            conjugate_center: [r, 3.0 * det.cols as f64 / 4.0],
            waist_px: 160.0,
            peak_counts: 0.9 * det.saturation,
            delta_phi_p: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.waist_px > 0.0) {
            return Err(Error::Config(format!("LO waist must be positive, got {}", self.waist_px)));
        }
        if !(self.peak_counts > 0.0) {
            return Err(Error::Config(format!("LO flux must be positive, got {}", self.peak_counts)));
        }
        if !self.delta_phi_p.is_finite() {
            return Err(Error::Config("LO phase must be finite".into()));
        }
        Ok(())
    }

    fn profile(&self, center: [f64; 2], r: usize, c: usize) -> f64 {
        let (dr, dc) = (r as f64 - center[0], c as f64 - center[1]);
        (-2.0 * (dr * dr + dc * dc) / (self.waist_px * self.waist_px)).exp()
    }
}

/// Rectangular region of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Window {
    /// `rows × cols` window whose center pixel is nearest `center`.
    pub fn centered_at(center: [f64; 2], rows: usize, cols: usize) -> Result<Self> {
        let r0 = (center[0] - rows as f64 / 2.0).round();
        let c0 = (center[1] - cols as f64 / 2.0).round();
        if r0 < 0.0 || c0 < 0.0 {
            return Err(Error::Bounds(format!("{rows}x{cols} window around {center:?} leaves the frame")));
        }
        Ok(Self { row0: r0 as usize, col0: c0 as usize, rows, cols })
    }

    pub fn fits(&self, rows: usize, cols: usize) -> bool {
        self.rows > 0 && self.cols > 0 && self.row0 + self.rows <= rows && self.col0 + self.cols <= cols
    }

    pub fn view<'a, T>(&self, a: &'a Array2<T>) -> ArrayView2<'a, T> {
        a.slice(s![self.row0..self.row0 + self.rows, self.col0..self.col0 + self.cols])
    }

    fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.row0 && r < self.row0 + self.rows && c >= self.col0 && c < self.col0 + self.cols
    }
}

/// Where the correlated fluctuations land in the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamLayout {
    pub probe: Window,
    pub conjugate: Window,
}

impl BeamLayout {
    /// Equal windows centered on the two LO spots.
    pub fn around(lo: &LocalOscillator, rows: usize, cols: usize) -> Result<Self> {
        Ok(Self { probe: Window::centered_at(lo.probe_center, rows, cols)?, conjugate: Window::centered_at(lo.conjugate_center, rows, cols)? })
    }

    pub fn validate(&self, det: &DetectorModel) -> Result<()> {
        for (name, w) in [("probe", self.probe), ("conjugate", self.conjugate)] {
            if !w.fits(det.rows, det.cols) {
                return Err(Error::Bounds(format!("{name} window {w:?} exceeds the {}x{} frame", det.rows, det.cols)));
            }
        }
        let (p, c) = (self.probe, self.conjugate);
        let disjoint = p.row0 + p.rows <= c.row0 || c.row0 + c.rows <= p.row0 || p.col0 + p.cols <= c.col0 || c.col0 + c.cols <= p.col0;
        if !disjoint {
            return Err(Error::Bounds("probe and conjugate windows overlap".into()));
        }
        if (p.rows, p.cols) != (c.rows, c.cols) {
            return Err(Error::ShapeMismatch("probe and conjugate windows differ in size".into()));
        }
        Ok(())
    }
}

/// One camera exposure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub counts: Array2<u16>,
}

/// Two kinetics frames with their metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub index: u64,
    pub seed: u64,
    pub timestamps_s: [f64; 2],
    pub layout: BeamLayout,
    pub frames: [Frame; 2],
    /// Pixels whose realized count fell below zero and were clamped.
    pub clamped: u64,
}

impl FramePair {
    pub fn probe(&self, frame: usize) -> ArrayView2<'_, u16> {
        self.layout.probe.view(&self.frames[frame].counts)
    }

    pub fn conjugate(&self, frame: usize) -> ArrayView2<'_, u16> {
        self.layout.conjugate.view(&self.frames[frame].counts)
    }

    pub fn clamped_fraction(&self) -> f64 {
        let (r, c) = self.frames[0].counts.dim();
        self.clamped as f64 / (2 * r * c) as f64
    }
}

/// What perturbs the LOs.
#[derive(Clone, Copy)]
pub enum Fluctuations<'a> {
    /// Independent coherent states: plain Poisson counts.
    Coherent,
    /// Correlated quadratures from a sampler over the layout windows.
    Quadrature(&'a dyn QuadratureSource),
}

/// LO amplitudes over the frame, built once per acquisition.
struct Renderer<'a> {
    det: DetectorModel,
    lo: LocalOscillator,
    layout: BeamLayout,
    fluct: Fluctuations<'a>,
    delta_phi_p: f64,
    /// Detected mean counts per pixel.
    mean: Array2<f64>,
    /// `|α|` of the probe and conjugate LOs separately.
    amp_pr: Array2<f64>,
    amp_c: Array2<f64>,
}

impl<'a> Renderer<'a> {
    fn new(lo: &LocalOscillator, fluct: Fluctuations<'a>, layout: BeamLayout, det: &DetectorModel) -> Result<Self> {
        det.validate()?;
        lo.validate()?;
        layout.validate(det)?;
        if let Fluctuations::Quadrature(src) = fluct {
            let w = src.window();
            if w != (layout.probe.rows, layout.probe.cols) {
                return Err(Error::ShapeMismatch(format!("sampler window {w:?} vs layout {:?}", (layout.probe.rows, layout.probe.cols))));
            }
        }
        let shape = (det.rows, det.cols);
        let photons = lo.peak_counts / det.quantum_efficiency;
        let amp_pr = Array2::from_shape_fn(shape, |(r, c)| (photons * lo.profile(lo.probe_center, r, c)).sqrt());
        let amp_c = Array2::from_shape_fn(shape, |(r, c)| (photons * lo.profile(lo.conjugate_center, r, c)).sqrt());
        let eta = det.quantum_efficiency;
        let mean = ndarray::Zip::from(&amp_pr).and(&amp_c).map_collect(|a, b| eta * (a * a + b * b));
        Ok(Self { det: *det, lo: *lo, layout, fluct, delta_phi_p: lo.delta_phi_p, mean, amp_pr, amp_c })
    }

    fn frame(&self, rng: &mut ChaCha8Rng, clamped: &mut u64) -> Frame {
        let det = &self.det;
        let eta = det.quantum_efficiency;
        let excess = det.excess_noise_factor.powi(2) - 1.0;
        let dx = match self.fluct {
            Fluctuations::Quadrature(src) => Some(src.sample(rng, self.delta_phi_p)),
            Fluctuations::Coherent => None,
        };
        let mut counts = Array2::zeros((det.rows, det.cols));
        let (pw, cw) = (self.layout.probe, self.layout.conjugate);
        for ((r, c), out) in counts.indexed_iter_mut() {
            let mean = self.mean[[r, c]];
            let quadrature = dx.as_ref().and_then(|(xp, xc)| {
                if pw.contains(r, c) {
                    Some((self.amp_pr[[r, c]], xp[[r - pw.row0, c - pw.col0]]))
                } else if cw.contains(r, c) {
                    Some((self.amp_c[[r, c]], xc[[r - cw.row0, c - cw.col0]]))
                } else {
                    None
                }
            });
            let detected = match (quadrature, dx.is_some()) {
                // δN = η√2|α|δX plus the vacuum admitted by the lost fraction.
                (Some((amp, x)), _) => {
                    let loss = (eta * (1.0 - eta)).sqrt() * amp * gauss(rng);
                    mean + eta * std::f64::consts::SQRT_2 * amp * x + loss
                }
                (None, true) => mean + mean.sqrt() * gauss(rng),
                (None, false) => {
                    if mean > 0.0 {
                        Poisson::new(mean).expect("positive mean").sample(rng)
                    } else {
                        0.0
                    }
                }
            };
            let mut v = detected;
            if excess > 0.0 {
                v += (excess * detected.max(0.0)).sqrt() * gauss(rng);
            }
            if det.read_noise > 0.0 {
                v += det.read_noise * gauss(rng);
            }
            let v = v.round();
            *out = if v < 0.0 {
                *clamped += 1;
                0
            } else {
                v.min(det.saturation) as u16
            };
        }
        Frame { counts }
    }

    fn pair(&self, index: u64, seed: u64) -> FramePair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clamped = 0;
        let f1 = self.frame(&mut rng, &mut clamped);
        let f2 = self.frame(&mut rng, &mut clamped);
        FramePair { index, seed, timestamps_s: [0.0, self.det.frame_separation_s], layout: self.layout, frames: [f1, f2], clamped }
    }
}

/// Renders two independent exposures from one seed.
///
/// Each exposure draws fresh fluctuations; kinetics frames are tens of
/// microseconds apart, far beyond the correlation time of the mixing process.
pub fn render_frame_pair(lo: &LocalOscillator, fluct: Fluctuations<'_>, layout: BeamLayout, det: &DetectorModel, seed: u64) -> Result<FramePair> {
    Ok(Renderer::new(lo, fluct, layout, det)?.pair(0, seed))
}

/// A reproducible stream of frame pairs, pair `i` seeded with `seed_base + i`.
pub struct Acquisition<'a> {
    renderer: Renderer<'a>,
    seed_base: u64,
    n_pairs: usize,
}

impl<'a> Acquisition<'a> {
    pub fn new(
        lo: &LocalOscillator,
        fluct: Fluctuations<'a>,
        layout: BeamLayout,
        det: &DetectorModel,
        seed_base: u64,
        n_pairs: usize,
    ) -> Result<Self> {
        if n_pairs == 0 {
            return Err(Error::Config("at least one frame pair is required".into()));
        }
        Ok(Self { renderer: Renderer::new(lo, fluct, layout, det)?, seed_base, n_pairs })
    }

    pub fn len(&self) -> usize {
        self.n_pairs
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn layout(&self) -> BeamLayout {
        self.renderer.layout
    }

    pub fn detector(&self) -> &DetectorModel {
        &self.renderer.det
    }

    pub fn local_oscillator(&self) -> &LocalOscillator {
        &self.renderer.lo
    }

    pub fn seed_base(&self) -> u64 {
        self.seed_base
    }

    pub fn pair(&self, index: usize) -> FramePair {
        let i = index as u64;
        self.renderer.pair(i, self.seed_base.wrapping_add(i))
    }

    /// Sequential stream; nothing is retained between items.
    pub fn iter(&self) -> impl Iterator<Item = FramePair> + '_ {
        (0..self.n_pairs).map(move |i| self.pair(i))
    }

    /// Maps every pair in parallel and folds the results in index order, so
    /// the outcome does not depend on thread scheduling.
    pub fn map_fold<U, T, M, F>(&self, map: M, init: T, fold: F) -> Result<T>
    where
        U: Send,
        M: Fn(FramePair) -> Result<U> + Sync,
        F: FnMut(T, U) -> T,
    {
        self.map_fold_first(self.n_pairs, map, init, fold)
    }

    /// [`Self::map_fold`] over the first `count` pairs only.
    pub fn map_fold_first<U, T, M, F>(&self, count: usize, map: M, init: T, mut fold: F) -> Result<T>
    where
        U: Send,
        M: Fn(FramePair) -> Result<U> + Sync,
        F: FnMut(T, U) -> T,
    {
        let chunk = 4 * rayon::current_num_threads().max(1);
        let mut acc = init;
        let total = count.min(self.n_pairs);
        let mut start = 0;
        while start < total {
            let end = (start + chunk).min(total);
            let batch: Vec<Result<U>> = (start..end).into_par_iter().map(|i| map(self.pair(i))).collect();
            for item in batch {
                acc = fold(acc, item?);
            }
            start = end;
        }
        Ok(acc)
    }
}

const PAIR_MAGIC: &[u8; 4] = b"TBFP";
const PAIR_VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit a u32 header field")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

/// Binary pair file: header (magic, version, geometry, index, seed,
/// timestamps, windows, clamp tally) then both frames as little-endian u16.
pub fn write_pair(pair: &FramePair, mut w: impl Write) -> Result<()> {
    let (rows, cols) = pair.frames[0].counts.dim();
    w.write_all(PAIR_MAGIC)?;
    w.write_all(&PAIR_VERSION.to_le_bytes())?;
    put_u32(&mut w, rows)?;
    put_u32(&mut w, cols)?;
    w.write_all(&pair.index.to_le_bytes())?;
    w.write_all(&pair.seed.to_le_bytes())?;
    for t in pair.timestamps_s {
        w.write_all(&t.to_le_bytes())?;
    }
    for win in [pair.layout.probe, pair.layout.conjugate] {
        for v in [win.row0, win.col0, win.rows, win.cols] {
            put_u32(&mut w, v)?;
        }
    }
    w.write_all(&pair.clamped.to_le_bytes())?;
    let mut buf = Vec::with_capacity(4 * rows * cols);
    for f in &pair.frames {
        for v in f.counts.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_pair(mut r: impl Read) -> Result<FramePair> {
    let mut head = [0u8; 4 + 4 + 8 + 8 + 8 + 16 + 32 + 8];
    r.read_exact(&mut head)?;
    if &head[..4] != PAIR_MAGIC {
        return Err(Error::Format("not a frame-pair file".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().expect("4 bytes")) as usize;
    let u64_at = |o: usize| u64::from_le_bytes(head[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4) as u32;
    if version != PAIR_VERSION {
        return Err(Error::Format(format!("unsupported frame-pair version {version}")));
    }
    let (rows, cols) = (u32_at(8), u32_at(12));
    let index = u64_at(16);
    let seed = u64_at(24);
    let timestamps_s = [f64::from_bits(u64_at(32)), f64::from_bits(u64_at(40))];
    let win = |o: usize| Window { row0: u32_at(o), col0: u32_at(o + 4), rows: u32_at(o + 8), cols: u32_at(o + 12) };
    let layout = BeamLayout { probe: win(48), conjugate: win(64) };
    let clamped = u64_at(80);
    if !layout.probe.fits(rows, cols) || !layout.conjugate.fits(rows, cols) {
        return Err(Error::Format("frame-pair windows exceed the frame".into()));
    }
    let mut frame = || -> Result<Frame> {
        let mut bytes = vec![0u8; 2 * rows * cols];
        r.read_exact(&mut bytes)?;
        let v = bytes.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect();
        Ok(Frame { counts: Array2::from_shape_vec((rows, cols), v).expect("sized buffer") })
    };
    let f1 = frame()?;
    let f2 = frame()?;
    Ok(FramePair { index, seed, timestamps_s, layout, frames: [f1, f2], clamped })
}

/// Index of a frame stream written to one directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameManifest {
    pub detector: DetectorModel,
    pub local_oscillator: LocalOscillator,
    pub layout: BeamLayout,
    pub seed_base: u64,
    pub files: Vec<String>,
    pub clamped_fraction: f64,
    pub flagged: bool,
}
