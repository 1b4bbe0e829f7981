//! Decoding of frame pairs into correlation maps and scores.
//!
//! Consecutive frames are subtracted to isolate the quantum fluctuations,
//! the conjugate image is rotated by 180° and cross-correlated with a probe
//! patch, and the single-pair maps are averaged over the acquisition.

mod engine;
mod squeezing;

pub use engine::{auto_correlation_map, cross_correlation_map, fill_center, CorrelationEngine};
pub use squeezing::{estimate_squeezing_frames, estimate_squeezing_trace, SqueezingEstimate, WindowSums, MIN_CONFIDENT_SAMPLES};

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cgh::TargetSpec;
use crate::error::{Error, Result};
use crate::field::pearson;
use crate::optics::CorrelationMap;
use crate::synth::{Acquisition, FramePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Unit root-sum-square over the map.
    #[default]
    Energy,
    /// Raw averaged values, for comparisons across runs.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Probe template size `[rows, cols]`, centered in the window.
    pub patch: [usize; 2],
    /// Largest displacement per axis.
    pub max_shift: [usize; 2],
    /// Average only the first pairs of a stream.
    pub n_pairs: Option<usize>,
    pub exclusion_radius: usize,
    pub normalization: Normalization,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { patch: [64, 64], max_shift: [32, 32], n_pairs: None, exclusion_radius: 2, normalization: Normalization::Energy }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch.contains(&0) {
            return Err(Error::Config("patch must be nonempty".into()));
        }
        if self.n_pairs == Some(0) {
            return Err(Error::Config("n_pairs must be positive".into()));
        }
        if self.exclusion_radius >= self.max_shift[0].min(self.max_shift[1]) {
            return Err(Error::Config(format!("exclusion radius {} must stay below the map half-width {:?}", self.exclusion_radius, self.max_shift)));
        }
        Ok(())
    }
}

/// Count difference between the two frames of a pair, over one beam window.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationImage {
    pub data: Array2<f64>,
}

/// `(frame₁ − frame₂)` over the probe and conjugate windows.
pub fn frame_difference(pair: &FramePair) -> Result<(FluctuationImage, FluctuationImage)> {
    let [f1, f2] = &pair.frames;
    if f1.counts.dim() != f2.counts.dim() {
        return Err(Error::ShapeMismatch(format!("frames {:?} and {:?}", f1.counts.dim(), f2.counts.dim())));
    }
    let diff = |a: ndarray::ArrayView2<u16>, b: ndarray::ArrayView2<u16>| FluctuationImage {
        data: ndarray::Zip::from(&a).and(&b).map_collect(|&x, &y| x as f64 - y as f64),
    };
    Ok((diff(pair.probe(0), pair.probe(1)), diff(pair.conjugate(0), pair.conjugate(1))))
}

/// Streaming arithmetic mean of equally shaped maps.
#[derive(Debug, Clone)]
pub struct MapAverage {
    sum: Array2<f64>,
    count: usize,
}

impl MapAverage {
    pub fn new(dim: (usize, usize)) -> Self {
        Self { sum: Array2::zeros(dim), count: 0 }
    }

    pub fn push(&mut self, map: &Array2<f64>) -> Result<()> {
        if map.dim() != self.sum.dim() {
            return Err(Error::ShapeMismatch(format!("map {:?} vs running mean {:?}", map.dim(), self.sum.dim())));
        }
        self.sum += map;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Result<CorrelationMap> {
        if self.count == 0 {
            return Err(Error::Degenerate("no maps were averaged".into()));
        }
        CorrelationMap::new(&self.sum / self.count as f64)
    }
}

/// Mean of a stream of maps and the number averaged.
pub fn average_maps<'a>(maps: impl IntoIterator<Item = &'a CorrelationMap>) -> Result<(CorrelationMap, usize)> {
    let mut avg: Option<MapAverage> = None;
    for m in maps {
        let a = avg.get_or_insert_with(|| MapAverage::new(m.values().dim()));
        a.push(m.values())?;
    }
    let a = avg.ok_or_else(|| Error::Degenerate("no maps were averaged".into()))?;
    Ok((a.mean()?, a.count()))
}

/// `v / √Σv²`.
///
/// The root keeps the result independent of the overall scale of the map and
/// leaves a normalized map unchanged.
pub fn normalize_map(map: &CorrelationMap) -> Result<CorrelationMap> {
    let e = map.energy();
    if e == 0.0 {
        return Err(Error::Degenerate("cannot normalize an all-zero map".into()));
    }
    CorrelationMap::new(map.values() / e.sqrt())
}

pub fn apply_normalization(map: &CorrelationMap, mode: Normalization) -> Result<CorrelationMap> {
    match mode {
        Normalization::Energy => normalize_map(map),
        Normalization::Absolute => Ok(map.clone()),
    }
}

/// Separable Gaussian blur; weights are renormalized where the kernel
/// overhangs the edge.
pub fn smooth_gaussian(map: &Array2<f64>, fwhm_px: f64) -> Array2<f64> {
    if !(fwhm_px > 0.0) {
        return map.clone();
    }
    let sigma = fwhm_px / (8.0 * std::f64::consts::LN_2).sqrt();
    let half = (3.0 * sigma).ceil() as isize;
    let w: Vec<f64> = (-half..=half).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let blur = |a: &Array2<f64>| {
        let (rows, cols) = a.dim();
        Array2::from_shape_fn((rows, cols), |(r, c)| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for k in -half..=half {
                let cc = c as isize + k;
                if cc >= 0 && (cc as usize) < cols {
                    let wk = w[(k + half) as usize];
                    acc += wk * a[[r, cc as usize]];
                    norm += wk;
                }
            }
            acc / norm
        })
    };
    let rows_done = blur(map);
    blur(&rows_done.t().to_owned()).t().to_owned()
}

/// Pearson correlation of two equally shaped maps.
pub fn map_correlation(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!("maps {:?} and {:?}", a.dim(), b.dim())));
    }
    pearson(a.iter(), b.iter()).ok_or_else(|| Error::Degenerate("constant map".into()))
}

/// `Re{T}` and the signal mask cropped to a map's displacement grid.
///
/// The target grid must share the camera pixel pitch; its center sample is
/// displacement zero. Displacements beyond the grid render as zero.
pub fn render_target(target: &TargetSpec, map_dim: (usize, usize)) -> (Array2<f64>, Array2<bool>) {
    let n = target.n() as isize;
    let c = n / 2;
    let (hr, hc) = ((map_dim.0 / 2) as isize, (map_dim.1 / 2) as isize);
    let mut re = Array2::zeros(map_dim);
    let mut sig = Array2::from_elem(map_dim, false);
    for i in 0..map_dim.0 {
        for j in 0..map_dim.1 {
            let (r, q) = (c + i as isize - hr, c + j as isize - hc);
            if (0..n).contains(&r) && (0..n).contains(&q) {
                re[[i, j]] = target.target().data()[[r as usize, q as usize]].re;
                sig[[i, j]] = target.signal()[[r as usize, q as usize]];
            }
        }
    }
    (re, sig)
}

/// Agreement of a decoded map with the encoded target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    /// Pearson coefficient against `Re{T}` over the signal region.
    pub coefficient: f64,
    /// Largest |value| in the signal region over the rms outside it.
    pub peak_to_background: f64,
    pub signal_samples: usize,
    pub pairs: Option<usize>,
}

impl FidelityReport {
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "coefficient = {:.9}", self.coefficient)?;
        writeln!(w, "peak_to_background = {:.9}", self.peak_to_background)?;
        writeln!(w, "signal_samples = {}", self.signal_samples)?;
        if let Some(n) = self.pairs {
            writeln!(w, "pairs = {n}")?;
        }
        Ok(())
    }
}

pub fn fidelity(map: &CorrelationMap, target: &TargetSpec) -> Result<FidelityReport> {
    let v = map.values();
    let (re, sig) = render_target(target, v.dim());
    let (mut a, mut b, mut bg) = (Vec::new(), Vec::new(), Vec::new());
    let mut peak: f64 = 0.0;
    for ((x, &t), &inside) in v.iter().zip(re.iter()).zip(sig.iter()) {
        if inside {
            a.push(*x);
            b.push(t);
            peak = peak.max(x.abs());
        } else {
            bg.push(*x);
        }
    }
    if a.is_empty() {
        return Err(Error::EmptySignalMask);
    }
    let coefficient = pearson(a.iter(), b.iter()).ok_or_else(|| Error::Degenerate("constant map or target over the signal region".into()))?;
    let rms = (bg.iter().map(|x| x * x).sum::<f64>() / bg.len().max(1) as f64).sqrt();
    let peak_to_background = if rms > 0.0 { peak / rms } else { f64::INFINITY };
    Ok(FidelityReport { coefficient, peak_to_background, signal_samples: a.len(), pairs: None })
}

/// `Σ v²` over the target's signal region.
pub fn signal_energy(map: &CorrelationMap, target: &TargetSpec) -> f64 {
    let (_, sig) = render_target(target, map.values().dim());
    map.values().iter().zip(sig.iter()).filter(|(_, &s)| s).map(|(v, _)| v * v).sum()
}

/// Cross and auto maps of one pair.
#[derive(Debug, Clone)]
pub struct PairMaps {
    pub cross: Array2<f64>,
    pub auto_probe: Array2<f64>,
    pub auto_conjugate: Array2<f64>,
}

/// Averaged maps of a run, before normalization.
#[derive(Debug, Clone)]
pub struct DecodedMaps {
    pub cross: CorrelationMap,
    pub auto_probe: CorrelationMap,
    pub auto_conjugate: CorrelationMap,
    pub pairs: usize,
    /// Beam totals of every frame, for the squeezing estimate.
    pub window_sums: WindowSums,
}

#[derive(Debug, Clone)]
struct DecodeSums {
    cross: MapAverage,
    auto_probe: MapAverage,
    auto_conjugate: MapAverage,
    window_sums: WindowSums,
}

impl DecodeSums {
    fn new(dim: (usize, usize)) -> Self {
        Self {
            cross: MapAverage::new(dim),
            auto_probe: MapAverage::new(dim),
            auto_conjugate: MapAverage::new(dim),
            window_sums: WindowSums::default(),
        }
    }

    fn push(&mut self, (m, pair): &(PairMaps, FramePair)) -> Result<()> {
        self.window_sums.push(pair);
        self.cross.push(&m.cross)?;
        self.auto_probe.push(&m.auto_probe)?;
        self.auto_conjugate.push(&m.auto_conjugate)
    }

    fn finish(self) -> Result<DecodedMaps> {
        Ok(DecodedMaps {
            cross: self.cross.mean()?,
            auto_probe: self.auto_probe.mean()?,
            auto_conjugate: self.auto_conjugate.mean()?,
            pairs: self.cross.count(),
            window_sums: self.window_sums,
        })
    }
}

/// Per-pair map computation for one window geometry.
pub struct Decoder {
    cfg: AnalysisConfig,
    engine: CorrelationEngine,
}

impl Decoder {
    pub fn new(window: (usize, usize), cfg: &AnalysisConfig) -> Result<Self> {
        Ok(Self { cfg: *cfg, engine: CorrelationEngine::new(window, cfg)? })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.cfg
    }

    pub fn engine(&self) -> &CorrelationEngine {
        &self.engine
    }

    /// Maps of a pair of fluctuation images.
    pub fn image_maps(&self, probe: &Array2<f64>, conjugate: &Array2<f64>) -> Result<PairMaps> {
        let r = self.cfg.exclusion_radius;
        Ok(PairMaps {
            cross: cross_correlation_map(&self.engine, probe.view(), conjugate.view())?.into_values(),
            auto_probe: auto_correlation_map(&self.engine, probe.view(), r)?.into_values(),
            auto_conjugate: auto_correlation_map(&self.engine, conjugate.view(), r)?.into_values(),
        })
    }

    pub fn pair_maps(&self, pair: &FramePair) -> Result<PairMaps> {
        let (p, c) = frame_difference(pair)?;
        self.image_maps(&p.data, &c.data)
    }

    /// Averages a sequential stream of pairs.
    pub fn decode_stream(&self, pairs: impl IntoIterator<Item = Result<FramePair>>) -> Result<DecodedMaps> {
        let limit = self.cfg.n_pairs.unwrap_or(usize::MAX);
        let mut sums = DecodeSums::new(self.engine.map_dim());
        for pair in pairs.into_iter().take(limit) {
            let pair = pair?;
            sums.push(&(self.pair_maps(&pair)?, pair))?;
        }
        sums.finish()
    }

    /// Averages a synthetic acquisition, computing pairs in parallel.
    pub fn decode_acquisition(&self, acq: &Acquisition<'_>) -> Result<DecodedMaps> {
        if let Some(n) = self.cfg.n_pairs {
            if n > acq.len() {
                return Err(Error::Config(format!("{n} pairs requested from an acquisition of {}", acq.len())));
            }
        }
        let count = self.cfg.n_pairs.unwrap_or(acq.len());
        let sums = acq.map_fold_first(
            count,
            |pair| Ok((self.pair_maps(&pair)?, pair)),
            Ok(DecodeSums::new(self.engine.map_dim())),
            |acc, m| acc.and_then(|mut s| s.push(&m).map(|_| s)),
        )??;
        sums.finish()
    }
}

#[cfg(test)]
mod tests;
