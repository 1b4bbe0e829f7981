use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::synth::{DetectorModel, FramePair, Trace};

/// Below this many pairs (or trace samples) the interval is flagged as wide.
pub const MIN_CONFIDENT_SAMPLES: usize = 100;

/// Intensity-difference noise relative to shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezingEstimate {
    pub ratio: f64,
    pub db: f64,
    /// 95% interval on `db` from the χ² law of the variance estimate.
    pub ci_db: [f64; 2],
    pub samples: usize,
    pub wide_confidence: bool,
}

impl SqueezingEstimate {
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "ratio = {:.9}", self.ratio)?;
        writeln!(w, "db = {:.6}", self.db)?;
        writeln!(w, "ci_low_db = {:.6}", self.ci_db[0])?;
        writeln!(w, "ci_high_db = {:.6}", self.ci_db[1])?;
        writeln!(w, "samples = {}", self.samples)?;
        writeln!(w, "wide_confidence = {}", self.wide_confidence)?;
        Ok(())
    }
}

/// χ² quantile by the Wilson–Hilferty cube approximation.
fn chi2_quantile(k: f64, z: f64) -> f64 {
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + z * a.sqrt()).powi(3)
}

fn mean_var(v: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = v.clone().count();
    let m = v.clone().sum::<f64>() / n as f64;
    let var = v.map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (m, var, n)
}

fn estimate(ratio: f64, dof: usize, pairs: usize) -> Result<SqueezingEstimate> {
    if !(ratio > 0.0) {
        return Err(Error::Degenerate(format!("difference noise ratio {ratio} is not positive after subtraction")));
    }
    let k = dof as f64;
    let z = 1.959_963_984_540_054;
    let lo = ratio * k / chi2_quantile(k, z);
    let hi = ratio * k / chi2_quantile(k, -z);
    let db = |r: f64| 10.0 * r.log10();
    Ok(SqueezingEstimate { ratio, db: db(ratio), ci_db: [db(lo), db(hi)], samples: dof + 1, wide_confidence: pairs < MIN_CONFIDENT_SAMPLES })
}

/// `Var(N_pr − N_c) / (F²·(⟨N_pr⟩ + ⟨N_c⟩))` from paired time samples.
///
/// With a background-only trace, its difference variance and mean counts are
/// removed before forming the ratio.
pub fn estimate_squeezing_trace(trace: &Trace, background: Option<&Trace>, excess_noise_factor: f64) -> Result<SqueezingEstimate> {
    if trace.probe.len() != trace.conjugate.len() {
        return Err(Error::ShapeMismatch("probe and conjugate traces differ in length".into()));
    }
    if trace.len() < 2 {
        return Err(Error::Degenerate("at least two samples are needed".into()));
    }
    let stats = |t: &Trace| {
        let (_, vd, n) = mean_var(t.probe.iter().zip(&t.conjugate).map(|(p, c)| p - c));
        let (mp, _, _) = mean_var(t.probe.iter().copied());
        let (mc, _, _) = mean_var(t.conjugate.iter().copied());
        (vd, mp + mc, n)
    };
    let (mut vd, mut mean, n) = stats(trace);
    if let Some(bg) = background {
        if bg.len() < 2 {
            return Err(Error::Degenerate("background trace needs at least two samples".into()));
        }
        let (vb, mb, _) = stats(bg);
        vd -= vb;
        mean -= mb;
    }
    if !(mean > 0.0) {
        return Err(Error::Degenerate("no signal above background".into()));
    }
    estimate(vd / (excess_noise_factor.powi(2) * mean), n - 1, n)
}

/// Per-frame beam-window totals, the raw material of the frame-based
/// squeezing estimate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowSums {
    pub probe: Vec<f64>,
    pub conjugate: Vec<f64>,
    /// Pixels in both windows together.
    pub pixels: usize,
    pub pairs: usize,
}

impl WindowSums {
    pub fn push(&mut self, pair: &FramePair) {
        self.pairs += 1;
        for f in 0..2 {
            self.probe.push(pair.probe(f).iter().map(|&v| v as f64).sum::<f64>());
            self.conjugate.push(pair.conjugate(f).iter().map(|&v| v as f64).sum::<f64>());
        }
        self.pixels = pair.probe(0).len() + pair.conjugate(0).len();
    }

    /// Every frame is one sample; read noise is removed from the variance.
    pub fn estimate(&self, det: &DetectorModel) -> Result<SqueezingEstimate> {
        if self.probe.len() < 2 {
            return Err(Error::Degenerate("at least one frame pair is needed".into()));
        }
        let (_, vd, n) = mean_var(self.probe.iter().zip(&self.conjugate).map(|(p, c)| p - c));
        let mean = self.probe.iter().chain(&self.conjugate).sum::<f64>() / n as f64;
        let electronic = self.pixels as f64 * det.read_noise.powi(2);
        estimate((vd - electronic) / (det.excess_noise_factor.powi(2) * mean), n - 1, self.pairs)
    }
}

/// The same ratio from camera frames, with each beam integrated over its
/// window.
pub fn estimate_squeezing_frames(pairs: impl IntoIterator<Item = FramePair>, det: &DetectorModel) -> Result<SqueezingEstimate> {
    let mut sums = WindowSums::default();
    for pair in pairs {
        sums.push(&pair);
    }
    sums.estimate(det)
}
