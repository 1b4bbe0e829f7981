use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyze::AnalysisConfig;
use crate::cgh::{InitialGuess, OptimizerConfig};
use crate::error::{Error, Result};
use crate::optics::OpticalConfig;
use crate::synth::{DetectorModel, MIN_FRAME_SEPARATION_S};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Built-in "OU" glyph.
    Glyph,
    TwoSpots,
    /// Grayscale PGM amplitude, optionally with a phase image.
    Image,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    pub kind: TargetKind,
    pub path: Option<PathBuf>,
    /// PGM whose gray levels map linearly onto `[0, 2π)`.
    pub phase_path: Option<PathBuf>,
    /// Half-width of the square signal window, samples; `grid/4` if unset.
    pub signal_half: Option<f64>,
    pub separation: f64,
    pub spot_radius: f64,
    pub signal_radius: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self { kind: TargetKind::Glyph, path: None, phase_path: None, signal_half: None, separation: 11.0, spot_radius: 2.25, signal_radius: 6.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiskConfig {
    /// Radius in samples; 2% of the grid edge if unset.
    pub radius: Option<f64>,
    /// Pump phase offset applied through the disk after optimization.
    pub delta_phi_p: f64,
}

impl Default for DiskConfig {
    fn default() -> Self {
        Self { radius: None, delta_phi_p: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HologramConfig {
    /// Starting phase; a defocus spreading the pump over the signal window if unset.
    pub init: Option<InitialGuess>,
    /// Scale the optimized phase to minimize the zero order before export.
    pub compress: bool,
    pub compression_range: [f64; 2],
}

impl Default for HologramConfig {
    fn default() -> Self {
        Self { init: None, compress: false, compression_range: [0.85, 1.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Convolutional sampler, any window size.
    Conv,
    /// Exact Schmidt decomposition, windows up to 64×64.
    Schmidt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoConfig {
    pub waist_px: f64,
    /// Detected counts at the LO centers; 90% of saturation if unset.
    pub peak_counts: Option<f64>,
}

impl Default for LoConfig {
    fn default() -> Self {
        Self { waist_px: 160.0, peak_counts: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisConfig {
    pub n_pairs: usize,
    /// Pair `i` is seeded with `seed + i`.
    pub seed: u64,
    pub sampler: SamplerKind,
    /// Edge of the square correlated window around each LO, pixels.
    pub window: usize,
    /// Sub-samples per SLM pixel edge when sampling the pump (odd).
    pub oversample: usize,
    /// Schmidt truncation relative to the largest singular value.
    pub schmidt_epsilon: f64,
    pub detector: DetectorModel,
    pub lo: LoConfig,
    /// Write frame files; otherwise the pipeline decodes in memory.
    pub write_frames: bool,
    /// Refuse to write more frame data than this.
    pub max_frame_bytes: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            n_pairs: 2000,
            seed: 1,
            sampler: SamplerKind::Conv,
            window: 128,
            oversample: 3,
            schmidt_epsilon: 1e-3,
            detector: DetectorModel::default(),
            lo: LoConfig::default(),
            write_frames: true,
            max_frame_bytes: 2_000_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemporalConfig {
    pub samples: usize,
    pub seed: u64,
    pub efficiency: f64,
    pub seed_photons: f64,
    /// Scattered pump counts per sample, as a fraction of the seed photons
    /// times the diffracted (non-zero-order) share of the hologram.
    pub scatter_fraction: f64,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self { samples: 20_000, seed: 7, efficiency: 1.0, seed_photons: 1e6, scatter_fraction: 0.02 }
    }
}

/// The glyph cost keeps creeping down by ~1e-5 per 25 iterations long after
/// the pattern has settled, so runs stop well before that regime.
pub const PIPELINE_STAGNATION_TOL: f64 = 1e-4;

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Hologram grid edge, samples.
    pub grid: usize,
    /// Derive the SLM pitch and pump waist from `grid` so one far-field
    /// sample is one camera pixel; `false` takes `optics` as written.
    pub desk_scale: bool,
    pub optics: OpticalConfig,
    pub target: TargetConfig,
    pub optimizer: OptimizerConfig,
    pub hologram: HologramConfig,
    pub disk: DiskConfig,
    pub synthesis: SynthesisConfig,
    pub analysis: AnalysisConfig,
    pub temporal: TemporalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("run"),
            grid: 128,
            desk_scale: true,
            optics: OpticalConfig::default(),
            target: TargetConfig::default(),
            optimizer: OptimizerConfig { stagnation_tol: PIPELINE_STAGNATION_TOL, ..OptimizerConfig::default() },
            hologram: HologramConfig::default(),
            disk: DiskConfig::default(),
            synthesis: SynthesisConfig::default(),
            analysis: AnalysisConfig::default(),
            temporal: TemporalConfig::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `a.b.c = value` in a TOML tree, creating tables on the way.
fn set_dotted(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key '{key}'")));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| Error::Config(format!("override '{key}': '{p}' is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Parses TOML text, applies `key=value` overrides, and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: toml::Table = text.parse().map_err(|e| Error::Config(format!("config: {e}")))?;
        // Pipeline defaults that differ from the library's, filled in before
        // a partial section falls back to the library value.
        let opt = root.entry("optimizer").or_insert_with(|| toml::Value::Table(toml::Table::new()));
        if let Some(t) = opt.as_table_mut() {
            t.entry("stagnation_tol").or_insert(toml::Value::Float(PIPELINE_STAGNATION_TOL));
        }
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            set_dotted(&mut root, k.trim(), parse_value(v.trim()))?;
        }
        let cfg: PipelineConfig = root.try_into().map_err(|e: toml::de::Error| Error::Config(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Optics actually used: desk scaling applied when enabled.
    pub fn effective_optics(&self) -> OpticalConfig {
        if self.desk_scale {
            let d = OpticalConfig::desk(self.grid);
            OpticalConfig { slm_pixel: d.slm_pixel, pump_waist_radius: d.pump_waist_radius, ..self.optics.clone() }
        } else {
            self.optics.clone()
        }
    }

    /// Checks every stage's preconditions before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.grid < 16 || !self.grid.is_multiple_of(2) {
            return Err(Error::Config(format!("grid must be even and at least 16, got {}", self.grid)));
        }
        self.effective_optics().validate()?;
        if !(self.optics.gain > 1.0) {
            return Err(Error::Config(format!("optics.gain must exceed 1, got {}", self.optics.gain)));
        }
        self.optimizer.validate()?;
        let t = &self.target;
        match t.kind {
            TargetKind::Image => match &t.path {
                None => return Err(Error::Config("target.path is required for image targets".into())),
                Some(p) if !p.is_file() => return Err(Error::Config(format!("target image {} does not exist", p.display()))),
                _ => {}
            },
            TargetKind::TwoSpots => {
                if !(t.spot_radius > 0.0 && t.signal_radius > 0.0 && t.separation >= 0.0) {
                    return Err(Error::Config("two-spot geometry must be positive".into()));
                }
            }
            TargetKind::Glyph => {}
        }
        if let Some(p) = &t.phase_path {
            if !p.is_file() {
                return Err(Error::Config(format!("target phase image {} does not exist", p.display())));
            }
        }
        if let Some(r) = self.disk.radius {
            if !(r >= 0.0 && r < self.grid as f64 / 2.0) {
                return Err(Error::Config(format!("disk.radius must lie in [0, {}), got {r}", self.grid / 2)));
            }
        }
        if !self.disk.delta_phi_p.is_finite() {
            return Err(Error::Config("disk.delta_phi_p must be finite".into()));
        }
        let [lo, hi] = self.hologram.compression_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!("hologram.compression_range must satisfy 0 < lo <= hi <= 1, got [{lo}, {hi}]")));
        }
        let s = &self.synthesis;
        if s.n_pairs == 0 {
            return Err(Error::Config("synthesis.n_pairs must be positive".into()));
        }
        if s.oversample.is_multiple_of(2) {
            return Err(Error::Config(format!("synthesis.oversample must be odd, got {}", s.oversample)));
        }
        if s.window == 0 {
            return Err(Error::Config("synthesis.window must be positive".into()));
        }
        if s.sampler == SamplerKind::Schmidt && s.window * s.window > crate::synth::MAX_EXACT_DIM {
            return Err(Error::Config(format!("a {0}x{0} window is too large for the exact sampler; use sampler = \"conv\"", s.window)));
        }
        if !(s.schmidt_epsilon > 0.0 && s.schmidt_epsilon < 1.0) {
            return Err(Error::Config("synthesis.schmidt_epsilon must lie in (0, 1)".into()));
        }
        s.detector.validate()?;
        if s.detector.frame_separation_s < MIN_FRAME_SEPARATION_S {
            return Err(Error::Config("frame separation below the camera floor".into()));
        }
        if !(s.lo.waist_px > 0.0) || s.lo.peak_counts.is_some_and(|p| !(p > 0.0 && p <= s.detector.saturation)) {
            return Err(Error::Config("synthesis.lo needs a positive waist and a peak within saturation".into()));
        }
        // The far field must reach the sums of window coordinates.
        let half_span_px = self.grid * s.oversample / 2;
        if s.window > half_span_px {
            return Err(Error::Config(format!(
                "window {} exceeds the {half_span_px}-pixel reach of a {}-sample grid oversampled {}x",
                s.window, self.grid, s.oversample
            )));
        }
        self.analysis.validate()?;
        let a = &self.analysis;
        for axis in 0..2 {
            if a.patch[axis] + 2 * a.max_shift[axis] > s.window {
                return Err(Error::Config(format!(
                    "analysis patch {:?} with shift {:?} does not fit the {}-pixel window",
                    a.patch, a.max_shift, s.window
                )));
            }
        }
        let tc = &self.temporal;
        if tc.samples < 2 || !(tc.efficiency > 0.0 && tc.efficiency <= 1.0) || !(tc.seed_photons > 0.0) || !(tc.scatter_fraction >= 0.0) {
            return Err(Error::Config("temporal settings out of range".into()));
        }
        Ok(())
    }
}
