//! Stage implementations shared by the subcommands.
//!
//! Every stage reads its inputs from and writes its outputs to the run
//! directory, so a full pipeline is the same sequence of calls as running
//! the stages one by one.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use serde::Serialize;

use super::config::{PipelineConfig, SamplerKind, TargetKind};
use crate::analyze::{apply_normalization, estimate_squeezing_trace, fidelity, DecodedMaps, Decoder, FidelityReport, SqueezingEstimate};
use crate::cgh::{
    apply_constant_phase_disk, conjugate_gradient_minimize, dc_fraction, dequantize, patterns, phase_compress, quantize_8bit, read_hologram,
    write_hologram, CghResult, ConstantDisk, HologramSidecar, InitialGuess, QuantizedHologram, TargetSpec,
};
use crate::error::{Error, Result};
use crate::field::{embed_centered, refine_centered, ComplexField};
use crate::optics::{gaussian_pump, phi_at_pixels, predict_cross_correlation, structured_pump, CorrelationMap, OpticalConfig, PixelRoi};
use crate::synth::{
    build_kernel, read_pair, schmidt_decompose, write_pair, Acquisition, BeamLayout, ConvSampler, DetectorModel, Fluctuations, FrameManifest,
    FramePair, LocalOscillator, QuadratureSource, SchmidtModel, TemporalModel, Trace, CLAMP_FLAG_FRACTION,
};

pub const CONFIG_FILE: &str = "config.toml";
pub const RUN_FILE: &str = "run.json";
pub const HOLOGRAM_IMAGE: &str = "hologram.pgm";
pub const HOLOGRAM_SIDECAR: &str = "hologram.json";
pub const COST_HISTORY: &str = "cost_history.csv";
pub const PREDICTION: &str = "prediction";
pub const FRAMES_DIR: &str = "frames";
pub const MANIFEST: &str = "manifest.json";
pub const TEMPORAL_SIGNAL: &str = "temporal_signal.csv";
pub const TEMPORAL_BACKGROUND: &str = "temporal_background.csv";
pub const TEMPORAL_CONTROL: &str = "temporal_control.csv";
pub const DECODE_DIR: &str = "decode";

/// Bytes of one pair file beyond the two frames.
const PAIR_HEADER_BYTES: u64 = 128;

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| io_err(path, e))?))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Reproduction metadata written beside every stage's outputs.
#[derive(Debug, Serialize)]
struct RunInfo<'a> {
    tool: &'a str,
    version: &'a str,
    synthesis_seed: u64,
    temporal_seed: u64,
    init: Option<InitialGuess>,
    config: &'a str,
}

/// Writes the resolved config and the run metadata into the run directory.
pub fn write_run_metadata(cfg: &PipelineConfig) -> Result<()> {
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let mut w = create(&dir.join(CONFIG_FILE))?;
    w.write_all(cfg.to_toml()?.as_bytes())?;
    w.flush()?;
    let info = RunInfo {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        synthesis_seed: cfg.synthesis.seed,
        temporal_seed: cfg.temporal.seed,
        init: Some(initial_guess(cfg)),
        config: CONFIG_FILE,
    };
    let mut w = create(&dir.join(RUN_FILE))?;
    serde_json::to_writer_pretty(&mut w, &info).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn pgm_token(r: &mut impl BufRead) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        let ch = byte[0] as char;
        if ch == '#' && tok.is_empty() {
            r.read_line(&mut String::new())?;
        } else if ch.is_ascii_whitespace() {
            if !tok.is_empty() {
                return Ok(tok);
            }
        } else {
            tok.push(ch);
        }
    }
}

/// Reads a plain (P2) or binary (P5, 8 or 16 bit) graymap scaled to `[0, 1]`.
pub fn read_graymap(path: &Path) -> Result<Array2<f64>> {
    let mut r = open(path)?;
    let bad = |what: &str| Error::Format(format!("{}: {what}", path.display()));
    let magic = pgm_token(&mut r)?;
    let mut num = || -> Result<usize> { pgm_token(&mut r)?.parse().map_err(|_| bad("bad graymap header")) };
    let (cols, rows, maxval) = (num()?, num()?, num()?);
    if cols == 0 || rows == 0 || maxval == 0 || maxval > 65535 {
        return Err(bad("bad graymap header"));
    }
    let n = rows * cols;
    let raw: Vec<u32> = match magic.as_str() {
        "P5" => {
            let width = if maxval < 256 { 1 } else { 2 };
            let mut buf = vec![0u8; n * width];
            r.read_exact(&mut buf).map_err(|_| bad("truncated graymap"))?;
            if width == 1 {
                buf.into_iter().map(u32::from).collect()
            } else {
                buf.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as u32).collect()
            }
        }
        "P2" => (0..n).map(|_| pgm_token(&mut r).ok().and_then(|t| t.parse().ok()).ok_or_else(|| bad("truncated graymap"))).collect::<Result<_>>()?,
        _ => return Err(bad("not a graymap")),
    };
    Ok(Array2::from_shape_vec((rows, cols), raw).expect("sized buffer").mapv(|v| v as f64 / maxval as f64))
}

fn fit_to_grid(a: Array2<f64>, n: usize, path: &Path) -> Result<Array2<f64>> {
    let (r, c) = a.dim();
    if r > n || c > n {
        return Err(Error::Sizing(format!("{} is {r}x{c}, larger than the {n}x{n} grid", path.display())));
    }
    Ok(embed_centered(&a, n, n))
}

/// Builds the target with its signal and noise masks.
pub fn load_target(cfg: &PipelineConfig) -> Result<TargetSpec> {
    let n = cfg.grid;
    let t = &cfg.target;
    let half = t.signal_half.unwrap_or(n as f64 / 4.0);
    let phase = match &t.phase_path {
        Some(p) => Some(fit_to_grid(read_graymap(p)?, n, p)?.mapv(|v| v * 2.0 * std::f64::consts::PI)),
        None => None,
    };
    match t.kind {
        TargetKind::Glyph if phase.is_none() => patterns::ou_glyph(n, 1.0),
        TargetKind::TwoSpots if phase.is_none() => patterns::two_spots(n, t.separation, t.spot_radius, t.signal_radius, 1.0),
        TargetKind::Image => {
            let path = t.path.as_ref().ok_or_else(|| Error::Config("target.path is required for image targets".into()))?;
            patterns::from_amplitude(&fit_to_grid(read_graymap(path)?, n, path)?, phase.as_ref(), half, 1.0)
        }
        _ => Err(Error::Config("target.phase_path applies to image targets only".into())),
    }
}

/// Flat-phase Gaussian pump on the hologram grid.
pub fn pump_profile(cfg: &PipelineConfig) -> Result<ComplexField> {
    let o = cfg.effective_optics();
    gaussian_pump(cfg.grid, o.slm_pixel, o.pump_waist_radius)
}

pub fn disk(cfg: &PipelineConfig) -> ConstantDisk {
    let mut d = ConstantDisk::default_for(cfg.grid);
    if let Some(r) = cfg.disk.radius {
        d.radius = r;
    }
    d
}

/// Configured start, or a defocus spreading the pump over about a third of
/// the grid.
pub fn initial_guess(cfg: &PipelineConfig) -> InitialGuess {
    cfg.hologram.init.unwrap_or_else(|| {
        let o = cfg.effective_optics();
        InitialGuess::defocus(cfg.grid, o.pump_waist_radius / o.slm_pixel, cfg.grid as f64 * 40.0 / 128.0)
    })
}

/// Hologram design outcome, ready for export.
pub struct Optimized {
    pub result: CghResult,
    pub hologram: QuantizedHologram,
    pub sidecar: HologramSidecar,
}

impl Optimized {
    pub fn converged(&self) -> bool {
        self.result.converged()
    }
}

/// Runs the optimizer and, when enabled, zero-order compression.
pub fn optimize(cfg: &PipelineConfig, target: &TargetSpec) -> Result<Optimized> {
    let e0 = pump_profile(cfg)?;
    let init = apply_constant_phase_disk(&initial_guess(cfg).build(cfg.grid), disk(cfg))?;
    let result = conjugate_gradient_minimize(&e0, target, &init, &cfg.optimizer)?;
    let (hologram, factor) = if cfg.hologram.compress {
        let [lo, hi] = cfg.hologram.compression_range;
        let c = phase_compress(&result.phase, &e0, (lo, hi))?;
        (quantize_8bit(&c.phase), c.factor)
    } else {
        (result.quantized.clone(), 1.0)
    };
    let sidecar = HologramSidecar {
        n: cfg.grid,
        pitch: cfg.effective_optics().slm_pixel,
        disk: hologram.disk,
        compression_factor: factor,
        final_overlap: result.final_overlap,
        termination: result.termination,
        cost_history: result.cost_history.clone(),
    };
    Ok(Optimized { result, hologram, sidecar })
}

/// Writes the hologram image, its sidecar and the cost history.
pub fn write_optimized(dir: &Path, opt: &Optimized) -> Result<()> {
    ensure_dir(dir)?;
    let mut pgm = create(&dir.join(HOLOGRAM_IMAGE))?;
    let mut json = create(&dir.join(HOLOGRAM_SIDECAR))?;
    write_hologram(&opt.hologram, &opt.sidecar, &mut pgm, &mut json)?;
    pgm.flush()?;
    json.flush()?;
    let mut w = create(&dir.join(COST_HISTORY))?;
    writeln!(w, "iteration,cost")?;
    for (i, c) in &opt.sidecar.cost_history {
        writeln!(w, "{i},{c:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a hologram; the sidecar sits beside the image with a `.json`
/// extension.
pub fn load_hologram(cfg: &PipelineConfig, image: &Path) -> Result<(QuantizedHologram, HologramSidecar)> {
    let (holo, side) = read_hologram(open(image)?, open(&image.with_extension("json"))?)?;
    let pitch = cfg.effective_optics().slm_pixel;
    if side.n != cfg.grid || (side.pitch - pitch).abs() > 1e-9 * pitch {
        return Err(Error::Config(format!(
            "hologram is {0}x{0} at pitch {1:e} m but the config expects {2}x{2} at {3:e} m",
            side.n, side.pitch, cfg.grid, pitch
        )));
    }
    Ok((holo, side))
}

pub fn hologram_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_dir.join(HOLOGRAM_IMAGE)
}

/// Pump leaving the device: the 8-bit phase with the disk at `Δφ_p`, each
/// device pixel sampled `oversample × oversample` times so the far field
/// reaches the whole correlated window.
pub fn slm_pump(cfg: &PipelineConfig, holo: &QuantizedHologram) -> Result<ComplexField> {
    let o = cfg.effective_optics();
    let m = cfg.synthesis.oversample;
    let phase = dequantize(holo)?.with_disk_value(cfg.disk.delta_phi_p)?;
    let fine = refine_centered(phase.phi(), m)?;
    let e0 = gaussian_pump(cfg.grid * m, o.slm_pixel / m as f64, o.pump_waist_radius)?;
    structured_pump(&e0, &fine)
}

pub fn prediction_roi(cfg: &PipelineConfig) -> PixelRoi {
    PixelRoi { half_rows: cfg.analysis.max_shift[0], half_cols: cfg.analysis.max_shift[1] }
}

/// Analytic cross-correlation of a hologram at camera pitch.
pub fn predict(cfg: &PipelineConfig, holo: &QuantizedHologram) -> Result<CorrelationMap> {
    predict_cross_correlation(&slm_pump(cfg, holo)?, cfg.disk.delta_phi_p, &cfg.effective_optics(), prediction_roi(cfg))
}

pub fn write_map(dir: &Path, stem: &str, map: &CorrelationMap) -> Result<()> {
    ensure_dir(dir)?;
    let mut csv = create(&dir.join(format!("{stem}.csv")))?;
    map.write_csv(&mut csv)?;
    csv.flush()?;
    let mut img = create(&dir.join(format!("{stem}.pgm")))?;
    map.write_image(&mut img)?;
    img.flush()?;
    Ok(())
}

/// The configured quadrature sampler.
pub enum Sampler {
    Conv(ConvSampler),
    Schmidt(SchmidtModel),
}

impl Sampler {
    pub fn source(&self) -> &dyn QuadratureSource {
        match self {
            Sampler::Conv(s) => s,
            Sampler::Schmidt(s) => s,
        }
    }
}

pub fn build_sampler(cfg: &PipelineConfig, pump: &ComplexField) -> Result<Sampler> {
    let o: OpticalConfig = cfg.effective_optics();
    let w = cfg.synthesis.window;
    match cfg.synthesis.sampler {
        SamplerKind::Conv => Ok(Sampler::Conv(ConvSampler::new(&phi_at_pixels(pump, &o, PixelRoi::square(w - 1))?, o.gain)?)),
        SamplerKind::Schmidt => {
            let kernel = build_kernel(pump, &o, w, w)?;
            Ok(Sampler::Schmidt(schmidt_decompose(&kernel, cfg.synthesis.schmidt_epsilon, o.gain)?))
        }
    }
}

pub fn local_oscillator(cfg: &PipelineConfig) -> LocalOscillator {
    let s = &cfg.synthesis;
    let mut lo = LocalOscillator::centered(&s.detector);
    lo.waist_px = s.lo.waist_px;
    if let Some(p) = s.lo.peak_counts {
        lo.peak_counts = p;
    }
    lo.delta_phi_p = cfg.disk.delta_phi_p;
    lo
}

pub fn layout(cfg: &PipelineConfig) -> Result<BeamLayout> {
    let w = cfg.synthesis.window;
    let l = BeamLayout::around(&local_oscillator(cfg), w, w)?;
    l.validate(&cfg.synthesis.detector)?;
    Ok(l)
}

/// Temporal model for the encoding: scattered pump light grows with the
/// share of the pump the hologram diffracts out of the zero order.
pub fn temporal_model(cfg: &PipelineConfig, holo: &QuantizedHologram) -> Result<TemporalModel> {
    let t = &cfg.temporal;
    let diffracted = 1.0 - dc_fraction(&pump_profile(cfg)?, dequantize(holo)?.phi());
    Ok(TemporalModel {
        gain: cfg.optics.gain,
        efficiency: t.efficiency,
        seed_photons: t.seed_photons,
        background: t.scatter_fraction * t.seed_photons * diffracted,
    })
}

fn write_trace(path: &Path, t: &Trace) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "probe,conjugate")?;
    for (p, c) in t.probe.iter().zip(&t.conjugate) {
        writeln!(w, "{p:?},{c:?}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let r = open(path)?;
    let mut t = Trace { probe: Vec::new(), conjugate: Vec::new() };
    for (i, line) in r.lines().enumerate().skip(1) {
        let line = line?;
        let parse = |s: Option<&str>| s.and_then(|v| v.trim().parse::<f64>().ok());
        let mut it = line.split(',');
        match (parse(it.next()), parse(it.next())) {
            (Some(p), Some(c)) => {
                t.probe.push(p);
                t.conjugate.push(c);
            }
            _ => return Err(Error::Format(format!("{}: line {} is not two numbers", path.display(), i + 1))),
        }
    }
    Ok(t)
}

/// Outcome of the synthesis stage.
pub struct Synthesized {
    pub manifest: Option<FrameManifest>,
    pub pairs: usize,
    pub seconds: f64,
}

fn frame_file(index: u64) -> String {
    format!("pair_{index:06}.tbfp")
}

/// Renders the frame stream (to disk when enabled) and the temporal traces.
pub fn synthesize(cfg: &PipelineConfig, holo: &QuantizedHologram) -> Result<Synthesized> {
    let s = &cfg.synthesis;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let (rows, cols) = (s.detector.rows as u64, s.detector.cols as u64);
    let needed = s.n_pairs as u64 * (PAIR_HEADER_BYTES + 4 * rows * cols);
    if s.write_frames && needed > s.max_frame_bytes {
        return Err(Error::Config(format!(
            "{} pairs need {needed} bytes of frames, above synthesis.max_frame_bytes = {}",
            s.n_pairs, s.max_frame_bytes
        )));
    }
    let started = Instant::now();
    let sampler = build_sampler(cfg, &slm_pump(cfg, holo)?)?;
    let lo = local_oscillator(cfg);
    let layout = layout(cfg)?;
    let acq = Acquisition::new(&lo, Fluctuations::Quadrature(sampler.source()), layout, &s.detector, s.seed, s.n_pairs)?;
    let manifest = if s.write_frames {
        let fdir = dir.join(FRAMES_DIR);
        ensure_dir(&fdir)?;
        let mut files = Vec::with_capacity(s.n_pairs);
        let clamped = acq.map_fold(
            |pair| -> Result<(u64, u64)> {
                let name = frame_file(pair.index);
                let path = fdir.join(&name);
                let mut w = create(&path)?;
                write_pair(&pair, &mut w)?;
                w.flush().map_err(|e| io_err(&path, e))?;
                Ok((pair.index, pair.clamped))
            },
            0u64,
            |acc, (index, c)| {
                files.push(frame_file(index));
                acc + c
            },
        )?;
        let total = (s.n_pairs as u64 * 2 * (layout.probe.rows * layout.probe.cols + layout.conjugate.rows * layout.conjugate.cols) as u64) as f64;
        let fraction = clamped as f64 / total;
        let manifest = FrameManifest {
            detector: s.detector,
            local_oscillator: lo,
            layout,
            seed_base: s.seed,
            files,
            clamped_fraction: fraction,
            flagged: fraction > CLAMP_FLAG_FRACTION,
        };
        let mpath = fdir.join(MANIFEST);
        let mut w = create(&mpath)?;
        serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Some(manifest)
    } else {
        None
    };
    write_temporal(cfg, holo)?;
    Ok(Synthesized { manifest, pairs: s.n_pairs, seconds: started.elapsed().as_secs_f64() })
}

/// Writes signal, scattered-background and coherent-control traces.
pub fn write_temporal(cfg: &PipelineConfig, holo: &QuantizedHologram) -> Result<()> {
    let t = &cfg.temporal;
    let model = temporal_model(cfg, holo)?;
    let dir = &cfg.output_dir;
    write_trace(&dir.join(TEMPORAL_SIGNAL), &model.sample(t.samples, t.seed)?)?;
    write_trace(&dir.join(TEMPORAL_BACKGROUND), &model.sample_background(t.samples, t.seed.wrapping_add(1))?)?;
    write_trace(&dir.join(TEMPORAL_CONTROL), &model.sample_coherent(t.samples, t.seed.wrapping_add(2))?)?;
    Ok(())
}

pub fn manifest_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_dir.join(FRAMES_DIR).join(MANIFEST)
}

pub fn read_manifest(path: &Path) -> Result<FrameManifest> {
    let m: FrameManifest = serde_json::from_reader(open(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    m.detector.validate().map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    m.layout.validate(&m.detector).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if m.files.is_empty() {
        return Err(Error::Format(format!("{}: lists no frame files", path.display())));
    }
    Ok(m)
}

/// Frame pairs listed in a manifest, read lazily in order.
pub fn manifest_pairs<'a>(path: &'a Path, m: &'a FrameManifest) -> impl Iterator<Item = Result<FramePair>> + 'a {
    let dir = path.parent().unwrap_or(Path::new("."));
    m.files.iter().map(move |f| {
        let p = dir.join(f);
        let pair = read_pair(open(&p)?).map_err(|e| match e {
            Error::Io(io) => io_err(&p, io),
            other => Error::Format(format!("{}: {other}", p.display())),
        })?;
        if pair.layout != m.layout {
            return Err(Error::Format(format!("{}: window layout differs from the manifest", p.display())));
        }
        Ok(pair)
    })
}

/// All decode products.
pub struct Decoded {
    pub maps: DecodedMaps,
    pub cross: CorrelationMap,
    pub auto_probe: CorrelationMap,
    pub auto_conjugate: CorrelationMap,
    pub fidelity: Option<[FidelityReport; 3]>,
    pub frames_squeezing: Result<SqueezingEstimate>,
    pub temporal: Option<TemporalSqueezing>,
}

pub struct TemporalSqueezing {
    pub signal: SqueezingEstimate,
    pub control: SqueezingEstimate,
}

fn finish_decode(cfg: &PipelineConfig, maps: DecodedMaps, target: Option<&TargetSpec>, det: &DetectorModel) -> Result<Decoded> {
    let frames_squeezing = maps.window_sums.estimate(det);
    let norm = cfg.analysis.normalization;
    let cross = apply_normalization(&maps.cross, norm)?;
    let auto_probe = apply_normalization(&maps.auto_probe, norm)?;
    let auto_conjugate = apply_normalization(&maps.auto_conjugate, norm)?;
    let fid = match target {
        Some(t) => {
            let with_pairs = |m: &CorrelationMap| fidelity(m, t).map(|f| FidelityReport { pairs: Some(maps.pairs), ..f });
            Some([with_pairs(&cross)?, with_pairs(&auto_probe)?, with_pairs(&auto_conjugate)?])
        }
        None => None,
    };
    let dir = &cfg.output_dir;
    let temporal = if dir.join(TEMPORAL_SIGNAL).is_file() {
        let bg = read_trace(&dir.join(TEMPORAL_BACKGROUND))?;
        Some(TemporalSqueezing {
            signal: estimate_squeezing_trace(&read_trace(&dir.join(TEMPORAL_SIGNAL))?, Some(&bg), 1.0)?,
            control: estimate_squeezing_trace(&read_trace(&dir.join(TEMPORAL_CONTROL))?, None, 1.0)?,
        })
    } else {
        None
    };
    Ok(Decoded { maps, cross, auto_probe, auto_conjugate, fidelity: fid, frames_squeezing, temporal })
}

/// Decodes the frame files listed in a manifest.
pub fn decode_manifest(cfg: &PipelineConfig, manifest: &Path, target: Option<&TargetSpec>) -> Result<Decoded> {
    let m = read_manifest(manifest)?;
    let w = m.layout.probe;
    let decoder = Decoder::new((w.rows, w.cols), &cfg.analysis)?;
    let maps = decoder.decode_stream(manifest_pairs(manifest, &m))?;
    finish_decode(cfg, maps, target, &m.detector)
}

/// Synthesizes and decodes in memory, without frame files.
pub fn decode_in_memory(cfg: &PipelineConfig, holo: &QuantizedHologram, target: Option<&TargetSpec>) -> Result<Decoded> {
    let s = &cfg.synthesis;
    let sampler = build_sampler(cfg, &slm_pump(cfg, holo)?)?;
    let lo = local_oscillator(cfg);
    let layout = layout(cfg)?;
    let acq = Acquisition::new(&lo, Fluctuations::Quadrature(sampler.source()), layout, &s.detector, s.seed, s.n_pairs)?;
    let decoder = Decoder::new((layout.probe.rows, layout.probe.cols), &cfg.analysis)?;
    let maps = decoder.decode_acquisition(&acq)?;
    finish_decode(cfg, maps, target, &s.detector)
}

fn write_prefixed(w: &mut impl Write, prefix: &str, est: &SqueezingEstimate) -> Result<()> {
    let mut buf = Vec::new();
    est.write(&mut buf)?;
    for line in String::from_utf8_lossy(&buf).lines() {
        writeln!(w, "{prefix}.{line}")?;
    }
    Ok(())
}

/// Writes maps, fidelity and squeezing reports into the decode directory.
pub fn write_decoded(cfg: &PipelineConfig, d: &Decoded) -> Result<PathBuf> {
    let dir = cfg.output_dir.join(DECODE_DIR);
    ensure_dir(&dir)?;
    write_map(&dir, "cross", &d.cross)?;
    write_map(&dir, "auto_probe", &d.auto_probe)?;
    write_map(&dir, "auto_conjugate", &d.auto_conjugate)?;
    if let Some(fid) = &d.fidelity {
        let mut w = create(&dir.join("fidelity.txt"))?;
        for (name, f) in ["cross", "auto_probe", "auto_conjugate"].iter().zip(fid) {
            let mut buf = Vec::new();
            f.write(&mut buf)?;
            for line in String::from_utf8_lossy(&buf).lines() {
                writeln!(w, "{name}.{line}")?;
            }
        }
        w.flush()?;
    }
    let mut w = create(&dir.join("squeezing.txt"))?;
    match &d.frames_squeezing {
        Ok(est) => write_prefixed(&mut w, "frames", est)?,
        Err(e) => writeln!(w, "frames.unavailable = {e}")?,
    }
    if let Some(t) = &d.temporal {
        write_prefixed(&mut w, "temporal", &t.signal)?;
        write_prefixed(&mut w, "control", &t.control)?;
    }
    w.flush()?;
    Ok(dir)
}
