//! Command-line front end.
//!
//! `twinbeam <optimize|predict|synthesize|decode|pipeline> [--config FILE]
//! [--set key=value]...`. Exit status: 0 success, 2 configuration error,
//! 3 numerical non-convergence, 4 I/O or malformed file.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{DiskConfig, HologramConfig, LoConfig, PipelineConfig, SamplerKind, SynthesisConfig, TargetConfig, TargetKind, TemporalConfig};

use crate::error::{Error, Result};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "twinbeam", version, about = "Structured-pump twin-beam correlation encoding: design, predict, synthesize, decode")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set synthesis.n_pairs=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run directory (same as `--set output_dir=...`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design the hologram; writes the image, sidecar and cost history.
    Optimize(Common),
    /// Analytic cross-correlation of a hologram.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Hologram image; the run directory's hologram when omitted.
        #[arg(long)]
        hologram: Option<PathBuf>,
    },
    /// Render frame pairs and temporal traces for a hologram.
    Synthesize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        hologram: Option<PathBuf>,
    },
    /// Correlation maps, fidelity and squeezing from a frame stream.
    Decode {
        #[command(flatten)]
        common: Common,
        /// Frame manifest; the run directory's when omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Skip the fidelity report.
        #[arg(long)]
        no_target: bool,
    },
    /// All stages in order.
    Pipeline(Common),
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Format(_) => EXIT_IO,
            Error::Degenerate(_) => EXIT_NONCONVERGENCE,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(out) = &common.out {
        let s = toml::Value::String(out.display().to_string()).to_string();
        overrides.push(format!("output_dir={s}"));
    }
    PipelineConfig::load(common.config.as_deref(), &overrides)
}

/// Stage outcome: whether every optimization that ran converged.
pub struct Status {
    pub converged: bool,
}

pub fn stage_optimize(cfg: &PipelineConfig) -> Result<Status> {
    let target = pipeline::load_target(cfg)?;
    pipeline::write_run_metadata(cfg)?;
    let opt = pipeline::optimize(cfg, &target)?;
    pipeline::write_optimized(&cfg.output_dir, &opt)?;
    eprintln!(
        "optimize: {} iterations, overlap {:.4}, {:?}",
        opt.sidecar.cost_history.last().map_or(0, |&(i, _)| i),
        opt.sidecar.final_overlap,
        opt.sidecar.termination
    );
    Ok(Status { converged: opt.converged() })
}

pub fn stage_predict(cfg: &PipelineConfig, hologram: Option<&std::path::Path>) -> Result<()> {
    let path = hologram.map(PathBuf::from).unwrap_or_else(|| pipeline::hologram_path(cfg));
    let (holo, _) = pipeline::load_hologram(cfg, &path)?;
    pipeline::write_run_metadata(cfg)?;
    let map = pipeline::predict(cfg, &holo)?;
    pipeline::write_map(&cfg.output_dir, pipeline::PREDICTION, &map)
}

pub fn stage_synthesize(cfg: &PipelineConfig, hologram: Option<&std::path::Path>) -> Result<()> {
    let path = hologram.map(PathBuf::from).unwrap_or_else(|| pipeline::hologram_path(cfg));
    let (holo, _) = pipeline::load_hologram(cfg, &path)?;
    pipeline::write_run_metadata(cfg)?;
    let out = pipeline::synthesize(cfg, &holo)?;
    eprintln!("synthesize: {} pairs in {:.2} s ({:.1} pairs/s)", out.pairs, out.seconds, out.pairs as f64 / out.seconds.max(1e-9));
    if let Some(m) = &out.manifest {
        if m.flagged {
            eprintln!("synthesize: warning: {:.2e} of window pixels were clamped at zero", m.clamped_fraction);
        }
    }
    Ok(())
}

pub fn stage_decode(cfg: &PipelineConfig, manifest: Option<&std::path::Path>, with_target: bool) -> Result<()> {
    let path = manifest.map(PathBuf::from).unwrap_or_else(|| pipeline::manifest_path(cfg));
    let target = if with_target { Some(pipeline::load_target(cfg)?) } else { None };
    pipeline::write_run_metadata(cfg)?;
    let d = pipeline::decode_manifest(cfg, &path, target.as_ref())?;
    report_decoded(cfg, &d)
}

fn report_decoded(cfg: &PipelineConfig, d: &pipeline::Decoded) -> Result<()> {
    let dir = pipeline::write_decoded(cfg, d)?;
    if let Some([c, a, _]) = &d.fidelity {
        eprintln!("decode: {} pairs, cross fidelity {:.3}, auto fidelity {:.3}", d.maps.pairs, c.coefficient, a.coefficient);
    }
    eprintln!("decode: reports in {}", dir.display());
    Ok(())
}

/// Runs every stage. With frame files disabled, synthesis and decoding
/// happen in memory.
pub fn stage_pipeline(cfg: &PipelineConfig) -> Result<Status> {
    let status = stage_optimize(cfg)?;
    stage_predict(cfg, None)?;
    if cfg.synthesis.write_frames {
        stage_synthesize(cfg, None)?;
        stage_decode(cfg, None, true)?;
    } else {
        let (holo, _) = pipeline::load_hologram(cfg, &pipeline::hologram_path(cfg))?;
        pipeline::write_temporal(cfg, &holo)?;
        let target = pipeline::load_target(cfg)?;
        let d = pipeline::decode_in_memory(cfg, &holo, Some(&target))?;
        report_decoded(cfg, &d)?;
    }
    Ok(status)
}

fn dispatch(cli: Cli) -> std::result::Result<(), Failure> {
    let finish = |s: Status| {
        if s.converged {
            Ok(())
        } else {
            Err(Failure { code: EXIT_NONCONVERGENCE, message: "hologram optimization did not converge; outputs were written".into() })
        }
    };
    match cli.command {
        Command::Optimize(c) => finish(stage_optimize(&load(&c)?)?),
        Command::Predict { common, hologram } => Ok(stage_predict(&load(&common)?, hologram.as_deref())?),
        Command::Synthesize { common, hologram } => Ok(stage_synthesize(&load(&common)?, hologram.as_deref())?),
        Command::Decode { common, manifest, no_target } => Ok(stage_decode(&load(&common)?, manifest.as_deref(), !no_target)?),
        Command::Pipeline(c) => finish(stage_pipeline(&load(&c)?)?),
    }
}

/// Parses arguments, runs the subcommand and maps failures to exit codes.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("twinbeam: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
