//! Structured-pump twin-beam correlation toolkit.
//!
//! The crate covers the full loop used to write a pattern into the spatial
//! cross-correlation of four-wave-mixing twin beams and read it back:
//!
//! * [`field`]: sampled grids and centered unitary transforms.
//! * [`optics`]: pump angular spectrum, its self-convolution and the
//!   predicted far-field cross-correlation.
//! * [`cgh`]: phase-hologram design (masked overlap cost, conjugate
//!   gradient, zero-order compression, 8-bit export).
//! * [`synth`]: two-photon kernel, Schmidt modes, quadrature sampling and
//!   camera frame rendering.
//! * [`analyze`]: frame differencing, correlation maps, fidelity and
//!   intensity-difference squeezing estimates.
//! * [`cli`]: declarative pipeline configuration and the subcommands.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod cgh;
pub mod cli;
pub mod error;
pub mod field;
pub mod optics;
pub mod synth;

pub use error::{Error, Result};
