//! Synthetic twin-beam camera frames.
//!
//! Quadrature fluctuation fields for the probe and conjugate windows come
//! from either the exact Schmidt-mode sampler or the fast convolutional
//! sampler; [`render_frame_pair`] turns them into photocounts around bright
//! local-oscillator profiles with shot, excess and read noise.

mod conv;
mod frames;
mod schmidt;
mod temporal;

pub use conv::ConvSampler;
pub use frames::{
    read_pair, render_frame_pair, write_pair, Acquisition, BeamLayout, DetectorModel, Fluctuations, Frame, FrameManifest, FramePair, LocalOscillator,
    Window, CLAMP_FLAG_FRACTION, MIN_FRAME_SEPARATION_S,
};
pub use schmidt::{build_kernel, schmidt_decompose, SchmidtModel, TwoPhotonKernel, MAX_EXACT_DIM};
pub use temporal::{ideal_difference_ratio, temporal_difference_noise, TemporalModel, TemporalNoise, Trace};

use ndarray::Array2;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

/// Anything that can draw one realization of the probe and conjugate
/// amplitude-quadrature fluctuations `(δX_pr, δX_c)` over equal windows.
///
/// Vacuum fluctuations are included: with no squeezing each field is white
/// with variance ½ per sample.
pub trait QuadratureSource: Sync {
    fn window(&self) -> (usize, usize);

    /// `delta_phi_p` rotates the measured conjugate quadrature by `2Δφ_p`.
    fn sample(&self, rng: &mut dyn rand::RngCore, delta_phi_p: f64) -> (Array2<f64>, Array2<f64>);
}

/// Independent vacuum on both beams.
#[derive(Debug, Clone, Copy)]
pub struct Vacuum {
    pub rows: usize,
    pub cols: usize,
}

impl QuadratureSource for Vacuum {
    fn window(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn sample(&self, rng: &mut dyn rand::RngCore, _delta_phi_p: f64) -> (Array2<f64>, Array2<f64>) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut draw = || Array2::from_shape_simple_fn((self.rows, self.cols), || s * gauss(rng));
        let a = draw();
        (a, draw())
    }
}

pub(crate) fn gauss(rng: &mut dyn rand::RngCore) -> f64 {
    StandardNormal.sample(rng)
}

/// Complex white noise with `E|n|² = ½`.
pub(crate) fn complex_white(rng: &mut dyn rand::RngCore, rows: usize, cols: usize) -> Array2<Complex64> {
    Array2::from_shape_simple_fn((rows, cols), || Complex64::new(0.5 * gauss(rng), 0.5 * gauss(rng)))
}

/// `(√2 Re a, √2 Re(b e^{-2iΔφ_p}))`.
pub(crate) fn quadratures(a: &Array2<Complex64>, b: &Array2<Complex64>, delta_phi_p: f64) -> (Array2<f64>, Array2<f64>) {
    let r = std::f64::consts::SQRT_2;
    let rot = Complex64::from_polar(1.0, -2.0 * delta_phi_p);
    (a.mapv(|z| r * z.re), b.mapv(|z| r * (z * rot).re))
}

/// Squeezing scale of the brightest mode for an amplifier of gain `g`:
/// `sinh λ = √(G−1)`.
pub fn gain_to_sinh(gain: f64) -> f64 {
    (gain - 1.0).max(0.0).sqrt()
}
