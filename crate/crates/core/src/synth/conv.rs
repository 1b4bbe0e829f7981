use std::sync::Arc;

use ndarray::{s, Array2, Zip};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use super::{complex_white, gain_to_sinh, quadratures, QuadratureSource};
use crate::error::{Error, Result};

/// Fast sampler for large windows.
///
/// With complex white seeds `n_a`, `n_b`, the fields are
/// `a = n_a + κ·K·conj(n_b)` and `b = n_b + κ·K·conj(n_a)`, where
/// `K(x₁, x₂) = Φ(x₁ + x₂)` is applied as a zero-padded FFT convolution.
/// `κ = √(G−1)/s_max` puts the brightest Schmidt mode at the gain-equivalent
/// squeezing. The cross-covariance is then exactly `κ·Re{Φ(x₁+x₂) e^{-2iΔφ_p}}`;
/// the amplified auto-covariance is first order in `κ²`.
pub struct ConvSampler {
    rows: usize,
    cols: usize,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    phi_hat: Array2<Complex64>,
    kappa: f64,
    s_max: f64,
}

impl ConvSampler {
    /// `phi` holds `Φ` at pixel displacements `-(R−1)..=(R−1)` by
    /// `-(C−1)..=(C−1)` for `R × C` windows.
    pub fn new(phi: &Array2<Complex64>, gain: f64) -> Result<Self> {
        let (pr, pc) = phi.dim();
        if pr % 2 == 0 || pc % 2 == 0 {
            return Err(Error::Sizing(format!("Φ table must have odd edges, got {pr}x{pc}")));
        }
        if !(gain > 1.0) {
            return Err(Error::Domain(format!("gain must exceed 1, got {gain}")));
        }
        let (rows, cols) = (pr.div_ceil(2), pc.div_ceil(2));
        let len = pr.max(pc).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let mut sampler = Self { rows, cols, len, fwd, inv, phi_hat: Array2::zeros((len, len)), kappa: 0.0, s_max: 0.0 };
        let mut padded = Array2::zeros((len, len));
        padded.slice_mut(s![..pr, ..pc]).assign(phi);
        sampler.fft2(&mut padded, true);
        sampler.phi_hat = padded;
        let s_max = sampler.top_singular_value();
        if s_max == 0.0 {
            return Err(Error::Degenerate("Φ vanishes over the window".into()));
        }
        sampler.s_max = s_max;
        sampler.kappa = gain_to_sinh(gain) / s_max;
        Ok(sampler)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    fn fft2(&self, data: &mut Array2<Complex64>, forward: bool) {
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data.as_slice_mut().expect("standard layout"), &mut scratch);
        let mut t = data.t().as_standard_layout().into_owned();
        plan.process_with_scratch(t.as_slice_mut().expect("standard layout"), &mut scratch);
        data.assign(&t.t());
    }

    /// `y(x₁) = Σ_{x₂} Φ(x₁ + x₂)·x(x₂)`.
    pub fn apply_kernel(&self, x: &Array2<Complex64>) -> Array2<Complex64> {
        let (r, c) = (self.rows, self.cols);
        let mut buf = Array2::zeros((self.len, self.len));
        buf.slice_mut(s![..r, ..c]).assign(&x.slice(s![..;-1, ..;-1]));
        self.fft2(&mut buf, true);
        Zip::from(&mut buf).and(&self.phi_hat).for_each(|b, &p| *b *= p);
        self.fft2(&mut buf, false);
        let scale = 1.0 / (self.len * self.len) as f64;
        buf.slice(s![r - 1..2 * r - 1, c - 1..2 * c - 1]).mapv(|z| z * scale)
    }

    /// Largest singular value of `K` by power iteration on `K†K`
    /// (`K` is symmetric, so `K† y = conj(K conj y)`).
    fn top_singular_value(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut x = complex_white(&mut rng, self.rows, self.cols);
        let norm = |a: &Array2<Complex64>| a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut sigma = 0.0;
        for _ in 0..200 {
            let nx = norm(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.mapv_inplace(|z| z / nx);
            let y = self.apply_kernel(&x);
            let next = self.apply_kernel(&y.mapv(|z| z.conj())).mapv(|z| z.conj());
            let s2 = norm(&next);
            let prev = sigma;
            sigma = s2.sqrt();
            x = next;
            if (sigma - prev).abs() <= 1e-12 * sigma {
                break;
            }
        }
        sigma
    }

    pub fn fields(&self, rng: &mut dyn rand::RngCore) -> (Array2<Complex64>, Array2<Complex64>) {
        let na = complex_white(rng, self.rows, self.cols);
        let nb = complex_white(rng, self.rows, self.cols);
        let ka = self.apply_kernel(&nb.mapv(|z| z.conj()));
        let kb = self.apply_kernel(&na.mapv(|z| z.conj()));
        let a = Zip::from(&na).and(&ka).map_collect(|&n, &k| n + self.kappa * k);
        let b = Zip::from(&nb).and(&kb).map_collect(|&n, &k| n + self.kappa * k);
        (a, b)
    }
}

impl QuadratureSource for ConvSampler {
    fn window(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn sample(&self, rng: &mut dyn rand::RngCore, delta_phi_p: f64) -> (Array2<f64>, Array2<f64>) {
        let (a, b) = self.fields(rng);
        quadratures(&a, &b, delta_phi_p)
    }
}
