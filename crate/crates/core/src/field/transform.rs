use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::ComplexField;
use crate::error::{Error, Result};

/// Planned square 2-D transform.
///
/// The centered variants use the physics sign convention
/// `F(k) = (1/N) Σ f(x) exp(-2πi k·x / N)` with both `k` and `x` counted from
/// the center index, and the matching `+i` inverse. The raw variants are
/// plain unnormalized FFTs with the origin at index 0, used for convolutions.
pub struct Dft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Dft2 {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::Sizing(format!("transform size {n} is not a power of two")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, data: &Array2<Complex64>) {
        assert_eq!(data.dim(), (self.n, self.n), "transform planned for a different grid size");
    }

    fn run(&self, data: &mut Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        self.check(data);
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        {
            let rows = data.as_slice_mut().expect("standard layout");
            plan.process_with_scratch(rows, &mut scratch);
        }
        let mut t = data.t().as_standard_layout().into_owned();
        plan.process_with_scratch(t.as_slice_mut().expect("standard layout"), &mut scratch);
        for i in 0..n {
            for j in 0..n {
                data[[j, i]] = t[[i, j]];
            }
        }
    }

    /// Unnormalized forward FFT, origin at index 0.
    pub fn forward_raw(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.fwd);
    }

    /// Unnormalized inverse FFT, origin at index 0.
    pub fn inverse_raw(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.inv);
    }

    /// Unitary centered forward transform, in place.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        swap_quadrants(data);
        self.run(data, &self.fwd);
        swap_quadrants(data);
        let s = 1.0 / self.n as f64;
        data.mapv_inplace(|z| z * s);
    }

    /// Unitary centered inverse transform, in place.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        swap_quadrants(data);
        self.run(data, &self.inv);
        swap_quadrants(data);
        let s = 1.0 / self.n as f64;
        data.mapv_inplace(|z| z * s);
    }
}

/// fftshift for even square grids (identical to ifftshift there).
fn swap_quadrants(data: &mut Array2<Complex64>) {
    let n = data.nrows();
    let h = n / 2;
    for i in 0..h {
        for j in 0..n {
            let jj = (j + h) % n;
            let a = data[[i, j]];
            data[[i, j]] = data[[i + h, jj]];
            data[[i + h, jj]] = a;
        }
    }
}

/// Centered unitary forward transform of a field.
///
/// The output pitch is the transverse-wavenumber spacing `2π / (N·pitch)`
/// in rad/m; the plane tag is left unchanged (the far-field relabeling is
/// [`crate::optics::kmap_to_farfield`]'s job).
pub fn dft2_centered(f: &ComplexField) -> Result<ComplexField> {
    let n = f.n();
    let plan = Dft2::new(n)?;
    let mut data = f.data().clone();
    plan.forward(&mut data);
    let k_pitch = 2.0 * std::f64::consts::PI / (n as f64 * f.pitch());
    ComplexField::new(data, k_pitch, f.plane())
}

/// Exact inverse of [`dft2_centered`], including the pitch relabeling.
pub fn idft2_centered(f: &ComplexField) -> Result<ComplexField> {
    let n = f.n();
    let plan = Dft2::new(n)?;
    let mut data = f.data().clone();
    plan.inverse(&mut data);
    let x_pitch = 2.0 * std::f64::consts::PI / (n as f64 * f.pitch());
    ComplexField::new(data, x_pitch, f.plane())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Plane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(n: usize, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Array2::from_shape_fn((n, n), |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        ComplexField::new(data, 1e-4, Plane::CellCenter).unwrap()
    }

    // O(N^4) summation with centered indices, written independently of the FFT path.
    fn direct_dft(f: &Array2<Complex64>, sign: f64) -> Array2<Complex64> {
        let n = f.nrows();
        let c = (n / 2) as f64;
        Array2::from_shape_fn((n, n), |(ki, kj)| {
            let mut acc = Complex64::default();
            for xi in 0..n {
                for xj in 0..n {
                    let ph = sign * 2.0 * PI * ((ki as f64 - c) * (xi as f64 - c) + (kj as f64 - c) * (xj as f64 - c)) / n as f64;
                    acc += f[[xi, xj]] * Complex64::from_polar(1.0, ph);
                }
            }
            acc / n as f64
        })
    }

    fn max_rel(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
        let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn constant_maps_to_center_delta() {
        let f = ComplexField::new(Array2::from_elem((16, 16), Complex64::new(1.0, 0.0)), 1.0, Plane::Slm).unwrap();
        let g = dft2_centered(&f).unwrap();
        for ((i, j), z) in g.data().indexed_iter() {
            if (i, j) == (8, 8) {
                assert!((z - Complex64::new(16.0, 0.0)).norm() < 1e-12);
            } else {
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn center_delta_maps_to_constant() {
        let mut d = Array2::zeros((16, 16));
        d[[8, 8]] = Complex64::new(1.0, 0.0);
        let g = dft2_centered(&ComplexField::new(d, 1.0, Plane::Slm).unwrap()).unwrap();
        assert!(g.data().iter().all(|z| (z - Complex64::new(1.0 / 16.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn forward_matches_direct_summation() {
        let f = random_field(16, 3);
        let g = dft2_centered(&f).unwrap();
        assert!(max_rel(g.data(), &direct_dft(f.data(), -1.0)) < 1e-10);
    }

    #[test]
    fn inverse_matches_direct_summation() {
        let f = random_field(16, 4);
        let g = idft2_centered(&f).unwrap();
        assert!(max_rel(g.data(), &direct_dft(f.data(), 1.0)) < 1e-10);
    }

    #[test]
    fn dc_only_spectrum_gives_constant() {
        let mut d = Array2::zeros((8, 8));
        d[[4, 4]] = Complex64::new(2.0, -1.0);
        let g = idft2_centered(&ComplexField::new(d, 1.0, Plane::FarField).unwrap()).unwrap();
        assert!(g.data().iter().all(|z| (z - Complex64::new(0.25, -0.125)).norm() < 1e-15));
    }

    #[test]
    fn round_trip_and_parseval() {
        let f = random_field(32, 5);
        let g = dft2_centered(&f).unwrap();
        assert!(((g.energy() - f.energy()) / f.energy()).abs() < 1e-12);
        let back = idft2_centered(&g).unwrap();
        assert!(max_rel(back.data(), f.data()) < 1e-12);
        assert!((back.pitch() - f.pitch()).abs() < 1e-18);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let f = ComplexField::zeros(12, 1.0, Plane::Slm).unwrap();
        assert!(matches!(dft2_centered(&f), Err(Error::Sizing(_))));
    }

    #[test]
    fn linear_ramp_shifts_spectrum() {
        // exp(+i k0 x) moves the spectrum peak to +k0 under the -i forward kernel.
        let n = 32;
        let f = ComplexField::from_fn(n, 1.0, Plane::CellCenter, |x, _| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * x / n as f64)).unwrap();
        let g = dft2_centered(&f).unwrap();
        assert!((g.data()[[16, 19]].norm() - 32.0).abs() < 1e-9);
    }
}
