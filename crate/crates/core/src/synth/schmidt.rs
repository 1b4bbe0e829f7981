use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;

use super::{complex_white, gain_to_sinh, quadratures, QuadratureSource};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::optics::{phi_at_pixels, OpticalConfig, PixelRoi};

/// Largest per-beam sample count accepted by the exact decomposition.
pub const MAX_EXACT_DIM: usize = 64 * 64;

/// Two-photon amplitude over (probe pixel, conjugate pixel) pairs of two
/// equal `rows × cols` windows, flattened row-major.
#[derive(Debug, Clone)]
pub struct TwoPhotonKernel {
    rows: usize,
    cols: usize,
    matrix: DMatrix<Complex64>,
}

impl TwoPhotonKernel {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn((usize, usize), (usize, usize)) -> Complex64) -> Result<Self> {
        let dim = rows * cols;
        if dim > MAX_EXACT_DIM {
            return Err(Error::DimensionOverflow { dim, max: MAX_EXACT_DIM });
        }
        let matrix = DMatrix::from_fn(dim, dim, |p, c| f((p / cols, p % cols), (c / cols, c % cols)));
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Contract("kernel contains non-finite entries".into()));
        }
        Ok(Self { rows, cols, matrix })
    }

    /// `K(x_pr, x_c) = Φ(x_pr + x_c)` from a table of Φ at pixel
    /// displacements `-(R−1)..=(R−1)` by `-(C−1)..=(C−1)`.
    pub fn from_phi_table(phi: &Array2<Complex64>) -> Result<Self> {
        let (pr, pc) = phi.dim();
        if pr % 2 == 0 || pc % 2 == 0 {
            return Err(Error::Sizing(format!("Φ table must have odd edges, got {pr}x{pc}")));
        }
        let (rows, cols) = (pr.div_ceil(2), pc.div_ceil(2));
        Self::from_fn(rows, cols, |(i1, j1), (i2, j2)| phi[[i1 + i2, j1 + j2]])
    }

    pub fn window(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// Kernel of a pump over two `rows × cols` camera windows, Φ evaluated at
/// summed pixel displacements (with the sinc weight if `cfg` enables it).
pub fn build_kernel(pump: &ComplexField, cfg: &OpticalConfig, rows: usize, cols: usize) -> Result<TwoPhotonKernel> {
    let dim = rows * cols;
    if dim > MAX_EXACT_DIM {
        return Err(Error::DimensionOverflow { dim, max: MAX_EXACT_DIM });
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Sizing("kernel window must be nonempty".into()));
    }
    let phi = phi_at_pixels(pump, cfg, PixelRoi { half_rows: rows - 1, half_cols: cols - 1 })?;
    TwoPhotonKernel::from_phi_table(&phi)
}

/// Paired eigenmodes `K = Σ s_i u_i v_i†` with per-mode squeezing.
///
/// Probe field operators expand on the columns `u_i`, conjugate ones on
/// `conj(v_i)`.
#[derive(Debug, Clone)]
pub struct SchmidtModel {
    rows: usize,
    cols: usize,
    u: DMatrix<Complex64>,
    v: DMatrix<Complex64>,
    singular_values: Vec<f64>,
    lambdas: Vec<f64>,
}

fn orthonormality_error(m: &DMatrix<Complex64>) -> f64 {
    let g = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - expect).norm());
        }
    }
    worst
}

impl SchmidtModel {
    /// Explicit modes; columns of `u` and `v` must be orthonormal.
    pub fn new(rows: usize, cols: usize, u: DMatrix<Complex64>, v: DMatrix<Complex64>, singular_values: Vec<f64>, lambdas: Vec<f64>) -> Result<Self> {
        let m = singular_values.len();
        let dim = rows * cols;
        if u.shape() != (dim, m) || v.shape() != (dim, m) || lambdas.len() != m {
            return Err(Error::ShapeMismatch(format!("modes {:?}/{:?} for {m} values over {dim} samples", u.shape(), v.shape())));
        }
        if singular_values.windows(2).any(|w| w[1] > w[0]) || lambdas.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::Contract("singular values must be non-increasing and squeezing non-negative".into()));
        }
        let (eu, ev) = (orthonormality_error(&u), orthonormality_error(&v));
        if eu > 1e-10 || ev > 1e-10 {
            return Err(Error::Contract(format!("modes are not orthonormal ({eu:.1e}, {ev:.1e})")));
        }
        Ok(Self { rows, cols, u, v, singular_values, lambdas })
    }

    pub fn window(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn mode_count(&self) -> usize {
        self.singular_values.len()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Probe mode `i` as an image.
    pub fn probe_mode(&self, i: usize) -> Array2<Complex64> {
        Array2::from_shape_fn((self.rows, self.cols), |(r, c)| self.u[(r * self.cols + c, i)])
    }

    /// Conjugate mode `i` as an image (the field expansion function `conj(v_i)`).
    pub fn conjugate_mode(&self, i: usize) -> Array2<Complex64> {
        Array2::from_shape_fn((self.rows, self.cols), |(r, c)| self.v[(r * self.cols + c, i)].conj())
    }

    /// `(Σ s²)² / Σ s⁴`, the inverse participation of the mode weights.
    pub fn schmidt_number(&self) -> f64 {
        let s2: f64 = self.singular_values.iter().map(|s| s * s).sum();
        let s4: f64 = self.singular_values.iter().map(|s| s.powi(4)).sum();
        s2 * s2 / s4
    }

    /// Exact `E[δX_pr(x₁) δX_c(x₂)] = Re{(U·diag(cosh λ sinh λ)·V†)(x₁, x₂)·e^{-2iΔφ_p}}`,
    /// indexed by flattened probe and conjugate pixels.
    pub fn cross_covariance(&self, delta_phi_p: f64) -> DMatrix<f64> {
        let w = DVector::from_iterator(self.mode_count(), self.lambdas.iter().map(|l| Complex64::new(l.cosh() * l.sinh(), 0.0)));
        let m = &self.u * DMatrix::from_diagonal(&w) * self.v.adjoint();
        let rot = Complex64::from_polar(1.0, -2.0 * delta_phi_p);
        m.map(|z| (z * rot).re)
    }

    /// Complex probe and conjugate fields for one draw.
    ///
    /// White vacuum seeds are drawn on the full windows; their projections on
    /// the retained modes are replaced by two-mode-squeezed amplitudes
    /// `a_i = cosh λ·n_a,i + sinh λ·conj(n_b,i)` (and symmetrically for b),
    /// so unretained modes stay in vacuum.
    pub fn fields(&self, rng: &mut dyn rand::RngCore) -> (Array2<Complex64>, Array2<Complex64>) {
        let dim = self.rows * self.cols;
        let na = complex_white(rng, self.rows, self.cols);
        let nb = complex_white(rng, self.rows, self.cols);
        let na_v = DVector::from_iterator(dim, na.iter().copied());
        let nb_v = DVector::from_iterator(dim, nb.iter().copied());
        let pa = self.u.adjoint() * &na_v;
        let pb = self.v.transpose() * &nb_v;
        let m = self.mode_count();
        let mut da = DVector::zeros(m);
        let mut db = DVector::zeros(m);
        for i in 0..m {
            let (c, s) = (self.lambdas[i].cosh(), self.lambdas[i].sinh());
            da[i] = (c - 1.0) * pa[i] + s * pb[i].conj();
            db[i] = (c - 1.0) * pb[i] + s * pa[i].conj();
        }
        let a = na_v + &self.u * da;
        let b = nb_v + self.v.map(|z| z.conj()) * db;
        let shape = (self.rows, self.cols);
        (
            Array2::from_shape_vec(shape, a.iter().copied().collect()).expect("window shape"),
            Array2::from_shape_vec(shape, b.iter().copied().collect()).expect("window shape"),
        )
    }
}

impl QuadratureSource for SchmidtModel {
    fn window(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn sample(&self, rng: &mut dyn rand::RngCore, delta_phi_p: f64) -> (Array2<f64>, Array2<f64>) {
        let (a, b) = self.fields(rng);
        quadratures(&a, &b, delta_phi_p)
    }
}

/// Singular value decomposition of the kernel, keeping modes with
/// `s_i ≥ ε·s_max`, each squeezed by `λ_i = asinh(√(G−1)·s_i/s_max)`.
pub fn schmidt_decompose(kernel: &TwoPhotonKernel, epsilon: f64, gain: f64) -> Result<SchmidtModel> {
    if !(gain >= 1.0) {
        return Err(Error::Domain(format!("gain must be at least 1, got {gain}")));
    }
    let svd = kernel.matrix.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s_max = svd.singular_values[order[0]];
    if s_max == 0.0 {
        return Err(Error::Degenerate("kernel is identically zero".into()));
    }
    let kept: Vec<usize> = order.into_iter().filter(|&i| svd.singular_values[i] >= epsilon * s_max).collect();
    let dim = kernel.matrix.nrows();
    let g = gain_to_sinh(gain);
    let um = DMatrix::from_fn(dim, kept.len(), |r, k| u[(r, kept[k])]);
    // K = U S Vᴴ; v_t holds Vᴴ.
    let vm = DMatrix::from_fn(dim, kept.len(), |r, k| v_t[(kept[k], r)].conj());
    let s: Vec<f64> = kept.iter().map(|&i| svd.singular_values[i]).collect();
    let lambdas = s.iter().map(|&si| (g * si / s_max).asinh()).collect();
    SchmidtModel::new(kernel.rows, kernel.cols, um, vm, s, lambdas)
}
