use ndarray::{s, Array2};

use super::{ComplexField, RealField, MIN_GRID};
use crate::error::{Error, Result};

/// Point reflection through the grid center: `(i, j) -> (rows-1-i, cols-1-j)`.
pub fn rotate180(f: &RealField) -> RealField {
    RealField::new(rotate180_array(f.data()), f.pitch()).expect("rotation keeps samples finite")
}

pub fn rotate180_array<T: Clone>(a: &Array2<T>) -> Array2<T> {
    a.slice(s![..;-1, ..;-1]).to_owned()
}

/// Places `a` inside a zero `rows × cols` array so that center index
/// `(r/2, c/2)` lands on `(rows/2, cols/2)`.
pub fn embed_centered<T: Clone + num_traits::Zero>(a: &Array2<T>, rows: usize, cols: usize) -> Array2<T> {
    let (r, c) = a.dim();
    assert!(rows >= r && cols >= c, "embedding target is smaller than the source");
    let (oi, oj) = (rows / 2 - r / 2, cols / 2 - c / 2);
    let mut out = Array2::from_elem((rows, cols), T::zero());
    out.slice_mut(s![oi..oi + r, oj..oj + c]).assign(a);
    out
}

/// Centered sub-array, the inverse of [`embed_centered`].
pub fn crop_centered<T: Clone>(a: &Array2<T>, rows: usize, cols: usize) -> Array2<T> {
    let (r, c) = a.dim();
    assert!(rows <= r && cols <= c, "crop target is larger than the source");
    let (oi, oj) = (r / 2 - rows / 2, c / 2 - cols / 2);
    a.slice(s![oi..oi + rows, oj..oj + cols]).to_owned()
}

/// Centered zero-pad (new_n > n) or centered crop (new_n < n); pitch and
/// plane are kept.
pub fn embed_and_crop(f: &ComplexField, new_n: usize) -> Result<ComplexField> {
    if new_n < MIN_GRID {
        return Err(Error::Sizing(format!("target edge {new_n} is below the minimum {MIN_GRID}")));
    }
    let n = f.n();
    let data = if new_n >= n { embed_centered(f.data(), new_n, new_n) } else { crop_centered(f.data(), new_n, new_n) };
    ComplexField::new(data, f.pitch(), f.plane())
}

/// Replaces every sample by an `m × m` block, `m` odd, keeping the grid
/// center fixed: fine offset `m·(j − n/2) + t` with `|t| ≤ (m−1)/2` maps
/// back to coarse sample `j`. Fine samples without a source are zero.
pub fn refine_centered<T: Clone + num_traits::Zero>(a: &Array2<T>, m: usize) -> Result<Array2<T>> {
    if m == 0 || m.is_multiple_of(2) {
        return Err(Error::Sizing(format!("refinement factor must be odd, got {m}")));
    }
    let (r, c) = a.dim();
    let half = (m as isize - 1) / 2;
    let source = |fine: usize, n: usize| {
        let off = fine as isize - (m * n / 2) as isize + half;
        let j = off.div_euclid(m as isize) + (n / 2) as isize;
        (0..n as isize).contains(&j).then_some(j as usize)
    };
    Ok(Array2::from_shape_fn((r * m, c * m), |(i, j)| match (source(i, r), source(j, c)) {
        (Some(si), Some(sj)) => a[[si, sj]].clone(),
        _ => T::zero(),
    }))
}
