//! Dense linear-algebra helpers shared by the kernel analysis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Largest entrywise deviation `|m - m^dagger|`.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Spectral norm of a Hermitian matrix (largest absolute eigenvalue).
pub fn hermitian_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Null space of a real matrix from a rank-revealing SVD.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Orthonormal basis vectors as columns (`ncols(A)` rows).
    pub basis: RMat,
    /// Singular values in descending order, padded with zeros to `ncols(A)`.
    pub singular_values: Vec<f64>,
    /// Absolute threshold actually applied.
    pub threshold: f64,
    /// Smallest retained singular value over the largest discarded one
    /// (infinite when the discarded values are exactly zero, `None` when one side is empty).
    pub gap: Option<f64>,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Null space of `a` using singular values at or below `rel_tol * sigma_max`.
///
/// Tall matrices are first reduced to their square `R` factor, which has the same
/// singular values and right singular vectors.
pub fn null_space(a: &RMat, rel_tol: f64) -> NullSpace {
    null_space_impl(a, Threshold::Relative(rel_tol))
}

/// Like [`null_space`] but with threshold `rel_tol * max(sigma_max, reference)`, so a
/// map that is zero up to rounding has a full null space.
pub fn null_space_scaled(a: &RMat, rel_tol: f64, reference: f64) -> NullSpace {
    null_space_impl(a, Threshold::Scaled(rel_tol, reference))
}

/// Null space using an absolute singular-value threshold.
pub fn null_space_abs(a: &RMat, abs_tol: f64) -> NullSpace {
    null_space_impl(a, Threshold::Absolute(abs_tol))
}

enum Threshold {
    Relative(f64),
    Scaled(f64, f64),
    Absolute(f64),
}

fn null_space_impl(a: &RMat, tol: Threshold) -> NullSpace {
    let n = a.ncols();
    if n == 0 {
        return NullSpace {
            basis: RMat::zeros(0, 0),
            singular_values: Vec::new(),
            threshold: 0.0,
            gap: None,
        };
    }
    let square = if a.nrows() > n {
        a.clone().qr().r()
    } else {
        let mut s = RMat::zeros(n, n);
        s.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        s
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let threshold = match tol {
        Threshold::Relative(r) => r * sigma_max,
        Threshold::Scaled(r, reference) => r * sigma_max.max(reference),
        Threshold::Absolute(t) => t,
    };
    let null_idx: Vec<usize> = (0..n).filter(|&i| sv[i] <= threshold).collect();
    let mut basis = RMat::zeros(n, null_idx.len());
    for (c, &i) in null_idx.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).transpose());
    }
    let retained_min = sv.iter().copied().filter(|&s| s > threshold).fold(f64::INFINITY, f64::min);
    let discarded_max = sv.iter().copied().filter(|&s| s <= threshold).fold(f64::NEG_INFINITY, f64::max);
    let gap = if retained_min.is_finite() && discarded_max.is_finite() {
        Some(if discarded_max > 0.0 { retained_min / discarded_max } else { f64::INFINITY })
    } else {
        None
    };
    NullSpace {
        basis,
        singular_values: sv,
        threshold,
        gap,
    }
}

/// Orthonormal basis for the column space of `m`, dropping directions with
/// singular value at or below `rel_tol * sigma_max`.
pub fn orth(m: &RMat, rel_tol: f64) -> RMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return RMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
        .collect();
    let mut out = RMat::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Principal angles between the spans of two orthonormal column sets, ascending.
///
/// Returns `min(dim U, dim V)` angles. Small angles come from the sines and large
/// ones from the cosines, so both ends of the range keep full precision.
pub fn principal_angles(u: &RMat, v: &RMat) -> Vec<f64> {
    let (big, small) = if u.ncols() >= v.ncols() { (u, v) } else { (v, u) };
    let k = small.ncols();
    if k == 0 {
        return Vec::new();
    }
    let overlap = big.transpose() * small;
    let cos = singular_values_desc(&overlap);
    let residual = small - big * &overlap;
    let mut sin = singular_values_desc(&residual);
    sin.reverse();
    (0..k)
        .map(|i| {
            let c = cos.get(i).copied().unwrap_or(0.0).min(1.0);
            let s = sin.get(i).copied().unwrap_or(0.0).min(1.0);
            if c * c < 0.5 {
                c.acos()
            } else {
                s.asin()
            }
        })
        .collect()
}

fn singular_values_desc(m: &RMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // pad for wide inputs so that there is one value per column
    sv.resize(m.ncols(), 0.0);
    sv
}

/// Largest principal angle, or `pi/2` when the dimensions differ.
pub fn max_principal_angle(u: &RMat, v: &RMat) -> f64 {
    if u.ncols() != v.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    principal_angles(u, v).into_iter().fold(0.0, f64::max)
}

/// Orthonormal basis of the part of span(`u`) orthogonal to span(`v`).
pub fn complement_within(u: &RMat, v: &RMat, rel_tol: f64) -> RMat {
    let projected = u - v * (v.transpose() * u);
    let m = orth(&projected, rel_tol);
    // orth() is relative to the largest singular value; drop numerically empty results
    let scale = u.norm().max(1.0);
    if projected.norm() <= rel_tol * scale {
        return RMat::zeros(u.nrows(), 0);
    }
    m
}

/// Distance from `x` to span(`basis`) (Euclidean, basis orthonormal).
pub fn distance_to_span(basis: &RMat, x: &DVector<f64>) -> f64 {
    if basis.ncols() == 0 {
        return x.norm();
    }
    (x - basis * (basis.transpose() * x)).norm()
}

/// Stack real parts over imaginary parts.
pub fn realify(z: &[C64]) -> Vec<f64> {
    z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect()
}

/// Columns of a real matrix as plain vectors.
pub fn columns(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|c| m.column(c).iter().copied().collect()).collect()
}

/// Inverse of [`columns`]; `rows` fixes the vector length for empty sets.
pub fn from_columns(cols: &[Vec<f64>], rows: usize) -> RMat {
    let mut m = RMat::zeros(rows, cols.len());
    for (c, v) in cols.iter().enumerate() {
        for (r, x) in v.iter().enumerate() {
            m[(r, c)] = *x;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one() {
        let a = RMat::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.dim(), 2);
        assert!((&a * &ns.basis).norm() < 1e-12);
        let g = ns.basis.transpose() * &ns.basis;
        assert!((g - RMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn null_space_wide_and_tall() {
        let wide = RMat::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        assert_eq!(null_space(&wide, 1e-10).dim(), 2);
        let tall = RMat::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 0.0, 0.0]);
        let ns = null_space(&tall, 1e-10);
        assert_eq!(ns.dim(), 1);
        assert!((ns.basis[(0, 0)] + ns.basis[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_all_null() {
        let ns = null_space(&RMat::zeros(5, 3), 1e-10);
        assert_eq!(ns.dim(), 3);
        assert!(ns.gap.is_none());
    }

    #[test]
    fn principal_angles_small_and_right() {
        let u = RMat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let eps = 1e-9_f64;
        let v = RMat::from_column_slice(3, 1, &[eps.cos(), eps.sin(), 0.0]);
        let a = principal_angles(&u, &v);
        assert!((a[0] - eps).abs() < 1e-15);
        let w = RMat::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        assert!((principal_angles(&u, &w)[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn complement_of_contained_subspace_is_empty() {
        let u = RMat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let v = RMat::identity(3, 2);
        assert_eq!(complement_within(&u, &v, 1e-8).ncols(), 0);
        let c = complement_within(&v, &u, 1e-8);
        assert_eq!(c.ncols(), 1);
        assert!((c[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }
}
