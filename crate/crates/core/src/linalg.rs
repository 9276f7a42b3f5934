//! Dense linear algebra for small matrices (2 ≤ d ≤ 4).
//!
//! Storage is a fixed 4×4 array plus the active dimension, so matrices and
//! vectors are `Copy` and never allocate. The planar case gets closed-form
//! singular values; d = 3 and d = 4 use one-sided (Hestenes) cyclic Jacobi,
//! which is Jacobi diagonalization of `MᵀM` carried out on the columns of `M`.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 4;

/// Off-diagonal tolerance for the Jacobi sweeps.
pub const JACOBI_TOL: f64 = 1e-14;
/// Sweep cap for the Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Squared singular values below this are treated as exact zeros.
pub const ZERO_SQUARED_FLOOR: f64 = 1e-30;

fn check_dim(d: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "ambient dimension must be in {MIN_DIM}..={MAX_DIM}, got {d}"
        )))
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct SmallVector {
    dim: usize,
    data: [f64; MAX_DIM],
}

impl SmallVector {
    pub fn zeros(dim: usize) -> Self {
        debug_assert!(dim <= MAX_DIM);
        SmallVector {
            dim,
            data: [0.0; MAX_DIM],
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        check_dim(values.len())?;
        let mut v = SmallVector::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.dim]
    }

    pub fn dot(&self, other: &SmallVector) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.as_mut_slice().iter_mut().for_each(|x| *x *= factor);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for SmallVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl Add for SmallVector {
    type Output = SmallVector;
    fn add(mut self, rhs: SmallVector) -> SmallVector {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] += rhs.data[i];
        }
        self
    }
}

impl Sub for SmallVector {
    type Output = SmallVector;
    fn sub(mut self, rhs: SmallVector) -> SmallVector {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] -= rhs.data[i];
        }
        self
    }
}

impl fmt::Debug for SmallVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// A d×d real matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct SmallMatrix {
    dim: usize,
    data: [[f64; MAX_DIM]; MAX_DIM],
}

impl SmallMatrix {
    pub fn zeros(dim: usize) -> Self {
        debug_assert!(dim <= MAX_DIM);
        SmallMatrix {
            dim,
            data: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SmallMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        check_dim(d)?;
        let mut m = SmallMatrix::zeros(d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            m.data[i][..d].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        check_dim(values.len())?;
        let mut m = SmallMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i][i] = v;
        }
        Ok(m)
    }

    /// Planar rotation by `theta` radians.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let mut m = SmallMatrix::zeros(2);
        m.data[0][0] = c;
        m.data[0][1] = -s;
        m.data[1][0] = s;
        m.data[1][1] = c;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.dim && col < self.dim);
        self.data[row][col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.data[row][col] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[i][..self.dim].to_vec())
            .collect()
    }

    pub fn column(&self, col: usize) -> SmallVector {
        let mut v = SmallVector::zeros(self.dim);
        for i in 0..self.dim {
            v.data[i] = self.data[i][col];
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| self.data[i][..self.dim].iter().all(|x| x.is_finite()))
    }

    pub fn transpose(&self) -> Self {
        let mut t = SmallMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.data[j][i] = self.data[i][j];
            }
        }
        t
    }

    pub fn scale(mut self, factor: f64) -> Self {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] *= factor;
            }
        }
        self
    }

    pub fn mul_vec(&self, v: &SmallVector) -> SmallVector {
        debug_assert_eq!(self.dim, v.dim);
        let mut out = SmallVector::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.data[i][j] * v.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    /// Determinant by cofactor expansion (d ≤ 4).
    pub fn det(&self) -> f64 {
        det_rec(&self.data, self.dim)
    }
}

fn det_rec(m: &[[f64; MAX_DIM]; MAX_DIM], n: usize) -> f64 {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            let mut total = 0.0;
            for col in 0..n {
                let mut minor = [[0.0; MAX_DIM]; MAX_DIM];
                for i in 1..n {
                    let mut jj = 0;
                    for j in 0..n {
                        if j != col {
                            minor[i - 1][jj] = m[i][j];
                            jj += 1;
                        }
                    }
                }
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * m[0][col] * det_rec(&minor, n - 1);
            }
            total
        }
    }
}

impl Mul for SmallMatrix {
    type Output = SmallMatrix;
    #[allow(clippy::op_ref)]
    fn mul(self, rhs: SmallMatrix) -> SmallMatrix {
        &self * &rhs
    }
}

impl Mul for &SmallMatrix {
    type Output = SmallMatrix;
    fn mul(self, rhs: &SmallMatrix) -> SmallMatrix {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = SmallMatrix::zeros(n);
        if n == 2 {
            let a = &self.data;
            let b = &rhs.data;
            out.data[0][0] = a[0][0] * b[0][0] + a[0][1] * b[1][0];
            out.data[0][1] = a[0][0] * b[0][1] + a[0][1] * b[1][1];
            out.data[1][0] = a[1][0] * b[0][0] + a[1][1] * b[1][0];
            out.data[1][1] = a[1][0] * b[0][1] + a[1][1] * b[1][1];
            return out;
        }
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.data[i][k] * rhs.data[k][j];
                }
                out.data[i][j] = acc;
            }
        }
        out
    }
}

impl fmt::Debug for SmallMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Semi-axis lengths α₁ ≥ … ≥ α_d of the ellipsoid `M(B(0,1))`.
#[derive(Clone, Copy, PartialEq)]
pub struct SingularValueSet {
    dim: usize,
    values: [f64; MAX_DIM],
}

impl SingularValueSet {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn smallest(&self) -> f64 {
        self.values[self.dim - 1]
    }

    pub fn product(&self) -> f64 {
        self.values().iter().product()
    }
}

impl fmt::Debug for SingularValueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.values()).finish()
    }
}

/// Largest singular value of a 2×2 matrix and |det|.
///
/// The smaller value is recovered as `|det| / σ₁` rather than from the
/// quadratic formula, so the product σ₁σ₂ = |det| holds to rounding.
#[inline]
pub(crate) fn singular_values_2x2(m: &SmallMatrix) -> (f64, f64) {
    let [a, b, ..] = m.data[0];
    let [c, d, ..] = m.data[1];
    // MᵀM = [[p, r], [r, q]]
    let p = a * a + c * c;
    let q = b * b + d * d;
    let r = a * b + c * d;
    let disc = (p - q).hypot(2.0 * r);
    let top = 0.5 * (p + q + disc);
    if top < ZERO_SQUARED_FLOOR {
        return (0.0, 0.0);
    }
    let s1 = top.sqrt();
    let s2 = (a * d - b * c).abs() / s1;
    (s1, s2.min(s1))
}

/// Columns of `M` orthogonalized by cyclic Jacobi rotations.
/// Returns (column norms, normalized columns as a matrix) unsorted.
fn one_sided_jacobi(m: &SmallMatrix) -> ([f64; MAX_DIM], SmallMatrix) {
    let n = m.dim;
    let mut w = *m;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    alpha += w.data[i][p] * w.data[i][p];
                    beta += w.data[i][q] * w.data[i][q];
                    gamma += w.data[i][p] * w.data[i][q];
                }
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let wp = w.data[i][p];
                    let wq = w.data[i][q];
                    w.data[i][p] = c * wp - s * wq;
                    w.data[i][q] = s * wp + c * wq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut norms = [0.0; MAX_DIM];
    let mut u = SmallMatrix::zeros(n);
    for j in 0..n {
        let col = w.column(j);
        let norm = col.norm();
        norms[j] = if norm * norm < ZERO_SQUARED_FLOOR { 0.0 } else { norm };
        for i in 0..n {
            u.data[i][j] = if norms[j] > 0.0 { col.data[i] / norm } else { 0.0 };
        }
    }
    (norms, u)
}

fn sorted_order(values: &[f64]) -> [usize; MAX_DIM] {
    let mut order = [0, 1, 2, 3];
    order[..values.len()].sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    order
}

fn ensure_finite(m: &SmallMatrix) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("matrix has non-finite entries"))
    }
}

/// Square roots of the eigenvalues of `MᵀM`, sorted descending.
pub fn singular_values(m: &SmallMatrix) -> Result<SingularValueSet> {
    ensure_finite(m)?;
    let mut out = SingularValueSet {
        dim: m.dim,
        values: [0.0; MAX_DIM],
    };
    if m.dim == 2 {
        let (s1, s2) = singular_values_2x2(m);
        out.values[0] = s1;
        out.values[1] = s2;
    } else {
        let (norms, _) = one_sided_jacobi(m);
        let order = sorted_order(&norms[..m.dim]);
        for j in 0..m.dim {
            out.values[j] = norms[order[j]];
        }
    }
    Ok(out)
}

/// Spectral norm, the largest singular value.
pub fn operator_norm(m: &SmallMatrix) -> Result<f64> {
    Ok(singular_values(m)?.largest())
}

/// Singular values together with the matching left singular vectors
/// (columns of the returned matrix), i.e. the semi-axis directions of
/// `M(B(0,1))`.
pub fn left_singular_axes(m: &SmallMatrix) -> Result<(SingularValueSet, SmallMatrix)> {
    ensure_finite(m)?;
    let svs = singular_values(m)?;
    let n = m.dim;
    if n == 2 {
        // Major axis of M Mᵀ = [[e, f], [f, g]].
        let [a, b, ..] = m.data[0];
        let [c, d, ..] = m.data[1];
        let e = a * a + b * b;
        let g = c * c + d * d;
        let f = a * c + b * d;
        let theta = 0.5 * (2.0 * f).atan2(e - g);
        // columns (cos θ, sin θ) and (−sin θ, cos θ)
        return Ok((svs, SmallMatrix::rotation(theta)));
    }
    let (norms, u) = one_sided_jacobi(m);
    let order = sorted_order(&norms[..n]);
    let mut axes = SmallMatrix::zeros(n);
    for (dst, &src) in order[..n].iter().enumerate() {
        for i in 0..n {
            axes.data[i][dst] = u.data[i][src];
        }
    }
    Ok((svs, axes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn char_poly_oracle(m: &SmallMatrix) -> (f64, f64) {
        // eigenvalues of MᵀM from t² − tr·t + det = 0
        let mt = m.transpose();
        let g = &mt * m;
        let tr = g.get(0, 0) + g.get(1, 1);
        let det = g.get(0, 0) * g.get(1, 1) - g.get(0, 1) * g.get(1, 0);
        let root = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (((tr + root) / 2.0).sqrt(), ((tr - root) / 2.0).max(0.0).sqrt())
    }

    #[test]
    fn identity_and_diagonal() {
        let sv = singular_values(&SmallMatrix::identity(2)).unwrap();
        assert_eq!(sv.values(), &[1.0, 1.0]);
        let sv = singular_values(&SmallMatrix::diag(&[0.5, -0.3]).unwrap()).unwrap();
        assert!((sv.values()[0] - 0.5).abs() < 1e-15);
        assert!((sv.values()[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn matches_characteristic_polynomial() {
        let m = SmallMatrix::from_rows(&[[0.3, 0.2], [0.1, 0.4]]).unwrap();
        let sv = singular_values(&m).unwrap();
        let (o1, o2) = char_poly_oracle(&m);
        assert!((sv.values()[0] - o1).abs() < 1e-12);
        assert!((sv.values()[1] - o2).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&SmallMatrix::identity(2)).unwrap(), 1.0);
        assert_eq!(
            operator_norm(&SmallMatrix::diag(&[0.5, 0.25]).unwrap()).unwrap(),
            0.5
        );
        for k in 0..12 {
            let m = SmallMatrix::rotation(0.37 * k as f64).scale(0.7);
            assert!((operator_norm(&m).unwrap() - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let m = SmallMatrix::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(singular_values(&m), Err(Error::InvalidInput(_))));
        let m = SmallMatrix::diag(&[1.0, f64::INFINITY, 1.0]).unwrap();
        assert!(operator_norm(&m).is_err());
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(SmallMatrix::from_rows(&[[1.0]]).is_err());
        assert!(SmallMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0]]).is_err());
        assert!(SmallMatrix::diag(&[1.0; 5]).is_err());
    }

    #[test]
    fn zero_matrix_is_clamped() {
        let sv = singular_values(&SmallMatrix::zeros(2)).unwrap();
        assert_eq!(sv.values(), &[0.0, 0.0]);
        let sv = singular_values(&SmallMatrix::zeros(3)).unwrap();
        assert_eq!(sv.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn three_dim_diagonal_and_permuted() {
        let m = SmallMatrix::from_rows(&[[0.0, 0.2, 0.0], [0.0, 0.0, -0.7], [0.4, 0.0, 0.0]])
            .unwrap();
        let sv = singular_values(&m).unwrap();
        for (got, want) in sv.values().iter().zip([0.7, 0.4, 0.2]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn determinant_cofactor() {
        let m = SmallMatrix::from_rows(&[
            [2.0, 0.0, 1.0, 0.0],
            [1.0, 3.0, 0.0, 0.0],
            [0.0, 1.0, 1.0, 2.0],
            [0.0, 0.0, 1.0, 1.0],
        ])
        .unwrap();
        // numpy.linalg.det gives -5
        assert!((m.det() - -5.0).abs() < 1e-12);
    }

    #[test]
    fn left_axes_are_semi_axes() {
        let m = SmallMatrix::from_rows(&[[0.3, 0.2], [0.1, 0.4]]).unwrap();
        let (sv, u) = left_singular_axes(&m).unwrap();
        // ‖Mᵀu_j‖ = α_j for left singular vectors
        let mt = m.transpose();
        for j in 0..2 {
            let uj = u.column(j);
            assert!((uj.norm() - 1.0).abs() < 1e-14);
            assert!((mt.mul_vec(&uj).norm() - sv.values()[j]).abs() < 1e-12);
        }
        assert!(u.column(0).dot(&u.column(1)).abs() < 1e-14);
    }

    #[test]
    fn left_axes_three_dim() {
        let m = SmallMatrix::from_rows(&[[0.3, 0.2, 0.0], [0.1, 0.4, 0.05], [0.0, -0.1, 0.2]])
            .unwrap();
        let (sv, u) = left_singular_axes(&m).unwrap();
        let mt = m.transpose();
        for j in 0..3 {
            assert!((mt.mul_vec(&u.column(j)).norm() - sv.values()[j]).abs() < 1e-12);
            for k in (j + 1)..3 {
                assert!(u.column(j).dot(&u.column(k)).abs() < 1e-10);
            }
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn matrix(d: usize) -> impl Strategy<Value = SmallMatrix> {
            proptest::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| {
                let rows: Vec<Vec<f64>> = v.chunks(d).map(|r| r.to_vec()).collect();
                SmallMatrix::from_rows(&rows).unwrap()
            })
        }

        fn any_matrix() -> impl Strategy<Value = SmallMatrix> {
            (2usize..=4).prop_flat_map(matrix)
        }

        fn pair() -> impl Strategy<Value = (SmallMatrix, SmallMatrix)> {
            (2usize..=4).prop_flat_map(|d| (matrix(d), matrix(d)))
        }

        proptest! {
            #[test]
            fn submultiplicative((m, n) in pair()) {
                let lhs = operator_norm(&(m * n)).unwrap();
                let rhs = operator_norm(&m).unwrap() * operator_norm(&n).unwrap();
                prop_assert!(lhs <= rhs + 1e-12);
            }

            #[test]
            fn transpose_invariant(m in any_matrix()) {
                let a = singular_values(&m).unwrap();
                let b = singular_values(&m.transpose()).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    prop_assert!((x - y).abs() < 1e-10);
                }
            }

            #[test]
            fn orthogonal_invariant(m in matrix(2), theta in 0.0f64..6.3) {
                let q = SmallMatrix::rotation(theta);
                let a = singular_values(&m).unwrap();
                let b = singular_values(&(q * m)).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    prop_assert!((x - y).abs() < 1e-10);
                }
            }

            #[test]
            fn sorted_and_product_is_det(m in any_matrix()) {
                let sv = singular_values(&m).unwrap();
                let v = sv.values();
                for w in v.windows(2) {
                    prop_assert!(w[0] >= w[1] && w[1] >= 0.0);
                }
                let det = m.det().abs();
                prop_assume!(det > 1e-8);
                prop_assert!((sv.product() - det).abs() <= 1e-10 * det);
            }
        }
    }
}
