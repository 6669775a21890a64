//! Fixed-size complex linear algebra for 2×2 and 3×3 operators.
//!
//! Everything in the simulator lives in a Hilbert space of dimension two
//! (spin-1/2) or three (spin-1), so matrices are stored inline as a 3×3
//! array with an explicit dimension tag. Unused rows and columns are kept
//! at zero.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigenvalue tolerance used by the 3×3 Jacobi sweeps.
pub const JACOBI_TOLERANCE: f64 = 1e-13;
const MAX_SWEEPS: usize = 64;

#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: [[C64; 3]; 3],
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "unsupported dimension {dim}");
        ComplexMatrix {
            dim,
            data: [[ZERO; 3]; 3],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = ONE;
        }
        m
    }

    /// Builds a matrix from row slices. Fails on ragged or unsupported
    /// shapes and on non-finite entries.
    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let dim = rows.len();
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            for (j, z) in row.iter().enumerate() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
                m.data[i][j] = *z;
            }
        }
        Ok(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let owned: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        let refs: Vec<&[C64]> = owned.iter().map(Vec::as_slice).collect();
        Self::from_rows(&refs)
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.data[i][i] = C64::new(x, 0.0);
        }
        m
    }

    /// Outer product |v⟩⟨w|.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        assert_eq!(v.len(), w.len());
        let mut m = Self::zeros(v.len());
        for i in 0..v.len() {
            for j in 0..w.len() {
                m.data[i][j] = v[i] * w[j].conj();
            }
        }
        m
    }

    /// Rank-one projector |v⟩⟨v|.
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i][j] = value;
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim)
            .map(|i| self.data[i][..self.dim].to_vec())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.data[i][j]).collect()
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        Ok(self.mul_unchecked(rhs))
    }

    #[inline]
    pub(crate) fn mul_unchecked(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i][j] += a * rhs.data[k][j];
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[j][i] = self.data[i][j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i][j] = f(self.data[i][j]);
            }
        }
        out
    }

    /// [A, B] = AB − BA
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        Ok(self.matmul(rhs)? - rhs.matmul(self)?)
    }

    /// {A, B} = AB + BA
    pub fn anticommutator(&self, rhs: &Self) -> Result<Self> {
        Ok(self.matmul(rhs)? + rhs.matmul(self)?)
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.data[i][j] - rhs.data[i][j]).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Self::zeros(self.dim))
    }

    /// ‖A − A†‖_max
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    /// (A + A†) / 2
    pub fn hermitian_part(&self) -> Self {
        (*self + self.dagger()).scale_real(0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().flatten().all(|z| *z == ZERO)
    }

    /// Tr(A B) without forming the product.
    #[inline]
    pub fn trace_product(&self, rhs: &Self) -> C64 {
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i][k] * rhs.data[k][i];
            }
        }
        acc
    }

    /// ⟨v|A|v⟩
    pub fn quadratic_form(&self, v: &[C64]) -> C64 {
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                row += self.data[i][j] * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc
    }

    /// U A U† for a square U of the same dimension. Only the upper triangle
    /// is computed; the result is Hermitian by construction when A is.
    #[inline]
    pub(crate) fn congruence_hermitian(&self, u: &Self) -> Self {
        let n = self.dim;
        let mut ua = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = u.data[i][k];
                for j in 0..n {
                    ua.data[i][j] += a * self.data[k][j];
                }
            }
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += ua.data[i][k] * u.data[j][k].conj();
                }
                if i == j {
                    out.data[i][i] = C64::new(acc.re, 0.0);
                } else {
                    out.data[i][j] = acc;
                    out.data[j][i] = acc.conj();
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.data[i][j];
                write!(f, "{:+.17e}{:+.17e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i][j] += rhs.data[i][j];
            }
        }
        out
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i][j] -= rhs.data[i][j];
            }
        }
        out
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

/// Panics on dimension mismatch; use [`ComplexMatrix::matmul`] for the
/// fallible form.
impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> Self {
        self.matmul(&rhs).expect("dimension mismatch in mul")
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending. Column `k` of `eigenvectors` belongs to
/// `eigenvalues[k]`, and its first component with modulus above 1e-12 is
/// real and positive.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    pub fn projector(&self, k: usize) -> ComplexMatrix {
        ComplexMatrix::projector(&self.vector(k))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// ‖VΛV† − A‖_max
    pub fn reconstruction_error(&self, a: &ComplexMatrix) -> f64 {
        let lambda = ComplexMatrix::diagonal(&self.eigenvalues);
        let v = self.eigenvectors;
        (v * lambda * v.dagger()).max_abs_diff(a)
    }

    /// ‖V†V − I‖_max
    pub fn orthonormality_error(&self) -> f64 {
        let v = self.eigenvectors;
        (v.dagger() * v).max_abs_diff(&ComplexMatrix::identity(v.dim()))
    }
}

/// Diagonalises a Hermitian matrix: closed form for 2×2, cyclic complex
/// Jacobi for 3×3.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianSpectrum> {
    let defect = a.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let a = a.hermitian_part();
    let (values, vectors) = match a.dim() {
        2 => eigen_2x2(&a),
        _ => eigen_jacobi(&a),
    };
    Ok(canonicalize(values, vectors))
}

fn eigen_2x2(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let p = a.get(0, 0).re;
    let q = a.get(1, 1).re;
    let b = a.get(0, 1);
    let half_gap = 0.5 * (p - q);
    let radius = half_gap.hypot(b.norm());
    let mean = 0.5 * (p + q);
    if radius == 0.0 {
        return (vec![p, q], ComplexMatrix::identity(2));
    }
    let low = mean - radius;
    let high = mean + radius;
    // For eigenvalue λ the vector (b, λ − p) solves the first row unless it
    // vanishes, in which case (λ − q, b*) solves the second.
    let vec_for = |lambda: f64| -> [C64; 2] {
        let first = [b, C64::new(lambda - p, 0.0)];
        let second = [C64::new(lambda - q, 0.0), b.conj()];
        let n1 = (first[0].norm_sqr() + first[1].norm_sqr()).sqrt();
        let n2 = (second[0].norm_sqr() + second[1].norm_sqr()).sqrt();
        if n1 >= n2 {
            [first[0] / n1, first[1] / n1]
        } else {
            [second[0] / n2, second[1] / n2]
        }
    };
    let vl = vec_for(low);
    let vh = vec_for(high);
    let mut v = ComplexMatrix::zeros(2);
    for i in 0..2 {
        v.set(i, 0, vl[i]);
        v.set(i, 1, vh[i]);
    }
    (vec![low, high], v)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a.get(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn eigen_jacobi(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.dim();
    let mut m = *a;
    let mut v = ComplexMatrix::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= JACOBI_TOLERANCE * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                // Phase rotation makes the (p, q) entry real, then a real
                // Givens rotation annihilates it.
                let phase = apq / r;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let mut g = ComplexMatrix::identity(n);
                g.set(p, p, C64::new(c, 0.0));
                g.set(p, q, phase * s);
                g.set(q, p, -phase.conj() * s);
                g.set(q, q, C64::new(c, 0.0));

                m = g.dagger().mul_unchecked(&m).mul_unchecked(&g);
                m.set(p, q, ZERO);
                m.set(q, p, ZERO);
                for i in 0..n {
                    m.set(i, i, C64::new(m.get(i, i).re, 0.0));
                }
                v = v.mul_unchecked(&g);
            }
        }
    }
    let values = (0..n).map(|i| m.get(i, i).re).collect();
    (values, v)
}

/// Sorts ascending and fixes the phase of every eigenvector column.
fn canonicalize(values: Vec<f64>, vectors: ComplexMatrix) -> HermitianSpectrum {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (values[i], values[j]);
        if (a - b).abs() > 1e-12 {
            a.total_cmp(&b)
        } else {
            // Degenerate pair: order by the magnitude profile of the
            // vectors, largest leading component first.
            let vi = vectors.column(i);
            let vj = vectors.column(j);
            let key = |v: &[C64]| v.iter().map(|z| z.norm()).collect::<Vec<_>>();
            let (ki, kj) = (key(&vi), key(&vj));
            kj.iter()
                .zip(&ki)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    let mut out = ComplexMatrix::zeros(n);
    let mut sorted = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        sorted.push(values[src]);
        let mut col = vectors.column(src);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in col.iter_mut() {
            *z /= norm;
        }
        if let Some(lead) = col.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = lead.conj() / lead.norm();
            for z in col.iter_mut() {
                *z *= phase;
            }
            // Leading component is now real; drop the rounding residue.
            if let Some(first) = col.iter_mut().find(|z| z.norm() > 1e-12) {
                *first = C64::new(first.re, 0.0);
            }
        }
        for (i, z) in col.into_iter().enumerate() {
            out.set(i, k, z);
        }
    }
    HermitianSpectrum {
        eigenvalues: sorted,
        eigenvectors: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]).unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[1.0, -1.0])
    }

    fn spin1_sx() -> ComplexMatrix {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[0.0, r, 0.0], &[r, 0.0, r], &[0.0, r, 0.0]]).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let a = ComplexMatrix::from_rows(&[
            &[c(1.0, 2.0), c(0.5, -1.0), c(0.0, 3.0)],
            &[c(-2.0, 0.0), c(0.0, 0.0), c(1.0, 1.0)],
            &[c(4.0, -4.0), c(0.25, 0.0), c(-1.0, 0.5)],
        ])
        .unwrap();
        assert_eq!(ComplexMatrix::identity(3).matmul(&a).unwrap(), a);
        assert_eq!(a.matmul(&ComplexMatrix::identity(3)).unwrap(), a);
    }

    #[test]
    fn pauli_product() {
        let prod = pauli_x().matmul(&pauli_y()).unwrap();
        assert!(prod.max_abs_diff(&pauli_z().scale(I)) < 1e-15);
    }

    #[test]
    fn gell_mann_one_squared() {
        let l1 = ComplexMatrix::from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])
            .unwrap();
        assert_eq!(l1 * l1, ComplexMatrix::diagonal(&[1.0, 1.0, 0.0]));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let err = ComplexMatrix::identity(2)
            .matmul(&ComplexMatrix::identity(3))
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn from_rows_rejects_bad_input() {
        assert!(ComplexMatrix::from_real_rows(&[&[1.0]]).is_err());
        assert!(ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0]]).is_err());
        assert!(ComplexMatrix::from_real_rows(&[&[f64::NAN, 0.0], &[0.0, 1.0]]).is_err());
    }

    #[test]
    fn dagger_cases() {
        assert_eq!(pauli_y().dagger(), pauli_y());
        let i_id = ComplexMatrix::identity(3).scale(I);
        assert_eq!(i_id.dagger(), ComplexMatrix::identity(3).scale(-I));
        let a = pauli_x() + pauli_y().scale(c(0.3, 0.7));
        let b = pauli_z().scale(c(0.0, 2.0)) + ComplexMatrix::identity(2);
        let lhs = (a * b).dagger();
        let rhs = b.dagger() * a.dagger();
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }

    #[test]
    fn traces() {
        assert_eq!(ComplexMatrix::identity(3).trace(), c(3.0, 0.0));
        assert_eq!(pauli_y().trace(), ZERO);
    }

    #[test]
    fn eigen_diagonal() {
        let spec = hermitian_eigen(&ComplexMatrix::diagonal(&[1.0, 0.0, -1.0])).unwrap();
        assert_eq!(spec.eigenvalues, vec![-1.0, 0.0, 1.0]);
        assert!(spec.reconstruction_error(&ComplexMatrix::diagonal(&[1.0, 0.0, -1.0])) < 1e-15);
    }

    #[test]
    fn eigen_pauli_x() {
        let spec = hermitian_eigen(&pauli_x()).unwrap();
        assert!((spec.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((spec.eigenvalues[1] - 1.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let low = spec.vector(0);
        let high = spec.vector(1);
        assert!((low[0] - c(r, 0.0)).norm() < 1e-15 && (low[1] - c(-r, 0.0)).norm() < 1e-15);
        assert!((high[0] - c(r, 0.0)).norm() < 1e-15 && (high[1] - c(r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigen_spin1_sx_matches_characteristic_polynomial() {
        // det(S_x − λ) = −λ³ + λ, roots found by bisection on each sign change.
        let charpoly = |l: f64| -l * l * l + l;
        let mut roots = Vec::new();
        let grid: Vec<f64> = (0..=400).map(|k| -2.0 + 0.01 * k as f64 + 0.003).collect();
        for w in grid.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            if charpoly(lo).signum() != charpoly(hi).signum() {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if charpoly(lo).signum() == charpoly(mid).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        assert_eq!(roots.len(), 3);
        let spec = hermitian_eigen(&spin1_sx()).unwrap();
        for (a, b) in spec.eigenvalues.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(spec.reconstruction_error(&spin1_sx()) < 1e-12);
        assert!(spec.orthonormality_error() < 1e-12);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(hermitian_eigen(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigen_phase_convention() {
        let a = ComplexMatrix::from_rows(&[
            &[c(0.2, 0.0), c(0.1, -0.4), c(0.0, 0.3)],
            &[c(0.1, 0.4), c(-0.5, 0.0), c(0.2, 0.2)],
            &[c(0.0, -0.3), c(0.2, -0.2), c(0.9, 0.0)],
        ])
        .unwrap();
        let spec = hermitian_eigen(&a).unwrap();
        for k in 0..3 {
            let v = spec.vector(k);
            let lead = v.iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(lead.im == 0.0 && lead.re > 0.0);
        }
    }

    #[test]
    fn eigen_is_deterministic() {
        let a = spin1_sx() + ComplexMatrix::diagonal(&[0.3, -0.1, 0.0]);
        let s1 = hermitian_eigen(&a).unwrap();
        let s2 = hermitian_eigen(&a).unwrap();
        assert_eq!(s1.eigenvalues, s2.eigenvalues);
        assert_eq!(s1.eigenvectors, s2.eigenvectors);
    }

    fn arb_matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
            let mut m = ComplexMatrix::zeros(dim);
            for i in 0..dim {
                for j in 0..dim {
                    let (re, im) = v[i * dim + j];
                    m.set(i, j, C64::new(re, im));
                }
            }
            m
        })
    }

    fn arb_hermitian() -> impl Strategy<Value = ComplexMatrix> {
        prop_oneof![arb_matrix(2), arb_matrix(3)].prop_map(|m| m.hermitian_part())
    }

    proptest! {
        #[test]
        fn eigen_reconstructs(a in arb_hermitian()) {
            let spec = hermitian_eigen(&a).unwrap();
            prop_assert!(spec.reconstruction_error(&a) <= 1e-12);
            prop_assert!(spec.orthonormality_error() <= 1e-12);
            prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn trace_is_cyclic(a in arb_matrix(3), b in arb_matrix(3)) {
            let ab = (a * b).trace();
            let ba = (b * a).trace();
            prop_assert!((ab - ba).norm() <= 1e-12);
        }

        #[test]
        fn double_dagger_is_exact(a in prop_oneof![arb_matrix(2), arb_matrix(3)]) {
            prop_assert_eq!(a.dagger().dagger(), a);
        }

        #[test]
        fn congruence_matches_products(a in arb_hermitian(), u in arb_matrix(3)) {
            if a.dim() == 3 {
                let direct = u * a * u.dagger();
                prop_assert!(a.congruence_hermitian(&u).max_abs_diff(&direct) < 1e-12);
            }
        }
    }
}
