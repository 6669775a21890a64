use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigen, ComplexMatrix, C64};

/// Tolerances a state must meet to count as a valid density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;

/// A Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates `mat` against the density-matrix invariants.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let state = DensityMatrix(mat);
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn from_matrix_unchecked(mat: ComplexMatrix) -> Self {
        DensityMatrix(mat)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let mat = ComplexMatrix::projector(psi).scale_real(1.0 / norm_sqr);
        Ok(DensityMatrix(mat))
    }

    /// Haar-random pure state.
    pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let psi: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::pure(&psi).expect("gaussian vector is nonzero")
    }

    /// Random full-rank state G G† / Tr(G G†) from a Ginibre matrix G.
    pub fn random_mixed<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut g = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                g.set(i, j, C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            }
        }
        let gg = g * g.dagger();
        let tr = gg.trace().re;
        DensityMatrix(gg.scale_real(1.0 / tr).hermitian_part())
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Re Tr(ρ A)
    #[inline]
    pub fn expectation(&self, op: &ComplexMatrix) -> f64 {
        self.0.trace_product(op).re
    }

    /// ⟨v|ρ|v⟩ for a normalised vector.
    #[inline]
    pub fn probability(&self, v: &[C64]) -> f64 {
        self.0.quadratic_form(v).re
    }

    pub fn trace_defect(&self) -> f64 {
        (self.0.trace() - C64::new(1.0, 0.0)).norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.0.hermiticity_defect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.0.hermitian_part())
            .map(|s| s.min_eigenvalue())
            .unwrap_or(f64::NAN)
    }

    /// Tr(ρ²)
    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }

    pub fn validate(&self) -> Result<()> {
        if !self.0.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = self.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("hermiticity defect {herm:.3e}")));
        }
        let tr = self.trace_defect();
        if tr > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace defect {tr:.3e}")));
        }
        let min = self.min_eigenvalue();
        if !(min >= -POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}

/// Real coordinates of a state in the Pauli (spin-1/2) or Gell-Mann
/// (spin-1) basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoherenceVector {
    /// (r_x, r_y, r_z)
    Half([f64; 3]),
    /// (s, m, u, v, k, x, y, z)
    One([f64; 8]),
}

impl CoherenceVector {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            CoherenceVector::Half(r) => r,
            CoherenceVector::One(r) => r,
        }
    }

    pub fn len(&self) -> usize {
        self.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Named components of a spin-1 coherence vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GellMannCoords {
    pub s: f64,
    pub m: f64,
    pub u: f64,
    pub v: f64,
    pub k: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 8]> for GellMannCoords {
    fn from(r: [f64; 8]) -> Self {
        let [s, m, u, v, k, x, y, z] = r;
        GellMannCoords { s, m, u, v, k, x, y, z }
    }
}

impl From<GellMannCoords> for [f64; 8] {
    fn from(c: GellMannCoords) -> Self {
        [c.s, c.m, c.u, c.v, c.k, c.x, c.y, c.z]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 3] {
            for _ in 0..200 {
                DensityMatrix::random_pure(dim, &mut rng).validate().unwrap();
                DensityMatrix::random_mixed(dim, &mut rng).validate().unwrap();
            }
        }
    }

    #[test]
    fn rejects_invalid() {
        let not_unit = ComplexMatrix::diagonal(&[1.0, 1.0]);
        assert!(DensityMatrix::new(not_unit).is_err());
        let negative = ComplexMatrix::diagonal(&[1.5, -0.5]);
        assert!(DensityMatrix::new(negative).is_err());
        let mut skew = ComplexMatrix::diagonal(&[0.5, 0.5]);
        skew.set(0, 1, C64::new(0.1, 0.0));
        assert!(DensityMatrix::new(skew).is_err());
        assert!(DensityMatrix::pure(&[C64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn purity_bounds() {
        assert!((DensityMatrix::maximally_mixed(3).purity() - 1.0 / 3.0).abs() < 1e-15);
        let p = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        assert!((p.purity() - 1.0).abs() < 1e-15);
    }
}
