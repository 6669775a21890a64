//! Spin-1/2 and spin-1 systems: operators, eigenbases, coherence-vector
//! parametrisations and preset states.
//!
//! Eigenstates are always listed in descending eigenvalue order, i.e.
//! `(+1, 0, −1)` for spin-1 and `(+1, −1)` for spin-1/2.
//!
//! The measurement channels differ between the two systems. Spin-1/2
//! couples through the Pauli matrices (`L_z = a σ_z`, `L_x = b σ_x`), which
//! is the normalisation under which the familiar coherence-vector SDEs
//! `dr_z = 2a(1 − r_z²) dW_z − …` hold. Spin-1 couples through the spin
//! matrices themselves (`L_z = a S_z`, `L_x = b S_x`).

pub mod appendix;
mod preset;
mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigen, ComplexMatrix, C64, I, ZERO};

pub use preset::Preset;
pub use state::{
    CoherenceVector, DensityMatrix, GellMannCoords, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL,
};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Half,
    One,
}

impl Spin {
    pub fn dim(self) -> usize {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Half => "half",
            Spin::One => "one",
        })
    }
}

impl FromStr for Spin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" | "spin_half" | "1/2" => Ok(Spin::Half),
            "one" | "spin_one" | "1" => Ok(Spin::One),
            other => Err(Error::InvalidConfig(format!("unknown spin `{other}`"))),
        }
    }
}

/// Which spin component is being measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    Sz,
    Sx,
}

/// Eigenvalue label of a measurement outcome, in units of the measured
/// operator's spectrum (`±1` for σ, `±1, 0` for spin-1 S).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Plus,
    Zero,
    Minus,
}

impl Label {
    pub fn value(self) -> i8 {
        match self {
            Label::Plus => 1,
            Label::Zero => 0,
            Label::Minus => -1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Plus => "+1",
            Label::Zero => "0",
            Label::Minus => "-1",
        }
    }

    /// Column-name fragment used in CSV headers.
    pub fn tag(self) -> &'static str {
        match self {
            Label::Plus => "plus",
            Label::Zero => "zero",
            Label::Minus => "minus",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" => Ok(Label::Plus),
            "0" | "zero" => Ok(Label::Zero),
            "-1" | "-" | "minus" | "−1" => Ok(Label::Minus),
            other => Err(Error::InvalidConfig(format!("unknown eigenstate label `{other}`"))),
        }
    }
}

/// An eigenbasis of one measured observable.
#[derive(Clone, Debug)]
pub struct Eigenbasis {
    pub labels: Vec<Label>,
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub projectors: Vec<ComplexMatrix>,
}

impl Eigenbasis {
    fn of(op: &ComplexMatrix, labels: &[Label]) -> Self {
        let spectrum = hermitian_eigen(op).expect("spin operators are Hermitian");
        let n = op.dim();
        // hermitian_eigen is ascending; labels run descending.
        let order: Vec<usize> = (0..n).rev().collect();
        let vectors: Vec<Vec<C64>> = order.iter().map(|&k| spectrum.vector(k)).collect();
        Eigenbasis {
            labels: labels.to_vec(),
            eigenvalues: order.iter().map(|&k| spectrum.eigenvalues[k]).collect(),
            projectors: vectors.iter().map(|v| ComplexMatrix::projector(v)).collect(),
            vectors,
        }
    }

    pub fn index_of(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn vector(&self, label: Label) -> Option<&[C64]> {
        self.index_of(label).map(|k| self.vectors[k].as_slice())
    }
}

#[derive(Clone, Debug)]
pub struct SpinModel {
    pub spin: Spin,
    /// (S_x, S_y, S_z) with ħ = 1.
    pub s: [ComplexMatrix; 3],
    basis_z: Eigenbasis,
    basis_x: Eigenbasis,
}

impl SpinModel {
    pub fn build(spin: Spin) -> Self {
        let s = match spin {
            Spin::Half => {
                let [sx, sy, sz] = pauli();
                [sx.scale_real(0.5), sy.scale_real(0.5), sz.scale_real(0.5)]
            }
            Spin::One => spin_one_matrices(),
        };
        let labels: &[Label] = match spin {
            Spin::Half => &[Label::Plus, Label::Minus],
            Spin::One => &[Label::Plus, Label::Zero, Label::Minus],
        };
        SpinModel {
            spin,
            basis_z: Eigenbasis::of(&s[2], labels),
            basis_x: Eigenbasis::of(&s[0], labels),
            s,
        }
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn sx(&self) -> &ComplexMatrix {
        &self.s[0]
    }

    pub fn sy(&self) -> &ComplexMatrix {
        &self.s[1]
    }

    pub fn sz(&self) -> &ComplexMatrix {
        &self.s[2]
    }

    pub fn labels(&self) -> &[Label] {
        &self.basis_z.labels
    }

    pub fn basis(&self, observable: Observable) -> &Eigenbasis {
        match observable {
            Observable::Sz => &self.basis_z,
            Observable::Sx => &self.basis_x,
        }
    }

    pub fn projectors(&self, observable: Observable) -> &[ComplexMatrix] {
        &self.basis(observable).projectors
    }

    /// Operator that a unit coupling attaches to the environment: σ_i for
    /// spin-1/2, S_i for spin-1.
    pub fn channel_operator(&self, observable: Observable) -> ComplexMatrix {
        let op = match observable {
            Observable::Sz => self.s[2],
            Observable::Sx => self.s[0],
        };
        match self.spin {
            Spin::Half => op.scale_real(2.0),
            Spin::One => op,
        }
    }

    pub fn rho_from_coherence(&self, c: &CoherenceVector) -> Result<DensityMatrix> {
        match (self.spin, c) {
            (Spin::Half, CoherenceVector::Half(r)) => {
                let [sx, sy, sz] = pauli();
                let mat = ComplexMatrix::identity(2)
                    + sx.scale_real(r[0])
                    + sy.scale_real(r[1])
                    + sz.scale_real(r[2]);
                Ok(DensityMatrix::from_matrix_unchecked(mat.scale_real(0.5)))
            }
            (Spin::One, CoherenceVector::One(r)) => {
                // Written entry by entry so the trace is exactly one.
                let g = GellMannCoords::from(*r);
                let t = SQRT3;
                let c = |re: f64, im: f64| C64::new(re / 3.0, im / 3.0);
                let mat = ComplexMatrix::from_rows(&[
                    &[c(1.0 + t * g.u + g.z, 0.0), c(t * g.s, -t * g.m), c(t * g.v, -t * g.k)],
                    &[c(t * g.s, t * g.m), c(1.0 - t * g.u + g.z, 0.0), c(t * g.x, -t * g.y)],
                    &[c(t * g.v, t * g.k), c(t * g.x, t * g.y), c(1.0 - 2.0 * g.z, 0.0)],
                ])?;
                Ok(DensityMatrix::from_matrix_unchecked(mat))
            }
            _ => Err(Error::DimensionMismatch {
                left: self.dim(),
                right: c.len(),
            }),
        }
    }

    pub fn coherence_from_rho(&self, rho: &DensityMatrix) -> CoherenceVector {
        match self.spin {
            Spin::Half => {
                let [sx, sy, sz] = pauli();
                CoherenceVector::Half([
                    rho.expectation(&sx),
                    rho.expectation(&sy),
                    rho.expectation(&sz),
                ])
            }
            Spin::One => {
                let basis = gell_mann_basis();
                let mut r = [0.0; 8];
                for (ri, lambda) in r.iter_mut().zip(basis.iter()) {
                    *ri = 0.5 * SQRT3 * rho.expectation(lambda);
                }
                CoherenceVector::One(r)
            }
        }
    }

    /// (⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩) = Tr(ρ S_i).
    pub fn spin_expectations(&self, rho: &DensityMatrix) -> [f64; 3] {
        [
            rho.expectation(&self.s[0]),
            rho.expectation(&self.s[1]),
            rho.expectation(&self.s[2]),
        ]
    }

    pub fn preset_state(&self, preset: &Preset) -> Result<DensityMatrix> {
        preset.build(self)
    }
}

/// (σ_x, σ_y, σ_z)
pub fn pauli() -> [ComplexMatrix; 3] {
    [
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap(),
        ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]).unwrap(),
        ComplexMatrix::diagonal(&[1.0, -1.0]),
    ]
}

fn spin_one_matrices() -> [ComplexMatrix; 3] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let ri = C64::new(0.0, r);
    let sx = ComplexMatrix::from_real_rows(&[&[0.0, r, 0.0], &[r, 0.0, r], &[0.0, r, 0.0]]).unwrap();
    let sy = ComplexMatrix::from_rows(&[&[ZERO, -ri, ZERO], &[ri, ZERO, -ri], &[ZERO, ri, ZERO]])
        .unwrap();
    let sz = ComplexMatrix::diagonal(&[1.0, 0.0, -1.0]);
    [sx, sy, sz]
}

/// λ_1 … λ_8, normalised so that Tr(λ_i λ_j) = 2 δ_ij.
pub fn gell_mann_basis() -> [ComplexMatrix; 8] {
    let o = ZERO;
    let l = C64::new(1.0, 0.0);
    let m = |rows: [[C64; 3]; 3]| {
        ComplexMatrix::from_rows(&[&rows[0], &rows[1], &rows[2]]).unwrap()
    };
    [
        m([[o, l, o], [l, o, o], [o, o, o]]),
        m([[o, -I, o], [I, o, o], [o, o, o]]),
        m([[l, o, o], [o, -l, o], [o, o, o]]),
        m([[o, o, l], [o, o, o], [l, o, o]]),
        m([[o, o, -I], [o, o, o], [I, o, o]]),
        m([[o, o, o], [o, o, l], [o, l, o]]),
        m([[o, o, o], [o, o, -I], [o, I, o]]),
        ComplexMatrix::diagonal(&[1.0, 1.0, -2.0]).scale_real(1.0 / SQRT3),
    ]
}
