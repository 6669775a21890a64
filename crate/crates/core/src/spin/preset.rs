use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::C64;

use super::{DensityMatrix, Label, Observable, Spin, SpinModel};

/// Named initial states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// I/d
    MixedStart,
    EigZ(Label),
    EigX(Label),
    /// Equal-weight, equal-phase superposition of two S_z eigenstates.
    SuperposZ(Label, Label),
}

impl Preset {
    pub fn build(&self, model: &SpinModel) -> Result<DensityMatrix> {
        let check = |label: Label| -> Result<()> {
            if model.spin == Spin::Half && label == Label::Zero {
                Err(Error::UnknownPreset(format!("{self} (spin-1/2 has no 0 eigenstate)")))
            } else {
                Ok(())
            }
        };
        match *self {
            Preset::MixedStart => Ok(DensityMatrix::maximally_mixed(model.dim())),
            Preset::EigZ(label) => {
                check(label)?;
                DensityMatrix::pure(model.basis(Observable::Sz).vector(label).unwrap())
            }
            Preset::EigX(label) => {
                check(label)?;
                DensityMatrix::pure(model.basis(Observable::Sx).vector(label).unwrap())
            }
            Preset::SuperposZ(a, b) => {
                check(a)?;
                check(b)?;
                if a == b {
                    return Err(Error::UnknownPreset(self.to_string()));
                }
                let basis = model.basis(Observable::Sz);
                let va = basis.vector(a).unwrap();
                let vb = basis.vector(b).unwrap();
                let psi: Vec<C64> = va.iter().zip(vb).map(|(x, y)| x + y).collect();
                DensityMatrix::pure(&psi)
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::MixedStart => write!(f, "mixed_start"),
            Preset::EigZ(l) => write!(f, "eig_z({l})"),
            Preset::EigX(l) => write!(f, "eig_x({l})"),
            Preset::SuperposZ(a, b) => write!(f, "superpos_z({a},{b})"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownPreset(s.to_string());
        let s = s.trim();
        if s == "mixed_start" || s == "mixed" {
            return Ok(Preset::MixedStart);
        }
        let open = s.find('(').ok_or_else(unknown)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(unknown)?;
        let labels: Vec<Label> = inner
            .split(',')
            .map(|p| p.parse::<Label>().map_err(|_| unknown()))
            .collect::<Result<_>>()?;
        match (&s[..open], labels.as_slice()) {
            ("eig_z", [l]) => Ok(Preset::EigZ(*l)),
            ("eig_x", [l]) => Ok(Preset::EigX(*l)),
            ("superpos_z", [a, b]) if a != b => Ok(Preset::SuperposZ(*a, *b)),
            _ => Err(unknown()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ComplexMatrix;

    #[test]
    fn parse_round_trip() {
        for text in [
            "mixed_start",
            "eig_z(+1)",
            "eig_z(0)",
            "eig_x(-1)",
            "superpos_z(-1,0)",
            "superpos_z(+1,-1)",
        ] {
            let p: Preset = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert_eq!("superpos_z(-1, 0)".parse::<Preset>().unwrap(), Preset::SuperposZ(Label::Minus, Label::Zero));
    }

    #[test]
    fn parse_rejects_garbage() {
        for text in ["", "eig_y(+1)", "eig_z(2)", "eig_z(+1", "superpos_z(0,0)", "eig_z(+1,0)"] {
            assert!(text.parse::<Preset>().is_err(), "{text}");
        }
    }

    #[test]
    fn states_are_valid() {
        for spin in [Spin::Half, Spin::One] {
            let m = SpinModel::build(spin);
            for &l in m.labels() {
                for p in [Preset::EigZ(l), Preset::EigX(l)] {
                    let rho = p.build(&m).unwrap();
                    rho.validate().unwrap();
                    assert!((rho.purity() - 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn spin_half_has_no_zero() {
        let m = SpinModel::build(Spin::Half);
        assert!(Preset::EigZ(Label::Zero).build(&m).is_err());
    }

    #[test]
    fn superposition_entries() {
        let m = SpinModel::build(Spin::One);
        let rho = Preset::SuperposZ(Label::Minus, Label::Zero).build(&m).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[
            &[0.0, 0.0, 0.0],
            &[0.0, 0.5, 0.5],
            &[0.0, 0.5, 0.5],
        ])
        .unwrap();
        assert!(rho.matrix().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn eig_x_zero_vector() {
        let m = SpinModel::build(Spin::One);
        let rho = Preset::EigX(Label::Zero).build(&m).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[
            &[0.5, 0.0, -0.5],
            &[0.0, 0.0, 0.0],
            &[-0.5, 0.0, 0.5],
        ])
        .unwrap();
        assert!(rho.matrix().max_abs_diff(&expect) < 1e-14);
    }
}
