//! Curves traced in the (⟨S_x⟩, ⟨S_z⟩) plane by real two-eigenstate
//! superpositions of spin-1, and the lens-shaped "petal" regions between
//! them.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::C64;
use crate::spin::{DensityMatrix, Label, Observable, Spin, SpinModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LocusKind {
    /// Superpositions of (+1, 0) and (−1, 0) S_z eigenstates: ellipses.
    ZPair,
    /// The same for S_x eigenstates.
    XPair,
    /// Superpositions of the ±1 eigenstates of either observable: the two
    /// axis segments.
    Axis,
}

impl FromStr for LocusKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z_pair" | "z-pair" => Ok(LocusKind::ZPair),
            "x_pair" | "x-pair" => Ok(LocusKind::XPair),
            "axis" => Ok(LocusKind::Axis),
            other => Err(Error::InvalidConfig(format!("unknown locus kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Locus {
    pub observable: Observable,
    pub pair: (Label, Label),
    /// (⟨S_x⟩, ⟨S_z⟩) along cos θ |i⟩ + sin θ |j⟩ for θ ∈ [0, π), which
    /// traces the closed curve once.
    pub points: Vec<(f64, f64)>,
}

fn plane_point(model: &SpinModel, psi: &[C64]) -> (f64, f64) {
    let rho = DensityMatrix::pure(psi).expect("nonzero superposition");
    let [sx, _, sz] = model.spin_expectations(&rho);
    (sx, sz)
}

/// Samples the curve of `cos θ |i⟩ + sin θ |j⟩` at `n` angles.
pub fn pair_locus(observable: Observable, pair: (Label, Label), n: usize) -> Locus {
    let model = SpinModel::build(Spin::One);
    let basis = model.basis(observable);
    let vi = basis.vector(pair.0).unwrap();
    let vj = basis.vector(pair.1).unwrap();
    let points = (0..n)
        .map(|k| {
            let theta = PI * k as f64 / n as f64;
            let psi: Vec<C64> = vi
                .iter()
                .zip(vj)
                .map(|(a, b)| a * theta.cos() + b * theta.sin())
                .collect();
            plane_point(&model, &psi)
        })
        .collect();
    Locus { observable, pair, points }
}

pub fn superposition_loci(kind: LocusKind, n: usize) -> Vec<Locus> {
    let pairs: &[(Observable, (Label, Label))] = match kind {
        LocusKind::ZPair => &[
            (Observable::Sz, (Label::Plus, Label::Zero)),
            (Observable::Sz, (Label::Minus, Label::Zero)),
        ],
        LocusKind::XPair => &[
            (Observable::Sx, (Label::Plus, Label::Zero)),
            (Observable::Sx, (Label::Minus, Label::Zero)),
        ],
        LocusKind::Axis => &[
            (Observable::Sz, (Label::Plus, Label::Minus)),
            (Observable::Sx, (Label::Plus, Label::Minus)),
        ],
    };
    pairs
        .iter()
        .map(|&(obs, pair)| pair_locus(obs, pair, n))
        .collect()
}

/// Even-odd ray casting test against a closed polygon.
pub fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// The four lenses where a z-pair ellipse and an x-pair ellipse overlap.
/// Each lens touches the origin and one of the points (±2/3, ±2/3).
#[derive(Clone, Debug)]
pub struct PetalRegions {
    z_loci: Vec<Locus>,
    x_loci: Vec<Locus>,
}

impl PetalRegions {
    pub fn new(resolution: usize) -> Self {
        PetalRegions {
            z_loci: superposition_loci(LocusKind::ZPair, resolution),
            x_loci: superposition_loci(LocusKind::XPair, resolution),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.z_loci.iter().any(|l| point_in_polygon(&l.points, x, y))
            && self.x_loci.iter().any(|l| point_in_polygon(&l.points, x, y))
    }
}

impl Default for PetalRegions {
    fn default() -> Self {
        Self::new(2048)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12
    }

    #[test]
    fn z_pair_endpoints() {
        let l = pair_locus(Observable::Sz, (Label::Plus, Label::Zero), 4);
        assert!(near(l.points[0], (0.0, 1.0)));
        assert!(near(l.points[2], (0.0, 0.0)));
    }

    #[test]
    fn equal_weight_minus_zero_point() {
        // (|−1⟩ + |0⟩)/√2 in the z basis, evaluated directly.
        let model = SpinModel::build(Spin::One);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [C64::new(0.0, 0.0), C64::new(r, 0.0), C64::new(r, 0.0)];
        let direct = plane_point(&model, &psi);
        assert!((direct.1 + 0.5).abs() < 1e-12);
        assert!((direct.0.abs() - r).abs() < 1e-12);
        let l = pair_locus(Observable::Sz, (Label::Minus, Label::Zero), 4);
        assert!(near(l.points[1], direct));
    }

    #[test]
    fn ellipse_geometry() {
        // z(+1,0): centre (0, ½), semi-axes √2/2 along x and ½ along z.
        let l = pair_locus(Observable::Sz, (Label::Plus, Label::Zero), 360);
        for &(x, z) in &l.points {
            let e = (x / std::f64::consts::FRAC_1_SQRT_2).powi(2) + ((z - 0.5) / 0.5).powi(2);
            assert!((e - 1.0).abs() < 1e-12);
        }
        let l = pair_locus(Observable::Sx, (Label::Minus, Label::Zero), 360);
        for &(x, z) in &l.points {
            let e = ((x + 0.5) / 0.5).powi(2) + (z / std::f64::consts::FRAC_1_SQRT_2).powi(2);
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn axis_segments() {
        let loci = superposition_loci(LocusKind::Axis, 64);
        assert!(loci[0].points.iter().all(|p| p.0.abs() < 1e-12 && p.1.abs() <= 1.0 + 1e-12));
        assert!(loci[1].points.iter().all(|p| p.1.abs() < 1e-12 && p.0.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn petals() {
        let p = PetalRegions::default();
        for (sx, sz) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            assert!(p.contains(sx * 0.35, sz * 0.35));
            assert!(!p.contains(sx * 0.75, sz * 0.75));
        }
        assert!(!p.contains(0.0, 0.9));
        assert!(!p.contains(0.9, 0.0));
        assert!(!p.contains(0.3, -0.01));
    }

    #[test]
    fn polygon_square() {
        let sq = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        assert!(point_in_polygon(&sq, 0.5, 0.5));
        assert!(!point_in_polygon(&sq, 1.5, 0.5));
    }
}
