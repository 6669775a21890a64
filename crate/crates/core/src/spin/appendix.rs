//! Closed-form spin-1 coherence-vector SDEs and their cross-check against
//! the density-matrix dynamics.
//!
//! With `L_z = aS_z`, `L_x = bS_x` and `H = 0`, each component obeys
//! `dR_i = drift_i dt + diff_z,i dW_z + diff_x,i dW_x`. The published
//! closed forms are evaluated literally by [`appendix_sde_drift_diffusion`];
//! three of their terms disagree with the projection
//! `dR_i = (√3/2) Tr(dρ λ_i)` and are listed in [`SUSPECT_TERMS`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::matrix::ComplexMatrix;

use super::{gell_mann_basis, CoherenceVector, DensityMatrix, GellMannCoords, Spin, SpinModel};

pub const COMPONENT_NAMES: [&str; 8] = ["s", "m", "u", "v", "k", "x", "y", "z"];

/// Drift, S_z-noise and S_x-noise coefficients of the eight components,
/// each ordered (s, m, u, v, k, x, y, z).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub drift: [f64; 8],
    pub diff_z: [f64; 8],
    pub diff_x: [f64; 8],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Drift,
    DiffZ,
    DiffX,
}

impl TermKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TermKind::Drift => "dt",
            TermKind::DiffZ => "dW_z",
            TermKind::DiffX => "dW_x",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SuspectTerm {
    /// Index into (s, m, u, v, k, x, y, z).
    pub component: usize,
    pub kind: TermKind,
    pub printed: &'static str,
    pub corrected: &'static str,
}

pub const SUSPECT_TERMS: [SuspectTerm; 3] = [
    SuspectTerm {
        component: 1,
        kind: TermKind::DiffZ,
        printed: "-a(2/sqrt3 mu - 2mz + zm)",
        corrected: "-a(2/sqrt3 mu + 2mz - m)",
    },
    SuspectTerm {
        component: 2,
        kind: TermKind::DiffZ,
        printed: "a(-2/sqrt3 u^2 - 2uz + zu + z/sqrt3 + 1/sqrt3)",
        corrected: "a(-2/sqrt3 u^2 - 2uz + u + z/sqrt3 + 1/sqrt3)",
    },
    SuspectTerm {
        component: 3,
        kind: TermKind::DiffX,
        printed: "b(+2sqrt2/sqrt3 sv + ...)",
        corrected: "b(-2sqrt2/sqrt3 sv + ...)",
    },
];

fn is_suspect(component: usize, kind: TermKind) -> bool {
    SUSPECT_TERMS
        .iter()
        .any(|t| t.component == component && t.kind == kind)
}

fn closed_form(r: &GellMannCoords, a: f64, b: f64, corrected: bool) -> Coefficients {
    let GellMannCoords { s, m, u, v, k, x, y, z } = *r;
    let r3 = 3f64.sqrt();
    let r2 = 2f64.sqrt();
    let p = 2.0 / r3; // 2/√3
    let q = 2.0 * r2 / r3; // 2√2/√3
    let h = 1.0 / r2; // 1/√2
    let w = r2 / r3; // √2/√3
    let (a2, b2) = (a * a, b * b);

    let drift = [
        -0.5 * a2 * s + 0.25 * b2 * (x - s),
        -0.5 * a2 * m + b2 * (0.75 * y - 1.25 * m),
        b2 * (-1.25 * u - 0.75 * v + r3 / 4.0 * z),
        -2.0 * a2 * v + b2 * (-0.5 * v - 0.75 * u + r3 / 4.0 * z),
        -2.0 * a2 * k - 0.5 * b2 * k,
        -0.5 * a2 * x + b2 * (0.25 * s - 0.25 * x),
        -0.5 * a2 * y + b2 * (0.75 * m - 1.25 * y),
        b2 * (r3 / 4.0 * u + r3 / 4.0 * v - 0.75 * z),
    ];

    let dm_z = if corrected {
        -a * (p * m * u + 2.0 * m * z - m)
    } else {
        -a * (p * m * u - 2.0 * m * z + z * m)
    };
    let du_z = if corrected {
        a * (-p * u * u - 2.0 * u * z + u + z / r3 + 1.0 / r3)
    } else {
        a * (-p * u * u - 2.0 * u * z + z * u + z / r3 + 1.0 / r3)
    };
    let diff_z = [
        a * (-p * s * u - 2.0 * s * z + s),
        dm_z,
        du_z,
        a * (-p * u * v - 2.0 * v * z),
        a * (-p * k * u - 2.0 * k * z),
        -a * (p * u * x + 2.0 * x * z + x),
        a * (-p * u * y - 2.0 * y * z - y),
        a * (-p * u * z + u / r3 - 2.0 * z * z - z + 1.0),
    ];

    let sv = if corrected { -q * s * v } else { q * s * v };
    let diff_x = [
        b * (-q * s * s - q * s * x + h * v + w * z + w),
        b * (h * k - q * m * s - q * m * x),
        b * (-q * s * u - q * u * x - h * x),
        b * (sv + h * s - q * v * x + h * x),
        b * (-q * k * s - q * k * x + h * m + h * y),
        w * b * (-2.0 * s * x - r3 / 2.0 * u + r3 / 2.0 * v - 2.0 * x * x - 0.5 * z + 1.0),
        b * (h * k - q * s * y - q * x * y),
        w * b * (-2.0 * s * z + s - 2.0 * x * z - 0.5 * x),
    ];

    Coefficients { drift, diff_z, diff_x }
}

/// The published closed forms, evaluated term by term as printed.
pub fn appendix_sde_drift_diffusion(r: &[f64; 8], a: f64, b: f64) -> Coefficients {
    closed_form(&GellMannCoords::from(*r), a, b, false)
}

/// The closed forms with the three [`SUSPECT_TERMS`] replaced by their
/// corrected versions.
pub fn appendix_sde_corrected(r: &[f64; 8], a: f64, b: f64) -> Coefficients {
    closed_form(&GellMannCoords::from(*r), a, b, true)
}

/// Coefficients obtained by projecting the density-matrix SDE onto the
/// Gell-Mann basis, `(√3/2) Tr(· λ_i)`, term by term.
pub fn projected_coefficients(model: &SpinModel, rho: &DensityMatrix, a: f64, b: f64) -> Coefficients {
    let r = *rho.matrix();
    let lz = model.sz().scale_real(a);
    let lx = model.sx().scale_real(b);
    let dissipator = |l: &ComplexMatrix| {
        let ld = l.dagger();
        let ldl = ld * *l;
        *l * r * ld - (ldl * r + r * ldl).scale_real(0.5)
    };
    let diffusion = |l: &ComplexMatrix| {
        let ld = l.dagger();
        let mean = (r * (*l + ld)).trace().re;
        r * ld + *l * r - r.scale_real(mean)
    };
    let drift_op = dissipator(&lz) + dissipator(&lx);
    let gz = diffusion(&lz);
    let gx = diffusion(&lx);
    let basis = gell_mann_basis();
    let project = |op: &ComplexMatrix| {
        let mut out = [0.0; 8];
        for (o, lambda) in out.iter_mut().zip(basis.iter()) {
            *o = 0.5 * 3f64.sqrt() * op.trace_product(lambda).re;
        }
        out
    };
    Coefficients {
        drift: project(&drift_op),
        diff_z: project(&gz),
        diff_x: project(&gx),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentDeviation {
    pub name: &'static str,
    pub drift: f64,
    pub diff_z: f64,
    pub diff_x: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuspectDeviation {
    pub term: SuspectTerm,
    pub name: &'static str,
    /// Largest |printed − projected| over the samples.
    pub printed_deviation: f64,
    /// Largest |corrected − projected| over the samples.
    pub corrected_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AppendixReport {
    pub samples: usize,
    pub seed: u64,
    /// Max |printed − projected| per component and term.
    pub components: Vec<ComponentDeviation>,
    /// Largest deviation over every term not in [`SUSPECT_TERMS`].
    pub max_regular_deviation: f64,
    pub suspects: Vec<SuspectDeviation>,
}

impl AppendixReport {
    pub fn regular_terms_match(&self, tol: f64) -> bool {
        self.max_regular_deviation <= tol
    }

    pub fn suspects_explained(&self, tol: f64) -> bool {
        self.suspects.iter().all(|s| s.corrected_deviation <= tol)
    }
}

/// Compares the printed closed forms with the projected dynamics on random
/// spin-1 states (alternately pure and mixed) and random amplitudes in
/// [0.1, 3].
pub fn validate_appendix(samples: usize, seed: u64) -> AppendixReport {
    let model = SpinModel::build(Spin::One);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comp = [[0.0f64; 3]; 8];
    let mut suspect_printed = [0.0f64; 3];
    let mut suspect_corrected = [0.0f64; 3];
    for n in 0..samples {
        let rho = if n % 2 == 0 {
            DensityMatrix::random_pure(3, &mut rng)
        } else {
            DensityMatrix::random_mixed(3, &mut rng)
        };
        let a = rng.random_range(0.1..3.0);
        let b = rng.random_range(0.1..3.0);
        let r = match model.coherence_from_rho(&rho) {
            CoherenceVector::One(r) => r,
            CoherenceVector::Half(_) => unreachable!(),
        };
        let exact = projected_coefficients(&model, &rho, a, b);
        let printed = appendix_sde_drift_diffusion(&r, a, b);
        let corrected = appendix_sde_corrected(&r, a, b);
        let pick = |c: &Coefficients, kind: TermKind, i: usize| match kind {
            TermKind::Drift => c.drift[i],
            TermKind::DiffZ => c.diff_z[i],
            TermKind::DiffX => c.diff_x[i],
        };
        for (i, row) in comp.iter_mut().enumerate() {
            for (slot, kind) in row
                .iter_mut()
                .zip([TermKind::Drift, TermKind::DiffZ, TermKind::DiffX])
            {
                let dev = (pick(&printed, kind, i) - pick(&exact, kind, i)).abs();
                *slot = slot.max(dev);
            }
        }
        for (t, term) in SUSPECT_TERMS.iter().enumerate() {
            let e = pick(&exact, term.kind, term.component);
            suspect_printed[t] = suspect_printed[t].max((pick(&printed, term.kind, term.component) - e).abs());
            suspect_corrected[t] =
                suspect_corrected[t].max((pick(&corrected, term.kind, term.component) - e).abs());
        }
    }

    let mut max_regular: f64 = 0.0;
    for (i, row) in comp.iter().enumerate() {
        for (dev, kind) in row.iter().zip([TermKind::Drift, TermKind::DiffZ, TermKind::DiffX]) {
            if !is_suspect(i, kind) {
                max_regular = max_regular.max(*dev);
            }
        }
    }
    AppendixReport {
        samples,
        seed,
        components: comp
            .iter()
            .enumerate()
            .map(|(i, row)| ComponentDeviation {
                name: COMPONENT_NAMES[i],
                drift: row[0],
                diff_z: row[1],
                diff_x: row[2],
            })
            .collect(),
        max_regular_deviation: max_regular,
        suspects: SUSPECT_TERMS
            .iter()
            .enumerate()
            .map(|(t, term)| SuspectDeviation {
                term: *term,
                name: COMPONENT_NAMES[term.component],
                printed_deviation: suspect_printed[t],
                corrected_deviation: suspect_corrected[t],
            })
            .collect(),
    }
}
