use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spin::{DensityMatrix, Label, Observable, SpinModel};

pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Largest |Σp − 1| accepted before renormalising.
pub const PROBABILITY_SUM_TOL: f64 = 1e-6;

/// Tr(ρP_i) for each eigenstate of `observable`, in label order, clipped to
/// [0, 1] and renormalised.
pub fn born_probabilities(model: &SpinModel, rho: &DensityMatrix, observable: Observable) -> Result<Vec<f64>> {
    let raw: Vec<f64> = model
        .basis(observable)
        .vectors
        .iter()
        .map(|v| rho.probability(v))
        .collect();
    normalise_probabilities(raw)
}

pub fn normalise_probabilities(mut p: Vec<f64>) -> Result<Vec<f64>> {
    let sum: f64 = p.iter().sum();
    if !((sum - 1.0).abs() <= PROBABILITY_SUM_TOL) {
        return Err(Error::ProbabilityDeviation(sum));
    }
    for x in p.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
    let clipped: f64 = p.iter().sum();
    if clipped != 1.0 {
        for x in p.iter_mut() {
            *x /= clipped;
        }
    }
    Ok(p)
}

/// Result of classifying a state at the end of a measurement window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Eigen(Label),
    Incomplete,
}

impl Outcome {
    pub fn label(self) -> Option<Label> {
        match self {
            Outcome::Eigen(l) => Some(l),
            Outcome::Incomplete => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Eigen(l) => l.fmt(f),
            Outcome::Incomplete => f.write_str("incomplete"),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Label of the unique eigenstate with probability ≥ 1 − ε, if any.
pub fn classify_probabilities(labels: &[Label], probs: &[f64], epsilon: f64) -> Outcome {
    let mut hit = None;
    for (&l, &p) in labels.iter().zip(probs) {
        if p >= 1.0 - epsilon {
            if hit.is_some() {
                return Outcome::Incomplete;
            }
            hit = Some(l);
        }
    }
    hit.map_or(Outcome::Incomplete, Outcome::Eigen)
}

pub fn classify_eigenstate(model: &SpinModel, rho: &DensityMatrix, observable: Observable, epsilon: f64) -> Outcome {
    match born_probabilities(model, rho, observable) {
        Ok(p) => classify_probabilities(model.labels(), &p, epsilon),
        Err(_) => Outcome::Incomplete,
    }
}
