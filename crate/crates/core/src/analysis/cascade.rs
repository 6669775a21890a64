use std::ops::ControlFlow;

use serde::Serialize;

use crate::engine::{Observer, Sample, TrajectoryRecord};
use crate::spin::{Label, Observable, SpinModel};

/// A probability at or below this counts as having reached zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Once zero, a probability must stay at or below this.
pub const STAY_THRESHOLD: f64 = 1e-9;

/// Per-eigenstate probability time series for one observable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeTrace {
    pub observable: Observable,
    pub labels: Vec<Label>,
    pub times: Vec<f64>,
    pub probs: Vec<Vec<f64>>,
}

pub fn cascade_trace(rec: &TrajectoryRecord, model: &SpinModel, observable: Observable) -> CascadeTrace {
    let probs = match observable {
        Observable::Sz => rec.eig_probs_z.clone(),
        Observable::Sx => rec.eig_probs_x.clone(),
    };
    CascadeTrace {
        observable,
        labels: model.labels().to_vec(),
        times: rec.times.clone(),
        probs,
    }
}

impl CascadeTrace {
    pub fn absorbing_check(&self) -> AbsorbingCheck {
        let mut check = AbsorbingCheck::new(self.labels.len());
        for (t, row) in self.times.iter().zip(&self.probs) {
            check.push(*t, row);
        }
        check
    }
}

/// Tracks whether eigenstate probabilities that reach zero stay there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbsorbingCheck {
    /// Time each eigenstate first reached zero.
    pub first_zero: Vec<Option<f64>>,
    /// Largest probability seen after reaching zero.
    pub max_after_zero: Vec<f64>,
    /// Rows where a zeroed probability exceeded the stay threshold.
    pub violations: u64,
    pub first_violation: Option<(usize, f64, f64)>,
}

impl AbsorbingCheck {
    pub fn new(n: usize) -> Self {
        AbsorbingCheck {
            first_zero: vec![None; n],
            max_after_zero: vec![0.0; n],
            violations: 0,
            first_violation: None,
        }
    }

    pub fn push(&mut self, time: f64, probs: &[f64]) {
        let mut bad = false;
        for (i, &p) in probs.iter().enumerate() {
            if self.first_zero[i].is_some() {
                self.max_after_zero[i] = self.max_after_zero[i].max(p);
                if p > STAY_THRESHOLD {
                    bad = true;
                    self.first_violation.get_or_insert((i, time, p));
                }
            } else if p <= ZERO_THRESHOLD {
                self.first_zero[i] = Some(time);
            }
        }
        if bad {
            self.violations += 1;
        }
    }

    pub fn zero_hits(&self) -> usize {
        self.first_zero.iter().filter(|z| z.is_some()).count()
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn merge(&mut self, other: &AbsorbingCheck) {
        // Windows are independent, so only the counters combine.
        self.violations += other.violations;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
    }
}

/// Observer applying [`AbsorbingCheck`] at every step and remembering the
/// final probabilities.
pub struct CascadeObserver<'a> {
    pub model: &'a SpinModel,
    pub observable: Observable,
    pub check: AbsorbingCheck,
    pub last: Vec<f64>,
}

impl<'a> CascadeObserver<'a> {
    pub fn new(model: &'a SpinModel, observable: Observable) -> Self {
        CascadeObserver {
            model,
            observable,
            check: AbsorbingCheck::new(model.dim()),
            last: Vec::new(),
        }
    }
}

impl Observer for CascadeObserver<'_> {
    fn wants(&self, _step: u64, _window_end: bool) -> bool {
        true
    }

    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()> {
        let probs = crate::engine::eigen_probabilities(self.model, sample.state, self.observable);
        self.check.push(sample.time, &probs);
        self.last = probs;
        ControlFlow::Continue(())
    }
}
