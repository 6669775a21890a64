use std::ops::ControlFlow;

use serde::Serialize;

use crate::engine::{Every, Kernel, NoiseSource, Propagator, Sample, Segment, Stepper};
use crate::ensemble::{fold_ensemble, DEFAULT_CHUNK};
use crate::error::{Error, Result};
use crate::spin::{DensityMatrix, Label, Observable, SpinModel};
use crate::stats::RunningStats;

pub const DEFAULT_THRESHOLD: f64 = 0.999;

/// A single measurement window used for first-passage experiments.
#[derive(Clone, Debug)]
pub struct CollapseSetup {
    pub model: SpinModel,
    pub observable: Observable,
    pub amplitude: f64,
    /// Window length (time); trajectories that have not arrived by then are
    /// non-arrivals.
    pub window: f64,
    pub dt: f64,
    pub stepper: Stepper,
    pub kernel: Kernel,
}

impl CollapseSetup {
    pub fn steps(&self) -> u64 {
        (self.window / self.dt).round() as u64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetTimes {
    pub label: Label,
    pub times: RunningStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapseTimeStats {
    pub threshold: f64,
    pub window: f64,
    pub per_target: Vec<TargetTimes>,
    pub overall: RunningStats,
    pub non_arrivals: u64,
}

impl CollapseTimeStats {
    pub fn new(targets: &[Label], threshold: f64, window: f64) -> Self {
        CollapseTimeStats {
            threshold,
            window,
            per_target: targets
                .iter()
                .map(|&label| TargetTimes {
                    label,
                    times: RunningStats::new(),
                })
                .collect(),
            overall: RunningStats::new(),
            non_arrivals: 0,
        }
    }

    pub fn record(&mut self, arrival: Option<(Label, f64)>) {
        match arrival {
            Some((label, t)) => {
                if let Some(slot) = self.per_target.iter_mut().find(|s| s.label == label) {
                    slot.times.push(t);
                }
                self.overall.push(t);
            }
            None => self.non_arrivals += 1,
        }
    }

    pub fn merge(&mut self, other: &CollapseTimeStats) {
        for (a, b) in self.per_target.iter_mut().zip(&other.per_target) {
            a.times.merge(&b.times);
        }
        self.overall.merge(&other.overall);
        self.non_arrivals += other.non_arrivals;
    }
}

/// First time at which some target eigenstate of the measured observable
/// reaches probability `threshold`, or `None` if the window ends first.
pub fn first_passage(
    setup: &CollapseSetup,
    initial: &DensityMatrix,
    targets: &[Label],
    threshold: f64,
    seed: u64,
) -> Result<Option<(Label, f64)>> {
    let basis = setup.model.basis(setup.observable);
    let target_vectors: Vec<(Label, &[crate::C64])> = targets
        .iter()
        .map(|&l| {
            basis
                .vector(l)
                .map(|v| (l, v))
                .ok_or_else(|| Error::InvalidConfig(format!("no eigenstate {l} for this spin")))
        })
        .collect::<Result<_>>()?;
    let propagator = Propagator::new(&setup.model, setup.stepper, setup.dt).with_kernel(setup.kernel);
    let mut arrival = None;
    let mut observer = Every {
        stride: 1,
        f: |s: &Sample<'_>| {
            for &(label, v) in &target_vectors {
                if s.state.probability(v) >= threshold {
                    arrival = Some((label, s.time));
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        },
    };
    let segment = Segment::measure(setup.observable, setup.amplitude, setup.steps());
    let mut noise = NoiseSource::new(seed);
    propagator.run(initial, &[segment], &mut noise, &mut observer)?;
    Ok(arrival)
}

pub fn collapse_times(
    setup: &CollapseSetup,
    initial: &DensityMatrix,
    targets: &[Label],
    threshold: f64,
    n: usize,
    base_seed: u64,
) -> Result<CollapseTimeStats> {
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(Error::InvalidConfig(format!("threshold must lie in (0.5, 1), got {threshold}")));
    }
    fold_ensemble(
        n,
        base_seed,
        DEFAULT_CHUNK,
        CollapseTimeStats::new(targets, threshold, setup.window),
        |_, seed| first_passage(setup, initial, targets, threshold, seed),
        |acc, arrival| {
            acc.record(arrival);
            Ok(())
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{Preset, Spin};

    fn setup() -> CollapseSetup {
        CollapseSetup {
            model: SpinModel::build(Spin::One),
            observable: Observable::Sz,
            amplitude: 1.0,
            window: 5.0,
            dt: 1e-3,
            stepper: Stepper::Kraus,
            kernel: Kernel::Auto,
        }
    }

    #[test]
    fn initial_target_arrives_at_zero() {
        let s = setup();
        let up = Preset::EigZ(Label::Plus).build(&s.model).unwrap();
        let hit = first_passage(&s, &up, &[Label::Plus, Label::Minus], 0.999, 1).unwrap();
        assert_eq!(hit, Some((Label::Plus, 0.0)));
    }

    #[test]
    fn unreachable_target_never_arrives() {
        // |0⟩_x has no |0⟩_z component, and S_z measurement cannot create one.
        let mut s = setup();
        s.window = 0.5;
        let start = Preset::EigX(Label::Zero).build(&s.model).unwrap();
        assert_eq!(first_passage(&s, &start, &[Label::Zero], 0.9, 3).unwrap(), None);
    }

    #[test]
    fn ensemble_bookkeeping() {
        let s = setup();
        let start = Preset::EigX(Label::Zero).build(&s.model).unwrap();
        let stats = collapse_times(&s, &start, &[Label::Plus, Label::Minus], 0.9, 64, 10).unwrap();
        let arrivals: u64 = stats.per_target.iter().map(|t| t.times.count()).sum();
        assert_eq!(arrivals + stats.non_arrivals, 64);
        assert_eq!(arrivals, stats.overall.count());
        assert!(stats.overall.mean() > 0.0 && stats.overall.mean() < s.window);
        assert!(collapse_times(&s, &start, &[Label::Plus], 0.4, 4, 0).is_err());
        assert!(collapse_times(&s, &start, &[Label::Plus], 0.9, 0, 0).is_err());
    }
}
