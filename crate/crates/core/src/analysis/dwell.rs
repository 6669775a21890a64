use std::ops::ControlFlow;

use serde::Serialize;

use crate::engine::{MeasurementSchedule, Observer, Sample, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::spin::{Label, Observable, SpinModel};
use crate::stats::RunningStats;

use super::born::{born_probabilities, classify_probabilities, Outcome};

/// One classified S_z outcome per period.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OutcomeSequence {
    pub labels: Vec<Outcome>,
}

impl OutcomeSequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn incomplete(&self) -> usize {
        self.labels.iter().filter(|o| **o == Outcome::Incomplete).count()
    }
}

impl FromIterator<Outcome> for OutcomeSequence {
    fn from_iter<I: IntoIterator<Item = Outcome>>(iter: I) -> Self {
        OutcomeSequence {
            labels: iter.into_iter().collect(),
        }
    }
}

/// Classifies the last recorded sample of every S_z window.
pub fn outcome_sequence(rec: &TrajectoryRecord, model: &SpinModel, epsilon: f64) -> Result<OutcomeSequence> {
    let n = rec.steps_per_window;
    let last = rec.steps.last().copied().unwrap_or(0);
    let windows = if n == 0 { 0 } else { last.div_ceil(n) };
    let mut labels = Vec::new();
    for w in 0..windows {
        if rec.schedule.window_observable(w) != Observable::Sz {
            continue;
        }
        let end = (w + 1) * n;
        let idx = rec.steps.binary_search(&end).map_err(|_| Error::MissingWindowSample {
            window: w as usize,
            time: end as f64 * rec.dt,
        })?;
        labels.push(classify_probabilities(model.labels(), &rec.eig_probs_z[idx], epsilon));
    }
    Ok(OutcomeSequence { labels })
}

/// Streams S_z outcomes from a running trajectory.
pub struct OutcomeCollector<'a> {
    pub model: &'a SpinModel,
    pub schedule: MeasurementSchedule,
    pub epsilon: f64,
    pub sequence: OutcomeSequence,
}

impl<'a> OutcomeCollector<'a> {
    pub fn new(model: &'a SpinModel, schedule: MeasurementSchedule, epsilon: f64) -> Self {
        OutcomeCollector {
            model,
            schedule,
            epsilon,
            sequence: OutcomeSequence::default(),
        }
    }
}

impl Observer for OutcomeCollector<'_> {
    fn wants(&self, step: u64, window_end: bool) -> bool {
        window_end && step > 0
    }

    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()> {
        if self.schedule.window_observable(sample.window) == Observable::Sz {
            let outcome = match born_probabilities(self.model, sample.state, Observable::Sz) {
                Ok(p) => classify_probabilities(self.model.labels(), &p, self.epsilon),
                Err(_) => Outcome::Incomplete,
            };
            self.sequence.labels.push(outcome);
        }
        ControlFlow::Continue(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabelRuns {
    pub label: Label,
    pub runs: Vec<u32>,
}

/// Completed run lengths per eigenstate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DwellStats {
    pub per_label: Vec<LabelRuns>,
    /// Incomplete classifications seen.
    pub incomplete: u64,
    /// Runs still open at the end of a sequence (excluded from the means).
    pub unterminated: u64,
    pub outcomes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DwellSummary {
    pub label: Label,
    pub mean: f64,
    pub standard_error: f64,
    pub runs: u64,
}

impl DwellStats {
    pub fn new(labels: &[Label]) -> Self {
        DwellStats {
            per_label: labels
                .iter()
                .map(|&label| LabelRuns { label, runs: Vec::new() })
                .collect(),
            incomplete: 0,
            unterminated: 0,
            outcomes: 0,
        }
    }

    fn slot(&mut self, label: Label) -> &mut Vec<u32> {
        if let Some(i) = self.per_label.iter().position(|r| r.label == label) {
            return &mut self.per_label[i].runs;
        }
        self.per_label.push(LabelRuns { label, runs: Vec::new() });
        &mut self.per_label.last_mut().unwrap().runs
    }

    pub fn runs(&self, label: Label) -> &[u32] {
        self.per_label
            .iter()
            .find(|r| r.label == label)
            .map_or(&[], |r| r.runs.as_slice())
    }

    pub fn stats(&self, label: Label) -> RunningStats {
        self.runs(label).iter().map(|&r| r as f64).collect()
    }

    pub fn summary(&self) -> Vec<DwellSummary> {
        self.per_label
            .iter()
            .map(|r| {
                let s = self.stats(r.label);
                DwellSummary {
                    label: r.label,
                    mean: s.mean(),
                    standard_error: s.standard_error(),
                    runs: s.count(),
                }
            })
            .collect()
    }

    pub fn completed_runs(&self) -> u64 {
        self.per_label.iter().map(|r| r.runs.len() as u64).sum()
    }

    /// Appends `other`'s runs after this one's.
    pub fn merge(&mut self, other: &DwellStats) {
        for r in &other.per_label {
            self.slot(r.label).extend_from_slice(&r.runs);
        }
        self.incomplete += other.incomplete;
        self.unterminated += other.unterminated;
        self.outcomes += other.outcomes;
    }
}

/// Splits a sequence into maximal runs of identical labels. A run is
/// completed by a different label or by an incomplete outcome; incompletes
/// start no run, and the run open at the end of the sequence is discarded.
pub fn dwell_times(seq: &OutcomeSequence, labels: &[Label]) -> DwellStats {
    let mut stats = DwellStats::new(labels);
    stats.outcomes = seq.labels.len() as u64;
    let mut current: Option<(Label, u32)> = None;
    for outcome in &seq.labels {
        match (*outcome, current) {
            (Outcome::Eigen(l), Some((c, len))) if l == c => current = Some((c, len + 1)),
            (Outcome::Eigen(l), prev) => {
                if let Some((c, len)) = prev {
                    stats.slot(c).push(len);
                }
                current = Some((l, 1));
            }
            (Outcome::Incomplete, prev) => {
                stats.incomplete += 1;
                if let Some((c, len)) = prev {
                    stats.slot(c).push(len);
                }
                current = None;
            }
        }
    }
    if current.is_some() {
        stats.unterminated += 1;
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_trajectory, EngineConfig};
    use crate::spin::{DensityMatrix, Preset, Spin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P: Outcome = Outcome::Eigen(Label::Plus);
    const M: Outcome = Outcome::Eigen(Label::Minus);
    const Z: Outcome = Outcome::Eigen(Label::Zero);
    const X: Outcome = Outcome::Incomplete;
    const HALF: [Label; 2] = [Label::Plus, Label::Minus];

    #[test]
    fn three_then_flip() {
        let seq: OutcomeSequence = [P, P, P, M].into_iter().collect();
        let d = dwell_times(&seq, &HALF);
        assert_eq!(d.runs(Label::Plus), &[3]);
        assert!(d.runs(Label::Minus).is_empty());
        assert_eq!(d.unterminated, 1);
    }

    #[test]
    fn constant_sequence_has_no_completed_run() {
        let seq: OutcomeSequence = [M; 20].into_iter().collect();
        assert_eq!(dwell_times(&seq, &HALF).completed_runs(), 0);
    }

    #[test]
    fn incompletes_terminate_without_starting() {
        let seq: OutcomeSequence = [Z, Z, X, X, P, Z, X].into_iter().collect();
        let labels = [Label::Plus, Label::Zero, Label::Minus];
        let d = dwell_times(&seq, &labels);
        assert_eq!(d.runs(Label::Zero), &[2, 1]);
        assert_eq!(d.runs(Label::Plus), &[1]);
        assert_eq!(d.incomplete, 3);
        assert_eq!(d.unterminated, 0);
    }

    #[test]
    fn geometric_run_lengths() {
        // Return probability p gives mean run 1/(1 − p).
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for p in [0.5, 3.0 / 8.0] {
            let mut label = Label::Plus;
            let seq: OutcomeSequence = (0..50_000)
                .map(|_| {
                    if !rng.random_bool(p) {
                        label = if label == Label::Plus { Label::Minus } else { Label::Plus };
                    }
                    Outcome::Eigen(label)
                })
                .collect();
            let d = dwell_times(&seq, &HALF);
            for l in HALF {
                let s = d.stats(l);
                let expect = 1.0 / (1.0 - p);
                assert!((s.mean() - expect).abs() <= 3.0 * s.standard_error(), "{p}: {}", s.mean());
            }
        }
    }

    #[test]
    fn merge_concatenates() {
        let a = dwell_times(&[P, P, M, M, M, P].into_iter().collect(), &HALF);
        let b = dwell_times(&[M, P].into_iter().collect(), &HALF);
        let mut m = a.clone();
        m.merge(&b);
        assert_eq!(m.runs(Label::Plus), &[2]);
        assert_eq!(m.runs(Label::Minus), &[3, 1]);
        assert_eq!(m.unterminated, 2);
        assert_eq!(m.outcomes, 8);
    }

    #[test]
    fn sequence_from_record() {
        let model = SpinModel::build(Spin::One);
        let schedule = MeasurementSchedule::from_strengths(0.0, 0.0, 2.0).unwrap();
        let mut c = EngineConfig::new(model.clone(), schedule);
        c.dt = 1e-2;
        c.duration = 6.0;
        let up = Preset::EigZ(Label::Plus).build(&model).unwrap();
        let rec = run_trajectory(&c, &up).unwrap();
        let seq = outcome_sequence(&rec, &model, 1e-3).unwrap();
        assert_eq!(seq.labels, vec![P, P, P]);

        let rec = run_trajectory(&c, &DensityMatrix::maximally_mixed(3)).unwrap();
        let seq = outcome_sequence(&rec, &model, 1e-3).unwrap();
        assert_eq!(seq.labels, vec![X, X, X]);

        c.sample_stride = 7;
        let rec = run_trajectory(&c, &up).unwrap();
        assert!(matches!(
            outcome_sequence(&rec, &model, 1e-3),
            Err(Error::MissingWindowSample { .. })
        ));
    }

    #[test]
    fn collector_matches_record() {
        let model = SpinModel::build(Spin::Half);
        let schedule = MeasurementSchedule::from_strengths(8.0, 8.0, 2.0).unwrap();
        let mut c = EngineConfig::new(model.clone(), schedule);
        c.dt = 1e-3;
        c.duration = 20.0;
        c.seed = 4;
        let rho = DensityMatrix::maximally_mixed(2);
        let rec = run_trajectory(&c, &rho).unwrap();
        let from_record = outcome_sequence(&rec, &model, 1e-3).unwrap();
        let mut collector = OutcomeCollector::new(&model, schedule, 1e-3);
        crate::engine::run_trajectory_with(&c, &rho, &mut collector).unwrap();
        assert_eq!(collector.sequence, from_record);
        assert_eq!(from_record.len(), 10);
    }
}
