//! Ensemble experiments behind the validation checks. Each returns raw
//! measurements; pass/fail decisions live with the caller.

use std::ops::ControlFlow;

use serde::Serialize;

use crate::analysis::{
    born_probabilities, classify_probabilities, collapse_times, density_histogram, dwell_times, CollapseSetup,
    CollapseTimeStats, DwellStats, Histogram2D, OutcomeSequence, PetalRegions, Plane,
};
use crate::analysis::cascade::{AbsorbingCheck, CascadeObserver};
use crate::engine::{
    eigen_probabilities, lindblad_schedule, strength_to_amplitude, EngineConfig, Every, Kernel,
    MeasurementSchedule, NoiseSource, Observer, Propagator, Sample, Segment, Stepper,
};
use crate::ensemble::{fold_ensemble, run_ensemble, DEFAULT_CHUNK};
use crate::error::Result;
use crate::spin::{DensityMatrix, Label, Observable, Preset, Spin, SpinModel};
use crate::stats::{ks_distance, RunningStats};

/// Period used by every experiment here; a window lasts one time unit.
pub const PERIOD: f64 = 2.0;

fn window_steps(dt: f64) -> u64 {
    (0.5 * PERIOD / dt).round() as u64
}

fn presets(spin: Spin) -> Vec<Preset> {
    use Label::*;
    match spin {
        Spin::Half => vec![
            Preset::MixedStart,
            Preset::EigZ(Plus),
            Preset::EigZ(Minus),
            Preset::EigX(Plus),
            Preset::EigX(Minus),
        ],
        Spin::One => vec![
            Preset::MixedStart,
            Preset::EigZ(Plus),
            Preset::EigZ(Zero),
            Preset::EigZ(Minus),
            Preset::EigX(Plus),
            Preset::EigX(Zero),
            Preset::EigX(Minus),
            Preset::SuperposZ(Minus, Zero),
        ],
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct InvariantReport {
    pub runs: usize,
    pub steps: u64,
    pub samples: u64,
    pub max_trace_defect: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

impl InvariantReport {
    fn merge(&mut self, o: &InvariantReport) {
        self.runs += o.runs;
        self.steps += o.steps;
        self.samples += o.samples;
        self.max_trace_defect = self.max_trace_defect.max(o.max_trace_defect);
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(o.max_hermiticity_defect);
        self.min_eigenvalue = self.min_eigenvalue.min(o.min_eigenvalue);
    }
}

/// Runs every preset of both systems through the alternating protocol with
/// the literal (dense) Kraus update, inspecting the state after every step.
pub fn state_invariants(total_steps: u64, strength: f64, dt: f64, seed: u64) -> Result<InvariantReport> {
    let runs: Vec<(Spin, Preset)> = [Spin::Half, Spin::One]
        .into_iter()
        .flat_map(|s| presets(s).into_iter().map(move |p| (s, p)))
        .collect();
    let period_steps = 2 * window_steps(dt);
    let per_run = total_steps.div_ceil(runs.len() as u64).div_ceil(period_steps).max(1);
    let reports = run_ensemble(runs.len(), seed, |i, seed| {
        let (spin, preset) = runs[i];
        let model = SpinModel::build(spin);
        let schedule = MeasurementSchedule::from_strengths(strength, strength, PERIOD)?;
        let mut config = EngineConfig::new(model.clone(), schedule);
        config.dt = dt;
        config.duration = per_run as f64 * PERIOD;
        config.seed = seed;
        config.kernel = Kernel::Dense;
        config.validate()?;
        let initial = preset.build(&model)?;
        let mut rep = InvariantReport {
            runs: 1,
            min_eigenvalue: f64::INFINITY,
            ..Default::default()
        };
        let mut observer = Every {
            stride: 1,
            f: |s: &Sample<'_>| {
                rep.samples += 1;
                rep.max_trace_defect = rep.max_trace_defect.max(s.state.trace_defect());
                rep.max_hermiticity_defect = rep.max_hermiticity_defect.max(s.state.hermiticity_defect());
                rep.min_eigenvalue = rep.min_eigenvalue.min(s.state.min_eigenvalue());
                ControlFlow::Continue(())
            },
        };
        let mut noise = NoiseSource::new(seed);
        let end = config.propagator().run(&initial, &config.segments(), &mut noise, &mut observer)?;
        rep.steps = end.steps;
        Ok(rep)
    })?;
    let mut total = InvariantReport {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    for r in &reports {
        total.merge(r);
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct BornFrequencies {
    pub labels: Vec<Label>,
    pub counts: Vec<u64>,
    pub incomplete: u64,
    pub trajectories: u64,
}

impl BornFrequencies {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.trajectories as f64)
            .collect()
    }
}

/// One S_x window of strength `m_x` applied to |−1⟩_z of spin-1; the end
/// state is classified with `epsilon`.
pub fn born_frequencies(n: usize, m_x: f64, epsilon: f64, dt: f64, seed: u64) -> Result<BornFrequencies> {
    let model = SpinModel::build(Spin::One);
    let initial = Preset::EigZ(Label::Minus).build(&model)?;
    let segment = Segment::measure(Observable::Sx, strength_to_amplitude(m_x, PERIOD), window_steps(dt));
    let propagator = Propagator::new(&model, Stepper::Kraus, dt);
    let labels = model.labels().to_vec();
    let acc = BornFrequencies {
        counts: vec![0; labels.len()],
        labels: labels.clone(),
        incomplete: 0,
        trajectories: 0,
    };
    fold_ensemble(
        n,
        seed,
        DEFAULT_CHUNK,
        acc,
        |_, seed| {
            let mut noise = NoiseSource::new(seed);
            let mut idle = Every {
                stride: u64::MAX,
                f: |_: &Sample<'_>| ControlFlow::Continue(()),
            };
            let end = propagator.run(&initial, &[segment], &mut noise, &mut idle)?;
            let p = born_probabilities(&model, &end.state, Observable::Sx)?;
            Ok(classify_probabilities(&labels, &p, epsilon))
        },
        |acc, outcome| {
            acc.trajectories += 1;
            match outcome.label() {
                Some(l) => {
                    let i = acc.labels.iter().position(|&x| x == l).unwrap();
                    acc.counts[i] += 1;
                }
                None => acc.incomplete += 1,
            }
            Ok(())
        },
    )
}

/// Per-time statistics of ⟨S_z⟩(t) − ⟨S_z⟩(0).
#[derive(Clone, Debug, Serialize)]
pub struct DriftProfile {
    pub spin: Spin,
    pub times: Vec<f64>,
    pub shifts: Vec<RunningStats>,
}

impl DriftProfile {
    /// Largest |mean shift| in units of its standard error.
    pub fn worst_z_score(&self) -> f64 {
        self.shifts
            .iter()
            .map(|s| {
                let se = s.standard_error();
                if se > 0.0 {
                    s.mean().abs() / se
                } else if s.mean() == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// S_z measurement of amplitude `amplitude` over one window, starting from
/// a fresh random pure state per trajectory.
pub fn sz_drift(spin: Spin, n: usize, amplitude: f64, samples: u64, dt: f64, seed: u64) -> Result<DriftProfile> {
    let model = SpinModel::build(spin);
    let steps = window_steps(dt);
    let stride = (steps / samples.max(1)).max(1);
    let times: Vec<f64> = (1..=steps / stride).map(|k| (k * stride) as f64 * dt).collect();
    let propagator = Propagator::new(&model, Stepper::Kraus, dt);
    let segment = Segment::measure(Observable::Sz, amplitude, steps);
    let acc = DriftProfile {
        spin,
        shifts: vec![RunningStats::new(); times.len()],
        times,
    };
    fold_ensemble(
        n,
        seed,
        DEFAULT_CHUNK,
        acc,
        |_, seed| {
            let mut noise = NoiseSource::new(seed);
            let initial = DensityMatrix::random_pure(model.dim(), noise.rng());
            let start = initial.expectation(model.sz());
            let mut shifts = Vec::new();
            let mut observer = Every {
                stride,
                f: |s: &Sample<'_>| {
                    if s.step > 0 {
                        shifts.push(s.state.expectation(model.sz()) - start);
                    }
                    ControlFlow::Continue(())
                },
            };
            propagator.run(&initial, &[segment], &mut noise, &mut observer)?;
            Ok(shifts)
        },
        |acc, shifts| {
            for (s, x) in acc.shifts.iter_mut().zip(shifts) {
                s.push(x);
            }
            Ok(())
        },
    )
}

/// Entry-wise comparison of an ensemble mean with the Lindblad solution.
#[derive(Clone, Debug, Serialize)]
pub struct LindbladComparison {
    pub spin: Spin,
    pub stepper: Stepper,
    pub initial: String,
    pub times: Vec<f64>,
    /// Largest |mean − exact| over entries, per time.
    pub max_deviation: Vec<f64>,
    /// Largest deviation / max(5 SE, floor) over all entries and times.
    pub worst_ratio: f64,
    /// Mean r_x, its standard error and the closed-form decay, for the
    /// spin-1/2 case at times inside the first S_z window.
    pub rx_decay: Vec<RxPoint>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RxPoint {
    pub time: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub expected: f64,
}

impl RxPoint {
    pub fn ratio(&self, sigmas: f64, floor: f64) -> f64 {
        (self.mean - self.expected).abs() / (sigmas * self.standard_error).max(floor)
    }
}

pub const LINDBLAD_SIGMAS: f64 = 5.0;
pub const LINDBLAD_FLOOR: f64 = 5e-3;

/// One period of the alternating protocol at M_z = M_x = `strength`,
/// starting from |+1⟩_x, sampled every quarter time unit.
pub fn lindblad_mean(spin: Spin, stepper: Stepper, n: usize, strength: f64, dt: f64, seed: u64) -> Result<LindbladComparison> {
    let model = SpinModel::build(spin);
    let preset = Preset::EigX(Label::Plus);
    let initial = preset.build(&model)?;
    let schedule = MeasurementSchedule::from_strengths(strength, strength, PERIOD)?;
    let mut config = EngineConfig::new(model.clone(), schedule);
    config.dt = dt;
    config.duration = PERIOD;
    config.stepper = stepper;
    config.validate()?;
    let stride = (0.25 / dt).round() as u64;
    let times: Vec<f64> = (1..=config.total_steps() / stride)
        .map(|k| (k * stride) as f64 * dt)
        .collect();
    let d = model.dim();
    let entries = 2 * d * d;
    let propagator = config.propagator();
    let segments = config.segments();
    let sums = fold_ensemble(
        n,
        seed,
        DEFAULT_CHUNK,
        vec![vec![RunningStats::new(); entries]; times.len()],
        |_, seed| {
            let mut noise = NoiseSource::new(seed);
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(times.len());
            let mut observer = Every {
                stride,
                f: |s: &Sample<'_>| {
                    if s.step > 0 {
                        let m = s.state.matrix();
                        let mut row = Vec::with_capacity(entries);
                        for i in 0..d {
                            for j in 0..d {
                                row.push(m.get(i, j).re);
                                row.push(m.get(i, j).im);
                            }
                        }
                        rows.push(row);
                    }
                    ControlFlow::Continue(())
                },
            };
            propagator.run(&initial, &segments, &mut noise, &mut observer)?;
            Ok(rows)
        },
        |acc, rows| {
            for (stats, row) in acc.iter_mut().zip(rows) {
                for (s, x) in stats.iter_mut().zip(row) {
                    s.push(x);
                }
            }
            Ok(())
        },
    )?;

    let mut max_deviation = Vec::with_capacity(times.len());
    let mut worst_ratio: f64 = 0.0;
    let mut rx_decay = Vec::new();
    for (t, stats) in times.iter().zip(&sums) {
        let exact = lindblad_schedule(&model, &schedule, &initial, *t)?;
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let e = exact.matrix().get(i, j);
                let k = 2 * (i * d + j);
                for (s, x) in [(&stats[k], e.re), (&stats[k + 1], e.im)] {
                    let delta = (s.mean() - x).abs();
                    dev = dev.max(delta);
                    let allowed = (LINDBLAD_SIGMAS * s.standard_error()).max(LINDBLAD_FLOOR);
                    worst_ratio = worst_ratio.max(delta / allowed);
                }
            }
        }
        max_deviation.push(dev);
        if spin == Spin::Half && *t <= 0.5 * PERIOD + 1e-12 {
            // r_x = 2 Re ρ_01, so its variance is four times that entry's.
            let s = &stats[2];
            let a = schedule.a_max;
            rx_decay.push(RxPoint {
                time: *t,
                mean: 2.0 * s.mean(),
                standard_error: 2.0 * s.standard_error(),
                expected: (-2.0 * a * a * t).exp(),
            });
        }
    }
    Ok(LindbladComparison {
        spin,
        stepper,
        initial: preset.to_string(),
        times,
        max_deviation,
        worst_ratio,
        rx_decay,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StepperKs {
    pub spin: Spin,
    pub distance: f64,
    pub kraus_mean: f64,
    pub euler_mean: f64,
}

/// ⟨S_z⟩ after half an S_z window (amplitude 1) from |+1⟩_x, for both
/// steppers on disjoint seed ranges.
pub fn stepper_ks(spin: Spin, n: usize, dt: f64, seed: u64) -> Result<StepperKs> {
    let model = SpinModel::build(spin);
    let initial = Preset::EigX(Label::Plus).build(&model)?;
    let segment = Segment::measure(Observable::Sz, 1.0, window_steps(dt) / 2);
    let sample = |stepper: Stepper, base: u64| -> Result<Vec<f64>> {
        let propagator = Propagator::new(&model, stepper, dt);
        run_ensemble(n, base, |_, seed| {
            let mut noise = NoiseSource::new(seed);
            let mut idle = Every {
                stride: u64::MAX,
                f: |_: &Sample<'_>| ControlFlow::Continue(()),
            };
            let end = propagator.run(&initial, &[segment], &mut noise, &mut idle)?;
            Ok(end.state.expectation(model.sz()))
        })
    };
    let kraus = sample(Stepper::Kraus, seed)?;
    let euler = sample(Stepper::Euler, seed.wrapping_add(n as u64))?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(StepperKs {
        spin,
        distance: ks_distance(&kraus, &euler),
        kraus_mean: mean(&kraus),
        euler_mean: mean(&euler),
    })
}

/// Dwell statistics of one long trajectory, classified at several ε.
#[derive(Clone, Debug, Serialize)]
pub struct DwellRun {
    pub spin: Spin,
    pub m_z: f64,
    pub m_x: f64,
    pub outcomes: u64,
    pub per_epsilon: Vec<(f64, DwellStats)>,
}

impl DwellRun {
    pub fn at(&self, epsilon: f64) -> Option<&DwellStats> {
        self.per_epsilon.iter().find(|(e, _)| *e == epsilon).map(|(_, d)| d)
    }
}

struct WindowEndProbabilities<'a> {
    model: &'a SpinModel,
    schedule: MeasurementSchedule,
    rows: Vec<Vec<f64>>,
}

impl Observer for WindowEndProbabilities<'_> {
    fn wants(&self, step: u64, window_end: bool) -> bool {
        window_end && step > 0
    }

    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()> {
        if self.schedule.window_observable(sample.window) == Observable::Sz {
            self.rows.push(eigen_probabilities(self.model, sample.state, Observable::Sz));
        }
        ControlFlow::Continue(())
    }
}

/// `outcomes` periods of the alternating protocol from the mixed state.
pub fn dwell_run(spin: Spin, m_z: f64, m_x: f64, outcomes: u64, epsilons: &[f64], dt: f64, seed: u64) -> Result<DwellRun> {
    let model = SpinModel::build(spin);
    let schedule = MeasurementSchedule::from_strengths(m_z, m_x, PERIOD)?;
    let mut config = EngineConfig::new(model.clone(), schedule);
    config.dt = dt;
    config.duration = outcomes as f64 * PERIOD;
    config.seed = seed;
    config.validate()?;
    let mut observer = WindowEndProbabilities {
        model: &model,
        schedule,
        rows: Vec::with_capacity(outcomes as usize),
    };
    let initial = DensityMatrix::maximally_mixed(model.dim());
    let mut noise = NoiseSource::new(seed);
    config
        .propagator()
        .run(&initial, &config.segments(), &mut noise, &mut observer)?;
    let per_epsilon = epsilons
        .iter()
        .map(|&eps| {
            let seq: OutcomeSequence = observer
                .rows
                .iter()
                .map(|p| classify_probabilities(model.labels(), p, eps))
                .collect();
            (eps, dwell_times(&seq, model.labels()))
        })
        .collect();
    Ok(DwellRun {
        spin,
        m_z,
        m_x,
        outcomes,
        per_epsilon,
    })
}

/// Runs [`dwell_run`] for each S_x strength in parallel; seeds are
/// `seed + index`.
pub fn dwell_sweep(spin: Spin, m_z: f64, m_x: &[f64], outcomes: u64, epsilons: &[f64], dt: f64, seed: u64) -> Result<Vec<DwellRun>> {
    run_ensemble(m_x.len(), seed, |i, seed| dwell_run(spin, m_z, m_x[i], outcomes, epsilons, dt, seed))
}

/// Mean number of consecutive identical S_z outcomes when every window
/// collapses completely: a run ends with probability 1 − Σ_x |⟨x|z⟩|⁴.
pub fn born_chain_dwell_means(model: &SpinModel) -> Vec<(Label, f64)> {
    let z = model.basis(Observable::Sz);
    let x = model.basis(Observable::Sx);
    z.labels
        .iter()
        .zip(&z.vectors)
        .map(|(&l, vz)| {
            let stay: f64 = x
                .vectors
                .iter()
                .map(|vx| {
                    let overlap: f64 = vx.iter().zip(vz).map(|(a, b)| a.conj() * b).sum::<crate::C64>().norm_sqr();
                    overlap * overlap
                })
                .sum();
            (l, 1.0 / (1.0 - stay))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapseCase {
    pub name: String,
    pub initial: String,
    pub targets: Vec<Label>,
    pub stats: CollapseTimeStats,
}

/// The two spin-1 first-passage experiments under S_z measurement of
/// amplitude 1: |0⟩_x → {±1} and (|−1⟩+|0⟩)/√2 → {−1, 0}.
pub fn collapse_cases(n: usize, threshold: f64, window: f64, dt: f64, seed: u64) -> Result<Vec<CollapseCase>> {
    let model = SpinModel::build(Spin::One);
    let setup = CollapseSetup {
        model: model.clone(),
        observable: Observable::Sz,
        amplitude: 1.0,
        window,
        dt,
        stepper: Stepper::Kraus,
        kernel: Kernel::Auto,
    };
    let cases = [
        ("zero_x_to_plus_minus", Preset::EigX(Label::Zero), vec![Label::Plus, Label::Minus]),
        (
            "minus_zero_to_minus_zero",
            Preset::SuperposZ(Label::Minus, Label::Zero),
            vec![Label::Minus, Label::Zero],
        ),
    ];
    cases
        .into_iter()
        .enumerate()
        .map(|(i, (name, preset, targets))| {
            let initial = preset.build(&model)?;
            let base = seed.wrapping_add((i * n) as u64);
            Ok(CollapseCase {
                name: name.to_string(),
                initial: preset.to_string(),
                stats: collapse_times(&setup, &initial, &targets, threshold, n, base)?,
                targets,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CascadeSummary {
    pub windows: u64,
    pub m_x: f64,
    /// Eigenstate probabilities that reached zero, summed over windows.
    pub zero_hits: u64,
    /// Windows with at least one rise above the stay threshold.
    pub violating_windows: u64,
    pub violating_rows: u64,
    /// (window, label index, time, probability) of the first violation.
    pub first_violation: Option<(u64, usize, f64, f64)>,
    pub largest_after_zero: f64,
    /// Windows whose final state is within `epsilon` of an eigenstate.
    pub one_hot: u64,
    pub epsilon: f64,
}

/// Spin-1 S_x windows from |−1⟩_z, checked at every step.
pub fn cascade_windows(n: usize, m_x: f64, epsilon: f64, dt: f64, seed: u64) -> Result<CascadeSummary> {
    let model = SpinModel::build(Spin::One);
    let initial = Preset::EigZ(Label::Minus).build(&model)?;
    let segment = Segment::measure(Observable::Sx, strength_to_amplitude(m_x, PERIOD), window_steps(dt));
    let propagator = Propagator::new(&model, Stepper::Kraus, dt);
    let acc = CascadeSummary {
        windows: 0,
        m_x,
        zero_hits: 0,
        violating_windows: 0,
        violating_rows: 0,
        first_violation: None,
        largest_after_zero: 0.0,
        one_hot: 0,
        epsilon,
    };
    fold_ensemble(
        n,
        seed,
        DEFAULT_CHUNK,
        acc,
        |_, seed| {
            let mut observer = CascadeObserver::new(&model, Observable::Sx);
            let mut noise = NoiseSource::new(seed);
            propagator.run(&initial, &[segment], &mut noise, &mut observer)?;
            let one_hot = classify_probabilities(model.labels(), &observer.last, epsilon).label().is_some();
            Ok((observer.check, one_hot))
        },
        |acc, (check, one_hot): (AbsorbingCheck, bool)| {
            acc.zero_hits += check.zero_hits() as u64;
            acc.violating_rows += check.violations;
            if check.violations > 0 {
                acc.violating_windows += 1;
            }
            if let (None, Some((i, t, p))) = (acc.first_violation, check.first_violation) {
                acc.first_violation = Some((acc.windows, i, t, p));
            }
            for (z, m) in check.first_zero.iter().zip(&check.max_after_zero) {
                if z.is_some() {
                    acc.largest_after_zero = acc.largest_after_zero.max(*m);
                }
            }
            acc.one_hot += one_hot as u64;
            acc.windows += 1;
            Ok(())
        },
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityStructure {
    pub strength: f64,
    pub duration: f64,
    pub trajectories: usize,
    pub total: u64,
    pub radius: f64,
    pub center: u64,
    /// (0, +1), (0, −1), (+1, 0), (−1, 0) in the (⟨S_x⟩, ⟨S_z⟩) plane.
    pub outer: [u64; 4],
    pub petal: u64,
    #[serde(skip)]
    pub histogram: Histogram2D,
}

impl DensityStructure {
    pub fn center_ratio(&self) -> f64 {
        let mean_outer = self.outer.iter().sum::<u64>() as f64 / 4.0;
        self.center as f64 / mean_outer
    }

    pub fn petal_fraction(&self) -> f64 {
        self.petal as f64 / self.total as f64
    }
}

pub const REGION_RADIUS: f64 = 0.1;

/// Cumulative (⟨S_x⟩, ⟨S_z⟩) histogram of spin-1 trajectories started in the
/// mixed state at M_z = M_x = `strength`.
pub fn density_structure(
    strength: f64,
    duration: f64,
    trajectories: usize,
    bins: usize,
    stride: u64,
    dt: f64,
    seed: u64,
) -> Result<DensityStructure> {
    let model = SpinModel::build(Spin::One);
    let schedule = MeasurementSchedule::from_strengths(strength, strength, PERIOD)?;
    let mut config = EngineConfig::new(model, schedule);
    config.dt = dt;
    config.duration = duration;
    config.seed = seed;
    let initial = DensityMatrix::maximally_mixed(3);
    let histogram = density_histogram(&config, &initial, Plane::SxSz, bins, stride, trajectories)?;
    let petals = PetalRegions::default();
    let r = REGION_RADIUS;
    Ok(DensityStructure {
        strength,
        duration,
        trajectories,
        total: histogram.total(),
        radius: r,
        center: histogram.mass_within(0.0, 0.0, r),
        outer: [
            histogram.mass_within(0.0, 1.0, r),
            histogram.mass_within(0.0, -1.0, r),
            histogram.mass_within(1.0, 0.0, r),
            histogram.mass_within(-1.0, 0.0, r),
        ],
        petal: histogram.mass_inside(|x, y| petals.contains(x, y)),
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn born_chain_means() {
        let half = born_chain_dwell_means(&SpinModel::build(Spin::Half));
        assert!(half.iter().all(|(_, m)| (m - 2.0).abs() < 1e-12));
        let one = born_chain_dwell_means(&SpinModel::build(Spin::One));
        assert_eq!(one.iter().map(|p| p.0).collect::<Vec<_>>(), [Label::Plus, Label::Zero, Label::Minus]);
        assert!((one[0].1 - 1.6).abs() < 1e-12 && (one[1].1 - 2.0).abs() < 1e-12 && (one[2].1 - 1.6).abs() < 1e-12);
    }

    #[test]
    fn small_runs_are_consistent() {
        let inv = state_invariants(4000, 8.0, 1e-3, 1).unwrap();
        assert_eq!(inv.runs, 13);
        assert_eq!(inv.samples, inv.steps + 13);
        assert!(inv.max_trace_defect < 1e-12 && inv.min_eigenvalue > -1e-10);

        let born = born_frequencies(50, 32.0, 1e-3, 1e-3, 2).unwrap();
        assert_eq!(born.counts.iter().sum::<u64>() + born.incomplete, 50);

        let drift = sz_drift(Spin::Half, 20, 1.0, 5, 1e-3, 3).unwrap();
        assert_eq!(drift.times.len(), 5);
        assert!(drift.shifts.iter().all(|s| s.count() == 20));

        let lind = lindblad_mean(Spin::Half, Stepper::Euler, 20, 1.0, 1e-3, 4).unwrap();
        assert_eq!(lind.times, vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(lind.rx_decay.len(), 4);

        let dwell = dwell_run(Spin::One, 32.0, 32.0, 30, &[1e-3, 1e-2], 1e-3, 5).unwrap();
        let d = dwell.at(1e-3).unwrap();
        assert_eq!(d.outcomes, 30);
        assert!(dwell.at(0.5).is_none());

        let cascade = cascade_windows(10, 32.0, 1e-3, 1e-3, 6).unwrap();
        assert_eq!(cascade.windows, 10);

        let dens = density_structure(8.0, 4.0, 2, 50, 10, 1e-3, 7).unwrap();
        assert_eq!(dens.total, 2 * (4000 / 10 + 1));
    }
}
