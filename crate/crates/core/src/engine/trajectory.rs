use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::spin::{CoherenceVector, DensityMatrix, Observable, SpinModel};

use super::noise::NoiseSource;
use super::schedule::MeasurementSchedule;
use super::stepper::{euler_step, kraus_step, renormalise, DiagonalKernel, RENORM_INTERVAL};

/// Samples with a minimum eigenvalue below this are counted as positivity
/// violations in Euler runs.
pub const POSITIVITY_DIAGNOSTIC: f64 = -1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepper {
    #[default]
    Kraus,
    Euler,
}

impl fmt::Display for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stepper::Kraus => "kraus",
            Stepper::Euler => "euler",
        })
    }
}

impl FromStr for Stepper {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kraus" => Ok(Stepper::Kraus),
            "euler" => Ok(Stepper::Euler),
            other => Err(Error::InvalidConfig(format!("unknown stepper `{other}`"))),
        }
    }
}

/// `Auto` steps in the active channel's eigenbasis when there is no
/// Hamiltonian; `Dense` always uses the general matrix steppers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Auto,
    Dense,
}

/// A stretch of constant coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    /// Measured observable and coupling amplitude; `None` switches
    /// measurement off.
    pub channel: Option<(Observable, f64)>,
    pub steps: u64,
}

impl Segment {
    pub fn measure(observable: Observable, amplitude: f64, steps: u64) -> Self {
        let channel = (amplitude != 0.0).then_some((observable, amplitude));
        Segment { channel, steps }
    }
}

/// State handed to an [`Observer`].
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub step: u64,
    pub time: f64,
    /// Index of the segment the step belongs to.
    pub window: u64,
    /// True for the last step of a segment.
    pub window_end: bool,
    pub state: &'a DensityMatrix,
}

pub trait Observer {
    /// Whether the state after `step` is needed. Step 0 is the initial state.
    fn wants(&self, step: u64, window_end: bool) -> bool;
    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()>;
}

/// Calls `f` every `stride` steps, starting with the initial state.
pub struct Every<F> {
    pub stride: u64,
    pub f: F,
}

impl<F: FnMut(&Sample<'_>) -> ControlFlow<()>> Observer for Every<F> {
    fn wants(&self, step: u64, _window_end: bool) -> bool {
        step % self.stride == 0
    }
    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()> {
        (self.f)(sample)
    }
}

/// Calls `f` on the last step of every segment.
pub struct WindowEnds<F>(pub F);

impl<F: FnMut(&Sample<'_>) -> ControlFlow<()>> Observer for WindowEnds<F> {
    fn wants(&self, _step: u64, window_end: bool) -> bool {
        window_end
    }
    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()> {
        (self.0)(sample)
    }
}

#[derive(Clone, Copy, Debug)]
struct ChannelFrame {
    /// Columns are the eigenvectors; `None` when that is the identity.
    rotation: Option<ComplexMatrix>,
    /// Eigenvalues of the unit-amplitude channel operator.
    eigenvalues: [f64; 3],
}

impl ChannelFrame {
    fn new(model: &SpinModel, observable: Observable) -> Self {
        let basis = model.basis(observable);
        let op = model.channel_operator(observable);
        let n = model.dim();
        let mut u = ComplexMatrix::zeros(n);
        let mut eigenvalues = [0.0; 3];
        for (k, v) in basis.vectors.iter().enumerate() {
            for (i, z) in v.iter().enumerate() {
                u.set(i, k, *z);
            }
            eigenvalues[k] = op.quadratic_form(v).re;
        }
        let rotation = (u != ComplexMatrix::identity(n)).then_some(u);
        ChannelFrame { rotation, eigenvalues }
    }

    fn to_eigenbasis(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        match &self.rotation {
            Some(u) => rho.congruence_hermitian(&u.dagger()),
            None => *rho,
        }
    }

    fn from_eigenbasis(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        match &self.rotation {
            Some(u) => rho.congruence_hermitian(u),
            None => *rho,
        }
    }
}

/// Integrates a sequence of [`Segment`]s with a fixed timestep.
#[derive(Clone, Debug)]
pub struct Propagator {
    model: SpinModel,
    hamiltonian: ComplexMatrix,
    stepper: Stepper,
    kernel: Kernel,
    dt: f64,
    frames: [ChannelFrame; 2],
}

/// Final state and number of steps taken (fewer than requested if an
/// observer stopped the run).
#[derive(Clone, Copy, Debug)]
pub struct RunEnd {
    pub state: DensityMatrix,
    pub steps: u64,
    pub stopped_early: bool,
}

impl Propagator {
    pub fn new(model: &SpinModel, stepper: Stepper, dt: f64) -> Self {
        Propagator {
            hamiltonian: ComplexMatrix::zeros(model.dim()),
            stepper,
            kernel: Kernel::Auto,
            dt,
            frames: [
                ChannelFrame::new(model, Observable::Sz),
                ChannelFrame::new(model, Observable::Sx),
            ],
            model: model.clone(),
        }
    }

    pub fn with_hamiltonian(mut self, h: ComplexMatrix) -> Self {
        self.hamiltonian = h;
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn model(&self) -> &SpinModel {
        &self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn frame(&self, observable: Observable) -> &ChannelFrame {
        match observable {
            Observable::Sz => &self.frames[0],
            Observable::Sx => &self.frames[1],
        }
    }

    pub fn run<O: Observer + ?Sized>(
        &self,
        initial: &DensityMatrix,
        segments: &[Segment],
        noise: &mut NoiseSource,
        observer: &mut O,
    ) -> Result<RunEnd> {
        let mut rho = *initial;
        let mut step = 0u64;
        let first_end = segments.first().is_some_and(|s| s.steps == 0);
        if observer.wants(0, first_end) {
            let sample = Sample {
                step: 0,
                time: 0.0,
                window: 0,
                window_end: first_end,
                state: &rho,
            };
            if observer.observe(&sample).is_break() {
                return Ok(RunEnd { state: rho, steps: 0, stopped_early: true });
            }
        }
        for (w, seg) in segments.iter().enumerate() {
            let flow = self.run_segment(&mut rho, &mut step, w as u64, seg, noise, observer)?;
            if flow.is_break() {
                return Ok(RunEnd { state: rho, steps: step, stopped_early: true });
            }
        }
        Ok(RunEnd { state: rho, steps: step, stopped_early: false })
    }

    fn run_segment<O: Observer + ?Sized>(
        &self,
        rho: &mut DensityMatrix,
        step: &mut u64,
        window: u64,
        seg: &Segment,
        noise: &mut NoiseSource,
        observer: &mut O,
    ) -> Result<ControlFlow<()>> {
        let dt = self.dt;
        let start = *step;
        let last = start + seg.steps;
        let emit = |observer: &mut O, s: u64, state: &DensityMatrix| {
            observer.observe(&Sample {
                step: s,
                time: s as f64 * dt,
                window,
                window_end: s == last,
                state,
            })
        };
        let stamp = |e: Error, s: u64| match e {
            Error::DegenerateStep { total, state, .. } => Error::DegenerateStep {
                time: s as f64 * dt,
                total,
                state,
            },
            other => other,
        };
        let no_h = self.hamiltonian.is_zero();

        match seg.channel {
            None if no_h => {
                for s in start + 1..=last {
                    *step = s;
                    if observer.wants(s, s == last) && emit(observer, s, rho).is_break() {
                        return Ok(ControlFlow::Break(()));
                    }
                }
            }
            Some((obs, g)) if no_h && self.kernel == Kernel::Auto => {
                let frame = self.frame(obs);
                let lambda: Vec<f64> = frame.eigenvalues[..self.model.dim()]
                    .iter()
                    .map(|e| g * e)
                    .collect();
                let kernel = DiagonalKernel::new(&lambda, dt);
                let mut work = frame.to_eigenbasis(rho.matrix());
                let mut pending = 0;
                for s in start + 1..=last {
                    match self.stepper {
                        Stepper::Kraus => {
                            kernel.kraus_unnormalised(&mut work, noise).map_err(|e| stamp(e, s))?;
                            pending += 1;
                            if pending == RENORM_INTERVAL {
                                renormalise(&mut work);
                                pending = 0;
                            }
                        }
                        Stepper::Euler => kernel.euler(&mut work, noise),
                    }
                    *step = s;
                    if observer.wants(s, s == last) {
                        // Observe a normalised copy so the working state does
                        // not depend on the sampling pattern.
                        let mut view = work;
                        if pending > 0 {
                            renormalise(&mut view);
                        }
                        *rho = DensityMatrix::from_matrix_unchecked(frame.from_eigenbasis(&view));
                        if emit(observer, s, rho).is_break() {
                            return Ok(ControlFlow::Break(()));
                        }
                    }
                }
                if pending > 0 {
                    renormalise(&mut work);
                }
                *rho = DensityMatrix::from_matrix_unchecked(frame.from_eigenbasis(&work));
            }
            channel => {
                let ops: Vec<ComplexMatrix> = channel
                    .map(|(obs, g)| self.model.channel_operator(obs).scale_real(g))
                    .into_iter()
                    .collect();
                for s in start + 1..=last {
                    *rho = match self.stepper {
                        Stepper::Kraus => kraus_step(rho, &self.hamiltonian, &ops, dt, noise)
                            .map_err(|e| stamp(e, s))?,
                        Stepper::Euler => euler_step(rho, &self.hamiltonian, &ops, dt, noise),
                    };
                    *step = s;
                    if observer.wants(s, s == last) && emit(observer, s, rho).is_break() {
                        return Ok(ControlFlow::Break(()));
                    }
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }
}

/// Everything needed to run one trajectory of the alternating protocol.
#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub model: SpinModel,
    pub schedule: MeasurementSchedule,
    pub dt: f64,
    pub duration: f64,
    pub stepper: Stepper,
    pub seed: u64,
    pub sample_stride: u64,
    pub hamiltonian: ComplexMatrix,
    pub kernel: Kernel,
}

pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_STRIDE: u64 = 10;

fn near_integer(x: f64) -> Option<u64> {
    let r = x.round();
    ((x - r).abs() <= 1e-9 * r.max(1.0) && r >= 0.0).then_some(r as u64)
}

impl EngineConfig {
    /// One period with default timestep, stride and Kraus stepping.
    pub fn new(model: SpinModel, schedule: MeasurementSchedule) -> Self {
        EngineConfig {
            hamiltonian: ComplexMatrix::zeros(model.dim()),
            model,
            duration: schedule.period,
            schedule,
            dt: DEFAULT_DT,
            stepper: Stepper::Kraus,
            seed: 0,
            sample_stride: DEFAULT_STRIDE,
            kernel: Kernel::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        let t = self.schedule.period;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive (got {})", self.dt));
        }
        if self.dt > t / 20.0 * (1.0 + 1e-12) {
            return bad(format!("dt = {} exceeds T/20 = {}", self.dt, t / 20.0));
        }
        if near_integer(0.5 * t / self.dt).is_none() {
            return bad(format!("T/2 = {} is not a whole number of steps of {}", 0.5 * t, self.dt));
        }
        match near_integer(self.duration / t) {
            Some(n) if n > 0 => {}
            _ => return bad(format!("duration {} is not a positive multiple of T = {t}", self.duration)),
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be at least 1".into());
        }
        if self.hamiltonian.dim() != self.model.dim() {
            return Err(Error::DimensionMismatch {
                left: self.hamiltonian.dim(),
                right: self.model.dim(),
            });
        }
        if self.hamiltonian.hermiticity_defect() > 1e-12 || !self.hamiltonian.is_finite() {
            return bad("Hamiltonian must be finite and Hermitian".into());
        }
        Ok(())
    }

    /// Steps per half-period.
    pub fn steps_per_window(&self) -> u64 {
        near_integer(0.5 * self.schedule.period / self.dt).unwrap_or(0)
    }

    /// Number of half-period windows in the run.
    pub fn windows(&self) -> u64 {
        2 * near_integer(self.duration / self.schedule.period).unwrap_or(0)
    }

    pub fn total_steps(&self) -> u64 {
        self.windows() * self.steps_per_window()
    }

    pub fn segments(&self) -> Vec<Segment> {
        let n = self.steps_per_window();
        (0..self.windows())
            .map(|w| {
                let obs = self.schedule.window_observable(w);
                Segment::measure(obs, self.schedule.amplitude(obs), n)
            })
            .collect()
    }

    pub fn propagator(&self) -> Propagator {
        Propagator::new(&self.model, self.stepper, self.dt)
            .with_hamiltonian(self.hamiltonian)
            .with_kernel(self.kernel)
    }
}

/// Sampled time series of one trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub steps: Vec<u64>,
    pub spin_xyz: Vec<[f64; 3]>,
    /// Tr(ρP_i) for the S_z eigenprojectors, ordered (+1[, 0], −1).
    pub eig_probs_z: Vec<Vec<f64>>,
    pub eig_probs_x: Vec<Vec<f64>>,
    pub coherence: Vec<CoherenceVector>,
    pub final_state: DensityMatrix,
    pub dt: f64,
    pub sample_stride: u64,
    pub steps_per_window: u64,
    pub schedule: MeasurementSchedule,
    /// Smallest eigenvalue over the samples (Euler runs only).
    pub min_eigenvalue: Option<f64>,
    /// Samples whose minimum eigenvalue fell below [`POSITIVITY_DIAGNOSTIC`].
    pub positivity_violations: usize,
    pub first_violation_time: Option<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn eigen_probabilities(model: &SpinModel, rho: &DensityMatrix, observable: Observable) -> Vec<f64> {
    model
        .basis(observable)
        .vectors
        .iter()
        .map(|v| rho.probability(v))
        .collect()
}

/// Runs the alternating protocol, handing samples to `observer`.
pub fn run_trajectory_with<O: Observer + ?Sized>(
    config: &EngineConfig,
    initial: &DensityMatrix,
    observer: &mut O,
) -> Result<RunEnd> {
    config.validate()?;
    if initial.dim() != config.model.dim() {
        return Err(Error::DimensionMismatch {
            left: initial.dim(),
            right: config.model.dim(),
        });
    }
    let mut noise = NoiseSource::new(config.seed);
    config
        .propagator()
        .run(initial, &config.segments(), &mut noise, observer)
}

/// Runs the alternating protocol and records every `sample_stride`-th step,
/// including the initial state.
pub fn run_trajectory(config: &EngineConfig, initial: &DensityMatrix) -> Result<TrajectoryRecord> {
    let model = &config.model;
    let capacity = (config.total_steps() / config.sample_stride.max(1) + 1) as usize;
    let track_positivity = config.stepper == Stepper::Euler;
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(capacity),
        steps: Vec::with_capacity(capacity),
        spin_xyz: Vec::with_capacity(capacity),
        eig_probs_z: Vec::with_capacity(capacity),
        eig_probs_x: Vec::with_capacity(capacity),
        coherence: Vec::with_capacity(capacity),
        final_state: *initial,
        dt: config.dt,
        sample_stride: config.sample_stride,
        steps_per_window: config.steps_per_window(),
        schedule: config.schedule,
        min_eigenvalue: None,
        positivity_violations: 0,
        first_violation_time: None,
    };
    let mut observer = Every {
        stride: config.sample_stride,
        f: |s: &Sample<'_>| {
            rec.times.push(s.time);
            rec.steps.push(s.step);
            rec.spin_xyz.push(model.spin_expectations(s.state));
            rec.eig_probs_z.push(eigen_probabilities(model, s.state, Observable::Sz));
            rec.eig_probs_x.push(eigen_probabilities(model, s.state, Observable::Sx));
            rec.coherence.push(model.coherence_from_rho(s.state));
            if track_positivity {
                let min = s.state.min_eigenvalue();
                rec.min_eigenvalue = Some(rec.min_eigenvalue.map_or(min, |m: f64| m.min(min)));
                if min < POSITIVITY_DIAGNOSTIC {
                    rec.positivity_violations += 1;
                    rec.first_violation_time.get_or_insert(s.time);
                }
            }
            ControlFlow::Continue(())
        },
    };
    let end = run_trajectory_with(config, initial, &mut observer)?;
    rec.final_state = end.state;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{Label, Preset, Spin};

    fn config(spin: Spin, mz: f64, mx: f64) -> EngineConfig {
        let model = SpinModel::build(spin);
        let schedule = MeasurementSchedule::from_strengths(mz, mx, 2.0).unwrap();
        let mut c = EngineConfig::new(model, schedule);
        c.dt = 1e-3;
        c.duration = 4.0;
        c
    }

    #[test]
    fn validation() {
        let mut c = config(Spin::One, 1.0, 1.0);
        c.validate().unwrap();
        c.dt = 0.2;
        assert!(c.validate().is_err());
        c.dt = 0.0003;
        assert!(c.validate().is_err(), "T/2 not a whole number of steps");
        c.dt = 1e-3;
        c.duration = 3.0;
        assert!(c.validate().is_err());
        c.duration = 4.0;
        c.sample_stride = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn segment_layout() {
        let c = config(Spin::Half, 1.0, 0.0);
        let segs = c.segments();
        assert_eq!(segs.len(), 4);
        assert_eq!(segs[0].channel, Some((Observable::Sz, 1.0)));
        assert_eq!(segs[1].channel, None);
        assert!(segs.iter().all(|s| s.steps == 1000));
    }

    #[test]
    fn zero_coupling_is_constant() {
        let c = config(Spin::One, 0.0, 0.0);
        let rho = Preset::SuperposZ(Label::Minus, Label::Zero).build(&c.model).unwrap();
        let rec = run_trajectory(&c, &rho).unwrap();
        assert_eq!(rec.len(), 401);
        assert!(rec.spin_xyz.iter().all(|s| *s == rec.spin_xyz[0]));
        assert_eq!(rec.final_state, rho);
    }

    #[test]
    fn identical_seeds_identical_records() {
        let mut c = config(Spin::One, 4.0, 4.0);
        c.seed = 99;
        let rho = DensityMatrix::maximally_mixed(3);
        let a = run_trajectory(&c, &rho).unwrap();
        let b = run_trajectory(&c, &rho).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.spin_xyz, b.spin_xyz);
        c.seed = 100;
        let d = run_trajectory(&c, &rho).unwrap();
        assert_ne!(a.final_state, d.final_state);
    }

    #[test]
    fn fast_and_dense_kernels_agree() {
        for spin in [Spin::Half, Spin::One] {
            for stepper in [Stepper::Kraus, Stepper::Euler] {
                let mut c = config(spin, 2.0, 2.0);
                c.stepper = stepper;
                c.seed = 5;
                let rho = DensityMatrix::maximally_mixed(c.model.dim());
                let fast = run_trajectory(&c, &rho).unwrap();
                c.kernel = Kernel::Dense;
                let dense = run_trajectory(&c, &rho).unwrap();
                let worst = fast
                    .spin_xyz
                    .iter()
                    .zip(&dense.spin_xyz)
                    .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                    .fold(0.0, f64::max);
                assert!(worst < 1e-9, "{spin:?} {stepper:?}: {worst}");
            }
        }
    }

    #[test]
    fn sampling_does_not_perturb_state() {
        let mut c = config(Spin::One, 8.0, 8.0);
        c.seed = 17;
        let rho = DensityMatrix::maximally_mixed(3);
        let dense = run_trajectory(&c, &rho).unwrap().final_state;
        c.sample_stride = 1;
        let every = run_trajectory(&c, &rho).unwrap().final_state;
        c.sample_stride = 2000;
        let sparse = run_trajectory(&c, &rho).unwrap().final_state;
        assert_eq!(dense, every);
        assert_eq!(dense, sparse);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut c = config(Spin::One, 8.0, 8.0);
        c.seed = 3;
        let rec = run_trajectory(&c, &DensityMatrix::maximally_mixed(3)).unwrap();
        for row in rec.eig_probs_z.iter().chain(&rec.eig_probs_x) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p >= -1e-10 && p <= 1.0 + 1e-10));
        }
    }

    #[test]
    fn observer_can_stop_early() {
        let c = config(Spin::Half, 1.0, 1.0);
        let mut count = 0;
        let mut obs = Every {
            stride: 1,
            f: |_: &Sample<'_>| {
                count += 1;
                if count == 10 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        };
        let end = run_trajectory_with(&c, &DensityMatrix::maximally_mixed(2), &mut obs).unwrap();
        assert!(end.stopped_early);
        assert_eq!(end.steps, 9);
    }

    #[test]
    fn window_end_samples() {
        let c = config(Spin::Half, 1.0, 1.0);
        let mut ends = Vec::new();
        let mut obs = WindowEnds(|s: &Sample<'_>| {
            ends.push((s.window, s.step));
            ControlFlow::Continue(())
        });
        run_trajectory_with(&c, &DensityMatrix::maximally_mixed(2), &mut obs).unwrap();
        assert_eq!(ends, vec![(0, 1000), (1, 2000), (2, 3000), (3, 4000)]);
    }

    #[test]
    fn euler_positivity_tracked() {
        let mut c = config(Spin::One, 1.0, 1.0);
        c.stepper = Stepper::Euler;
        let rec = run_trajectory(&c, &DensityMatrix::maximally_mixed(3)).unwrap();
        assert!(rec.min_eigenvalue.is_some());
    }
}
