//! Stochastic evolution of a density matrix under alternating S_z / S_x
//! measurement.

pub mod lindblad;
pub mod noise;
pub mod schedule;
pub mod stepper;
pub mod trajectory;

pub use lindblad::{lindblad_propagate, lindblad_schedule};
pub use noise::NoiseSource;
pub use schedule::{amplitude_to_strength, strength_to_amplitude, MeasurementSchedule, Phase};
pub use stepper::{euler_step, kraus_operators, kraus_step};
pub use trajectory::{
    eigen_probabilities, run_trajectory, run_trajectory_with, EngineConfig, Every, Kernel,
    Observer, Propagator, RunEnd, Sample, Segment, Stepper, TrajectoryRecord, WindowEnds,
    DEFAULT_DT, DEFAULT_STRIDE,
};
