//! Observables extracted from trajectories: eigenstate classification,
//! dwell times, phase-plane densities, first-passage times and cascade
//! diagnostics.

pub mod born;
pub mod cascade;
pub mod collapse;
pub mod density;
pub mod dwell;
pub mod loci;

pub use born::{born_probabilities, classify_eigenstate, classify_probabilities, Outcome, DEFAULT_EPSILON};
pub use cascade::{cascade_trace, AbsorbingCheck, CascadeObserver, CascadeTrace};
pub use collapse::{collapse_times, first_passage, CollapseSetup, CollapseTimeStats, DEFAULT_THRESHOLD};
pub use density::{density_histogram, eigenstate_points, DensityAccumulator, Histogram2D, Plane, DEFAULT_BINS};
pub use dwell::{dwell_times, outcome_sequence, DwellStats, DwellSummary, OutcomeCollector, OutcomeSequence};
pub use loci::{superposition_loci, LocusKind, PetalRegions};
