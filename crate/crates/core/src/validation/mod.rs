//! Statistical acceptance checks built on [`experiments`]. Each check runs
//! its ensemble, compares against a closed-form or exact reference, and
//! reports a one-line verdict with the numbers behind it.

pub mod experiments;

use serde::Serialize;

use crate::analysis::cascade::{STAY_THRESHOLD, ZERO_THRESHOLD};
use crate::engine::Stepper;
use crate::error::Result;
use crate::spin::appendix::validate_appendix;
use crate::spin::{Label, Spin, SpinModel};

use experiments::*;

/// Ensemble sizes. [`Scale::full`] is the acceptance configuration.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Scale {
    pub dt: f64,
    pub invariant_steps: u64,
    pub trajectories: usize,
    pub outcomes: u64,
    /// S_z outcomes per strength in the spin-1 sweep, where the ±1 / 0
    /// split at weak S_x needs more runs to resolve.
    pub sweep_outcomes_one: u64,
    pub cascade_windows: usize,
    pub density_duration: f64,
    pub density_trajectories: usize,
    pub appendix_samples: usize,
}

impl Scale {
    pub fn full() -> Self {
        Scale {
            dt: 1e-4,
            invariant_steps: 1_000_000,
            trajectories: 10_000,
            outcomes: 5000,
            sweep_outcomes_one: 20_000,
            cascade_windows: 1000,
            density_duration: 500.0,
            density_trajectories: 8,
            appendix_samples: 1000,
        }
    }

    /// Small ensembles for smoke tests; verdicts are not meaningful.
    pub fn quick() -> Self {
        Scale {
            dt: 1e-3,
            invariant_steps: 20_000,
            trajectories: 200,
            outcomes: 100,
            sweep_outcomes_one: 200,
            cascade_windows: 50,
            density_duration: 20.0,
            density_trajectories: 1,
            appendix_samples: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub summary: String,
    pub metrics: Vec<Metric>,
}

impl CheckReport {
    fn new(id: &str, title: &str) -> Self {
        CheckReport {
            id: id.to_string(),
            title: title.to_string(),
            passed: true,
            summary: String::new(),
            metrics: Vec::new(),
        }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
        });
    }

    fn require(&mut self, ok: bool) {
        self.passed &= ok;
    }

    /// `PASS P1 title: summary`
    pub fn line(&self) -> String {
        format!(
            "{} {} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary
        )
    }
}

pub const BORN_TOLERANCE: f64 = 0.02;
pub const DRIFT_SIGMAS: f64 = 3.0;
pub const KS_LIMIT: f64 = 0.05;
pub const SWEEP_M_X: [f64; 4] = [32.0, 2.0, 0.5, 0.125];
pub const STRONG: f64 = 32.0;
pub const DWELL_EPSILONS: [f64; 3] = [1e-3, 1e-2, 1e-4];
pub const COLLAPSE_WINDOW: f64 = 50.0;
pub const COLLAPSE_EXPECTED: [f64; 2] = [0.22, 0.89];
pub const COLLAPSE_RELATIVE: f64 = 0.3;
pub const DENSITY_STRENGTH: f64 = 8.0;
pub const CENTER_RATIO: (f64, f64) = (2.0, 0.3);
pub const PETAL_LIMIT: f64 = 0.01;
pub const APPENDIX_TOL: f64 = 1e-10;

pub fn check_invariants(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P1", "state invariants");
    let inv = state_invariants(scale.invariant_steps, 8.0, scale.dt, seed)?;
    r.require(inv.steps >= scale.invariant_steps);
    r.require(inv.max_trace_defect <= 1e-12);
    r.require(inv.max_hermiticity_defect <= 1e-12);
    r.require(inv.min_eigenvalue >= -1e-10);
    r.metric("steps", inv.steps as f64);
    r.metric("max_trace_defect", inv.max_trace_defect);
    r.metric("max_hermiticity_defect", inv.max_hermiticity_defect);
    r.metric("min_eigenvalue", inv.min_eigenvalue);
    r.summary = format!(
        "{} steps over {} runs, |tr-1| <= {:.1e}, herm <= {:.1e}, min eig {:.2e}",
        inv.steps, inv.runs, inv.max_trace_defect, inv.max_hermiticity_defect, inv.min_eigenvalue
    );
    Ok(r)
}

pub fn check_born(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P2", "Born frequencies");
    let born = born_frequencies(scale.trajectories, STRONG, 1e-3, scale.dt, seed)?;
    let freq = born.frequencies();
    for ((l, f), e) in born.labels.iter().zip(&freq).zip([0.25, 0.5, 0.25]) {
        r.require((f - e).abs() <= BORN_TOLERANCE);
        r.metric(format!("freq_{}", l.tag()), *f);
    }
    r.metric("incomplete", born.incomplete as f64);
    r.summary = format!(
        "freq (+1, 0, -1) = ({:.4}, {:.4}, {:.4}) vs (0.25, 0.5, 0.25) +/- {BORN_TOLERANCE}, {} incomplete of {}",
        freq[0], freq[1], freq[2], born.incomplete, born.trajectories
    );
    Ok(r)
}

pub fn check_martingale(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P3", "S_z martingale");
    let mut parts = Vec::new();
    for (i, spin) in [Spin::Half, Spin::One].into_iter().enumerate() {
        let base = seed.wrapping_add((i * scale.trajectories) as u64);
        let d = sz_drift(spin, scale.trajectories, 1.0, 10, scale.dt, base)?;
        let z = d.worst_z_score();
        r.require(z <= DRIFT_SIGMAS);
        r.metric(format!("worst_z_{spin}"), z);
        parts.push(format!("{spin} worst |shift|/SE = {z:.2}"));
    }
    r.summary = format!("{} (limit {DRIFT_SIGMAS})", parts.join(", "));
    Ok(r)
}

pub fn check_lindblad(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P4", "Lindblad mean");
    let mut parts = Vec::new();
    let mut k = 0u64;
    for spin in [Spin::Half, Spin::One] {
        for stepper in [Stepper::Kraus, Stepper::Euler] {
            let base = seed.wrapping_add(k * scale.trajectories as u64);
            k += 1;
            let c = lindblad_mean(spin, stepper, scale.trajectories, 1.0, scale.dt, base)?;
            r.require(c.worst_ratio <= 1.0);
            r.metric(format!("worst_ratio_{spin}_{stepper}"), c.worst_ratio);
            parts.push(format!("{spin}/{stepper} {:.2}", c.worst_ratio));
            if !c.rx_decay.is_empty() {
                let rx = c
                    .rx_decay
                    .iter()
                    .map(|p| p.ratio(LINDBLAD_SIGMAS, LINDBLAD_FLOOR))
                    .fold(0.0, f64::max);
                r.require(rx <= 1.0);
                r.metric(format!("rx_ratio_{stepper}"), rx);
                parts.push(format!("rx/{stepper} {rx:.2}"));
            }
        }
    }
    r.summary = format!("worst deviation / max(5 SE, 5e-3): {}", parts.join(", "));
    Ok(r)
}

pub fn check_steppers(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P5", "stepper equivalence");
    let mut parts = Vec::new();
    for (i, spin) in [Spin::Half, Spin::One].into_iter().enumerate() {
        let base = seed.wrapping_add((2 * i * scale.trajectories) as u64);
        let ks = stepper_ks(spin, scale.trajectories, scale.dt, base)?;
        r.require(ks.distance <= KS_LIMIT);
        r.metric(format!("ks_{spin}"), ks.distance);
        parts.push(format!("{spin} KS = {:.4}", ks.distance));
    }
    r.summary = format!("{} (limit {KS_LIMIT})", parts.join(", "));
    Ok(r)
}

fn dwell_parts(run: &DwellRun) -> String {
    let d = run.at(DWELL_EPSILONS[0]).expect("primary epsilon");
    d.summary()
        .iter()
        .map(|s| format!("{}: {:.3}+/-{:.3}", s.label, s.mean, s.standard_error))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Largest change in any mean dwell when ε moves off its default.
fn epsilon_spread(run: &DwellRun) -> f64 {
    let base = run.at(DWELL_EPSILONS[0]).expect("primary epsilon").summary();
    let mut spread: f64 = 0.0;
    for (_, d) in &run.per_epsilon {
        for (a, b) in base.iter().zip(d.summary()) {
            if a.runs > 0 {
                spread = spread.max((a.mean - b.mean).abs());
            }
        }
    }
    spread
}

pub fn check_dwell_oracles(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P6", "strong-strong dwell");
    let mut parts = Vec::new();
    for (i, spin) in [Spin::Half, Spin::One].into_iter().enumerate() {
        let run = dwell_run(spin, STRONG, STRONG, scale.outcomes, &DWELL_EPSILONS, scale.dt, seed.wrapping_add(i as u64))?;
        let expected = born_chain_dwell_means(&SpinModel::build(spin));
        let d = run.at(DWELL_EPSILONS[0]).unwrap();
        for (label, mean) in expected {
            let tol = if spin == Spin::One && label == Label::Zero { 0.15 } else { 0.1 };
            let got = d.stats(label).mean();
            r.require((got - mean).abs() <= tol);
            r.metric(format!("mean_{spin}_{}", label.tag()), got);
        }
        let spread = epsilon_spread(&run);
        r.metric(format!("epsilon_spread_{spin}"), spread);
        parts.push(format!("{spin} [{}] eps-spread {spread:.3}", dwell_parts(&run)));
    }
    r.summary = format!("{} vs 2.0 (1/2), 1.6/2.0/1.6 (1)", parts.join("; "));
    Ok(r)
}

/// A mean may only fall below the previous (stronger S_x) one by this many
/// combined standard errors, and the weakest must exceed the strongest by
/// at least as many.
pub const MONOTONE_SIGMAS: f64 = 3.0;

pub fn check_dwell_sweep(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P7", "dwell monotonicity");
    let mut parts = Vec::new();
    for (i, spin) in [Spin::Half, Spin::One].into_iter().enumerate() {
        let base = seed.wrapping_add((i * SWEEP_M_X.len()) as u64);
        let outcomes = match spin {
            Spin::Half => scale.outcomes,
            Spin::One => scale.sweep_outcomes_one,
        };
        let runs = dwell_sweep(spin, STRONG, &SWEEP_M_X, outcomes, &DWELL_EPSILONS[..1], scale.dt, base)?;
        let model = SpinModel::build(spin);
        for &label in model.labels() {
            let stats: Vec<_> = runs
                .iter()
                .map(|run| run.at(DWELL_EPSILONS[0]).unwrap().stats(label))
                .collect();
            let z = |a: &crate::stats::RunningStats, b: &crate::stats::RunningStats| {
                (b.mean() - a.mean()) / a.standard_error().hypot(b.standard_error())
            };
            // Strengths decrease along the sweep, so dwell must not shrink.
            let worst_step = stats.windows(2).map(|w| z(&w[0], &w[1])).fold(f64::INFINITY, f64::min);
            let overall = z(&stats[0], &stats[stats.len() - 1]);
            r.require(worst_step >= -MONOTONE_SIGMAS && overall >= MONOTONE_SIGMAS);
            r.metric(format!("worst_step_sigma_{spin}_{}", label.tag()), worst_step);
            r.metric(format!("overall_sigma_{spin}_{}", label.tag()), overall);
            parts.push(format!(
                "{spin} {label}: {} (worst step {worst_step:+.1} sigma, overall {overall:+.1} sigma)",
                stats.iter().map(|s| format!("{:.2}", s.mean())).collect::<Vec<_>>().join(", ")
            ));
        }
        if spin == Spin::One {
            for (run, &mx) in runs.iter().zip(&SWEEP_M_X) {
                if mx > 0.5 {
                    continue;
                }
                let d = run.at(DWELL_EPSILONS[0]).unwrap();
                let zero = d.stats(Label::Zero);
                for outer in [Label::Plus, Label::Minus] {
                    let s = d.stats(outer);
                    let sigma = s.standard_error().hypot(zero.standard_error());
                    let z = (s.mean() - zero.mean()) / sigma;
                    r.require(z >= 3.0);
                    r.metric(format!("split_sigma_{}_mx{mx}", outer.tag()), z);
                    parts.push(format!("M_x={mx} {outer} vs 0: {z:.1} sigma"));
                }
            }
        }
    }
    r.summary = format!("M_x = {SWEEP_M_X:?}; {}", parts.join("; "));
    Ok(r)
}

pub fn check_collapse(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P8", "collapse times");
    let cases = collapse_cases(scale.trajectories, crate::analysis::DEFAULT_THRESHOLD, COLLAPSE_WINDOW, scale.dt, seed)?;
    let mut parts = Vec::new();
    for (case, expected) in cases.iter().zip(COLLAPSE_EXPECTED) {
        let mean = case.stats.overall.mean();
        r.require((mean - expected).abs() <= COLLAPSE_RELATIVE * expected);
        r.metric(format!("mean_{}", case.name), mean);
        parts.push(format!(
            "{} mean {:.4}+/-{:.4} vs {expected} (+/-30%), {} non-arrivals",
            case.name,
            mean,
            case.stats.overall.standard_error(),
            case.stats.non_arrivals
        ));
    }
    r.summary = format!("threshold {}: {}", crate::analysis::DEFAULT_THRESHOLD, parts.join("; "));
    Ok(r)
}

pub fn check_cascade(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P9", "cascade absorbing");
    let c = cascade_windows(scale.cascade_windows, STRONG, 1e-3, scale.dt, seed)?;
    r.require(c.violating_windows == 0);
    r.require(c.one_hot == c.windows);
    r.metric("violating_windows", c.violating_windows as f64);
    r.metric("zero_hits", c.zero_hits as f64);
    r.metric("largest_after_zero", c.largest_after_zero);
    r.metric("one_hot", c.one_hot as f64);
    // p_i is a martingale, so from 1e-12 it reaches 1e-9 with probability
    // at most 1e-3 per hit.
    let bound = c.zero_hits as f64 * ZERO_THRESHOLD / STAY_THRESHOLD;
    r.metric("expected_rises_bound", bound);
    r.summary = format!(
        "{} windows, {} zero hits, {} windows re-exceed 1e-9 (largest {:.2e}, martingale bound {:.1} expected), {} one-hot",
        c.windows, c.zero_hits, c.violating_windows, c.largest_after_zero, bound, c.one_hot
    );
    Ok(r)
}

pub fn check_density(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P10", "density structure");
    let d = density_structure(
        DENSITY_STRENGTH,
        scale.density_duration,
        scale.density_trajectories,
        crate::analysis::DEFAULT_BINS,
        crate::engine::DEFAULT_STRIDE,
        scale.dt,
        seed,
    )?;
    let ratio = d.center_ratio();
    let petal = d.petal_fraction();
    r.require((ratio - CENTER_RATIO.0).abs() <= CENTER_RATIO.1);
    r.require(petal <= PETAL_LIMIT);
    r.metric("center_ratio", ratio);
    r.metric("petal_fraction", petal);
    r.summary = format!(
        "centre/outer = {ratio:.3} (2.0 +/- 0.3), petal fraction = {petal:.2e} (<= 1e-2), {} samples",
        d.total
    );
    Ok(r)
}

pub fn check_appendix(scale: &Scale, seed: u64) -> Result<CheckReport> {
    let mut r = CheckReport::new("P11", "coherence-vector SDE");
    let rep = validate_appendix(scale.appendix_samples, seed);
    r.require(rep.regular_terms_match(APPENDIX_TOL));
    r.metric("max_regular_deviation", rep.max_regular_deviation);
    let flagged: Vec<String> = rep
        .suspects
        .iter()
        .map(|s| {
            format!(
                "{}/{} printed {:.2e} corrected {:.1e}",
                s.name,
                s.term.kind.as_str(),
                s.printed_deviation,
                s.corrected_deviation
            )
        })
        .collect();
    r.summary = format!(
        "{} states, max regular deviation {:.2e}; flagged terms: {}",
        rep.samples,
        rep.max_regular_deviation,
        flagged.join(", ")
    );
    Ok(r)
}

pub type CheckFn = fn(&Scale, u64) -> Result<CheckReport>;

/// All checks in order, with their default seeds.
pub const CHECKS: [(&str, CheckFn, u64); 11] = [
    ("P1", check_invariants, 1_000),
    ("P2", check_born, 2_000_000),
    ("P3", check_martingale, 3_000_000),
    ("P4", check_lindblad, 4_000_000),
    ("P5", check_steppers, 5_000_000),
    ("P6", check_dwell_oracles, 6_000),
    ("P7", check_dwell_sweep, 7_000),
    ("P8", check_collapse, 8_000_000),
    ("P9", check_cascade, 9_000_000),
    ("P10", check_density, 10_000),
    ("P11", check_appendix, 11),
];

/// Runs the selected checks (all when `only` is empty). `seed_offset` is
/// added to every default seed.
pub fn run_checks(scale: &Scale, seed_offset: u64, only: &[String]) -> Result<Vec<CheckReport>> {
    CHECKS
        .iter()
        .filter(|(id, _, _)| only.is_empty() || only.iter().any(|o| o.eq_ignore_ascii_case(id)))
        .map(|(_, f, seed)| f(scale, seed.wrapping_add(seed_offset)))
        .collect()
}
