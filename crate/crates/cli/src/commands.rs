use std::ops::ControlFlow;
use std::path::Path;

use anyhow::{anyhow, Result};
use qsd_core::analysis::cascade::CascadeObserver;
use qsd_core::analysis::{
    born_probabilities, classify_probabilities, collapse_times, density_histogram, dwell_times,
    eigenstate_points, CollapseSetup, DwellStats, DwellSummary, OutcomeCollector, PetalRegions, Plane,
};
use qsd_core::engine::{
    strength_to_amplitude, EngineConfig, MeasurementSchedule, NoiseSource, Observer, Propagator, Sample,
    Segment, Stepper,
};
use qsd_core::ensemble::{fold_ensemble, trajectory_seed, DEFAULT_CHUNK};
use qsd_core::spin::{DensityMatrix, Label, Observable, Spin, SpinModel};
use qsd_core::validation::experiments::{born_chain_dwell_means, REGION_RADIUS};
use qsd_core::validation::{run_checks, CheckReport, Scale};
use serde::Serialize;

use crate::config::{RunConfig, ScaleName};
use crate::output::{num, prepare_dir, write_summary, CsvWriter};

fn engine_config(c: &RunConfig, m_x: f64) -> Result<EngineConfig> {
    let schedule = MeasurementSchedule::from_strengths(c.m_z, m_x, c.period)?.with_phase(c.phase);
    let mut config = EngineConfig::new(SpinModel::build(c.system.spin()), schedule);
    config.dt = c.dt;
    config.duration = c.duration();
    config.stepper = c.stepper;
    config.seed = c.seed;
    config.sample_stride = c.sample_stride;
    config.kernel = c.kernel;
    config.validate()?;
    Ok(config)
}

fn initial_state(c: &RunConfig, model: &SpinModel) -> Result<DensityMatrix> {
    Ok(c.preset().build(model)?)
}

fn probability_columns(prefix: &str, model: &SpinModel) -> Vec<String> {
    model.labels().iter().map(|l| format!("{prefix}_{}", l.tag())).collect()
}

/// Column names for the spin expectations: r = ⟨σ⟩ for spin-1/2, ⟨S⟩ for
/// spin-1.
fn expectation_columns(spin: Spin) -> [&'static str; 3] {
    match spin {
        Spin::Half => ["rx", "ry", "rz"],
        Spin::One => ["Sx", "Sy", "Sz"],
    }
}

fn expectations(model: &SpinModel, rho: &DensityMatrix) -> [f64; 3] {
    let s = model.spin_expectations(rho);
    match model.spin {
        Spin::Half => s.map(|v| 2.0 * v),
        Spin::One => s,
    }
}

pub fn trajectory_header(spin: Spin) -> Vec<String> {
    let model = SpinModel::build(spin);
    let mut header = vec!["time".to_string()];
    header.extend(expectation_columns(spin).map(String::from));
    header.extend(probability_columns("pz", &model));
    header.extend(probability_columns("px", &model));
    header
}

struct RowWriter<'a> {
    model: &'a SpinModel,
    stride: u64,
    csv: CsvWriter,
    track_positivity: bool,
    min_eigenvalue: Option<f64>,
    error: Option<anyhow::Error>,
}

impl RowWriter<'_> {
    fn write(&mut self, sample: &Sample<'_>) -> Result<()> {
        let mut row = vec![num(sample.time)];
        row.extend(expectations(self.model, sample.state).map(num));
        for obs in [Observable::Sz, Observable::Sx] {
            row.extend(born_probabilities(self.model, sample.state, obs)?.into_iter().map(num));
        }
        if self.track_positivity {
            let m = sample.state.min_eigenvalue();
            self.min_eigenvalue = Some(self.min_eigenvalue.map_or(m, |v| v.min(m)));
        }
        self.csv.row(&row)
    }
}

impl Observer for RowWriter<'_> {
    fn wants(&self, step: u64, _window_end: bool) -> bool {
        step % self.stride == 0
    }

    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()> {
        match self.write(sample) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                self.error = Some(e);
                ControlFlow::Break(())
            }
        }
    }
}

#[derive(Serialize)]
struct StateSummary {
    expectations: [f64; 3],
    pz: Vec<f64>,
    px: Vec<f64>,
}

impl StateSummary {
    fn new(model: &SpinModel, rho: &DensityMatrix) -> Result<Self> {
        Ok(StateSummary {
            expectations: expectations(model, rho),
            pz: born_probabilities(model, rho, Observable::Sz)?,
            px: born_probabilities(model, rho, Observable::Sx)?,
        })
    }
}

#[derive(Serialize)]
struct TrajectoryFile {
    file: String,
    seed: u64,
    rows: u64,
    steps: u64,
    final_state: StateSummary,
    /// Smallest sampled eigenvalue of ρ (Euler runs only).
    min_eigenvalue: Option<f64>,
}

#[derive(Serialize)]
struct TrajectoryReport {
    columns: Vec<String>,
    trajectories: Vec<TrajectoryFile>,
}

/// One CSV per trajectory: `trajectory.csv`, or `trajectory_0000.csv` and
/// onwards when several are requested.
pub fn trajectory(c: &RunConfig, out: &Path) -> Result<()> {
    let base = engine_config(c, c.m_x)?;
    let model = &base.model;
    let initial = initial_state(c, model)?;
    let header = trajectory_header(model.spin);
    let mut files = Vec::new();
    for i in 0..c.n_trajectories {
        let name = if c.n_trajectories == 1 {
            "trajectory.csv".to_string()
        } else {
            format!("trajectory_{i:04}.csv")
        };
        let mut config = base.clone();
        config.seed = trajectory_seed(c.seed, i);
        let mut writer = RowWriter {
            model,
            stride: c.sample_stride,
            csv: CsvWriter::create(out.join(&name), &header)?,
            track_positivity: c.stepper == Stepper::Euler,
            min_eigenvalue: None,
            error: None,
        };
        let end = qsd_core::engine::run_trajectory_with(&config, &initial, &mut writer)?;
        if let Some(e) = writer.error {
            return Err(e);
        }
        let rows = writer.csv.finish()?;
        println!("wrote {} ({rows} rows)", out.join(&name).display());
        files.push(TrajectoryFile {
            file: name,
            seed: config.seed,
            rows,
            steps: end.steps,
            final_state: StateSummary::new(model, &end.state)?,
            min_eigenvalue: writer.min_eigenvalue,
        });
    }
    let report = TrajectoryReport {
        columns: header,
        trajectories: files,
    };
    write_summary(&out.join("trajectory_summary.json"), "trajectory", c, &report)
}

#[derive(Serialize)]
struct RegionMass {
    name: &'static str,
    x: f64,
    y: f64,
    mass: u64,
}

#[derive(Serialize)]
struct DensityReport {
    plane: Plane,
    bins: usize,
    total_mass: u64,
    radius: f64,
    eigenstate_mass: Vec<RegionMass>,
    /// Largest over smallest of the four outer eigenstate masses.
    outer_spread: f64,
    /// Centre mass over the mean outer mass (spin-1).
    center_ratio: Option<f64>,
    petal_mass: Option<u64>,
    petal_fraction: Option<f64>,
}

pub fn density(c: &RunConfig, out: &Path) -> Result<()> {
    let config = engine_config(c, c.m_x)?;
    let model = &config.model;
    let initial = initial_state(c, model)?;
    let plane = Plane::default_for(model.spin);
    let hist = density_histogram(&config, &initial, plane, c.bins, c.sample_stride, c.n_trajectories)?;

    let header = ["bin_x_center", "bin_y_center", "mass", "density"].map(String::from);
    let mut csv = CsvWriter::create(out.join("density.csv"), &header)?;
    for (x, y, mass, density) in hist.rows() {
        csv.row(&[num(x), num(y), mass.to_string(), num(density)])?;
    }
    let rows = csv.finish()?;
    println!("wrote {} ({rows} bins)", out.join("density.csv").display());

    let masses: Vec<RegionMass> = eigenstate_points(model.spin)
        .into_iter()
        .map(|(name, (x, y))| RegionMass {
            name,
            x,
            y,
            mass: hist.mass_within(x, y, REGION_RADIUS),
        })
        .collect();
    let outer: Vec<f64> = masses.iter().filter(|m| m.name != "center").map(|m| m.mass as f64).collect();
    let max = outer.iter().cloned().fold(f64::MIN, f64::max);
    let min = outer.iter().cloned().fold(f64::MAX, f64::min);
    let mean_outer = outer.iter().sum::<f64>() / outer.len() as f64;
    let center = masses.iter().find(|m| m.name == "center").map(|m| m.mass);
    let petal = (model.spin == Spin::One).then(|| {
        let regions = PetalRegions::default();
        hist.mass_inside(|x, y| regions.contains(x, y))
    });
    let total = hist.total();
    let report = DensityReport {
        plane,
        bins: c.bins,
        total_mass: total,
        radius: REGION_RADIUS,
        outer_spread: max / min,
        center_ratio: center.map(|m| m as f64 / mean_outer),
        petal_mass: petal,
        petal_fraction: petal.map(|p| p as f64 / total as f64),
        eigenstate_mass: masses,
    };
    write_summary(&out.join("density_summary.json"), "density", c, &report)
}

#[derive(Serialize)]
struct DwellPoint {
    m_x: f64,
    outcomes: u64,
    incomplete: u64,
    unterminated: u64,
    summary: Vec<DwellSummary>,
}

#[derive(Serialize)]
struct DwellReport {
    epsilon: f64,
    /// Mean dwell when every window collapses completely.
    complete_collapse_means: Vec<(Label, f64)>,
    sweep: Vec<DwellPoint>,
}

/// Strength `j` of the sweep runs trajectories seeded from
/// `seed + j * n_trajectories`.
pub fn dwell(c: &RunConfig, out: &Path) -> Result<()> {
    let sweep = c.m_x_sweep.clone().unwrap_or_else(|| vec![c.m_x]);
    let header = ["m_x", "label", "mean", "standard_error", "runs"].map(String::from);
    let mut csv = CsvWriter::create(out.join("dwell.csv"), &header)?;
    let mut points = Vec::new();
    for (j, &m_x) in sweep.iter().enumerate() {
        let config = engine_config(c, m_x)?;
        let model = &config.model;
        let initial = initial_state(c, model)?;
        let propagator = config.propagator();
        let segments = config.segments();
        let base = c.seed.wrapping_add((j * c.n_trajectories) as u64);
        let stats = fold_ensemble(
            c.n_trajectories,
            base,
            DEFAULT_CHUNK,
            DwellStats::new(model.labels()),
            |_, seed| {
                let mut collector = OutcomeCollector::new(model, config.schedule, c.epsilon);
                let mut noise = NoiseSource::new(seed);
                propagator.run(&initial, &segments, &mut noise, &mut collector)?;
                Ok(dwell_times(&collector.sequence, model.labels()))
            },
            |acc, s| {
                acc.merge(&s);
                Ok(())
            },
        )?;
        let summary = stats.summary();
        for s in &summary {
            csv.row(&[num(m_x), s.label.as_str().to_string(), num(s.mean), num(s.standard_error), s.runs.to_string()])?;
        }
        points.push(DwellPoint {
            m_x,
            outcomes: stats.outcomes,
            incomplete: stats.incomplete,
            unterminated: stats.unterminated,
            summary,
        });
    }
    let rows = csv.finish()?;
    println!("wrote {} ({rows} rows)", out.join("dwell.csv").display());
    let report = DwellReport {
        epsilon: c.epsilon,
        complete_collapse_means: born_chain_dwell_means(&SpinModel::build(c.system.spin())),
        sweep: points,
    };
    write_summary(&out.join("dwell_summary.json"), "dwell", c, &report)
}

/// Samples every `stride` steps while the absorbing check sees every step.
struct CascadeWriter<'a> {
    inner: CascadeObserver<'a>,
    stride: u64,
    csv: CsvWriter,
    error: Option<anyhow::Error>,
}

impl Observer for CascadeWriter<'_> {
    fn wants(&self, _step: u64, _window_end: bool) -> bool {
        true
    }

    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()> {
        let flow = self.inner.observe(sample);
        if sample.step % self.stride == 0 {
            let row = born_probabilities(self.inner.model, sample.state, Observable::Sx).map(|p| {
                std::iter::once(num(sample.time))
                    .chain(p.into_iter().map(num))
                    .collect::<Vec<_>>()
            });
            if let Err(e) = row.map_err(anyhow::Error::from).and_then(|r| self.csv.row(&r)) {
                self.error = Some(e);
                return ControlFlow::Break(());
            }
        }
        flow
    }
}

#[derive(Serialize)]
struct ZeroReport {
    label: Label,
    first_zero: Option<f64>,
    max_after_zero: f64,
}

#[derive(Serialize)]
struct CascadeReport {
    m_x: f64,
    window: f64,
    seed: u64,
    zeros: Vec<ZeroReport>,
    violations: u64,
    absorbing: bool,
    final_px: Vec<f64>,
    final_eigenstate: Option<Label>,
    trajectories: usize,
    ensemble_zero_hits: u64,
    ensemble_violating_trajectories: u64,
    ensemble_one_hot: u64,
}

/// A single S_x window. `cascade.csv` traces the first trajectory; the
/// summary adds counts over all `n_trajectories`.
pub fn cascade(c: &RunConfig, out: &Path) -> Result<()> {
    let model = SpinModel::build(c.system.spin());
    let initial = initial_state(c, &model)?;
    let window = c.duration();
    let segment = Segment::measure(Observable::Sx, strength_to_amplitude(c.m_x, c.period), c.steps(window));
    let propagator = Propagator::new(&model, c.stepper, c.dt).with_kernel(c.kernel);

    let mut header = vec!["time".to_string()];
    header.extend(probability_columns("px", &model));
    let mut writer = CascadeWriter {
        inner: CascadeObserver::new(&model, Observable::Sx),
        stride: c.sample_stride,
        csv: CsvWriter::create(out.join("cascade.csv"), &header)?,
        error: None,
    };
    let mut noise = NoiseSource::new(c.seed);
    propagator.run(&initial, &[segment], &mut noise, &mut writer)?;
    if let Some(e) = writer.error {
        return Err(e);
    }
    let rows = writer.csv.finish()?;
    println!("wrote {} ({rows} rows)", out.join("cascade.csv").display());
    let check = writer.inner.check;
    let last = writer.inner.last;

    let (hits, violating, one_hot) = fold_ensemble(
        c.n_trajectories,
        c.seed,
        DEFAULT_CHUNK,
        (0u64, 0u64, 0u64),
        |_, seed| {
            let mut observer = CascadeObserver::new(&model, Observable::Sx);
            let mut noise = NoiseSource::new(seed);
            propagator.run(&initial, &[segment], &mut noise, &mut observer)?;
            let one_hot = classify_probabilities(model.labels(), &observer.last, c.epsilon).label().is_some();
            Ok((observer.check.zero_hits() as u64, !observer.check.passed(), one_hot))
        },
        |acc, (h, bad, hot)| {
            acc.0 += h;
            acc.1 += bad as u64;
            acc.2 += hot as u64;
            Ok(())
        },
    )?;
    let report = CascadeReport {
        m_x: c.m_x,
        window,
        seed: c.seed,
        zeros: model
            .labels()
            .iter()
            .enumerate()
            .map(|(i, &label)| ZeroReport {
                label,
                first_zero: check.first_zero[i],
                max_after_zero: check.max_after_zero[i],
            })
            .collect(),
        violations: check.violations,
        absorbing: check.passed(),
        final_eigenstate: classify_probabilities(model.labels(), &last, c.epsilon).label(),
        final_px: last,
        trajectories: c.n_trajectories,
        ensemble_zero_hits: hits,
        ensemble_violating_trajectories: violating,
        ensemble_one_hot: one_hot,
    };
    for z in &report.zeros {
        match z.first_zero {
            Some(t) => println!("p({}) first reached zero at t = {t}", z.label),
            None => println!("p({}) never reached zero", z.label),
        }
    }
    write_summary(&out.join("cascade_summary.json"), "cascade", c, &report)
}

#[derive(Serialize)]
struct TargetReport {
    label: Label,
    arrivals: u64,
    mean: f64,
    standard_error: f64,
}

#[derive(Serialize)]
struct CollapseReport {
    threshold: f64,
    window: f64,
    trajectories: usize,
    non_arrivals: u64,
    targets: Vec<TargetReport>,
    overall: TargetSummary,
}

#[derive(Serialize)]
struct TargetSummary {
    arrivals: u64,
    mean: f64,
    standard_error: f64,
}

/// First time any target S_z eigenstate reaches `threshold` under S_z
/// measurement of strength `m_z`.
pub fn collapse_time(c: &RunConfig, out: &Path) -> Result<()> {
    let model = SpinModel::build(c.system.spin());
    let initial = initial_state(c, &model)?;
    let setup = CollapseSetup {
        model,
        observable: Observable::Sz,
        amplitude: strength_to_amplitude(c.m_z, c.period),
        window: c.duration(),
        dt: c.dt,
        stepper: c.stepper,
        kernel: c.kernel,
    };
    let stats = collapse_times(&setup, &initial, &c.target_labels(), c.threshold, c.n_trajectories, c.seed)?;
    let header = ["target", "arrivals", "mean", "standard_error"].map(String::from);
    let mut csv = CsvWriter::create(out.join("collapse_time.csv"), &header)?;
    let mut targets = Vec::new();
    for t in &stats.per_target {
        csv.row(&[
            t.label.as_str().to_string(),
            t.times.count().to_string(),
            num(t.times.mean()),
            num(t.times.standard_error()),
        ])?;
        targets.push(TargetReport {
            label: t.label,
            arrivals: t.times.count(),
            mean: t.times.mean(),
            standard_error: t.times.standard_error(),
        });
    }
    csv.row(&[
        "any".to_string(),
        stats.overall.count().to_string(),
        num(stats.overall.mean()),
        num(stats.overall.standard_error()),
    ])?;
    csv.finish()?;
    println!(
        "mean collapse time {:.4} ± {:.4} over {} arrivals ({} did not arrive)",
        stats.overall.mean(),
        stats.overall.standard_error(),
        stats.overall.count(),
        stats.non_arrivals
    );
    let report = CollapseReport {
        threshold: c.threshold,
        window: c.duration(),
        trajectories: c.n_trajectories,
        non_arrivals: stats.non_arrivals,
        targets,
        overall: TargetSummary {
            arrivals: stats.overall.count(),
            mean: stats.overall.mean(),
            standard_error: stats.overall.standard_error(),
        },
    };
    write_summary(&out.join("collapse_time_summary.json"), "collapse_time", c, &report)
}

#[derive(Serialize)]
struct ValidateReport {
    scale: Scale,
    passed: usize,
    failed: usize,
    checks: Vec<CheckReport>,
}

/// Failed checks are report content, not errors.
pub fn validate(c: &RunConfig, out: &Path) -> Result<()> {
    let scale = match c.scale {
        ScaleName::Full => Scale::full(),
        ScaleName::Quick => Scale::quick(),
    };
    let checks = run_checks(&scale, c.seed, &c.checks)?;
    for r in &checks {
        println!("{}", r.line());
    }
    let passed = checks.iter().filter(|r| r.passed).count();
    let report = ValidateReport {
        scale,
        passed,
        failed: checks.len() - passed,
        checks,
    };
    println!("{passed} passed, {} failed", report.failed);
    write_summary(&out.join("validate.json"), "validate", c, &report)
}

pub fn run(command: crate::config::Experiment, c: &RunConfig) -> Result<()> {
    use crate::config::Experiment::*;
    let out = c.output_dir.as_path();
    prepare_dir(out)?;
    match command {
        Trajectory => trajectory(c, out),
        Density => density(c, out),
        Dwell => dwell(c, out),
        Cascade => cascade(c, out),
        CollapseTime => collapse_time(c, out),
        Validate => validate(c, out),
    }
    .map_err(|e| anyhow!("{command}: {e:#}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers() {
        assert_eq!(
            trajectory_header(Spin::One).join(","),
            "time,Sx,Sy,Sz,pz_plus,pz_zero,pz_minus,px_plus,px_zero,px_minus"
        );
        assert_eq!(
            trajectory_header(Spin::Half).join(","),
            "time,rx,ry,rz,pz_plus,pz_minus,px_plus,px_minus"
        );
    }
}
