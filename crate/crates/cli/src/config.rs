//! Run configuration: a TOML file, then `--set key=value` overrides, then
//! the dedicated flags. Every error names where the offending value came
//! from (file line, override or flag).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use qsd_core::engine::{Kernel, Phase, Stepper};
use qsd_core::spin::{Label, Preset, Spin, SpinModel};
use qsd_core::validation::CHECKS;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    SpinHalf,
    #[default]
    SpinOne,
}

impl System {
    pub fn spin(self) -> Spin {
        match self {
            System::SpinHalf => Spin::Half,
            System::SpinOne => Spin::One,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Trajectory,
    Density,
    Dwell,
    Cascade,
    CollapseTime,
    Validate,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Trajectory => "trajectory",
            Experiment::Density => "density",
            Experiment::Dwell => "dwell",
            Experiment::Cascade => "cascade",
            Experiment::CollapseTime => "collapse_time",
            Experiment::Validate => "validate",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleName {
    #[default]
    Full,
    Quick,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: System,
    /// S_z measurement strength per window.
    #[serde(alias = "M_z")]
    pub m_z: f64,
    #[serde(alias = "M_x")]
    pub m_x: f64,
    #[serde(alias = "T")]
    pub period: f64,
    pub dt: f64,
    /// Defaults: one period for the alternating protocol, half a period
    /// for `cascade`, 50 for `collapse-time`.
    pub duration: Option<f64>,
    pub stepper: Stepper,
    pub kernel: Kernel,
    pub phase: Phase,
    pub seed: u64,
    pub n_trajectories: usize,
    pub experiment: Option<Experiment>,
    /// Preset name such as `mixed_start`, `eig_z(-1)` or `superpos_z(-1,0)`.
    pub initial: Option<String>,
    pub output_dir: PathBuf,
    pub sample_stride: u64,
    pub threads: Option<usize>,
    /// S_x strengths for `dwell`; defaults to `[m_x]`.
    #[serde(alias = "M_x_sweep")]
    pub m_x_sweep: Option<Vec<f64>>,
    pub epsilon: f64,
    pub threshold: f64,
    pub bins: usize,
    /// Target eigenstates for `collapse-time`; defaults to all of them.
    pub targets: Option<Vec<String>>,
    pub scale: ScaleName,
    /// Check ids for `validate`; empty runs them all.
    pub checks: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: System::SpinOne,
            m_z: 1.0,
            m_x: 1.0,
            period: 2.0,
            dt: qsd_core::engine::DEFAULT_DT,
            duration: None,
            stepper: Stepper::Kraus,
            kernel: Kernel::Auto,
            phase: Phase::ZFirst,
            seed: 0,
            n_trajectories: 1,
            experiment: None,
            initial: None,
            output_dir: PathBuf::from("out"),
            sample_stride: qsd_core::engine::DEFAULT_STRIDE,
            threads: None,
            m_x_sweep: None,
            epsilon: qsd_core::analysis::DEFAULT_EPSILON,
            threshold: qsd_core::analysis::DEFAULT_THRESHOLD,
            bins: qsd_core::analysis::DEFAULT_BINS,
            targets: None,
            scale: ScaleName::Full,
            checks: Vec::new(),
        }
    }
}

/// Flags that override both the file and `--set`.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub set: Vec<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn canonical(key: &str) -> &str {
    match key {
        "M_z" => "m_z",
        "M_x" => "m_x",
        "T" => "period",
        "M_x_sweep" => "m_x_sweep",
        other => other,
    }
}

/// Where each explicitly given key came from.
#[derive(Clone, Debug, Default)]
pub struct Origins(BTreeMap<String, String>);

impl Origins {
    fn describe(&self, key: &str) -> String {
        self.0
            .get(key)
            .cloned()
            .unwrap_or_else(|| format!("default `{key}`"))
    }
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub origins: Origins,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_assignment(arg: &str) -> Result<toml::Table> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| anyhow!("--set {arg}: expected key=value"))?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        bail!("--set {arg}: empty key");
    }
    // Bare words such as `spin_half` or `eig_z(-1)` are taken as strings.
    toml::from_str::<toml::Table>(&format!("{key} = {value}"))
        .or_else(|_| toml::from_str::<toml::Table>(&format!("{key} = {}", toml::Value::from(value))))
        .with_context(|| format!("--set {arg}: cannot parse value"))
}

impl Loaded {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut origins = Origins::default();
        let mut table = toml::Table::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            toml::from_str::<RunConfig>(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            let spans: BTreeMap<String, toml::Spanned<toml::Value>> =
                toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            for (key, value) in spans {
                let line = line_of(&text, value.span().start);
                origins
                    .0
                    .insert(canonical(&key).to_string(), format!("{}:{line}: `{key}`", path.display()));
                table.insert(canonical(&key).to_string(), value.into_inner());
            }
        }
        for arg in &overrides.set {
            let single = parse_assignment(arg)?;
            toml::Value::Table(single.clone())
                .try_into::<RunConfig>()
                .map_err(|e| anyhow!("--set {arg}: {}", e.to_string().trim()))?;
            for (key, value) in single {
                let key = canonical(&key).to_string();
                origins.0.insert(key.clone(), format!("--set {arg}"));
                table.insert(key, value);
            }
        }
        let mut config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| anyhow!("invalid configuration: {}", e.to_string().trim()))?;
        if let Some(seed) = overrides.seed {
            config.seed = seed;
            origins.0.insert("seed".into(), "--seed".into());
        }
        if let Some(out) = &overrides.out {
            config.output_dir = out.clone();
            origins.0.insert("output_dir".into(), "--out".into());
        }
        if let Some(threads) = overrides.threads {
            config.threads = Some(threads);
            origins.0.insert("threads".into(), "--threads".into());
        }
        Ok(Loaded { config, origins })
    }

    fn fail(&self, key: &str, msg: impl fmt::Display) -> anyhow::Error {
        anyhow!("{}: {msg}", self.origins.describe(key))
    }

    /// Fills command-dependent defaults and checks every value, reporting
    /// the first problem against the key that caused it.
    pub fn resolve(mut self, command: Experiment) -> Result<(RunConfig, Origins)> {
        let c = &mut self.config;
        if c.duration.is_none() {
            c.duration = Some(match command {
                Experiment::Cascade => c.period / 2.0,
                Experiment::CollapseTime => 50.0,
                _ => c.period,
            });
        }
        if c.initial.is_none() {
            c.initial = Some(
                match command {
                    Experiment::Cascade => "eig_z(-1)",
                    Experiment::CollapseTime => "eig_x(0)",
                    _ => "mixed_start",
                }
                .to_string(),
            );
        }
        if c.m_x_sweep.is_none() && command == Experiment::Dwell {
            c.m_x_sweep = Some(vec![c.m_x]);
        }
        if c.targets.is_none() && command == Experiment::CollapseTime {
            let model = SpinModel::build(c.system.spin());
            c.targets = Some(model.labels().iter().map(|l| l.as_str().to_string()).collect());
        }
        self.check(command)?;
        Ok((self.config, self.origins))
    }

    fn check(&self, command: Experiment) -> Result<()> {
        let c = &self.config;
        if let Some(e) = c.experiment {
            if e != command {
                return Err(self.fail("experiment", format!("config is for `{e}` but the command is `{command}`")));
            }
        }
        for (key, v) in [("m_z", c.m_z), ("m_x", c.m_x)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(self.fail(key, format!("strength must be finite and non-negative, got {v}")));
            }
        }
        if !(c.period > 0.0 && c.period.is_finite()) {
            return Err(self.fail("period", format!("period must be positive, got {}", c.period)));
        }
        if !(c.dt > 0.0 && c.dt.is_finite()) {
            return Err(self.fail("dt", format!("dt must be positive, got {}", c.dt)));
        }
        if c.dt > c.period / 20.0 * (1.0 + 1e-12) {
            return Err(self.fail("dt", format!("dt = {} exceeds period/20 = {}", c.dt, c.period / 20.0)));
        }
        if whole_steps(c.period / 2.0, c.dt).is_none() {
            return Err(self.fail("dt", format!("half-period {} is not a whole number of steps of {}", c.period / 2.0, c.dt)));
        }
        let duration = c.duration.unwrap_or(c.period);
        let single_window = matches!(command, Experiment::Cascade | Experiment::CollapseTime);
        if single_window {
            if !matches!(whole_steps(duration, c.dt), Some(n) if n > 0) {
                return Err(self.fail("duration", format!("duration {duration} is not a positive whole number of steps of {}", c.dt)));
            }
        } else if command != Experiment::Validate && !matches!(whole_steps(duration, c.period), Some(n) if n > 0) {
            return Err(self.fail("duration", format!("duration {duration} is not a positive multiple of the period {}", c.period)));
        }
        if c.sample_stride == 0 {
            return Err(self.fail("sample_stride", "sample_stride must be at least 1"));
        }
        if c.n_trajectories == 0 {
            return Err(self.fail("n_trajectories", "n_trajectories must be at least 1"));
        }
        if c.threads == Some(0) {
            return Err(self.fail("threads", "threads must be at least 1"));
        }
        if !(c.epsilon > 0.0 && c.epsilon < 0.5) {
            return Err(self.fail("epsilon", format!("epsilon must lie in (0, 0.5), got {}", c.epsilon)));
        }
        if !(c.threshold > 0.5 && c.threshold < 1.0) {
            return Err(self.fail("threshold", format!("threshold must lie in (0.5, 1), got {}", c.threshold)));
        }
        if c.bins == 0 {
            return Err(self.fail("bins", "bins must be at least 1"));
        }
        let model = SpinModel::build(c.system.spin());
        if let Some(initial) = &c.initial {
            let preset: Preset = initial.parse().map_err(|e| self.fail("initial", e))?;
            preset.build(&model).map_err(|e| self.fail("initial", e))?;
        }
        if let Some(sweep) = &c.m_x_sweep {
            if sweep.is_empty() || sweep.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(self.fail("m_x_sweep", "m_x_sweep must be a non-empty list of non-negative strengths"));
            }
        }
        if let Some(targets) = &c.targets {
            if targets.is_empty() {
                return Err(self.fail("targets", "targets must not be empty"));
            }
            for t in targets {
                let label: Label = t.parse().map_err(|e| self.fail("targets", e))?;
                if !model.labels().contains(&label) {
                    return Err(self.fail("targets", format!("{} has no eigenstate {label}", c.system.spin())));
                }
            }
        }
        for id in &c.checks {
            if !CHECKS.iter().any(|(known, _, _)| known.eq_ignore_ascii_case(id)) {
                return Err(self.fail("checks", format!("unknown check `{id}`")));
            }
        }
        Ok(())
    }
}

fn whole_steps(span: f64, step: f64) -> Option<u64> {
    let n = span / step;
    let r = n.round();
    ((n - r).abs() <= 1e-9 * r.max(1.0) && r >= 0.0).then_some(r as u64)
}

impl RunConfig {
    pub fn duration(&self) -> f64 {
        self.duration.unwrap_or(self.period)
    }

    pub fn preset(&self) -> Preset {
        self.initial
            .as_deref()
            .unwrap_or("mixed_start")
            .parse()
            .expect("initial state checked during resolve")
    }

    pub fn target_labels(&self) -> Vec<Label> {
        self.targets
            .iter()
            .flatten()
            .map(|t| t.parse().expect("targets checked during resolve"))
            .collect()
    }

    pub fn steps(&self, span: f64) -> u64 {
        whole_steps(span, self.dt).unwrap_or(0)
    }
}
