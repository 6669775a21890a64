use std::ops::ControlFlow;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, NoiseSource, Observer, Sample};
use crate::ensemble::{fold_ensemble, DEFAULT_CHUNK};
use crate::error::{Error, Result};
use crate::spin::{DensityMatrix, Spin, SpinModel};

pub const DEFAULT_BINS: usize = 200;

/// Samples this far outside [−1, 1] are clamped onto the edge bins.
pub const RANGE_SLACK: f64 = 1e-9;

/// Which pair of expectation values is histogrammed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    /// (r_x, r_z) = (⟨σ_x⟩, ⟨σ_z⟩), for spin-1/2.
    RxRz,
    /// (⟨S_x⟩, ⟨S_z⟩)
    SxSz,
}

impl Plane {
    pub fn default_for(spin: Spin) -> Self {
        match spin {
            Spin::Half => Plane::RxRz,
            Spin::One => Plane::SxSz,
        }
    }

    pub fn point(self, model: &SpinModel, rho: &DensityMatrix) -> (f64, f64) {
        let [sx, _, sz] = model.spin_expectations(rho);
        match (self, model.spin) {
            (Plane::RxRz, Spin::Half) => (2.0 * sx, 2.0 * sz),
            _ => (sx, sz),
        }
    }

    pub fn axis_names(self) -> (&'static str, &'static str) {
        match self {
            Plane::RxRz => ("rx", "rz"),
            Plane::SxSz => ("Sx", "Sz"),
        }
    }
}

impl FromStr for Plane {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rx_rz" => Ok(Plane::RxRz),
            "sx_sz" => Ok(Plane::SxSz),
            other => Err(Error::InvalidConfig(format!("unknown plane `{other}`"))),
        }
    }
}

/// Square histogram over [−1, 1]² with integer counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Histogram2D {
    bins: usize,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram2D {
    pub fn new(bins: usize) -> Self {
        assert!(bins > 0, "histogram needs at least one bin");
        Histogram2D {
            bins,
            counts: vec![0; bins * bins],
            total: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bin_width(&self) -> f64 {
        2.0 / self.bins as f64
    }

    pub fn bin_area(&self) -> f64 {
        self.bin_width() * self.bin_width()
    }

    fn coordinate_index(&self, v: f64) -> Option<usize> {
        if !(v >= -1.0 - RANGE_SLACK && v <= 1.0 + RANGE_SLACK) {
            return None;
        }
        let idx = ((v.clamp(-1.0, 1.0) + 1.0) / self.bin_width()).floor() as usize;
        Some(idx.min(self.bins - 1))
    }

    /// (ix, iy) of the bin holding (x, y).
    pub fn index(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        match (self.coordinate_index(x), self.coordinate_index(y)) {
            (Some(ix), Some(iy)) => Ok((ix, iy)),
            _ => Err(Error::SampleOutOfRange { x, y }),
        }
    }

    pub fn add(&mut self, x: f64, y: f64) -> Result<()> {
        let (ix, iy) = self.index(x, y)?;
        self.counts[ix * self.bins + iy] += 1;
        self.total += 1;
        Ok(())
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[ix * self.bins + iy]
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.bin_width()
    }

    /// Normalised so that Σ density · bin_area = 1.
    pub fn density(&self, ix: usize, iy: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.count(ix, iy) as f64 / (self.total as f64 * self.bin_area())
    }

    pub fn merge(&mut self, other: &Histogram2D) -> Result<()> {
        if other.bins != self.bins {
            return Err(Error::DimensionMismatch {
                left: self.bins,
                right: other.bins,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }

    /// Counts of bins whose centre satisfies `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(f64, f64) -> bool) -> u64 {
        let mut m = 0;
        for ix in 0..self.bins {
            let x = self.bin_center(ix);
            for iy in 0..self.bins {
                if pred(x, self.bin_center(iy)) {
                    m += self.count(ix, iy);
                }
            }
        }
        m
    }

    /// Counts of bins whose centre lies within `radius` of (cx, cy).
    pub fn mass_within(&self, cx: f64, cy: f64, radius: f64) -> u64 {
        self.mass_where(|x, y| (x - cx).hypot(y - cy) <= radius)
    }

    /// Counts of bins lying entirely inside a region (all four corners).
    pub fn mass_inside(&self, mut inside: impl FnMut(f64, f64) -> bool) -> u64 {
        let w = self.bin_width();
        let mut m = 0;
        for ix in 0..self.bins {
            let x0 = -1.0 + ix as f64 * w;
            for iy in 0..self.bins {
                let c = self.count(ix, iy);
                if c == 0 {
                    continue;
                }
                let y0 = -1.0 + iy as f64 * w;
                if inside(x0, y0) && inside(x0 + w, y0) && inside(x0, y0 + w) && inside(x0 + w, y0 + w) {
                    m += c;
                }
            }
        }
        m
    }

    /// Rows of (x centre, y centre, count, density), x-major.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64, f64)> + '_ {
        (0..self.bins).flat_map(move |ix| {
            (0..self.bins).map(move |iy| {
                (self.bin_center(ix), self.bin_center(iy), self.count(ix, iy), self.density(ix, iy))
            })
        })
    }
}

/// Observer that bins every `stride`-th state.
pub struct DensityAccumulator<'a> {
    pub model: &'a SpinModel,
    pub plane: Plane,
    pub stride: u64,
    pub histogram: Histogram2D,
    pub error: Option<Error>,
}

impl<'a> DensityAccumulator<'a> {
    pub fn new(model: &'a SpinModel, plane: Plane, bins: usize, stride: u64) -> Self {
        DensityAccumulator {
            model,
            plane,
            stride,
            histogram: Histogram2D::new(bins),
            error: None,
        }
    }

    pub fn finish(self) -> Result<Histogram2D> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.histogram),
        }
    }
}

impl Observer for DensityAccumulator<'_> {
    fn wants(&self, step: u64, _window_end: bool) -> bool {
        step % self.stride == 0
    }

    fn observe(&mut self, sample: &Sample<'_>) -> ControlFlow<()> {
        let (x, y) = self.plane.point(self.model, sample.state);
        match self.histogram.add(x, y) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                self.error = Some(e);
                ControlFlow::Break(())
            }
        }
    }
}

/// Cumulative histogram of `trajectories` runs of `config`, trajectory `i`
/// seeded with `config.seed + i`.
pub fn density_histogram(
    config: &EngineConfig,
    initial: &DensityMatrix,
    plane: Plane,
    bins: usize,
    stride: u64,
    trajectories: usize,
) -> Result<Histogram2D> {
    config.validate()?;
    if stride == 0 {
        return Err(Error::InvalidConfig("histogram stride must be at least 1".into()));
    }
    let propagator = config.propagator();
    let segments = config.segments();
    fold_ensemble(
        trajectories,
        config.seed,
        DEFAULT_CHUNK,
        Histogram2D::new(bins),
        |_, seed| {
            let mut acc = DensityAccumulator::new(&config.model, plane, bins, stride);
            let mut noise = NoiseSource::new(seed);
            propagator.run(initial, &segments, &mut noise, &mut acc)?;
            acc.finish()
        },
        |acc, h| acc.merge(&h),
    )
}

/// Where each eigenstate of S_z and S_x sits in `plane`, named like
/// `z_plus`. Spin-1 |0⟩_z and |0⟩_x share the origin and are reported once
/// as `center`.
pub fn eigenstate_points(spin: Spin) -> Vec<(&'static str, (f64, f64))> {
    let mut points = vec![
        ("z_plus", (0.0, 1.0)),
        ("z_minus", (0.0, -1.0)),
        ("x_plus", (1.0, 0.0)),
        ("x_minus", (-1.0, 0.0)),
    ];
    if spin == Spin::One {
        points.push(("center", (0.0, 0.0)));
    }
    points
}
