use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::Observable;

/// Which coupling is switched on during the first half of each period.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    ZFirst,
    XFirst,
}

impl FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z_first" => Ok(Phase::ZFirst),
            "x_first" => Ok(Phase::XFirst),
            other => Err(Error::InvalidConfig(format!("unknown phase `{other}`"))),
        }
    }
}

/// Box-function couplings: `a(t) = a_max` on the first half of every
/// period and zero otherwise, `b(t)` the complement. Intervals are closed
/// on the left, so `t = T/2` already belongs to the S_x window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSchedule {
    pub period: f64,
    pub a_max: f64,
    pub b_max: f64,
    #[serde(default)]
    pub phase: Phase,
}

/// Coupling amplitude that gives strength `m` over a half-period: `√(2M/T)`.
pub fn strength_to_amplitude(m: f64, period: f64) -> f64 {
    (2.0 * m / period).sqrt()
}

/// `M = g² T / 2`
pub fn amplitude_to_strength(amplitude: f64, period: f64) -> f64 {
    amplitude * amplitude * period / 2.0
}

impl MeasurementSchedule {
    pub fn new(period: f64, a_max: f64, b_max: f64) -> Result<Self> {
        let schedule = MeasurementSchedule {
            period,
            a_max,
            b_max,
            phase: Phase::ZFirst,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn from_strengths(m_z: f64, m_x: f64, period: f64) -> Result<Self> {
        if !(m_z >= 0.0 && m_x >= 0.0) || !m_z.is_finite() || !m_x.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "measurement strengths must be finite and non-negative (got {m_z}, {m_x})"
            )));
        }
        if !(period > 0.0) {
            return Err(Error::InvalidConfig(format!("period must be positive (got {period})")));
        }
        Self::new(
            period,
            strength_to_amplitude(m_z, period),
            strength_to_amplitude(m_x, period),
        )
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "period must be positive (got {})",
                self.period
            )));
        }
        if !(self.a_max >= 0.0 && self.b_max >= 0.0) || !self.a_max.is_finite() || !self.b_max.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "amplitudes must be finite and non-negative (got {}, {})",
                self.a_max, self.b_max
            )));
        }
        Ok(())
    }

    /// (M_z, M_x)
    pub fn strengths(&self) -> (f64, f64) {
        (
            amplitude_to_strength(self.a_max, self.period),
            amplitude_to_strength(self.b_max, self.period),
        )
    }

    /// Observable measured during half-window `index` (0-based).
    pub fn window_observable(&self, index: u64) -> Observable {
        match (self.phase, index % 2 == 0) {
            (Phase::ZFirst, true) | (Phase::XFirst, false) => Observable::Sz,
            _ => Observable::Sx,
        }
    }

    pub fn amplitude(&self, observable: Observable) -> f64 {
        match observable {
            Observable::Sz => self.a_max,
            Observable::Sx => self.b_max,
        }
    }

    /// (a(t), b(t))
    pub fn coupling_at(&self, t: f64) -> (f64, f64) {
        let offset = t.rem_euclid(self.period);
        let first_half = offset < 0.5 * self.period;
        let observable = self.window_observable(if first_half { 0 } else { 1 });
        match observable {
            Observable::Sz => (self.a_max, 0.0),
            Observable::Sx => (0.0, self.b_max),
        }
    }
}
