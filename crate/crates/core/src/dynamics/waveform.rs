use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TimeUnit {
    /// Times in units of 1/Ω_rf.
    #[default]
    #[serde(rename = "Omega_rf")]
    OmegaRf,
    #[serde(rename = "s")]
    Seconds,
}

/// Piecewise-constant rf phase `c_j = φ(t_j)/π` over `n` equal steps of total
/// duration `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WaveformRepr", into = "WaveformRepr")]
pub struct Waveform {
    values: Vec<f64>,
    duration: f64,
    unit: TimeUnit,
    slew_limit: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct WaveformRepr {
    units: TimeUnit,
    #[serde(rename = "T")]
    duration: f64,
    n: usize,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slew_limit: Option<f64>,
}

impl TryFrom<WaveformRepr> for Waveform {
    type Error = crate::error::Error;

    fn try_from(r: WaveformRepr) -> Result<Self> {
        if r.n != r.values.len() {
            return Err(invalid(format!("n = {} but {} values given", r.n, r.values.len())));
        }
        let w = Waveform::new(r.values, r.duration)?.with_unit(r.units);
        match r.slew_limit {
            Some(l) => w.with_slew_limit(l),
            None => Ok(w),
        }
    }
}

impl From<Waveform> for WaveformRepr {
    fn from(w: Waveform) -> Self {
        WaveformRepr {
            units: w.unit,
            duration: w.duration,
            n: w.values.len(),
            values: w.values,
            slew_limit: w.slew_limit,
        }
    }
}

impl Waveform {
    pub fn new(values: Vec<f64>, duration: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("waveform needs at least one step"));
        }
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(invalid(format!("duration must be finite and non-negative, got {duration}")));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("waveform value {j} is not finite")));
        }
        Ok(Waveform {
            values,
            duration,
            unit: TimeUnit::OmegaRf,
            slew_limit: None,
        })
    }

    pub fn zeros(n: usize, duration: f64) -> Result<Self> {
        Waveform::new(vec![0.0; n], duration)
    }

    pub fn with_unit(mut self, unit: TimeUnit) -> Self {
        self.unit = unit;
        self
    }

    /// Marks the waveform as slew-constrained; fails if any successive jump
    /// exceeds `limit`.
    pub fn with_slew_limit(mut self, limit: f64) -> Result<Self> {
        if !(limit > 0.0) {
            return Err(invalid(format!("slew limit must be positive, got {limit}")));
        }
        let worst = self.max_jump();
        if worst > limit {
            return Err(invalid(format!(
                "successive phase jump {worst} exceeds the slew limit {limit}"
            )));
        }
        self.slew_limit = Some(limit);
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.values.len() as f64
    }

    pub fn unit(&self) -> TimeUnit {
        self.unit
    }

    pub fn slew_limit(&self) -> Option<f64> {
        self.slew_limit
    }

    /// Largest `|c_{j+1} − c_j|`.
    pub fn max_jump(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }

    /// Start time of every step.
    pub fn step_times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n()).map(|j| j as f64 * dt).collect()
    }

    /// Splits after step `k` into two waveforms with the same step length.
    pub fn split_at(&self, k: usize) -> Result<(Waveform, Waveform)> {
        if k == 0 || k >= self.n() {
            return Err(invalid(format!("split point {k} outside 1..{}", self.n())));
        }
        let dt = self.dt();
        let first = Waveform {
            values: self.values[..k].to_vec(),
            duration: dt * k as f64,
            ..self.clone()
        };
        let second = Waveform {
            values: self.values[k..].to_vec(),
            duration: dt * (self.n() - k) as f64,
            ..self.clone()
        };
        Ok((first, second))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Waveform::new(vec![], 1.0).is_err());
        assert!(Waveform::new(vec![0.0], -1.0).is_err());
        assert!(Waveform::new(vec![f64::NAN], 1.0).is_err());
        let w = Waveform::new(vec![0.0, 0.3, 0.1], 3.0).unwrap();
        assert_eq!(w.n(), 3);
        assert_eq!(w.dt(), 1.0);
        assert!(w.clone().with_slew_limit(0.4).is_ok());
        assert!(w.with_slew_limit(0.25).is_err());
    }

    #[test]
    fn split_keeps_step_length() {
        let w = Waveform::new(vec![0.1, 0.2, 0.3, 0.4], 2.0).unwrap();
        let (a, b) = w.split_at(1).unwrap();
        assert_eq!(a.values(), &[0.1]);
        assert_eq!(b.values(), &[0.2, 0.3, 0.4]);
        assert_eq!(a.dt(), w.dt());
        assert_eq!(b.dt(), w.dt());
        assert!(w.split_at(4).is_err());
    }
}
