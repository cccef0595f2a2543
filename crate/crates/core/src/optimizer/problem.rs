use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSystem, Target, Waveform};
use crate::error::{invalid, Result};

use super::objective::{check_target, Objective};

/// Largest successive phase jump allowed unless configured otherwise.
pub const DEFAULT_SLEW_LIMIT: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    StateMap,
    UnitaryMap,
}

impl ObjectiveKind {
    pub fn of(target: &Target) -> Self {
        match target {
            Target::State { .. } => ObjectiveKind::StateMap,
            Target::Unitary { .. } => ObjectiveKind::UnitaryMap,
        }
    }

    /// Parameter count of the task: `2d − 2` for states, `d² − 1` for unitaries.
    pub fn minimum_steps(self, d: usize) -> usize {
        match self {
            ObjectiveKind::StateMap => 2 * d - 2,
            ObjectiveKind::UnitaryMap => d * d - 1,
        }
    }
}

/// A fully specified GRAPE run: system, target, discretization, constraints
/// and starting waveform.
#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    system: ControlSystem,
    target: Target,
    duration: f64,
    n: usize,
    slew_limit: Option<f64>,
    robust_delta: f64,
    seed_waveform: Vec<f64>,
}

impl OptimizationProblem {
    /// Zero seed, default slew limit, no robustness.
    pub fn new(system: ControlSystem, target: Target, duration: f64, n: usize) -> Result<Self> {
        check_target(&target, system.dim())?;
        let n_min = ObjectiveKind::of(&target).minimum_steps(system.dim());
        if n < n_min {
            return Err(invalid(format!("n = {n} is below the minimum {n_min} for this task")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid(format!("duration must be positive, got {duration}")));
        }
        Ok(OptimizationProblem {
            system,
            target,
            duration,
            n,
            slew_limit: Some(DEFAULT_SLEW_LIMIT),
            robust_delta: 0.0,
            seed_waveform: vec![0.0; n],
        })
    }

    pub fn with_slew_limit(mut self, limit: Option<f64>) -> Result<Self> {
        if let Some(l) = limit {
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid(format!("slew limit must be positive, got {l}")));
            }
        }
        self.slew_limit = limit;
        Ok(self)
    }

    pub fn with_robust_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(invalid(format!("robust half-width must be ≥ 0, got {delta}")));
        }
        self.robust_delta = delta;
        Ok(self)
    }

    pub fn with_seed_waveform(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.n {
            return Err(invalid(format!(
                "seed waveform has {} steps, problem has {}",
                values.len(),
                self.n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("seed waveform contains non-finite values"));
        }
        self.seed_waveform = values;
        Ok(self)
    }

    pub fn system(&self) -> &ControlSystem {
        &self.system
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::of(&self.target)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn slew_limit(&self) -> Option<f64> {
        self.slew_limit
    }

    pub fn robust_delta(&self) -> f64 {
        self.robust_delta
    }

    pub fn seed_waveform(&self) -> &[f64] {
        &self.seed_waveform
    }

    pub fn objective(&self) -> Result<Objective> {
        Objective::new(&self.system, self.target.clone(), self.duration, self.n, self.robust_delta)
    }

    /// Wraps raw values as a waveform on this problem's time grid.
    pub fn waveform(&self, values: Vec<f64>) -> Result<Waveform> {
        let w = Waveform::new(values, self.duration)?;
        match self.slew_limit {
            Some(l) => w.with_slew_limit(l),
            None => Ok(w),
        }
    }

    fn check_waveform(&self, w: &Waveform) -> Result<()> {
        if w.n() != self.n || w.duration() != self.duration {
            return Err(invalid(format!(
                "waveform ({} steps, T = {}) does not match the problem ({} steps, T = {})",
                w.n(),
                w.duration(),
                self.n,
                self.duration
            )));
        }
        Ok(())
    }
}

/// Closed-system fidelity, averaged over `ε = ±δ` when the problem is robust.
pub fn objective(w: &Waveform, p: &OptimizationProblem) -> Result<f64> {
    p.check_waveform(w)?;
    Ok(p.objective()?.value(w.values()))
}

/// `∂F/∂c_j` for every step.
pub fn exact_gradient(w: &Waveform, p: &OptimizationProblem) -> Result<Vec<f64>> {
    p.check_waveform(w)?;
    Ok(p.objective()?.value_and_gradient(w.values()).1)
}
