use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atom::{AtomParams, OpticalModel, SR87_GAMMA, SR87_HYPERFINE_7_9};
use crate::dynamics::{ControlSystem, Dissipator, Target};
use crate::error::{Error, Result};
use crate::optimizer::{haar_random_state, haar_random_unitary, GrapeOptions, DEFAULT_SLEW_LIMIT};
use crate::spin::{spin_operators, HalfInt};
use crate::waveform::DEFAULT_OVERSAMPLE;

use super::seeds::target_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    State,
    Unitary,
}

/// Unit convention for `betas` and `durations`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Units {
    /// `β` in units of Ω_rf, `T` in units of π/Ω_rf.
    #[default]
    #[serde(rename = "Omega_rf")]
    OmegaRf,
    /// `β` in rad/s, `T` in seconds; converted with the physical Ω_rf.
    #[serde(rename = "SI")]
    Si,
}

fn default_ensemble() -> usize {
    5
}

fn default_slew() -> Option<f64> {
    Some(DEFAULT_SLEW_LIMIT)
}

fn default_threshold() -> f64 {
    1e-3
}

fn default_spin() -> HalfInt {
    HalfInt::from_doubled(9)
}

/// Physical run card for open-system evaluation. Frequencies are plain
/// (not angular) and converted to Ω_rf units internally.
/// Only `offset_11_from_9_mhz` is required; it has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenSystemConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_omega_rf_hz")]
    pub omega_rf_hz: f64,
    #[serde(default = "default_linewidth_hz")]
    pub linewidth_hz: f64,
    #[serde(default = "default_hyperfine_mhz")]
    pub hyperfine_7_9_mhz: f64,
    /// Position of the F' = 11/2 line above F' = 9/2.
    pub offset_11_from_9_mhz: f64,
    /// Laser detuning from the F' = 7/2 line; `None` picks the κ-optimal
    /// point between the F' = 7/2 and 9/2 lines.
    #[serde(default)]
    pub detuning_mhz: Option<f64>,
}

const DEFAULT_OMEGA_RF_HZ: f64 = 100.0;

fn default_true() -> bool {
    true
}

fn default_omega_rf_hz() -> f64 {
    DEFAULT_OMEGA_RF_HZ
}

fn default_linewidth_hz() -> f64 {
    SR87_GAMMA / (2.0 * PI)
}

fn default_hyperfine_mhz() -> f64 {
    SR87_HYPERFINE_7_9 / (2.0 * PI * 1e6)
}

impl OpenSystemConfig {
    /// Physical anchor (100 Hz rf, 7.5 kHz linewidth, κ-optimal detuning)
    /// with the given F' = 11/2 offset.
    pub fn new(offset_11_from_9_mhz: f64) -> Self {
        OpenSystemConfig {
            enabled: true,
            omega_rf_hz: DEFAULT_OMEGA_RF_HZ,
            linewidth_hz: default_linewidth_hz(),
            hyperfine_7_9_mhz: default_hyperfine_mhz(),
            offset_11_from_9_mhz,
            detuning_mhz: None,
        }
    }

    pub fn omega_rf(&self) -> f64 {
        2.0 * PI * self.omega_rf_hz
    }

    /// Atom parameters in rad/s with `Ω_laser = 0` at the configured detuning
    /// (or midway between the F' = 7/2 and 9/2 lines when unset).
    pub fn atom_params(&self) -> AtomParams {
        let mut p = AtomParams::sr87(
            2.0 * PI * self.offset_11_from_9_mhz * 1e6,
            self.omega_rf(),
            0.0,
            2.0 * PI * self.detuning_mhz.unwrap_or(0.5 * self.hyperfine_7_9_mhz) * 1e6,
        );
        p.gamma = 2.0 * PI * self.linewidth_hz;
        p.hyperfine_offsets[1].offset = 2.0 * PI * self.hyperfine_7_9_mhz * 1e6;
        p.hyperfine_offsets[2].offset =
            2.0 * PI * (self.hyperfine_7_9_mhz + self.offset_11_from_9_mhz) * 1e6;
        p
    }

    /// Detuning used for runs, in Ω_rf units, and the κ there.
    pub fn working_point(&self) -> Result<(f64, f64)> {
        let unit = self.omega_rf();
        let params = self.atom_params().in_units_of(unit).with_omega_laser(1.0);
        let model = OpticalModel::new(&params)?;
        match self.detuning_mhz {
            Some(_) => Ok((params.delta, model.figure_of_merit(params.delta)?)),
            None => {
                let hf = params.hyperfine_offsets[1].offset;
                model.kappa_optimal_detuning(0.0, hf)
            }
        }
    }

    /// Dissipator whose light shift realises `|β| = beta` (Ω_rf units) at the
    /// working point.
    pub fn dissipator(&self, beta: f64) -> Result<Dissipator> {
        let (delta, _) = self.working_point()?;
        let params = self.atom_params().in_units_of(self.omega_rf()).with_delta(delta);
        let model = OpticalModel::new(&params.with_omega_laser(1.0))?;
        let unit_beta = model.tensor_shift_beta()?.beta;
        let target = beta.abs() * unit_beta.signum();
        let omega = model.solve_laser_amplitude(target, delta)?;
        Dissipator::from_model(&model.retuned(delta, omega))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Corner frequencies in units of Ω_rf.
    pub corner_frequencies: Vec<f64>,
    pub oversample: usize,
    /// Score filtered waveforms with the open-system model as well.
    pub open_system: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            corner_frequencies: vec![10.0, 20.0, 100.0, 1000.0],
            oversample: DEFAULT_OVERSAMPLE,
            open_system: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaConfig {
    /// Detunings from the F' = 7/2 line in MHz.
    pub detunings_mhz: Vec<f64>,
    /// Laser Rabi frequency in MHz (κ does not depend on it).
    #[serde(default = "default_laser_mhz")]
    pub omega_laser_mhz: f64,
}

fn default_laser_mhz() -> f64 {
    1.0
}

/// One experiment: a β × T grid of optimizations plus the evaluations layered
/// on top of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    #[serde(default)]
    pub units: Units,
    #[serde(default = "default_spin")]
    pub spin: HalfInt,
    /// Tensor shifts β.
    pub betas: Vec<f64>,
    /// Total times T.
    pub durations: Vec<f64>,
    /// Steps per waveform; 120 for states and 500 for unitaries when unset.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_slew")]
    pub slew_limit: Option<f64>,
    /// Robust half-width as a fraction of β (`δ = robust_fraction · β`).
    #[serde(default)]
    pub robust_fraction: f64,
    #[serde(default)]
    pub optimizer: GrapeOptions,
    #[serde(default)]
    pub open_system: Option<OpenSystemConfig>,
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    #[serde(default)]
    pub kappa: Option<KappaConfig>,
    #[serde(default = "default_threshold")]
    pub qsl_threshold: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Grid config with defaults for everything else.
    pub fn new(task: TaskKind, betas: Vec<f64>, durations: Vec<f64>) -> Self {
        ExperimentConfig {
            task,
            units: Units::OmegaRf,
            spin: default_spin(),
            betas,
            durations,
            n: None,
            ensemble_size: default_ensemble(),
            seed: 0,
            slew_limit: default_slew(),
            robust_fraction: 0.0,
            optimizer: GrapeOptions::default(),
            open_system: None,
            filter: None,
            kappa: None,
            qsl_threshold: default_threshold(),
            output_dir: None,
        }
    }

    pub fn from_json_str(text: &str, source: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            source_name: source.to_string(),
            message: format!("line {}, column {}: {e}", e.line(), e.column()),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_json_str(&text, &path.display().to_string())
    }

    pub fn steps(&self) -> usize {
        self.n.unwrap_or(match self.task {
            TaskKind::State => 120,
            TaskKind::Unitary => 500,
        })
    }

    fn si_unit(&self) -> f64 {
        self.open_system.as_ref().map_or(2.0 * PI * DEFAULT_OMEGA_RF_HZ, |o| o.omega_rf())
    }

    /// β values in Ω_rf units.
    pub fn betas_internal(&self) -> Vec<f64> {
        match self.units {
            Units::OmegaRf => self.betas.clone(),
            Units::Si => self.betas.iter().map(|b| b / self.si_unit()).collect(),
        }
    }

    /// T values in units of π/Ω_rf.
    pub fn durations_in_pi(&self) -> Vec<f64> {
        match self.units {
            Units::OmegaRf => self.durations.clone(),
            Units::Si => self.durations.iter().map(|t| t * self.si_unit() / PI).collect(),
        }
    }

    pub fn open_enabled(&self) -> bool {
        self.open_system.as_ref().is_some_and(|o| o.enabled)
    }

    /// Every check that can fail before a run starts.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.betas.is_empty() || self.durations.is_empty() {
            return bad("`betas` and `durations` must both be non-empty".into());
        }
        if let Some(b) = self.betas.iter().find(|b| !b.is_finite()) {
            return bad(format!("`betas` contains non-finite value {b}"));
        }
        if let Some(t) = self.durations.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("`durations` must be positive, found {t}"));
        }
        if self.ensemble_size == 0 {
            return bad("`ensemble_size` must be at least 1".into());
        }
        if !(self.robust_fraction >= 0.0 && self.robust_fraction.is_finite()) {
            return bad(format!("`robust_fraction` must be ≥ 0, got {}", self.robust_fraction));
        }
        if let Some(l) = self.slew_limit {
            if !(l > 0.0) {
                return bad(format!("`slew_limit` must be positive, got {l}"));
            }
        }
        if !(self.qsl_threshold > 0.0 && self.qsl_threshold < 1.0) {
            return bad(format!("`qsl_threshold` must lie in (0, 1), got {}", self.qsl_threshold));
        }
        let spin = spin_operators(self.spin).map_err(|e| Error::Config(e.to_string()))?;
        let d = spin.dim();
        let n_min = match self.task {
            TaskKind::State => 2 * d - 2,
            TaskKind::Unitary => d * d - 1,
        };
        if self.steps() < n_min {
            return bad(format!("`n` = {} is below the minimum {n_min} for this task", self.steps()));
        }
        let o = &self.optimizer;
        if !(o.fid_goal > 0.0 && o.fid_goal <= 1.0) || o.grad_tol < 0.0 || !(o.initial_step > 0.0) {
            return bad("optimizer settings out of range".into());
        }
        if !(o.backtrack_factor > 0.0 && o.backtrack_factor < 1.0) {
            return bad("`optimizer.backtrack_factor` must lie in (0, 1)".into());
        }
        if let Some(open) = &self.open_system {
            if !(open.omega_rf_hz > 0.0) {
                return bad("`open_system.omega_rf_hz` must be positive".into());
            }
            if open.enabled {
                if self.spin != HalfInt::from_doubled(9) {
                    return bad("the open-system model is only defined for I = 9/2".into());
                }
                open.working_point().map_err(|e| Error::Config(format!("open_system: {e}")))?;
                for &b in &self.betas_internal() {
                    open.dissipator(b).map_err(|e| Error::Config(format!("open_system at β = {b}: {e}")))?;
                }
            }
        } else if self.units == Units::Si {
            return bad("`units: SI` needs an `open_system` block for the Ω_rf anchor".into());
        }
        if let Some(f) = &self.filter {
            if f.corner_frequencies.iter().any(|w| !(*w > 0.0)) || f.oversample == 0 {
                return bad("filter corner frequencies must be positive and oversample ≥ 1".into());
            }
        }
        if let Some(k) = &self.kappa {
            if k.detunings_mhz.is_empty() || !(k.omega_laser_mhz > 0.0) {
                return bad("`kappa` needs a non-empty detuning grid and a positive laser amplitude".into());
            }
        }
        Ok(())
    }

    pub fn system(&self, beta: f64) -> Result<ControlSystem> {
        ControlSystem::with_spin(self.spin, 1.0, beta)
    }

    /// Haar target `id`; the same id yields the same target in every cell.
    pub fn target(&self, id: usize) -> Result<(Target, u64)> {
        let spin = spin_operators(self.spin)?;
        let d = spin.dim();
        let seed = target_seed(self.seed, id as u64);
        let target = match self.task {
            TaskKind::State => Target::State {
                initial: spin.basis_state(self.spin).expect("stretched state exists"),
                target: haar_random_state(d, seed)?,
            },
            TaskKind::Unitary => Target::Unitary {
                target: haar_random_unitary(d, seed)?,
            },
        };
        Ok((target, seed))
    }
}
