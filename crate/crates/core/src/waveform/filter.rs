use crate::dynamics::{closed_fidelity, open_fidelity, ControlSystem, Dissipator, Target, Waveform};
use crate::error::{invalid, Result};

/// Default number of fine samples per original step.
pub const DEFAULT_OVERSAMPLE: usize = 20;

/// Output of the single-pole filter `ċ = Ω_c (c_in − c)`, `c(0) = 0`, driven by
/// a piecewise-constant waveform.
///
/// `samples[k]` is the exact average of the filter output over fine interval
/// `k`, so a filtered waveform can be re-evaluated as a piecewise-constant
/// waveform on the fine grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredWaveform {
    samples: Vec<f64>,
    oversample: usize,
    omega_c: f64,
    source: Waveform,
}

/// `(1 − e^{−x})/x`, accurate near zero.
fn relax_average(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - x / 2.0
    } else {
        -(-x).exp_m1() / x
    }
}

pub fn low_pass_filter(w: &Waveform, omega_c: f64, oversample: usize) -> Result<FilteredWaveform> {
    if !(omega_c > 0.0 && omega_c.is_finite()) {
        return Err(invalid(format!("corner frequency must be positive, got {omega_c}")));
    }
    if oversample == 0 {
        return Err(invalid("oversample factor must be at least 1"));
    }
    let fine_dt = w.dt() / oversample as f64;
    let x = omega_c * fine_dt;
    let decay = (-x).exp();
    let avg = relax_average(x);
    let mut samples = Vec::with_capacity(w.n() * oversample);
    let mut state = 0.0;
    for &c_in in w.values() {
        for _ in 0..oversample {
            samples.push(c_in + (state - c_in) * avg);
            state = c_in + (state - c_in) * decay;
        }
    }
    Ok(FilteredWaveform {
        samples,
        oversample,
        omega_c,
        source: w.clone(),
    })
}

impl FilteredWaveform {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn source(&self) -> &Waveform {
        &self.source
    }

    /// Filter output at time `t` (clamped to `[0, T]`).
    pub fn value_at(&self, t: f64) -> f64 {
        let w = &self.source;
        let dt = w.dt();
        let t = t.clamp(0.0, w.duration());
        let mut state = 0.0;
        let mut elapsed = 0.0;
        for &c_in in w.values() {
            if t <= elapsed + dt {
                return c_in + (state - c_in) * (-self.omega_c * (t - elapsed)).exp();
            }
            state = c_in + (state - c_in) * (-self.omega_c * dt).exp();
            elapsed += dt;
        }
        state
    }

    /// Fine-grid samples as a piecewise-constant waveform of `n × oversample`
    /// steps over the same duration.
    pub fn to_waveform(&self) -> Result<Waveform> {
        Ok(Waveform::new(self.samples.clone(), self.source.duration())?.with_unit(self.source.unit()))
    }
}

/// How a filtered waveform is scored.
#[derive(Debug, Clone, Copy)]
pub enum Evaluation<'a> {
    Closed,
    Open(&'a Dissipator),
}

pub fn evaluate_filtered(
    fw: &FilteredWaveform,
    evaluation: Evaluation<'_>,
    system: &ControlSystem,
    target: &Target,
    epsilon: f64,
) -> Result<f64> {
    let w = fw.to_waveform()?;
    match evaluation {
        Evaluation::Closed => closed_fidelity(system, &w, target, epsilon),
        Evaluation::Open(diss) => open_fidelity(system, &w, target, diss, epsilon),
    }
}
