//! Light-shift and optical-pumping model for the ground-state nuclear spin of
//! Sr-87 driven near the ¹S₀ → ³P₁ intercombination line.
//!
//! All angular frequencies in [`AtomParams`] share one unit (rad/s for
//! physical values, or units of Ω_rf inside the solver, see
//! [`AtomParams::in_units_of`]). Detunings follow `Δ_{F'} = delta − offset(F')`,
//! so `Δ_{F'} > 0` means the laser sits above line `F'`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{matmul, CMat, C64};
use crate::spin::{allowed_excited_spins, dipole_coupling, spin_operators, HalfInt};

/// Linewidth of the ³P₁ state, `2π × 7.5 kHz`.
pub const SR87_GAMMA: f64 = 2.0 * PI * 7.5e3;
/// Separation of the F' = 9/2 line from the F' = 7/2 line, `2π × 1130 MHz`.
pub const SR87_HYPERFINE_7_9: f64 = 2.0 * PI * 1130e6;
/// `g_I μ_N / h` in Hz per gauss.
pub const SR87_GI_MUN_HZ_PER_GAUSS: f64 = -184.0;
pub const SR87_SPIN: HalfInt = HalfInt::from_doubled(9);

/// `(2J'+1)/(2J+1)` for `J = 0 → J' = 1`: rescales the ground-normalized
/// dipole matrices so each excited sublevel decays at total rate Γ.
const EMISSION_NORMALIZATION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineOffset {
    pub f_prime: HalfInt,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    pub spin: HalfInt,
    /// Excited-state linewidth Γ.
    pub gamma: f64,
    /// Line centres relative to the reference (lowest-F') line.
    pub hyperfine_offsets: Vec<LineOffset>,
    pub gi_mun_hz_per_gauss: f64,
    pub omega_rf: f64,
    /// Laser Rabi frequency Ω.
    pub omega_laser: f64,
    /// Laser detuning from the reference line.
    pub delta: f64,
}

impl AtomParams {
    /// Sr-87 parameters in rad/s. The F' = 11/2 line position is not a fixed
    /// constant of this model and must be supplied as its offset from F' = 9/2.
    pub fn sr87(offset_11_from_9: f64, omega_rf: f64, omega_laser: f64, delta: f64) -> Self {
        AtomParams {
            spin: SR87_SPIN,
            gamma: SR87_GAMMA,
            hyperfine_offsets: vec![
                LineOffset { f_prime: HalfInt::from_doubled(7), offset: 0.0 },
                LineOffset { f_prime: HalfInt::from_doubled(9), offset: SR87_HYPERFINE_7_9 },
                LineOffset {
                    f_prime: HalfInt::from_doubled(11),
                    offset: SR87_HYPERFINE_7_9 + offset_11_from_9,
                },
            ],
            gi_mun_hz_per_gauss: SR87_GI_MUN_HZ_PER_GAUSS,
            omega_rf,
            omega_laser,
            delta,
        }
    }

    /// Rescales every angular frequency by `1/unit`.
    pub fn in_units_of(&self, unit: f64) -> Self {
        let mut p = self.clone();
        p.gamma /= unit;
        p.omega_rf /= unit;
        p.omega_laser /= unit;
        p.delta /= unit;
        for line in &mut p.hyperfine_offsets {
            line.offset /= unit;
        }
        p
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        AtomParams { delta, ..self.clone() }
    }

    pub fn with_omega_laser(&self, omega_laser: f64) -> Self {
        AtomParams { omega_laser, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.spin.multiplicity()
    }

    /// Detuning from line `F'`.
    pub fn detuning(&self, f_prime: HalfInt) -> Option<f64> {
        self.hyperfine_offsets
            .iter()
            .find(|l| l.f_prime == f_prime)
            .map(|l| self.delta - l.offset)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spin.doubled() < 1 {
            return Err(invalid("nuclear spin must be at least 1/2"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(invalid(format!("linewidth must be non-negative, got {}", self.gamma)));
        }
        if !(self.omega_rf > 0.0 && self.omega_rf.is_finite()) {
            return Err(invalid(format!("rf Rabi frequency must be positive, got {}", self.omega_rf)));
        }
        if !self.omega_laser.is_finite() || !self.delta.is_finite() {
            return Err(invalid("laser amplitude and detuning must be finite"));
        }
        let mut wanted = allowed_excited_spins(self.spin);
        let mut have: Vec<HalfInt> = self.hyperfine_offsets.iter().map(|l| l.f_prime).collect();
        wanted.sort();
        have.sort();
        if wanted != have {
            let names: Vec<String> = wanted.iter().map(|f| f.to_string()).collect();
            return Err(invalid(format!(
                "hyperfine offsets must list exactly F' ∈ {{{}}}",
                names.join(", ")
            )));
        }
        if self.gamma == 0.0 {
            if let Some(l) = self
                .hyperfine_offsets
                .iter()
                .find(|l| self.delta - l.offset == 0.0)
            {
                return Err(invalid(format!(
                    "laser is exactly on the F' = {} line with zero linewidth",
                    l.f_prime
                )));
            }
        }
        Ok(())
    }
}

/// Physically normalized raising matrices `e_q · D†_{F'}` for every line.
#[derive(Debug, Clone)]
struct Line {
    f_prime: HalfInt,
    offset: f64,
    /// Indexed by `q + 1`.
    raise: [CMat; 3],
}

/// Pre-built dipole couplings for a given parameter set; the κ-curve and
/// amplitude solvers reuse one model across many detunings.
#[derive(Debug, Clone)]
pub struct OpticalModel {
    params: AtomParams,
    lines: Vec<Line>,
}

/// Result of projecting the light-shift operator onto `span{𝟙, Iz²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorShift {
    pub beta: f64,
    pub scalar_shift: f64,
    /// Frobenius norm of the part of `H_LS` outside the span.
    pub residual: f64,
}

/// Outputs of [`rf_parameters_from_fields`], in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfParameters {
    pub omega_rf_resonance: f64,
    pub omega_rf: f64,
}

impl OpticalModel {
    pub fn new(params: &AtomParams) -> Result<Self> {
        params.validate()?;
        let scale = EMISSION_NORMALIZATION.sqrt();
        let mut lines = Vec::with_capacity(params.hyperfine_offsets.len());
        for l in &params.hyperfine_offsets {
            let mut raise = [CMat::zeros(0, 0), CMat::zeros(0, 0), CMat::zeros(0, 0)];
            for q in -1..=1 {
                let dc = dipole_coupling(params.spin, l.f_prime, q)?;
                raise[(q + 1) as usize] = dc.matrix * C64::new(scale, 0.0);
            }
            lines.push(Line {
                f_prime: l.f_prime,
                offset: l.offset,
                raise,
            });
        }
        Ok(OpticalModel {
            params: params.clone(),
            lines,
        })
    }

    pub fn params(&self) -> &AtomParams {
        &self.params
    }

    /// Same couplings, new detuning and laser amplitude.
    pub fn retuned(&self, delta: f64, omega_laser: f64) -> Self {
        let mut m = self.clone();
        m.params.delta = delta;
        m.params.omega_laser = omega_laser;
        m
    }

    fn check_detunings(&self) -> Result<()> {
        if self.params.gamma == 0.0 {
            for l in &self.lines {
                if self.params.delta == l.offset {
                    return Err(invalid(format!(
                        "laser is exactly on the F' = {} line with zero linewidth",
                        l.f_prime
                    )));
                }
            }
        }
        Ok(())
    }

    /// `W_q = Σ_{F'} (Ω/2)/(Δ_{F'} + iΓ/2) (e_q*·D_{F'})(ε_L·D†_{F'})` for
    /// `q = -1, 0, +1` (array index `q + 1`), with `ε_L = e_0`.
    pub fn jump_operators(&self) -> Result<[CMat; 3]> {
        self.check_detunings()?;
        let p = &self.params;
        let d = p.dim();
        let mut out = [CMat::zeros(d, d), CMat::zeros(d, d), CMat::zeros(d, d)];
        for l in &self.lines {
            let detuning = p.delta - l.offset;
            let amp = C64::new(p.omega_laser / 2.0, 0.0) / C64::new(detuning, p.gamma / 2.0);
            let absorb = &l.raise[1];
            for (k, w) in out.iter_mut().enumerate() {
                *w += matmul(&l.raise[k].adjoint(), absorb) * amp;
            }
        }
        Ok(out)
    }

    /// `H_LS = Σ_{F'} (Ω²/4) Δ_{F'}/(Δ_{F'}² + Γ²/4) (ε_L·D_{F'})(ε_L·D†_{F'})`.
    pub fn light_shift_operator(&self) -> Result<CMat> {
        self.check_detunings()?;
        let p = &self.params;
        let d = p.dim();
        let mut h = CMat::zeros(d, d);
        for l in &self.lines {
            let detuning = p.delta - l.offset;
            let strength = p.omega_laser * p.omega_laser / 4.0 * detuning
                / (detuning * detuning + p.gamma * p.gamma / 4.0);
            let absorb = &l.raise[1];
            h += matmul(&absorb.adjoint(), absorb) * C64::new(strength, 0.0);
        }
        Ok(h)
    }

    pub fn tensor_shift_beta(&self) -> Result<TensorShift> {
        let h = self.light_shift_operator()?;
        let spin = spin_operators(self.params.spin)?;
        Ok(project_identity_iz2(&h, spin.m_values()))
    }

    /// `γ_s = Γ Tr(Σ_q W_q† W_q) / d`.
    pub fn scattering_rate(&self) -> Result<f64> {
        let w = self.jump_operators()?;
        let d = self.params.dim() as f64;
        let total: f64 = w
            .iter()
            .map(|wq| wq.iter().map(|x| x.norm_sqr()).sum::<f64>())
            .sum();
        Ok(self.params.gamma * total / d)
    }

    /// `κ = |β| / γ_s` at detuning `delta`.
    pub fn figure_of_merit(&self, delta: f64) -> Result<f64> {
        let m = self.retuned(delta, self.params.omega_laser);
        let gamma_s = m.scattering_rate()?;
        if gamma_s == 0.0 || !gamma_s.is_finite() {
            return Err(Error::UndefinedRatio(format!(
                "scattering rate is {gamma_s} at detuning {delta}"
            )));
        }
        Ok(m.tensor_shift_beta()?.beta.abs() / gamma_s)
    }

    /// Laser Rabi frequency realising `beta_target` at `delta`; β ∝ Ω².
    pub fn solve_laser_amplitude(&self, beta_target: f64, delta: f64) -> Result<f64> {
        if beta_target == 0.0 {
            return Ok(0.0);
        }
        let unit = self.retuned(delta, 1.0).tensor_shift_beta()?.beta;
        if unit == 0.0 {
            return Err(invalid(format!("no tensor shift at detuning {delta}")));
        }
        let ratio = beta_target / unit;
        if ratio < 0.0 {
            return Err(invalid(format!(
                "requested β = {beta_target} has the opposite sign to the tensor shift at detuning {delta}"
            )));
        }
        Ok(ratio.sqrt())
    }

    /// Maximises κ over the open detuning interval `(lo, hi)` by a grid scan
    /// refined with golden-section search. Returns `(Δ*, κ*)`.
    pub fn kappa_optimal_detuning(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        if !(hi > lo) {
            return Err(invalid("detuning search interval is empty"));
        }
        let points = 400;
        let width = hi - lo;
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for k in 1..points {
            let delta = lo + width * k as f64 / points as f64;
            if let Ok(kappa) = self.figure_of_merit(delta) {
                if kappa > best.1 {
                    best = (delta, kappa);
                }
            }
        }
        if !best.1.is_finite() {
            return Err(Error::UndefinedRatio("κ undefined across the search interval".into()));
        }
        let step = width / points as f64;
        let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - ratio * (b - a);
        let mut x2 = a + ratio * (b - a);
        let mut f1 = self.figure_of_merit(x1)?;
        let mut f2 = self.figure_of_merit(x2)?;
        for _ in 0..100 {
            if (b - a) <= 1e-12 * width {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (b - a);
                f2 = self.figure_of_merit(x2)?;
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - ratio * (b - a);
                f1 = self.figure_of_merit(x1)?;
            }
        }
        let delta = 0.5 * (a + b);
        let kappa = self.figure_of_merit(delta)?;
        Ok(if kappa >= best.1 { (delta, kappa) } else { best })
    }
}

/// Least-squares (Frobenius) projection of `h` onto `span{𝟙, Iz²}`.
pub fn project_identity_iz2(h: &CMat, m_values: &[f64]) -> TensorShift {
    let d = m_values.len() as f64;
    let s2: f64 = m_values.iter().map(|m| m * m).sum();
    let s4: f64 = m_values.iter().map(|m| m.powi(4)).sum();
    let tr_h: f64 = (0..m_values.len()).map(|k| h[(k, k)].re).sum();
    let tr_h_iz2: f64 = m_values
        .iter()
        .enumerate()
        .map(|(k, m)| m * m * h[(k, k)].re)
        .sum();
    let det = d * s4 - s2 * s2;
    let scalar = (s4 * tr_h - s2 * tr_h_iz2) / det;
    let beta = (d * tr_h_iz2 - s2 * tr_h) / det;
    let mut residual = 0.0;
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            let fit = if r == c { scalar + beta * m_values[r] * m_values[r] } else { 0.0 };
            residual += (h[(r, c)] - C64::new(fit, 0.0)).norm_sqr();
        }
    }
    TensorShift {
        beta,
        scalar_shift: scalar,
        residual: residual.sqrt(),
    }
}

/// Zeeman resonance `|g_I μ_N| B_∥` and rf Rabi frequency `−g_I μ_N B_T`, in rad/s.
pub fn rf_parameters_from_fields(
    b_parallel: f64,
    b_transverse: f64,
    params: &AtomParams,
) -> Result<RfParameters> {
    if !(b_parallel >= 0.0) || !(b_transverse >= 0.0) {
        return Err(invalid("field magnitudes must be non-negative"));
    }
    let g = params.gi_mun_hz_per_gauss;
    Ok(RfParameters {
        omega_rf_resonance: 2.0 * PI * g.abs() * b_parallel,
        omega_rf: -2.0 * PI * g * b_transverse,
    })
}

pub fn jump_operators(params: &AtomParams) -> Result<[CMat; 3]> {
    OpticalModel::new(params)?.jump_operators()
}

pub fn light_shift_operator(params: &AtomParams) -> Result<CMat> {
    OpticalModel::new(params)?.light_shift_operator()
}

pub fn tensor_shift_beta(params: &AtomParams) -> Result<TensorShift> {
    OpticalModel::new(params)?.tensor_shift_beta()
}

pub fn scattering_rate(params: &AtomParams) -> Result<f64> {
    OpticalModel::new(params)?.scattering_rate()
}

pub fn figure_of_merit(delta: f64, params: &AtomParams) -> Result<f64> {
    OpticalModel::new(params)?.figure_of_merit(delta)
}

pub fn solve_laser_amplitude(beta_target: f64, delta: f64, params: &AtomParams) -> Result<f64> {
    OpticalModel::new(params)?.solve_laser_amplitude(beta_target, delta)
}
