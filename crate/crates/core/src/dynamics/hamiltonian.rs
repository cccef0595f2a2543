use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::linalg::{diag_conjugate, hermitian_eigh, matmul, CMat, C64};
use crate::spin::{spin_operators, HalfInt, SpinSystem};

/// `H = Ω_rf (cos πc Ix + sin πc Iy) + (β + ε) Iz²`.
pub fn control_hamiltonian(
    spin: &SpinSystem,
    c: f64,
    omega_rf: f64,
    beta: f64,
    epsilon: f64,
) -> CMat {
    let (s, co) = (PI * c).sin_cos();
    spin.ix() * C64::new(omega_rf * co, 0.0)
        + spin.iy() * C64::new(omega_rf * s, 0.0)
        + spin.iz2() * C64::new(beta + epsilon, 0.0)
}

/// A spin with fixed rf amplitude and tensor shift; the waveform is the only
/// time-dependent input.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    spin: SpinSystem,
    omega_rf: f64,
    beta: f64,
}

impl ControlSystem {
    pub fn new(spin: SpinSystem, omega_rf: f64, beta: f64) -> Result<Self> {
        if !(omega_rf.is_finite() && beta.is_finite()) {
            return Err(invalid("rf amplitude and tensor shift must be finite"));
        }
        Ok(ControlSystem { spin, omega_rf, beta })
    }

    /// Spin `I` with `Ω_rf` and `β` given in the same units.
    pub fn with_spin(spin: HalfInt, omega_rf: f64, beta: f64) -> Result<Self> {
        ControlSystem::new(spin_operators(spin)?, omega_rf, beta)
    }

    pub fn spin(&self) -> &SpinSystem {
        &self.spin
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn omega_rf(&self) -> f64 {
        self.omega_rf
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hamiltonian(&self, c: f64, epsilon: f64) -> CMat {
        control_hamiltonian(&self.spin, c, self.omega_rf, self.beta, epsilon)
    }

    /// `∂H/∂c = πΩ_rf (−sin πc Ix + cos πc Iy)`.
    pub fn hamiltonian_derivative(&self, c: f64) -> CMat {
        let (s, co) = (PI * c).sin_cos();
        self.spin.ix() * C64::new(-PI * self.omega_rf * s, 0.0)
            + self.spin.iy() * C64::new(PI * self.omega_rf * co, 0.0)
    }

    /// Diagonal of `R(πc) = exp(−iπc Iz)`.
    pub fn rotation_phases(&self, c: f64) -> Vec<C64> {
        self.spin
            .m_values()
            .iter()
            .map(|m| C64::from_polar(1.0, -PI * c * m))
            .collect()
    }

    pub fn step_kernel(&self, dt: f64, epsilon: f64) -> StepKernel {
        StepKernel::new(self, dt, epsilon)
    }
}

/// `exp(−iH(0)dt)` and its derivative with respect to `c`, from which every
/// step follows by diagonal phase conjugation.
#[derive(Debug, Clone)]
pub struct StepKernel {
    m_values: Vec<f64>,
    propagator: CMat,
    derivative: CMat,
}

/// Divided difference of `λ ↦ exp(−iλ dt)` in a cancellation-free form:
/// `(e^{−ia dt} − e^{−ib dt})/(a − b) = −i dt e^{−i(a+b)dt/2} sinc((a−b)dt/2)`.
fn exp_divided_difference(a: f64, b: f64, dt: f64) -> C64 {
    let x = 0.5 * (a - b) * dt;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::new(0.0, -dt) * C64::from_polar(1.0, -0.5 * (a + b) * dt) * sinc
}

impl StepKernel {
    fn new(system: &ControlSystem, dt: f64, epsilon: f64) -> Self {
        let h0 = system.hamiltonian(0.0, epsilon);
        let (values, vecs) = hermitian_eigh(&h0);
        let d = values.len();
        let vecs_h = vecs.adjoint();

        let phases = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            values.iter().map(|&l| C64::from_polar(1.0, -l * dt)),
        ));
        let propagator = matmul(&matmul(&vecs, &phases), &vecs_h);

        // Fréchet derivative of exp(−iH dt) along E = ∂H/∂c at c = 0, in the
        // eigenbasis of H(0): G_kl = Ẽ_kl · f[λ_k, λ_l].
        let direction = system.hamiltonian_derivative(0.0);
        let mut rotated = matmul(&matmul(&vecs_h, &direction), &vecs);
        for l in 0..d {
            for k in 0..d {
                rotated[(k, l)] *= exp_divided_difference(values[k], values[l], dt);
            }
        }
        let derivative = matmul(&matmul(&vecs, &rotated), &vecs_h);

        StepKernel {
            m_values: system.spin().m_values().to_vec(),
            propagator,
            derivative,
        }
    }

    pub fn phases(&self, c: f64) -> Vec<C64> {
        self.m_values
            .iter()
            .map(|m| C64::from_polar(1.0, -PI * c * m))
            .collect()
    }

    /// `exp(−iH(c)dt)`.
    pub fn step(&self, c: f64) -> CMat {
        diag_conjugate(&self.propagator, &self.phases(c))
    }

    /// `∂/∂c exp(−iH(c)dt)`.
    pub fn step_derivative(&self, c: f64) -> CMat {
        diag_conjugate(&self.derivative, &self.phases(c))
    }

    pub fn base_propagator(&self) -> &CMat {
        &self.propagator
    }

    pub fn base_derivative(&self) -> &CMat {
        &self.derivative
    }
}
