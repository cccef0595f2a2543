use crate::dynamics::{ControlSystem, StepKernel, Target};
use crate::error::{invalid, Result};
use crate::linalg::{diag_conjugate, identity, matmul_into, CMat, CVec, C64};

/// Closed-system fidelity and its exact gradient for a fixed system, target,
/// duration and step count. Robust mode averages over `ε = ±δ`.
///
/// Unlike [`super::OptimizationProblem`] this does not enforce a minimum step
/// count, so it also serves small diagnostic instances.
#[derive(Debug, Clone)]
pub struct Objective {
    target: Target,
    n: usize,
    kernels: Vec<StepKernel>,
}

impl Objective {
    pub fn new(
        system: &ControlSystem,
        target: Target,
        duration: f64,
        n: usize,
        robust_delta: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("need at least one time step"));
        }
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(invalid(format!("duration must be non-negative, got {duration}")));
        }
        if !(robust_delta >= 0.0 && robust_delta.is_finite()) {
            return Err(invalid(format!("robust half-width must be ≥ 0, got {robust_delta}")));
        }
        check_target(&target, system.dim())?;
        let dt = duration / n as f64;
        let epsilons = if robust_delta > 0.0 {
            vec![robust_delta, -robust_delta]
        } else {
            vec![0.0]
        };
        let kernels = epsilons.iter().map(|&e| system.step_kernel(dt, e)).collect();
        Ok(Objective { target, n, kernels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    fn check_len(&self, c: &[f64]) {
        assert_eq!(c.len(), self.n, "waveform length differs from the objective's step count");
    }

    pub fn value(&self, c: &[f64]) -> f64 {
        self.check_len(c);
        let total: f64 = self.kernels.iter().map(|k| single_value(k, &self.target, c)).sum();
        total / self.kernels.len() as f64
    }

    /// Returns `(F, ∂F/∂c)`.
    pub fn value_and_gradient(&self, c: &[f64]) -> (f64, Vec<f64>) {
        self.check_len(c);
        let mut value = 0.0;
        let mut grad = vec![0.0; self.n];
        for kernel in &self.kernels {
            let (f, g) = match &self.target {
                Target::State { initial, target } => state_gradient(kernel, initial, target, c),
                Target::Unitary { target } => unitary_gradient(kernel, target, c),
            };
            value += f;
            for (acc, x) in grad.iter_mut().zip(g) {
                *acc += x;
            }
        }
        let k = self.kernels.len() as f64;
        grad.iter_mut().for_each(|x| *x /= k);
        (value / k, grad)
    }
}

pub(crate) fn check_target(target: &Target, d: usize) -> Result<()> {
    match target {
        Target::State { initial, target } => {
            if initial.len() != d || target.len() != d {
                return Err(invalid(format!("target states must have dimension {d}")));
            }
            for (v, name) in [(initial, "initial"), (target, "target")] {
                if (v.norm() - 1.0).abs() > 1e-10 {
                    return Err(invalid(format!("{name} state is not normalized")));
                }
            }
        }
        Target::Unitary { target } => {
            if target.nrows() != d || target.ncols() != d {
                return Err(invalid(format!("target unitary must be {d}×{d}")));
            }
            if crate::linalg::unitarity_error(target) > 1e-10 {
                return Err(invalid("target matrix is not unitary"));
            }
        }
    }
    Ok(())
}

fn single_value(kernel: &StepKernel, target: &Target, c: &[f64]) -> f64 {
    match target {
        Target::State { initial, target } => {
            let mut psi = initial.clone();
            for &cj in c {
                psi = kernel.step(cj) * psi;
            }
            target.dotc(&psi).norm_sqr().min(1.0)
        }
        Target::Unitary { target } => {
            let d = target.nrows();
            let mut u = identity(d);
            let mut next = CMat::zeros(d, d);
            for &cj in c {
                matmul_into(&kernel.step(cj), &u, &mut next);
                std::mem::swap(&mut u, &mut next);
            }
            let z = crate::linalg::inner(target, &u);
            (z.norm_sqr() / (d * d) as f64).min(1.0)
        }
    }
}

fn state_gradient(kernel: &StepKernel, psi0: &CVec, psi_tar: &CVec, c: &[f64]) -> (f64, Vec<f64>) {
    let n = c.len();
    let steps: Vec<CMat> = c.iter().map(|&cj| kernel.step(cj)).collect();
    // forward[j] = U_j ⋯ U_1 ψ0, forward[0] = ψ0.
    let mut forward = Vec::with_capacity(n + 1);
    forward.push(psi0.clone());
    for u in &steps {
        let next = u * forward.last().unwrap();
        forward.push(next);
    }
    let z = psi_tar.dotc(&forward[n]);
    // chi = U_{j+1}† ⋯ U_n† ψ_tar, walked backwards.
    let mut chi = psi_tar.clone();
    let mut grad = vec![0.0; n];
    for j in (0..n).rev() {
        let phases = kernel.phases(c[j]);
        let du = diag_conjugate(kernel.base_derivative(), &phases);
        let dz = chi.dotc(&(du * &forward[j]));
        grad[j] = 2.0 * (z.conj() * dz).re;
        chi = steps[j].ad_mul(&chi);
    }
    (z.norm_sqr().min(1.0), grad)
}

fn unitary_gradient(kernel: &StepKernel, u_tar: &CMat, c: &[f64]) -> (f64, Vec<f64>) {
    let n = c.len();
    let d = u_tar.nrows();
    let steps: Vec<CMat> = c.iter().map(|&cj| kernel.step(cj)).collect();
    // forward[j] = U_j ⋯ U_1.
    let mut forward = Vec::with_capacity(n + 1);
    forward.push(identity(d));
    for (j, u) in steps.iter().enumerate() {
        let mut next = CMat::zeros(d, d);
        matmul_into(u, &forward[j], &mut next);
        forward.push(next);
    }
    let z = crate::linalg::inner(u_tar, &forward[n]);
    let norm = (d * d) as f64;

    // back = U_tar† U_n ⋯ U_{j+1}; dz_j = Tr(back dU_j forward[j]) = Σ (forward[j]·back)ᵀ ∘ dU_j.
    let mut back = u_tar.adjoint();
    let mut scratch = CMat::zeros(d, d);
    let mut grad = vec![0.0; n];
    for j in (0..n).rev() {
        matmul_into(&forward[j], &back, &mut scratch);
        let du = diag_conjugate(kernel.base_derivative(), &kernel.phases(c[j]));
        let mut dz = C64::default();
        for a in 0..d {
            for b in 0..d {
                dz += du[(a, b)] * scratch[(b, a)];
            }
        }
        grad[j] = 2.0 * (z.conj() * dz).re / norm;
        matmul_into(&back, &steps[j], &mut scratch);
        std::mem::swap(&mut back, &mut scratch);
    }
    ((z.norm_sqr() / norm).min(1.0), grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{closed_fidelity, propagate_unitary, Waveform};
    use crate::optimizer::{haar_random_state, haar_random_unitary};
    use crate::spin::HalfInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_gradient(obj: &Objective, c: &[f64], h: f64) -> Vec<f64> {
        let mut x = c.to_vec();
        (0..c.len())
            .map(|j| {
                x[j] = c[j] + h;
                let fp = obj.value(&x);
                x[j] = c[j] - h;
                let fm = obj.value(&x);
                x[j] = c[j];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn value_matches_closed_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = ControlSystem::with_spin(HalfInt::from_doubled(9), 1.0, 1.0).unwrap();
        let c: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = Waveform::new(c.clone(), 4.0).unwrap();
        for target in [
            Target::State {
                initial: sys.spin().basis_state(HalfInt::from_doubled(9)).unwrap(),
                target: haar_random_state(10, 5).unwrap(),
            },
            Target::Unitary { target: haar_random_unitary(10, 6).unwrap() },
        ] {
            let obj = Objective::new(&sys, target.clone(), 4.0, 30, 0.0).unwrap();
            let direct = closed_fidelity(&sys, &w, &target, 0.0).unwrap();
            assert!((obj.value(&c) - direct).abs() < 1e-12);
            assert!((obj.value_and_gradient(&c).0 - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn robust_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = ControlSystem::with_spin(HalfInt::from_doubled(5), 1.0, 0.4).unwrap();
        let c: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = Target::Unitary { target: haar_random_unitary(6, 1).unwrap() };
        let obj = Objective::new(&sys, target, 5.0, 12, 0.05).unwrap();
        let (_, g) = obj.value_and_gradient(&c);
        assert!(rel_err(&g, &fd_gradient(&obj, &c, 1e-6)) < 1e-6);
    }

    #[test]
    fn gradient_vanishes_at_reached_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = ControlSystem::with_spin(HalfInt::from_doubled(9), 1.0, 1.0).unwrap();
        let c: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = propagate_unitary(&sys, &Waveform::new(c.clone(), 6.0).unwrap(), 0.0).unwrap();
        let obj = Objective::new(&sys, Target::Unitary { target: u }, 6.0, 40, 0.0).unwrap();
        let (f, g) = obj.value_and_gradient(&c);
        assert!((f - 1.0).abs() < 1e-12);
        assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-8);
    }

    #[test]
    fn rejects_mismatched_targets() {
        let sys = ControlSystem::with_spin(HalfInt::ONE, 1.0, 1.0).unwrap();
        let bad = Target::Unitary { target: identity(2) };
        assert!(Objective::new(&sys, bad, 1.0, 3, 0.0).is_err());
        let id = Target::Unitary { target: identity(3) };
        assert!(Objective::new(&sys, id.clone(), 1.0, 0, 0.0).is_err());
        assert!(Objective::new(&sys, id, 1.0, 3, -0.1).is_err());
    }
}
