use crate::error::{invalid, Result};
use crate::linalg::{hermitian_eigh, hermiticity_error, identity, inner, matmul, max_abs, unitarity_error, CMat, CVec, C64};

use super::{ControlSystem, Target, Waveform};

const NORM_TOL: f64 = 1e-10;

/// `exp(−iH dt)` for Hermitian `H`, via its eigendecomposition.
pub fn step_propagator(h: &CMat, dt: f64) -> Result<CMat> {
    if !h.is_square() {
        return Err(invalid("Hamiltonian must be square"));
    }
    let err = hermiticity_error(h);
    if err > NORM_TOL * max_abs(h).max(1.0) {
        return Err(invalid(format!("Hamiltonian is not Hermitian (deviation {err:e})")));
    }
    let d = h.nrows();
    if dt == 0.0 {
        return Ok(identity(d));
    }
    let (values, vecs) = hermitian_eigh(h);
    let mut scaled = vecs.clone();
    for (k, lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lambda * dt);
        for r in 0..d {
            scaled[(r, k)] *= phase;
        }
    }
    Ok(matmul(&scaled, &vecs.adjoint()))
}

/// `U = U_n ⋯ U_1` with `U_j = exp(−iH(c_j) dt)`.
pub fn propagate_unitary(system: &ControlSystem, w: &Waveform, epsilon: f64) -> Result<CMat> {
    let kernel = system.step_kernel(w.dt(), epsilon);
    let d = system.dim();
    let mut u = identity(d);
    let mut next = CMat::zeros(d, d);
    for &c in w.values() {
        crate::linalg::matmul_into(&kernel.step(c), &u, &mut next);
        std::mem::swap(&mut u, &mut next);
    }
    Ok(u)
}

fn check_unit(v: &CVec, name: &str) -> Result<()> {
    let norm = v.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(invalid(format!("{name} is not normalized (norm {norm})")));
    }
    Ok(())
}

/// `|⟨ψ_tar|U|ψ_0⟩|²`.
pub fn state_fidelity(u: &CMat, psi0: &CVec, psi_tar: &CVec) -> Result<f64> {
    check_unit(psi0, "initial state")?;
    check_unit(psi_tar, "target state")?;
    if psi0.len() != u.ncols() || psi_tar.len() != u.nrows() {
        return Err(invalid("state and propagator dimensions differ"));
    }
    let overlap = psi_tar.dotc(&(u * psi0));
    Ok(overlap.norm_sqr().clamp(0.0, 1.0))
}

/// `|Tr(U_tar† U)|² / d²`.
pub fn unitary_fidelity(u: &CMat, u_tar: &CMat) -> Result<f64> {
    if u.shape() != u_tar.shape() || !u.is_square() {
        return Err(invalid("propagator and target dimensions differ"));
    }
    let err = unitarity_error(u_tar);
    if err > NORM_TOL {
        return Err(invalid(format!("target is not unitary (deviation {err:e})")));
    }
    let d = u.nrows() as f64;
    Ok((inner(u_tar, u).norm_sqr() / (d * d)).clamp(0.0, 1.0))
}

pub fn closed_fidelity(
    system: &ControlSystem,
    w: &Waveform,
    target: &Target,
    epsilon: f64,
) -> Result<f64> {
    let u = propagate_unitary(system, w, epsilon)?;
    match target {
        Target::State { initial, target } => state_fidelity(&u, initial, target),
        Target::Unitary { target } => unitary_fidelity(&u, target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_error};
    use crate::spin::HalfInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sr() -> ControlSystem {
        ControlSystem::with_spin(HalfInt::from_doubled(9), 1.0, 1.0).unwrap()
    }

    fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMat {
        let a = CMat::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn zero_time_is_identity_and_random_steps_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(10, &mut rng);
        assert!(max_abs_diff(&step_propagator(&h, 0.0).unwrap(), &identity(10)) < 1e-15);
        for _ in 0..10 {
            let h = random_hermitian(10, &mut rng);
            let u = step_propagator(&h, rng.random_range(0.0..5.0)).unwrap();
            assert!(unitarity_error(&u) < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h = CMat::zeros(2, 2);
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(step_propagator(&h, 1.0).is_err());
    }

    #[test]
    fn pi_rotation_about_x_is_antidiagonal() {
        let sys = sr();
        let u = step_propagator(sys.spin().ix(), PI).unwrap();
        for r in 0..10 {
            for c in 0..10 {
                let expected = if r + c == 9 { 1.0 } else { 0.0 };
                assert!((u[(r, c)].norm() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_rotation_of_half_integer_spin_is_minus_identity() {
        let sys = ControlSystem::with_spin(HalfInt::from_doubled(9), 1.0, 0.0).unwrap();
        let w = Waveform::zeros(7, 2.0 * PI).unwrap();
        let u = propagate_unitary(&sys, &w, 0.0).unwrap();
        assert!(max_abs_diff(&u, &(-identity(10))) < 1e-12);
    }

    #[test]
    fn single_step_and_split_step_consistency() {
        let sys = sr();
        let w = Waveform::new(vec![0.37], 0.9).unwrap();
        let u = propagate_unitary(&sys, &w, 0.0).unwrap();
        let direct = step_propagator(&sys.hamiltonian(0.37, 0.0), 0.9).unwrap();
        assert!(max_abs_diff(&u, &direct) < 1e-12);
        let halves = Waveform::new(vec![0.37, 0.37], 0.9).unwrap();
        let u2 = propagate_unitary(&sys, &halves, 0.0).unwrap();
        assert!(max_abs_diff(&u, &u2) < 1e-12);
    }

    #[test]
    fn ordering_puts_first_step_rightmost() {
        let sys = sr();
        let w = Waveform::new(vec![0.1, 0.7, -0.4], 1.5).unwrap();
        let u = propagate_unitary(&sys, &w, 0.02).unwrap();
        let mut expect = identity(10);
        for &c in w.values() {
            expect = step_propagator(&sys.hamiltonian(c, 0.02), 0.5).unwrap() * expect;
        }
        assert!(max_abs_diff(&u, &expect) < 1e-12);
        assert!(unitarity_error(&u) < 1e-12);
    }

    #[test]
    fn fidelity_edge_cases() {
        let sys = sr();
        let w = Waveform::new(vec![0.2, -0.3, 0.9, 0.1], 2.0).unwrap();
        let u = propagate_unitary(&sys, &w, 0.0).unwrap();
        let psi0 = sys.spin().basis_state(HalfInt::from_doubled(9)).unwrap();
        let reached = &u * &psi0;
        assert!((state_fidelity(&u, &psi0, &reached).unwrap() - 1.0).abs() < 1e-12);
        let phased = &reached * C64::from_polar(1.0, 0.8);
        assert!((state_fidelity(&u, &psi0, &phased).unwrap() - 1.0).abs() < 1e-12);
        // Orthogonal target via Gram–Schmidt against a basis vector.
        let e = sys.spin().basis_state(HalfInt::from_doubled(-9)).unwrap();
        let mut perp = &e - &reached * reached.dotc(&e);
        perp /= C64::new(perp.norm(), 0.0);
        assert!(state_fidelity(&u, &psi0, &perp).unwrap() < 1e-24);
        assert!(state_fidelity(&u, &(&psi0 * C64::new(2.0, 0.0)), &reached).is_err());

        assert!((unitary_fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        let phased_u = &u * C64::from_polar(1.0, -2.1);
        assert!((unitary_fidelity(&u, &phased_u).unwrap() - 1.0).abs() < 1e-12);
        assert!(unitary_fidelity(&u, &(&u * C64::new(1.1, 0.0))).is_err());
    }

    #[test]
    fn qubit_pi_rotation_is_orthogonal_to_identity() {
        let sys = ControlSystem::with_spin(HalfInt::HALF, 1.0, 0.0).unwrap();
        let w = Waveform::new(vec![0.0], PI).unwrap();
        let u = propagate_unitary(&sys, &w, 0.0).unwrap();
        assert!(unitary_fidelity(&u, &identity(2)).unwrap() < 1e-24);
    }
}
