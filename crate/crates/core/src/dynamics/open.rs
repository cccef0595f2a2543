//! Lindblad evolution and channel fidelities.
//!
//! Superoperators act on column-stacked density matrices. The generator is
//! `L vec(ρ) = vec(−i(H_eff ρ − ρ H_eff†) + Γ Σ_q W_q ρ W_q†)` with
//! `H_eff = H − (iΓ/2) Σ_q W_q† W_q`.

use crate::atom::{AtomParams, OpticalModel};
use crate::error::{invalid, Result};
use crate::linalg::{
    expm, hermitian_eigenvalues, hermiticity_error, identity, inner, kron, matmul, matmul_into,
    max_abs_diff, unitarity_error, unvec, vec, CMat, CVec, C64, I,
};

use super::{ControlSystem, Target, Waveform};

const STATE_TOL: f64 = 1e-10;

/// Valid density matrix: Hermitian, unit trace, positive semidefinite (each to 1e-10).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("density matrix must be square"));
        }
        if hermiticity_error(&matrix) > STATE_TOL {
            return Err(invalid("density matrix is not Hermitian"));
        }
        let tr = crate::linalg::trace(&matrix);
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)[0];
        if min_eig < -STATE_TOL {
            return Err(invalid(format!("density matrix has eigenvalue {min_eig:e}")));
        }
        Ok(DensityMatrix(matrix))
    }

    pub fn pure(psi: &CVec) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(invalid(format!("state is not normalized (norm {norm})")));
        }
        Ok(DensityMatrix(psi * psi.adjoint()))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix(identity(d) * C64::new(1.0 / d as f64, 0.0))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Jump operators and rate entering the Lindbladian.
#[derive(Debug, Clone)]
pub struct Dissipator {
    gamma: f64,
    jumps: Vec<CMat>,
    covariant: bool,
}

/// Whether every jump shifts `m` by a fixed amount, which makes the dissipator
/// commute with z-rotations.
fn z_covariant(jumps: &[CMat]) -> bool {
    jumps.iter().all(|w| {
        let mut offset = None;
        for c in 0..w.ncols() {
            for r in 0..w.nrows() {
                if w[(r, c)] != C64::default() {
                    let k = r as isize - c as isize;
                    match offset {
                        None => offset = Some(k),
                        Some(o) if o != k => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    })
}

impl Dissipator {
    pub fn new(gamma: f64, jumps: Vec<CMat>) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("decay rate must be non-negative, got {gamma}")));
        }
        if let Some(first) = jumps.first() {
            let d = first.nrows();
            if jumps.iter().any(|w| w.nrows() != d || w.ncols() != d) {
                return Err(invalid("jump operators must all be square of the same size"));
            }
        }
        let covariant = z_covariant(&jumps);
        Ok(Dissipator {
            gamma,
            jumps,
            covariant,
        })
    }

    /// No dissipation at all.
    pub fn none() -> Self {
        Dissipator {
            gamma: 0.0,
            jumps: Vec::new(),
            covariant: true,
        }
    }

    pub fn from_atom(params: &AtomParams) -> Result<Self> {
        Dissipator::from_model(&OpticalModel::new(params)?)
    }

    pub fn from_model(model: &OpticalModel) -> Result<Self> {
        let jumps = model.jump_operators()?;
        Dissipator::new(model.params().gamma, jumps.to_vec())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn jumps(&self) -> &[CMat] {
        &self.jumps
    }

    /// `Σ_q W_q† W_q`.
    pub fn loss_operator(&self, d: usize) -> CMat {
        let mut acc = CMat::zeros(d, d);
        for w in &self.jumps {
            acc += matmul(&w.adjoint(), w);
        }
        acc
    }
}

/// Lindbladian superoperator for a given (Hermitian) Hamiltonian.
pub fn lindbladian_generator(h: &CMat, dissipator: &Dissipator) -> Result<CMat> {
    if !h.is_square() {
        return Err(invalid("Hamiltonian must be square"));
    }
    let d = h.nrows();
    if dissipator.jumps.iter().any(|w| w.nrows() != d) {
        return Err(invalid(format!(
            "jump operators do not match the {d}-dimensional Hamiltonian"
        )));
    }
    let gamma = dissipator.gamma;
    let h_eff = h - dissipator.loss_operator(d) * C64::new(0.0, gamma / 2.0);
    let id = identity(d);
    let mut l = kron(&id, &h_eff) * (-I) + kron(&h_eff.map(|x| x.conj()), &id) * I;
    if gamma != 0.0 {
        for w in &dissipator.jumps {
            l += kron(&w.map(|x| x.conj()), w) * C64::new(gamma, 0.0);
        }
    }
    Ok(l)
}

/// Lindbladian during a step with phase `c_j`.
pub fn lindbladian(
    system: &ControlSystem,
    c: f64,
    dissipator: &Dissipator,
    epsilon: f64,
) -> Result<CMat> {
    lindbladian_generator(&system.hamiltonian(c, epsilon), dissipator)
}

/// A d²×d² superoperator (column-stacking convention).
#[derive(Debug, Clone, PartialEq)]
pub struct CPMap {
    matrix: CMat,
    dim: usize,
}

impl CPMap {
    pub fn new(matrix: CMat) -> Result<Self> {
        let n = matrix.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        if !matrix.is_square() || dim * dim != n || dim == 0 {
            return Err(invalid("superoperator must be d²×d²"));
        }
        Ok(CPMap { matrix, dim })
    }

    pub fn identity(d: usize) -> Self {
        CPMap {
            matrix: identity(d * d),
            dim: d,
        }
    }

    /// `ρ ↦ U ρ U†`, i.e. `Ū ⊗ U`.
    pub fn from_unitary(u: &CMat) -> Self {
        CPMap {
            matrix: kron(&u.map(|x| x.conj()), u),
            dim: u.nrows(),
        }
    }

    /// `ρ ↦ Tr(ρ) 𝟙/d`.
    pub fn depolarizing(d: usize) -> Self {
        let v = vec(&identity(d));
        CPMap {
            matrix: &v * v.adjoint() * C64::new(1.0 / d as f64, 0.0),
            dim: d,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        unvec(&(&self.matrix * vec(rho)), self.dim)
    }

    /// The map that applies `self` first, then `later`.
    pub fn then(&self, later: &CPMap) -> CPMap {
        CPMap {
            matrix: matmul(&later.matrix, &self.matrix),
            dim: self.dim,
        }
    }

    /// `max |E†(𝟙) − 𝟙|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let id = identity(self.dim);
        let back = unvec(&(self.matrix.adjoint() * vec(&id)), self.dim);
        max_abs_diff(&back, &id)
    }

    /// `max |E(X†) − E(X)†|` over matrix units `X = |i⟩⟨j|`.
    pub fn hermiticity_preservation_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let e_ij = unvec(&self.matrix.column(i + d * j).into_owned(), d);
                let e_ji = unvec(&self.matrix.column(j + d * i).into_owned(), d);
                worst = worst.max(max_abs_diff(&e_ji, &e_ij.adjoint()));
            }
        }
        worst
    }

    pub fn choi(&self) -> CMat {
        choi_matrix(self)
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        let c = self.choi();
        // Symmetrize away rounding before the Hermitian solver.
        let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
        hermitian_eigenvalues(&c)[0]
    }
}

/// Choi matrix `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`: PSD iff the map is completely
/// positive, with trace `d` when it is trace preserving.
pub fn choi_matrix(e: &CPMap) -> CMat {
    let d = e.dim;
    let m = &e.matrix;
    CMat::from_fn(d * d, d * d, |row, col| {
        let (i, a) = (row / d, row % d);
        let (j, b) = (col / d, col % d);
        m[(a + d * b, i + d * j)]
    })
}

fn superoperator_phases(system: &ControlSystem, c: f64) -> Vec<C64> {
    let p = system.rotation_phases(c);
    let d = p.len();
    let mut s = Vec::with_capacity(d * d);
    for b in 0..d {
        for a in 0..d {
            s.push(p[a] * p[b].conj());
        }
    }
    s
}

fn scale_rows(x: &mut CMat, factors: impl Fn(usize) -> C64) {
    let rows = x.nrows();
    for col in 0..x.ncols() {
        for r in 0..rows {
            x[(r, col)] *= factors(r);
        }
    }
}

/// Per-step exponential `exp(L(c=0) dt)`; every other step is its diagonal
/// conjugate when the dissipator commutes with z-rotations.
fn base_step_map(
    system: &ControlSystem,
    dt: f64,
    dissipator: &Dissipator,
    epsilon: f64,
) -> Result<CMat> {
    let l0 = lindbladian(system, 0.0, dissipator, epsilon)?;
    expm(&(l0 * C64::new(dt, 0.0)))
}

/// Time-ordered product `exp(L_n dt) ⋯ exp(L_1 dt)`.
pub fn propagate_cpmap(
    system: &ControlSystem,
    w: &Waveform,
    dissipator: &Dissipator,
    epsilon: f64,
) -> Result<CPMap> {
    if !dissipator.covariant {
        return propagate_cpmap_stepwise(system, w, dissipator, epsilon);
    }
    let d = system.dim();
    let n2 = d * d;
    let kernel = base_step_map(system, w.dt(), dissipator, epsilon)?;
    let mut x = identity(n2);
    let mut next = CMat::zeros(n2, n2);
    for &c in w.values() {
        let s = superoperator_phases(system, c);
        scale_rows(&mut x, |r| s[r].conj());
        matmul_into(&kernel, &x, &mut next);
        std::mem::swap(&mut x, &mut next);
        scale_rows(&mut x, |r| s[r]);
    }
    CPMap::new(x)
}

/// Reference path: one Padé exponential per step, no symmetry shortcuts.
pub fn propagate_cpmap_stepwise(
    system: &ControlSystem,
    w: &Waveform,
    dissipator: &Dissipator,
    epsilon: f64,
) -> Result<CPMap> {
    let d = system.dim();
    let dt = C64::new(w.dt(), 0.0);
    let mut x = identity(d * d);
    for &c in w.values() {
        let step = expm(&(lindbladian(system, c, dissipator, epsilon)? * dt))?;
        x = matmul(&step, &x);
    }
    CPMap::new(x)
}

/// Evolves a single density matrix (cheaper than building the full channel).
pub fn propagate_density(
    system: &ControlSystem,
    w: &Waveform,
    dissipator: &Dissipator,
    epsilon: f64,
    rho0: &DensityMatrix,
) -> Result<DensityMatrix> {
    let d = system.dim();
    if rho0.dim() != d {
        return Err(invalid("initial state dimension differs from the system"));
    }
    let mut v = vec(rho0.matrix());
    if dissipator.covariant {
        let kernel = base_step_map(system, w.dt(), dissipator, epsilon)?;
        for &c in w.values() {
            let s = superoperator_phases(system, c);
            for (k, x) in v.iter_mut().enumerate() {
                *x *= s[k].conj();
            }
            v = &kernel * v;
            for (k, x) in v.iter_mut().enumerate() {
                *x *= s[k];
            }
        }
    } else {
        let dt = C64::new(w.dt(), 0.0);
        for &c in w.values() {
            v = expm(&(lindbladian(system, c, dissipator, epsilon)? * dt))? * v;
        }
    }
    let rho = unvec(&v, d);
    DensityMatrix::new((&rho + rho.adjoint()) * C64::new(0.5, 0.0))
}

/// `Tr(ρ_tar ρ) = ⟨ψ_tar|ρ|ψ_tar⟩`.
pub fn open_state_fidelity(rho: &DensityMatrix, psi_tar: &CVec) -> Result<f64> {
    let norm = psi_tar.norm();
    if (norm - 1.0).abs() > STATE_TOL {
        return Err(invalid(format!("target state is not normalized (norm {norm})")));
    }
    if psi_tar.len() != rho.dim() {
        return Err(invalid("target state dimension differs from the density matrix"));
    }
    let value = psi_tar.dotc(&(rho.matrix() * psi_tar)).re;
    Ok(value.clamp(0.0, 1.0))
}

/// `|Tr(E_tar† E)| / d²` with `E_tar = Ū_tar ⊗ U_tar`.
pub fn process_fidelity(e: &CPMap, u_tar: &CMat) -> Result<f64> {
    if u_tar.nrows() != e.dim || !u_tar.is_square() {
        return Err(invalid("target unitary dimension differs from the channel"));
    }
    let err = unitarity_error(u_tar);
    if err > STATE_TOL {
        return Err(invalid(format!("target is not unitary (deviation {err:e})")));
    }
    let target = CPMap::from_unitary(u_tar);
    let d2 = (e.dim * e.dim) as f64;
    Ok((inner(&target.matrix, &e.matrix).norm() / d2).clamp(0.0, 1.0))
}

/// Open-system fidelity of a waveform: state overlap for state targets,
/// process fidelity for unitary targets.
pub fn open_fidelity(
    system: &ControlSystem,
    w: &Waveform,
    target: &Target,
    dissipator: &Dissipator,
    epsilon: f64,
) -> Result<f64> {
    match target {
        Target::State { initial, target } => {
            let rho0 = DensityMatrix::pure(initial)?;
            let rho = propagate_density(system, w, dissipator, epsilon, &rho0)?;
            open_state_fidelity(&rho, target)
        }
        Target::Unitary { target } => {
            let e = propagate_cpmap(system, w, dissipator, epsilon)?;
            process_fidelity(&e, target)
        }
    }
}
