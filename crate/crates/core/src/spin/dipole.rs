use crate::error::{invalid, Result};
use crate::linalg::{CMat, C64};

use super::{clebsch_gordan, wigner_6j, HalfInt};

/// Electronic angular momentum of the ground (¹S₀) and excited (³P₁) states.
const J_GROUND: HalfInt = HalfInt::ZERO;
const J_EXCITED: HalfInt = HalfInt::ONE;

/// Dimensionless raising operator `e_q · D†_{FF'}` from the ground hyperfine
/// manifold `F = I` to an excited manifold `F'`.
///
/// `matrix` is `(2F'+1) × (2F+1)`, rows indexed by excited `m'` and columns by
/// ground `m`, both in descending order. The normalization is
/// `Σ_{F',q} D_q† D_q = 𝟙` on the ground manifold, so that the per-sublevel
/// strength of line `F'` is `(2F'+1) / ((2I+1)(2J'+1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleCoupling {
    pub ground: HalfInt,
    pub excited: HalfInt,
    pub q: i32,
    pub matrix: CMat,
}

impl DipoleCoupling {
    /// Total strength of this polarization component, `Tr(D_q† D_q) / (2F+1)`.
    pub fn mean_strength(&self) -> f64 {
        let d = self.ground.multiplicity() as f64;
        self.matrix.iter().map(|x| x.norm_sqr()).sum::<f64>() / d
    }
}

/// Excited hyperfine spins reachable from `F = I` on a `J = 0 → J' = 1` line.
pub fn allowed_excited_spins(spin: HalfInt) -> Vec<HalfInt> {
    let lo = (spin - HalfInt::ONE).abs();
    let hi = spin + HalfInt::ONE;
    (0..)
        .map(|k| lo + HalfInt::integer(k))
        .take_while(|f| *f <= hi)
        .collect()
}

/// Reduced factor `c_{FF'} = (−1)^{F'+J+1+I} √((2F'+1)(2J+1)) {J J' 1; F' F I}`
/// with `F = I`. Its square is the relative line strength `(2F'+1)/((2I+1)·3)`.
pub fn reduced_line_factor(spin: HalfInt, excited: HalfInt) -> Result<f64> {
    let six_j = wigner_6j(J_GROUND, J_EXCITED, HalfInt::ONE, excited, spin, spin)?;
    let parity = (excited + J_GROUND + HalfInt::ONE + spin)
        .to_integer()
        .ok_or_else(|| invalid("F' and I must differ by an integer"))?;
    let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let weight = ((excited.doubled() + 1) * (J_GROUND.doubled() + 1)) as f64;
    Ok(sign * weight.sqrt() * six_j)
}

pub fn dipole_coupling(spin: HalfInt, excited: HalfInt, q: i32) -> Result<DipoleCoupling> {
    if spin.doubled() < 1 {
        return Err(invalid(format!("nuclear spin must be at least 1/2, got {spin}")));
    }
    if !allowed_excited_spins(spin).contains(&excited) {
        return Err(invalid(format!(
            "F' = {excited} is not reachable from F = {spin} on a J=0 → J'=1 line"
        )));
    }
    if !(-1..=1).contains(&q) {
        return Err(invalid(format!("polarization index q must be -1, 0 or +1, got {q}")));
    }

    let c = reduced_line_factor(spin, excited)?;
    let scale = c * ((spin.doubled() + 1) as f64 / (excited.doubled() + 1) as f64).sqrt();
    let d = spin.multiplicity();
    let de = excited.multiplicity();
    let q_half = HalfInt::integer(q);

    let mut matrix = CMat::zeros(de, d);
    for col in 0..d {
        let m = spin - HalfInt::integer(col as i32);
        let m_exc = m + q_half;
        if m_exc.abs() > excited {
            continue;
        }
        let row = ((excited - m_exc).doubled() / 2) as usize;
        let cg = clebsch_gordan(spin, m, HalfInt::ONE, q_half, excited, m_exc)?;
        matrix[(row, col)] = C64::new(scale * cg, 0.0);
    }

    Ok(DipoleCoupling {
        ground: spin,
        excited,
        q,
        matrix,
    })
}
