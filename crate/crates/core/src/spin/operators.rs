use crate::error::{invalid, Result};
use crate::linalg::{CMat, C64};

use super::HalfInt;

/// Spin-I angular momentum matrices in the descending-m basis (ħ = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    spin: HalfInt,
    ix: CMat,
    iy: CMat,
    iz: CMat,
    m_values: Vec<f64>,
}

impl SpinSystem {
    pub fn spin(&self) -> HalfInt {
        self.spin
    }

    pub fn dim(&self) -> usize {
        self.spin.multiplicity()
    }

    pub fn ix(&self) -> &CMat {
        &self.ix
    }

    pub fn iy(&self) -> &CMat {
        &self.iy
    }

    pub fn iz(&self) -> &CMat {
        &self.iz
    }

    pub fn iz2(&self) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.m_values.iter().map(|m| C64::new(m * m, 0.0)),
        ))
    }

    /// Magnetic quantum numbers in basis order: `I, I-1, …, -I`.
    pub fn m_values(&self) -> &[f64] {
        &self.m_values
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.dim(), self.dim())
    }

    /// `I(I+1)`.
    pub fn casimir(&self) -> f64 {
        let i = self.spin.value();
        i * (i + 1.0)
    }

    /// Basis vector `|m⟩`; `None` when `m` is not a sublevel of this spin.
    pub fn basis_state(&self, m: HalfInt) -> Option<crate::linalg::CVec> {
        let idx = (self.spin.doubled() - m.doubled()) / 2;
        if m.abs() > self.spin || (self.spin - m).doubled() % 2 != 0 || idx < 0 {
            return None;
        }
        let mut v = crate::linalg::CVec::zeros(self.dim());
        v[idx as usize] = C64::new(1.0, 0.0);
        Some(v)
    }
}

/// Builds `Ix, Iy, Iz` from the ladder matrix elements
/// `⟨m+1|I₊|m⟩ = √(I(I+1) − m(m+1))`.
pub fn spin_operators(spin: HalfInt) -> Result<SpinSystem> {
    if spin.doubled() < 1 {
        return Err(invalid(format!("spin must be at least 1/2, got {spin}")));
    }
    let d = spin.multiplicity();
    let i = spin.value();
    let m_values: Vec<f64> = (0..d).map(|k| i - k as f64).collect();

    // Raising operator: column k (m) maps to row k-1 (m+1).
    let mut raise = CMat::zeros(d, d);
    for k in 1..d {
        let m = m_values[k];
        raise[(k - 1, k)] = C64::new((i * (i + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();

    let ix = (&raise + &lower) * C64::new(0.5, 0.0);
    let iy = (&raise - &lower) * C64::new(0.0, -0.5);
    let iz = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        m_values.iter().map(|&m| C64::new(m, 0.0)),
    ));

    Ok(SpinSystem {
        spin,
        ix,
        iy,
        iz,
        m_values,
    })
}
