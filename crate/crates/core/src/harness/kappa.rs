use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atom::OpticalModel;
use crate::error::{Error, Result};

use super::config::ExperimentConfig;

/// One detuning of the κ curve. Rates are per `Ω²` with all frequencies in
/// units of `2π × 1 MHz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRecord {
    pub delta_mhz: f64,
    pub beta_per_omega2: f64,
    pub gamma_s_per_omega2: f64,
    pub kappa: f64,
}

/// κ(Δ) over the configured detuning grid. Points where the ratio is
/// undefined are skipped and reported in the returned warnings.
pub fn run_kappa_curve(cfg: &ExperimentConfig) -> Result<(Vec<KappaRecord>, Vec<String>)> {
    let kappa = cfg
        .kappa
        .as_ref()
        .ok_or_else(|| Error::Config("`kappa` block is required for the κ curve".into()))?;
    let open = cfg.open_system.as_ref().ok_or_else(|| {
        Error::Config("the κ curve needs an `open_system` block with `offset_11_from_9_mhz`".into())
    })?;
    let unit = 2.0 * PI * 1e6;
    let params = open.atom_params().in_units_of(unit).with_omega_laser(kappa.omega_laser_mhz);
    let model = OpticalModel::new(&params)?;
    let omega2 = kappa.omega_laser_mhz * kappa.omega_laser_mhz;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &delta in &kappa.detunings_mhz {
        let m = model.retuned(delta, kappa.omega_laser_mhz);
        let point = (|| -> Result<KappaRecord> {
            let beta = m.tensor_shift_beta()?.beta;
            let gamma_s = m.scattering_rate()?;
            let kappa = m.figure_of_merit(delta)?;
            if !(beta.is_finite() && gamma_s.is_finite() && kappa.is_finite()) {
                return Err(Error::UndefinedRatio(format!("non-finite values at Δ = {delta} MHz")));
            }
            Ok(KappaRecord {
                delta_mhz: delta,
                beta_per_omega2: beta / omega2,
                gamma_s_per_omega2: gamma_s / omega2,
                kappa,
            })
        })();
        match point {
            Ok(r) => rows.push(r),
            Err(e) => {
                log::warn!("skipping Δ = {delta} MHz: {e}");
                warnings.push(format!("skipped Δ = {delta} MHz: {e}"));
            }
        }
    }
    Ok((rows, warnings))
}
