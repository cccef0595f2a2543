use serde::{Deserialize, Serialize};

use super::experiments::SweepResult;

/// Speed-limit estimate for one β. `t_star` is in units of π/Ω_rf and is
/// `None` when no grid time reaches the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QslEstimate {
    pub beta: f64,
    pub t_star: Option<f64>,
    pub threshold: f64,
}

/// Smallest T whose mean closed-system infidelity is at or below
/// `threshold`, linearly interpolated against the preceding grid point.
pub fn extract_qsl(sweep: &SweepResult, threshold: f64) -> Vec<QslEstimate> {
    let cells = sweep.cell_summaries();
    let mut betas: Vec<f64> = Vec::new();
    for c in &cells {
        if !betas.contains(&c.beta) {
            betas.push(c.beta);
        }
    }
    betas
        .into_iter()
        .map(|beta| {
            let mut column: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.beta == beta)
                .map(|c| (c.t_pi, c.mean_closed_infidelity))
                .collect();
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            QslEstimate {
                beta,
                t_star: crossing(&column, threshold),
                threshold,
            }
        })
        .collect()
}

fn crossing(column: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let k = column.iter().position(|&(_, inf)| inf <= threshold)?;
    if k == 0 {
        return Some(column[0].0);
    }
    let (t0, i0) = column[k - 1];
    let (t1, i1) = column[k];
    Some(t0 + (i0 - threshold) / (i0 - i1) * (t1 - t0))
}
