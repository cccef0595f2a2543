use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{closed_fidelity, open_fidelity, Dissipator, Target, Waveform};
use crate::error::{Error, Result};
use crate::optimizer::{grape_optimize, OptimizationProblem, OptimizationReport, Termination};
use crate::waveform::{evaluate_filtered, low_pass_filter, Evaluation};

use super::config::ExperimentConfig;
use super::seeds::splitmix64;

/// Runs `f` over `jobs` on `threads` workers (all cores when `None`) and
/// returns results in job order.
pub fn run_parallel<J, R, F>(jobs: &[J], threads: Option<usize>, f: F) -> Result<Vec<R>>
where
    J: Sync,
    R: Send,
    F: Fn(&J) -> R + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(&f).collect()))
}

/// One optimized (β, T, target) cell entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub beta: f64,
    /// Total time in units of π/Ω_rf.
    #[serde(rename = "T")]
    pub t_pi: f64,
    pub target_id: usize,
    pub seed: u64,
    pub closed_fidelity: Option<f64>,
    pub open_fidelity: Option<f64>,
    /// Two-point robust objective, when the run is robust.
    pub robust_fidelity: Option<f64>,
    pub iterations: usize,
    pub termination: Option<Termination>,
    pub max_jump: Option<f64>,
    pub error: Option<String>,
    /// Seconds spent on this entry; kept out of CSV output.
    #[serde(skip)]
    pub wall_time: f64,
    #[serde(skip)]
    pub report: Option<OptimizationReport>,
}

impl SweepRecord {
    fn failed(beta: f64, t_pi: f64, target_id: usize, seed: u64, err: Error) -> Self {
        SweepRecord {
            beta,
            t_pi,
            target_id,
            seed,
            closed_fidelity: None,
            open_fidelity: None,
            robust_fidelity: None,
            iterations: 0,
            termination: None,
            max_jump: None,
            error: Some(err.to_string()),
            wall_time: 0.0,
            report: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by β, then T, then target.
    pub records: Vec<SweepRecord>,
}

/// Per-cell ensemble means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub beta: f64,
    #[serde(rename = "T")]
    pub t_pi: f64,
    pub targets: usize,
    pub failures: usize,
    pub mean_closed_infidelity: f64,
    pub mean_open_fidelity: Option<f64>,
    pub mean_robust_fidelity: Option<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

impl SweepResult {
    /// Failed entries count as zero fidelity.
    pub fn cell_summaries(&self) -> Vec<CellSummary> {
        let mut out: Vec<CellSummary> = Vec::new();
        let mut start = 0;
        while start < self.records.len() {
            let first = &self.records[start];
            let end = self.records[start..]
                .iter()
                .position(|r| r.beta != first.beta || r.t_pi != first.t_pi)
                .map_or(self.records.len(), |k| start + k);
            let cell = &self.records[start..end];
            let closed: Vec<f64> = cell.iter().map(|r| 1.0 - r.closed_fidelity.unwrap_or(0.0)).collect();
            let open: Vec<f64> = cell.iter().filter_map(|r| r.open_fidelity).collect();
            let robust: Vec<f64> = cell.iter().filter_map(|r| r.robust_fidelity).collect();
            out.push(CellSummary {
                beta: first.beta,
                t_pi: first.t_pi,
                targets: cell.len(),
                failures: cell.iter().filter(|r| r.error.is_some()).count(),
                mean_closed_infidelity: mean(&closed).unwrap_or(1.0),
                mean_open_fidelity: mean(&open),
                mean_robust_fidelity: mean(&robust),
            });
            start = end;
        }
        out
    }
}

/// `(β index, β, T/π, target id)` in output order.
fn grid_jobs(cfg: &ExperimentConfig) -> Vec<(usize, f64, f64, usize)> {
    let mut jobs = Vec::new();
    for (bi, &beta) in cfg.betas_internal().iter().enumerate() {
        for &t in &cfg.durations_in_pi() {
            for id in 0..cfg.ensemble_size {
                jobs.push((bi, beta, t, id));
            }
        }
    }
    jobs
}

fn dissipators(cfg: &ExperimentConfig) -> Result<Vec<Option<Dissipator>>> {
    cfg.betas_internal()
        .iter()
        .map(|&b| match (&cfg.open_system, cfg.open_enabled()) {
            (Some(open), true) => open.dissipator(b).map(Some),
            _ => Ok(None),
        })
        .collect()
}

fn epsilons(delta: f64) -> Vec<f64> {
    if delta > 0.0 {
        vec![delta, -delta]
    } else {
        vec![0.0]
    }
}

fn optimize(
    cfg: &ExperimentConfig,
    beta: f64,
    t_pi: f64,
    target: &Target,
    seed: u64,
    delta: f64,
) -> Result<OptimizationReport> {
    let problem = OptimizationProblem::new(cfg.system(beta)?, target.clone(), t_pi * PI, cfg.steps())?
        .with_slew_limit(cfg.slew_limit)?
        .with_robust_delta(delta)?;
    let mut options = cfg.optimizer.clone();
    options.restart_seed = splitmix64(seed ^ options.restart_seed);
    grape_optimize(&problem, &options)
}

fn mean_open(
    cfg: &ExperimentConfig,
    beta: f64,
    w: &Waveform,
    target: &Target,
    diss: &Dissipator,
    eps: &[f64],
) -> Result<f64> {
    let system = cfg.system(beta)?;
    let mut total = 0.0;
    for &e in eps {
        total += open_fidelity(&system, w, target, diss, e)?;
    }
    Ok(total / eps.len() as f64)
}

/// Optimizes every (β, T, target) entry in the closed system and, when
/// enabled, scores the same waveform under the open-system model. Failures
/// are recorded per entry.
pub fn run_landscape(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let diss = dissipators(cfg)?;
    let jobs = grid_jobs(cfg);
    let records = run_parallel(&jobs, threads, |&(bi, beta, t_pi, id)| {
        let start = Instant::now();
        let seed = super::seeds::target_seed(cfg.seed, id as u64);
        let outcome = (|| -> Result<SweepRecord> {
            let (target, seed) = cfg.target(id)?;
            let delta = cfg.robust_fraction * beta.abs();
            let report = optimize(cfg, beta, t_pi, &target, seed, delta)?;
            let w = &report.waveform;
            let closed = closed_fidelity(&cfg.system(beta)?, w, &target, 0.0)?;
            let open = match &diss[bi] {
                Some(d) => Some(mean_open(cfg, beta, w, &target, d, &epsilons(delta))?),
                None => None,
            };
            Ok(SweepRecord {
                beta,
                t_pi,
                target_id: id,
                seed,
                closed_fidelity: Some(closed),
                open_fidelity: open,
                robust_fidelity: (delta > 0.0).then_some(report.fidelity),
                iterations: report.iterations,
                termination: Some(report.termination),
                max_jump: Some(w.max_jump()),
                error: None,
                wall_time: 0.0,
                report: Some(report),
            })
        })();
        let mut rec = outcome.unwrap_or_else(|e| SweepRecord::failed(beta, t_pi, id, seed, e));
        rec.wall_time = start.elapsed().as_secs_f64();
        log::info!("β = {beta}, T = {t_pi}π, target {id}: F = {:?}", rec.closed_fidelity);
        rec
    })?;
    Ok(SweepResult { records })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    NonRobust,
    Robust,
}

/// One waveform of a robust/non-robust pair scored at `ε = ±δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustRecord {
    pub beta: f64,
    #[serde(rename = "T")]
    pub t_pi: f64,
    pub delta: f64,
    pub target_id: usize,
    pub seed: u64,
    pub variant: Variant,
    pub closed_plus: Option<f64>,
    pub closed_minus: Option<f64>,
    pub closed_mean: Option<f64>,
    pub open_plus: Option<f64>,
    pub open_minus: Option<f64>,
    pub open_mean: Option<f64>,
    pub iterations: usize,
    pub termination: Option<Termination>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: f64,
    #[serde(skip)]
    pub waveform: Option<Waveform>,
}

impl RobustRecord {
    /// `min(F(+δ), F(−δ))` in the closed system.
    pub fn closed_worst(&self) -> Option<f64> {
        Some(self.closed_plus?.min(self.closed_minus?))
    }
}

/// For every target, optimizes once at `ε = 0` and once with the two-point
/// robust objective, then scores both at `ε = ±δ` (closed, and open when
/// enabled). Rows come in non-robust/robust pairs.
pub fn run_robust_comparison(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RobustRecord>> {
    cfg.validate()?;
    let diss = dissipators(cfg)?;
    let mut jobs = Vec::new();
    for (bi, beta, t_pi, id) in grid_jobs(cfg) {
        for variant in [Variant::NonRobust, Variant::Robust] {
            jobs.push((bi, beta, t_pi, id, variant));
        }
    }
    run_parallel(&jobs, threads, |&(bi, beta, t_pi, id, variant)| {
        let start = Instant::now();
        let delta = cfg.robust_fraction * beta.abs();
        let mut rec = RobustRecord {
            beta,
            t_pi,
            delta,
            target_id: id,
            seed: 0,
            variant,
            closed_plus: None,
            closed_minus: None,
            closed_mean: None,
            open_plus: None,
            open_minus: None,
            open_mean: None,
            iterations: 0,
            termination: None,
            error: None,
            wall_time: 0.0,
            waveform: None,
        };
        let outcome = (|| -> Result<()> {
            let (target, seed) = cfg.target(id)?;
            rec.seed = seed;
            let opt_delta = if variant == Variant::Robust { delta } else { 0.0 };
            let report = optimize(cfg, beta, t_pi, &target, seed, opt_delta)?;
            let system = cfg.system(beta)?;
            let w = &report.waveform;
            let plus = closed_fidelity(&system, w, &target, delta)?;
            let minus = closed_fidelity(&system, w, &target, -delta)?;
            rec.closed_plus = Some(plus);
            rec.closed_minus = Some(minus);
            rec.closed_mean = Some(0.5 * (plus + minus));
            if let Some(d) = &diss[bi] {
                let op = open_fidelity(&system, w, &target, d, delta)?;
                let om = open_fidelity(&system, w, &target, d, -delta)?;
                rec.open_plus = Some(op);
                rec.open_minus = Some(om);
                rec.open_mean = Some(0.5 * (op + om));
            }
            rec.iterations = report.iterations;
            rec.termination = Some(report.termination);
            rec.waveform = Some(report.waveform);
            Ok(())
        })();
        if let Err(e) = outcome {
            rec.error = Some(e.to_string());
        }
        rec.wall_time = start.elapsed().as_secs_f64();
        log::info!("robust comparison β = {beta}, T = {t_pi}π, target {id}, {variant:?} done");
        rec
    })
}

/// Fidelity of one optimized waveform after the low-pass filter; the row
/// with no corner frequency is the unfiltered reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub beta: f64,
    #[serde(rename = "T")]
    pub t_pi: f64,
    pub target_id: usize,
    pub seed: u64,
    pub omega_c: Option<f64>,
    pub oversample: usize,
    pub closed_fidelity: Option<f64>,
    pub open_fidelity: Option<f64>,
    pub error: Option<String>,
}

pub fn run_filter_eval(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<FilterRecord>> {
    cfg.validate()?;
    let filter = cfg.filter.clone().unwrap_or_default();
    let diss = dissipators(cfg)?;
    let jobs = grid_jobs(cfg);
    let nested = run_parallel(&jobs, threads, |&(bi, beta, t_pi, id)| {
        let row = |omega_c: Option<f64>, seed: u64| FilterRecord {
            beta,
            t_pi,
            target_id: id,
            seed,
            omega_c,
            oversample: if omega_c.is_some() { filter.oversample } else { 1 },
            closed_fidelity: None,
            open_fidelity: None,
            error: None,
        };
        let outcome = (|| -> Result<Vec<FilterRecord>> {
            let (target, seed) = cfg.target(id)?;
            let report = optimize(cfg, beta, t_pi, &target, seed, 0.0)?;
            let system = cfg.system(beta)?;
            let open_diss = diss[bi].as_ref().filter(|_| filter.open_system);
            let mut rows = Vec::new();
            let mut base = row(None, seed);
            base.closed_fidelity = Some(closed_fidelity(&system, &report.waveform, &target, 0.0)?);
            if let Some(d) = open_diss {
                base.open_fidelity = Some(open_fidelity(&system, &report.waveform, &target, d, 0.0)?);
            }
            rows.push(base);
            for &wc in &filter.corner_frequencies {
                let fw = low_pass_filter(&report.waveform, wc, filter.oversample)?;
                let mut r = row(Some(wc), seed);
                r.closed_fidelity = Some(evaluate_filtered(&fw, Evaluation::Closed, &system, &target, 0.0)?);
                if let Some(d) = open_diss {
                    r.open_fidelity = Some(evaluate_filtered(&fw, Evaluation::Open(d), &system, &target, 0.0)?);
                }
                rows.push(r);
            }
            Ok(rows)
        })();
        outcome.unwrap_or_else(|e| {
            let mut r = row(None, 0);
            r.error = Some(e.to_string());
            vec![r]
        })
    })?;
    Ok(nested.into_iter().flatten().collect())
}
