use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Waveform;
use crate::error::Result;

use super::{Objective, OptimizationProblem};

/// Stopping rules and line-search settings.
///
/// Steps are projected L-BFGS directions on `1 − F` with Armijo backtracking
/// starting from `initial_step`. If the quasi-Newton direction fails, one
/// steepest-descent attempt (scaled to unit max-norm) is made before the run
/// is declared stalled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrapeOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub fid_goal: f64,
    pub initial_step: f64,
    pub armijo_c1: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub memory: usize,
    /// Extra runs from random seeds when the first run misses `fid_goal`.
    pub restarts: usize,
    pub restart_seed: u64,
}

impl Default for GrapeOptions {
    fn default() -> Self {
        GrapeOptions {
            max_iters: 5000,
            grad_tol: 1e-8,
            fid_goal: 1.0 - 1e-6,
            initial_step: 1.0,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            memory: 10,
            restarts: 0,
            restart_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIters,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub waveform: Waveform,
    pub fidelity: f64,
    /// Objective after each accepted step; entry 0 is the seed.
    pub fidelity_history: Vec<f64>,
    pub gradient_norm_history: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub restarts_used: usize,
}

/// Clips successive differences to `±limit` in a forward sweep. The result
/// satisfies `|c_{j+1} − c_j| ≤ limit` exactly in floating point, and
/// feasible input is returned unchanged.
pub fn project_slew(values: &mut [f64], limit: f64) {
    for j in 1..values.len() {
        let prev = values[j - 1];
        let diff = values[j] - prev;
        if diff > limit {
            let mut v = prev + limit;
            while v - prev > limit {
                v = v.next_down();
            }
            values[j] = v;
        } else if diff < -limit {
            let mut v = prev - limit;
            while prev - v > limit {
                v = v.next_up();
            }
            values[j] = v;
        }
    }
}

/// Groups of consecutive steps tied together by active slew constraints.
///
/// Every edge sitting on the limit starts tied; an edge is then released when
/// the force the block transmits across it (the partial sum of `−g` minus the
/// block mean) would pull the pair back inside the limit.
fn active_blocks(x: &[f64], g: &[f64], limit: f64) -> Vec<(usize, usize)> {
    let tol = limit * 1e-9;
    let n = x.len();
    let mut sign = vec![0i8; n.saturating_sub(1)];
    for j in 0..sign.len() {
        let diff = x[j + 1] - x[j];
        if diff >= limit - tol {
            sign[j] = 1;
        } else if diff <= -limit + tol {
            sign[j] = -1;
        }
    }
    let mut blocks = Vec::new();
    let mut pending = Vec::new();
    let mut start = 0;
    for j in 0..=sign.len() {
        if j == sign.len() || sign[j] == 0 {
            if j > start {
                pending.push((start, j));
            }
            start = j + 1;
        }
    }
    while let Some((a, b)) = pending.pop() {
        let mean = -g[a..=b].iter().sum::<f64>() / (b - a + 1) as f64;
        let mut force = 0.0;
        let mut worst: Option<(usize, f64)> = None;
        for k in a..b {
            force += -g[k] - mean;
            // Positive force on an upper bound, or negative on a lower one,
            // means the left part wants to close the gap.
            let release = force * sign[k] as f64;
            if release > 0.0 && worst.is_none_or(|(_, w)| release > w) {
                worst = Some((k, release));
            }
        }
        match worst {
            Some((k, _)) => {
                if k > a {
                    pending.push((a, k));
                }
                if b > k + 1 {
                    pending.push((k + 1, b));
                }
            }
            None => blocks.push((a, b)),
        }
    }
    blocks.sort_unstable();
    blocks
}

/// Replaces each tied block by its mean so the block moves rigidly.
fn restrict(v: &mut [f64], blocks: &[(usize, usize)]) {
    for &(a, b) in blocks {
        let mean = v[a..=b].iter().sum::<f64>() / (b - a + 1) as f64;
        v[a..=b].iter_mut().for_each(|x| *x = mean);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Run {
    values: Vec<f64>,
    fidelity: f64,
    fidelity_history: Vec<f64>,
    gradient_norm_history: Vec<f64>,
    iterations: usize,
    termination: Termination,
}

struct Accepted {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

struct Descent<'a> {
    objective: &'a Objective,
    slew_limit: Option<f64>,
    options: &'a GrapeOptions,
}

impl Descent<'_> {
    fn project(&self, x: &mut [f64]) {
        if let Some(l) = self.slew_limit {
            project_slew(x, l);
        }
    }

    /// Gradient with tied blocks averaged; zero exactly at constrained
    /// stationary points of the rigid-block model.
    fn reduced_gradient(&self, x: &[f64], g: &[f64]) -> (Vec<(usize, usize)>, Vec<f64>) {
        let mut pg = g.to_vec();
        let blocks = match self.slew_limit {
            Some(l) => active_blocks(x, g, l),
            None => Vec::new(),
        };
        restrict(&mut pg, &blocks);
        (blocks, pg)
    }

    /// Loss `1 − F` and its gradient.
    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (fid, grad) = self.objective.value_and_gradient(x);
        (1.0 - fid, grad.into_iter().map(|g| -g).collect())
    }

    fn line_search(&self, x: &[f64], f: f64, g: &[f64], d: &[f64]) -> Option<Accepted> {
        let opts = self.options;
        let mut alpha = opts.initial_step;
        for _ in 0..opts.max_backtracks {
            let mut trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
            self.project(&mut trial);
            let step: Vec<f64> = trial.iter().zip(x).map(|(t, xi)| t - xi).collect();
            let slope = dot(g, &step);
            if slope < 0.0 {
                let (ft, gt) = self.evaluate(&trial);
                if ft <= f + opts.armijo_c1 * slope && ft < f {
                    return Some(Accepted { x: trial, f: ft, g: gt });
                }
            } else if step.iter().all(|s| *s == 0.0) {
                return None;
            }
            alpha *= opts.backtrack_factor;
        }
        None
    }

    fn run(&self, start: Vec<f64>) -> Run {
        let opts = self.options;
        let mut x = start;
        self.project(&mut x);
        let (mut f, mut g) = self.evaluate(&x);
        let mut fidelity_history = vec![1.0 - f];
        let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut iterations = 0;

        let mut pg = self.reduced_gradient(&x, &g).1;
        let mut gradient_norm_history = vec![norm(&pg)];
        let termination = loop {
            if 1.0 - f >= opts.fid_goal || norm(&pg) <= opts.grad_tol {
                break Termination::Converged;
            }
            if iterations >= opts.max_iters {
                break Termination::MaxIters;
            }
            let blocks = self.reduced_gradient(&x, &g).0;
            let mut d = lbfgs_direction(&pg, &memory);
            restrict(&mut d, &blocks);
            let mut accepted = None;
            if dot(&d, &g) < 0.0 {
                accepted = self.line_search(&x, f, &g, &d);
            }
            if accepted.is_none() {
                memory.clear();
                let scale = pg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if scale > 0.0 {
                    d = pg.iter().map(|v| -v / scale).collect();
                    accepted = self.line_search(&x, f, &g, &d);
                }
            }
            let Some(next) = accepted else {
                break Termination::Stalled;
            };

            let s: Vec<f64> = next.x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next.g.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) {
                if memory.len() == opts.memory.max(1) {
                    memory.pop_front();
                }
                memory.push_back((s, y, 1.0 / sy));
            }
            x = next.x;
            f = next.f;
            g = next.g;
            pg = self.reduced_gradient(&x, &g).1;
            iterations += 1;
            fidelity_history.push(1.0 - f);
            gradient_norm_history.push(norm(&pg));
        };

        Run {
            values: x,
            fidelity: 1.0 - f,
            fidelity_history,
            gradient_norm_history,
            iterations,
            termination,
        }
    }
}

/// L-BFGS two-loop recursion; returns `−H g`.
fn lbfgs_direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Maximizes the problem's objective from its seed waveform.
pub fn grape_optimize(p: &OptimizationProblem, options: &GrapeOptions) -> Result<OptimizationReport> {
    let objective = p.objective()?;
    let descent = Descent {
        objective: &objective,
        slew_limit: p.slew_limit(),
        options,
    };
    let mut best = descent.run(p.seed_waveform().to_vec());
    let mut restarts_used = 0;
    if best.termination != Termination::Converged {
        let mut rng = ChaCha8Rng::seed_from_u64(options.restart_seed);
        for r in 1..=options.restarts {
            let start: Vec<f64> = (0..p.n()).map(|_| rng.random_range(-0.5..0.5)).collect();
            let run = descent.run(start);
            restarts_used = r;
            let done = run.termination == Termination::Converged;
            if run.fidelity > best.fidelity {
                best = run;
            }
            if done {
                break;
            }
        }
    }
    Ok(OptimizationReport {
        waveform: p.waveform(best.values)?,
        fidelity: best.fidelity,
        fidelity_history: best.fidelity_history,
        gradient_norm_history: best.gradient_norm_history,
        iterations: best.iterations,
        termination: best.termination,
        restarts_used,
    })
}
