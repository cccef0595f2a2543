use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use qudit_control::harness::{
    extract_qsl, run_filter_eval, run_kappa_curve, run_landscape, run_robust_comparison, write_csv,
    ExperimentConfig, Manifest, TaskKind,
};
use qudit_control::waveform::io::{write_waveform_csv, write_waveform_json, Meta};
use qudit_control::{Error, Result};

#[derive(Parser)]
#[command(name = "qdc", version, about = "Optimal control experiments for a nuclear-spin qudit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "QDC_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize Haar-random state maps and write the waveforms.
    OptimizeState(Common),
    /// Optimize Haar-random unitaries and write the waveforms.
    OptimizeUnitary(Common),
    /// β × T landscape with per-cell means and speed-limit estimates.
    Sweep(Common),
    /// Robust versus non-robust waveforms at ε = ±δ.
    Robust(Common),
    /// Figure of merit over a detuning grid.
    Kappa(Common),
    /// Fidelity after the low-pass filter for each corner frequency.
    FilterEval(Common),
    /// Landscape scored under the open-system model.
    EvaluateOpen(Common),
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn finish(mut manifest: Manifest, out: &Path, started: Instant) -> Result<()> {
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.files.push("manifest.json".into());
    manifest.write(&out.join("manifest.json"))?;
    println!("wrote {} files to {}", manifest.files.len(), out.display());
    Ok(())
}

fn landscape(name: &str, cfg: ExperimentConfig, out: &Path, common: &Common, waveforms: bool) -> Result<()> {
    let started = Instant::now();
    cfg.validate()?;
    let sweep = run_landscape(&cfg, common.threads)?;
    let mut manifest = Manifest::new(name, &cfg, common.threads);

    let stem = if cfg.open_enabled() { "open_landscape" } else { "landscape" };
    write_csv(&out.join(format!("{stem}.csv")), &sweep.records)?;
    write_csv(&out.join("cells.csv"), &sweep.cell_summaries())?;
    write_csv(&out.join("qsl.csv"), &extract_qsl(&sweep, cfg.qsl_threshold))?;
    manifest.files.extend([format!("{stem}.csv"), "cells.csv".into(), "qsl.csv".into()]);

    if waveforms {
        let dir = out.join("waveforms");
        fs::create_dir_all(&dir)?;
        for r in &sweep.records {
            let Some(report) = &r.report else { continue };
            let stem = format!("beta{}_T{}pi_target{}", r.beta, r.t_pi, r.target_id);
            let mut meta = Meta::new();
            meta.insert("seed".into(), Value::from(r.seed));
            meta.insert("beta".into(), Value::from(r.beta));
            meta.insert("fidelity".into(), Value::from(report.fidelity));
            meta.insert("task".into(), serde_json::to_value(cfg.task).expect("task serializes"));
            meta.insert("config_sha256".into(), Value::from(manifest.config_sha256.clone()));
            write_waveform_json(&dir.join(format!("{stem}.json")), &report.waveform, &meta)?;
            write_waveform_csv(&dir.join(format!("{stem}.csv")), &report.waveform)?;
            let text = serde_json::to_string_pretty(report).expect("report serializes");
            fs::write(dir.join(format!("{stem}.report.json")), text + "\n")?;
            manifest.files.push(format!("waveforms/{stem}.json"));
        }
    }
    for r in &sweep.records {
        if let Some(e) = &r.error {
            manifest.warnings.push(format!("β = {}, T = {}, target {}: {e}", r.beta, r.t_pi, r.target_id));
        }
    }
    manifest.job_wall_times_s = sweep.records.iter().map(|r| r.wall_time).collect();
    finish(manifest, out, started)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::OptimizeState(c) => {
            let (mut cfg, out) = load(&c)?;
            cfg.task = TaskKind::State;
            landscape("optimize-state", cfg, &out, &c, true)
        }
        Command::OptimizeUnitary(c) => {
            let (mut cfg, out) = load(&c)?;
            cfg.task = TaskKind::Unitary;
            landscape("optimize-unitary", cfg, &out, &c, true)
        }
        Command::Sweep(c) => {
            let (cfg, out) = load(&c)?;
            landscape("sweep", cfg, &out, &c, false)
        }
        Command::EvaluateOpen(c) => {
            let (mut cfg, out) = load(&c)?;
            match cfg.open_system.as_mut() {
                Some(open) => open.enabled = true,
                None => {
                    return Err(Error::Config(
                        "evaluate-open needs an `open_system` block with `offset_11_from_9_mhz`".into(),
                    ))
                }
            }
            landscape("evaluate-open", cfg, &out, &c, false)
        }
        Command::Robust(c) => {
            let started = Instant::now();
            let (cfg, out) = load(&c)?;
            let rows = run_robust_comparison(&cfg, c.threads)?;
            let mut manifest = Manifest::new("robust", &cfg, c.threads);
            write_csv(&out.join("robust.csv"), &rows)?;
            manifest.files.push("robust.csv".into());
            manifest.job_wall_times_s = rows.iter().map(|r| r.wall_time).collect();
            manifest.warnings = rows.iter().filter_map(|r| r.error.clone()).collect();
            finish(manifest, &out, started)
        }
        Command::Kappa(c) => {
            let started = Instant::now();
            let (cfg, out) = load(&c)?;
            let (rows, warnings) = run_kappa_curve(&cfg)?;
            let mut manifest = Manifest::new("kappa", &cfg, c.threads);
            write_csv(&out.join("kappa.csv"), &rows)?;
            manifest.files.push("kappa.csv".into());
            manifest.warnings = warnings;
            finish(manifest, &out, started)
        }
        Command::FilterEval(c) => {
            let started = Instant::now();
            let (cfg, out) = load(&c)?;
            let rows = run_filter_eval(&cfg, c.threads)?;
            let mut manifest = Manifest::new("filter-eval", &cfg, c.threads);
            write_csv(&out.join("filter.csv"), &rows)?;
            manifest.files.push("filter.csv".into());
            manifest.warnings = rows.iter().filter_map(|r| r.error.clone()).collect();
            finish(manifest, &out, started)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qdc: {e}");
            ExitCode::FAILURE
        }
    }
}
