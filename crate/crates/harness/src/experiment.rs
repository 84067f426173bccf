//! Seeded experiment runs, controller training and baseline sweeps.

use std::path::{Path, PathBuf};

use aclr_core::controller::{evaluate_policy, train_controller, Actor, StepRecord};
use aclr_core::nets::ModelState;
use aclr_core::optim::{lr_grid, OptimizerKind};
use aclr_core::tasks::Task;
use aclr_core::trainee::{initial_model, run_baseline};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::output::{aggregate, mean_std, write_aggregate_csv, write_trace_csv};
use crate::plot::{emit_plot, emit_trajectory_plot};

/// Result of one seed: the trace (partial when the run diverged).
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: Vec<StepRecord>,
    /// Step at which the loss left the finite range, if it did.
    pub diverged_at: Option<usize>,
}

impl SeedRun {
    pub fn final_test_loss(&self) -> Option<f64> {
        if self.diverged_at.is_some() {
            return None;
        }
        self.trace.last().and_then(|r| r.test_loss)
    }

    /// Batch loss after the last update.
    pub fn final_train_loss(&self) -> Option<f64> {
        if self.diverged_at.is_some() {
            return None;
        }
        self.trace.last().map(|r| r.f_after)
    }
}

fn capture(seed: u64, result: aclr_core::Result<Vec<StepRecord>>) -> Result<SeedRun> {
    match result {
        Ok(trace) => Ok(SeedRun {
            seed,
            trace,
            diverged_at: None,
        }),
        Err(aclr_core::Error::Divergence { step, trace, .. }) => Ok(SeedRun {
            seed,
            trace,
            diverged_at: Some(step),
        }),
        Err(e) => Err(e.into()),
    }
}

pub fn save_actor(path: &Path, actor: &Actor) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    let text = serde_json::to_string(actor)?;
    std::fs::write(path, text).map_err(Error::io(path))
}

pub fn load_actor(path: &Path) -> Result<Actor> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let mut actor: Actor = serde_json::from_str(&text)?;
    actor.reset();
    Ok(actor)
}

/// A controller trained for one seed, with its training trace.
#[derive(Debug, Clone)]
pub struct TrainedController {
    pub seed: u64,
    pub actor: Option<Actor>,
    pub run: SeedRun,
}

/// Trains one controller on `task` for `cfg.controller_train_steps()` steps.
pub fn train_for_seed(cfg: &ExperimentConfig, task: &Task, seed: u64) -> Result<TrainedController> {
    match train_controller(task, &cfg.training_settings(seed), cfg.controller_config()) {
        Ok(out) => Ok(TrainedController {
            seed,
            actor: Some(out.controller.actor),
            run: SeedRun {
                seed,
                trace: out.trace,
                diverged_at: None,
            },
        }),
        Err(aclr_core::Error::Divergence { step, trace, .. }) => Ok(TrainedController {
            seed,
            actor: None,
            run: SeedRun {
                seed,
                trace,
                diverged_at: Some(step),
            },
        }),
        Err(e) => Err(e.into()),
    }
}

/// Runs one seed of `cfg.method` on `task`. Controller runs use `actor`
/// when given and otherwise train one first.
pub fn run_seed(cfg: &ExperimentConfig, task: &Task, seed: u64, actor: Option<&Actor>) -> Result<SeedRun> {
    let settings = cfg.run_settings(seed);
    match cfg.method.optimizer() {
        Some(kind) => {
            let lr = cfg
                .lr
                .ok_or_else(|| Error::Config(format!("method {} needs an lr", cfg.method)))?;
            capture(seed, run_baseline(task, &settings, kind, lr))
        }
        None => match actor {
            Some(a) => capture(seed, evaluate_policy(a, task, &settings)),
            None => {
                let trained = train_for_seed(cfg, task, seed)?;
                match trained.actor {
                    Some(a) => capture(seed, evaluate_policy(&a, task, &settings)),
                    None => Ok(trained.run),
                }
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub csv: PathBuf,
    pub diverged_at: Option<usize>,
    pub final_train_loss: Option<f64>,
    pub final_test_loss: Option<f64>,
}

/// Final-loss statistics over the seeds that did not diverge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub lr: Option<f64>,
    pub steps: usize,
    pub runs: usize,
    pub diverged: usize,
    pub final_train_loss_mean: Option<f64>,
    pub final_train_loss_std: Option<f64>,
    pub final_test_loss_mean: Option<f64>,
    pub final_test_loss_std: Option<f64>,
    pub seeds: Vec<SeedSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub seed_csvs: Vec<PathBuf>,
    pub aggregate_csv: PathBuf,
    pub summary_path: PathBuf,
    pub actor_files: Vec<PathBuf>,
    pub svgs: Vec<PathBuf>,
    pub summary: Summary,
}

fn file_stem(cfg: &ExperimentConfig) -> String {
    match cfg.lr {
        Some(lr) if cfg.method != Method::Controller => format!("{}_lr{lr}", cfg.method),
        _ => cfg.method.to_string(),
    }
}

/// Runs every seed of `cfg`, writing one trace CSV per seed, the per-step
/// aggregate over seeds that did not diverge, and a JSON summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let task = cfg.task.load()?;
    run_experiment_on(cfg, &task)
}

/// [`run_experiment`] on an already loaded task.
pub fn run_experiment_on(cfg: &ExperimentConfig, task: &Task) -> Result<RunArtifacts> {
    cfg.validate()?;
    let stem = file_stem(cfg);
    let dir = &cfg.output_dir;
    let shared = cfg.controller.as_deref().map(load_actor).transpose()?;

    let mut runs = Vec::with_capacity(cfg.seeds.len());
    let mut seed_csvs = Vec::new();
    let mut actor_files = Vec::new();
    for &seed in &cfg.seeds {
        let run = if cfg.method == Method::Controller && shared.is_none() {
            let trained = train_for_seed(cfg, task, seed)?;
            let train_csv = dir.join(format!("{stem}_train_seed{seed}.csv"));
            write_trace_csv(&train_csv, &trained.run.trace)?;
            match trained.actor {
                Some(actor) => {
                    let path = dir.join(format!("{stem}_actor_seed{seed}.json"));
                    save_actor(&path, &actor)?;
                    actor_files.push(path);
                    capture(seed, evaluate_policy(&actor, task, &cfg.run_settings(seed)))?
                }
                None => trained.run,
            }
        } else {
            run_seed(cfg, task, seed, shared.as_ref())?
        };
        let csv = dir.join(format!("{stem}_seed{seed}.csv"));
        write_trace_csv(&csv, &run.trace)?;
        seed_csvs.push(csv);
        runs.push(run);
    }

    let ok: Vec<&[StepRecord]> = runs
        .iter()
        .filter(|r| r.diverged_at.is_none())
        .map(|r| r.trace.as_slice())
        .collect();
    let aggregate_csv = dir.join(format!("{stem}_aggregate.csv"));
    write_aggregate_csv(&aggregate_csv, &aggregate(&ok))?;

    let train: Vec<f64> = runs.iter().filter_map(SeedRun::final_train_loss).collect();
    let test: Vec<f64> = runs.iter().filter_map(SeedRun::final_test_loss).collect();
    let summary = Summary {
        method: cfg.method.to_string(),
        lr: cfg.lr.filter(|_| cfg.method != Method::Controller),
        steps: cfg.steps,
        runs: runs.len(),
        diverged: runs.iter().filter(|r| r.diverged_at.is_some()).count(),
        final_train_loss_mean: mean_std(&train).map(|m| m.0),
        final_train_loss_std: mean_std(&train).map(|m| m.1),
        final_test_loss_mean: mean_std(&test).map(|m| m.0),
        final_test_loss_std: mean_std(&test).map(|m| m.1),
        seeds: runs
            .iter()
            .zip(&seed_csvs)
            .map(|(r, csv)| SeedSummary {
                seed: r.seed,
                csv: csv.clone(),
                diverged_at: r.diverged_at,
                final_train_loss: r.final_train_loss(),
                final_test_loss: r.final_test_loss(),
            })
            .collect(),
    };
    let summary_path = dir.join(format!("{stem}_summary.json"));
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?).map_err(Error::io(&summary_path))?;

    let loss_svg = dir.join(format!("{stem}_loss.svg"));
    emit_plot(&aggregate_csv, &["train_loss_mean", "test_loss_mean"], &loss_svg)?;

    Ok(RunArtifacts {
        seed_csvs,
        aggregate_csv,
        summary_path,
        actor_files,
        svgs: vec![loss_svg],
        summary,
    })
}

/// Parameter trajectory of the first seed of `cfg` on `task`: the starting
/// point and the trace with per-step parameters recorded. A diverged run
/// yields its partial trace.
pub fn trajectory(cfg: &ExperimentConfig, task: &Task, actor: Option<&Actor>) -> Result<(ModelState, Vec<StepRecord>)> {
    cfg.validate()?;
    let seed = cfg.seeds[0];
    let mut settings = cfg.run_settings(seed);
    settings.record_params = true;
    let omega0 = initial_model(task, &settings)?;
    let result = match cfg.method.optimizer() {
        Some(kind) => {
            let lr = cfg
                .lr
                .ok_or_else(|| Error::Config(format!("method {} needs an lr", cfg.method)))?;
            run_baseline(task, &settings, kind, lr)
        }
        None => {
            let trained;
            let actor = match actor {
                Some(a) => a,
                None => {
                    trained = train_for_seed(cfg, task, seed)?;
                    match &trained.actor {
                        Some(a) => a,
                        None => return Err(Error::Config(format!("controller training diverged for seed {seed}"))),
                    }
                }
            };
            evaluate_policy(actor, task, &settings)
        }
    };
    Ok((omega0, capture(seed, result)?.trace))
}

/// [`trajectory`] rendered as a contour plot at `out`.
pub fn emit_trajectory(cfg: &ExperimentConfig, task: &Task, actor: Option<&Actor>, out: &Path) -> Result<usize> {
    cfg.validate()?;
    let n = cfg.run_settings(cfg.seeds[0]).trainee_spec(task).param_count();
    if n != 2 {
        return Err(Error::DimensionError(n));
    }
    let (omega0, trace) = trajectory(cfg, task, actor)?;
    emit_trajectory_plot(&trace, &omega0, task, out)?;
    Ok(trace.len())
}

/// One (optimizer, learning rate) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub runs: usize,
    pub diverged: usize,
    pub final_train_loss_mean: Option<f64>,
    pub final_test_loss_mean: Option<f64>,
    pub final_test_loss_std: Option<f64>,
    pub error: Option<String>,
    /// Lowest mean final test loss of its optimizer among cells where no
    /// seed diverged.
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub csv: PathBuf,
}

impl SweepReport {
    pub fn best(&self, kind: OptimizerKind) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.optimizer == kind && r.best)
    }

    /// Best cell over all optimizers.
    pub fn overall_best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.best)
            .min_by(|a, b| a.final_test_loss_mean.unwrap().total_cmp(&b.final_test_loss_mean.unwrap()))
    }
}

fn pick_best(rows: &mut [SweepRow]) {
    for kind in OptimizerKind::ALL {
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.optimizer == kind && r.diverged == 0 && r.error.is_none())
            .filter_map(|(i, r)| r.final_test_loss_mean.map(|m| (i, m)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, _)) = best {
            rows[i].best = true;
        }
    }
}

/// Runs `kinds x lr_grid()` over `cfg.seeds` and writes `sweep.csv`.
pub fn sweep_baselines_with(cfg: &ExperimentConfig, task: &Task, kinds: &[OptimizerKind]) -> Result<SweepReport> {
    let mut rows = Vec::new();
    for &kind in kinds {
        for lr in lr_grid() {
            let cell = ExperimentConfig {
                method: kind.into(),
                lr: Some(lr),
                ..cfg.clone()
            };
            let runs: Result<Vec<SeedRun>> = cfg.seeds.iter().map(|&s| run_seed(&cell, task, s, None)).collect();
            let row = match runs {
                Ok(runs) => {
                    let train: Vec<f64> = runs.iter().filter_map(SeedRun::final_train_loss).collect();
                    let test: Vec<f64> = runs.iter().filter_map(SeedRun::final_test_loss).collect();
                    SweepRow {
                        optimizer: kind,
                        lr,
                        runs: runs.len(),
                        diverged: runs.iter().filter(|r| r.diverged_at.is_some()).count(),
                        final_train_loss_mean: mean_std(&train).map(|m| m.0),
                        final_test_loss_mean: mean_std(&test).map(|m| m.0),
                        final_test_loss_std: mean_std(&test).map(|m| m.1),
                        error: None,
                        best: false,
                    }
                }
                Err(e) => SweepRow {
                    optimizer: kind,
                    lr,
                    runs: 0,
                    diverged: 0,
                    final_train_loss_mean: None,
                    final_test_loss_mean: None,
                    final_test_loss_std: None,
                    error: Some(e.to_string()),
                    best: false,
                },
            };
            rows.push(row);
        }
    }
    pick_best(&mut rows);
    let csv = cfg.output_dir.join("sweep.csv");
    write_sweep_csv(&csv, &rows)?;
    Ok(SweepReport { rows, csv })
}

/// Every baseline optimizer over the learning-rate grid.
pub fn sweep_baselines(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let task = cfg.task.load()?;
    sweep_baselines_with(cfg, &task, &OptimizerKind::ALL)
}

pub const SWEEP_COLUMNS: [&str; 9] = [
    "optimizer",
    "lr",
    "runs",
    "diverged",
    "final_train_loss_mean",
    "final_test_loss_mean",
    "final_test_loss_std",
    "best",
    "error",
];

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    let file = std::fs::File::create(path).map_err(Error::io(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(SWEEP_COLUMNS)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.optimizer.name().to_string(),
            r.lr.to_string(),
            r.runs.to_string(),
            r.diverged.to_string(),
            opt(r.final_train_loss_mean),
            opt(r.final_test_loss_mean),
            opt(r.final_test_loss_std),
            r.best.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(Error::io(path))?;
    Ok(())
}
