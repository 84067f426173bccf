//! The `aclr` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, Method, TaskSpec};
use crate::error::{Error, Result};
use crate::experiment::{emit_trajectory, load_actor, run_experiment, sweep_baselines};
use crate::plot::emit_plot;

/// Exit code for invalid invocations and configurations.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for failures while running.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "aclr", version, about = "Learned learning-rate control for SGD: train, evaluate, sweep and plot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one controller per seed, then evaluate it with the actor frozen.
    TrainController(RunArgs),
    /// Run a method (a baseline at --lr, or the controller) for every seed.
    Evaluate(RunArgs),
    /// Run every baseline optimizer over the learning-rate grid.
    Sweep(RunArgs),
    /// Render columns of a CSV file as an SVG line chart.
    Plot(PlotArgs),
    /// Plot the first seed's parameter trajectory over loss contours.
    Trajectory(TrajectoryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Regression,
    Quad,
    Mnist,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML file with experiment settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task to train on.
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    /// Directory with the MNIST IDX files (required for --task mnist).
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    /// Seed of the random regression problem.
    #[arg(long)]
    task_seed: Option<u64>,
    /// Label noise standard deviation of the regression task.
    #[arg(long)]
    noise: Option<f64>,
    /// Curvature `a` of the quadratic task `a * w^2`.
    #[arg(long)]
    curvature: Option<f64>,
    /// Training examples (MNIST: stratified subset size).
    #[arg(long)]
    n_train: Option<usize>,
    /// Test examples (MNIST: stratified subset size).
    #[arg(long)]
    n_test: Option<usize>,
    /// Learning-rate source.
    #[arg(long)]
    method: Option<Method>,
    /// Fixed learning rate of a baseline method.
    #[arg(long)]
    lr: Option<f64>,
    /// Trainee steps per run.
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Mini-batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Critic discount factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// Actor gradient accumulation steps.
    #[arg(long)]
    m_theta: Option<usize>,
    /// Critic gradient accumulation steps.
    #[arg(long)]
    m_phi: Option<usize>,
    /// Steps between trainee resets while training the controller.
    #[arg(long)]
    reset_every: Option<usize>,
    /// Controller training steps per seed.
    #[arg(long)]
    train_steps: Option<usize>,
    /// Exploration noise on the actor output while training.
    #[arg(long)]
    exploration: Option<f64>,
    /// Disable clipping of the TD error.
    #[arg(long)]
    no_td_clip: bool,
    /// Record the distance between batch and full-data gradients.
    #[arg(long)]
    record_disagreement: bool,
    /// Test-loss evaluation period in steps.
    #[arg(long)]
    eval_every: Option<usize>,
    /// Trained actor (JSON) to evaluate instead of training one.
    #[arg(long)]
    controller: Option<PathBuf>,
    /// Directory for CSV, JSON and SVG output.
    #[arg(long, env = "ACLR_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Input CSV file.
    #[arg(long)]
    csv: PathBuf,
    /// Comma-separated columns to draw.
    #[arg(long, value_delimiter = ',', required = true)]
    columns: Vec<String>,
    /// Output SVG file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Output SVG file; `<output-dir>/trajectory.svg` when unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    /// Builds the config from the optional file and the flags.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(task) = self.task {
            cfg.task = match task {
                TaskArg::Regression => TaskSpec::default(),
                TaskArg::Quad => TaskSpec::Quadratic {
                    curvature: 1.0,
                    n_train: 100,
                    n_test: 20,
                },
                TaskArg::Mnist => match &self.mnist_dir {
                    Some(dir) => TaskSpec::mnist(dir),
                    None => return Err(Error::Config("--task mnist requires --mnist-dir".into())),
                },
            };
        } else if let (Some(dir), TaskSpec::Mnist { dir: d, .. }) = (&self.mnist_dir, &mut cfg.task) {
            *d = dir.clone();
        }
        match &mut cfg.task {
            TaskSpec::Regression {
                seed,
                n_train,
                n_test,
                noise,
            } => {
                set(seed, self.task_seed);
                set(n_train, self.n_train);
                set(n_test, self.n_test);
                set(noise, self.noise);
            }
            TaskSpec::Quadratic {
                curvature,
                n_train,
                n_test,
            } => {
                set(curvature, self.curvature);
                set(n_train, self.n_train);
                set(n_test, self.n_test);
            }
            TaskSpec::Mnist { n_train, n_test, .. } => {
                set(n_train, self.n_train);
                if self.n_test.is_some() {
                    *n_test = self.n_test;
                }
            }
        }
        set(&mut cfg.method, self.method);
        if self.lr.is_some() {
            cfg.lr = self.lr;
        }
        set(&mut cfg.steps, self.steps);
        set(&mut cfg.seeds, self.seeds.clone());
        set(&mut cfg.batch_size, self.batch_size);
        set(&mut cfg.gamma, self.gamma);
        set(&mut cfg.m_theta, self.m_theta);
        set(&mut cfg.m_phi, self.m_phi);
        if self.reset_every.is_some() {
            cfg.e = self.reset_every;
        }
        if self.train_steps.is_some() {
            cfg.train_steps = self.train_steps;
        }
        set(&mut cfg.exploration, self.exploration);
        cfg.td_clip &= !self.no_td_clip;
        cfg.record_disagreement |= self.record_disagreement;
        set(&mut cfg.eval_every, self.eval_every);
        if self.controller.is_some() {
            cfg.controller = self.controller.clone();
        }
        set(&mut cfg.output_dir, self.output_dir.clone());
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::TrainController(args) => {
            let mut cfg = args.resolve()?;
            cfg.method = Method::Controller;
            cfg.controller = None;
            let art = run_experiment(&cfg)?;
            for p in &art.actor_files {
                println!("actor: {}", p.display());
            }
            report(&art);
        }
        Command::Evaluate(args) => {
            let cfg = args.resolve()?;
            report(&run_experiment(&cfg)?);
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let rep = sweep_baselines(&cfg)?;
            for row in rep.rows.iter().filter(|r| r.best) {
                println!(
                    "best {:<9} lr={:<7} final test loss {:.6e}",
                    row.optimizer.name(),
                    row.lr,
                    row.final_test_loss_mean.unwrap_or(f64::NAN)
                );
            }
            println!("report: {}", rep.csv.display());
        }
        Command::Plot(args) => {
            let cols: Vec<&str> = args.columns.iter().map(String::as_str).collect();
            emit_plot(&args.csv, &cols, &args.out)?;
            println!("plot: {}", args.out.display());
        }
        Command::Trajectory(args) => {
            let cfg = args.run.resolve()?;
            cfg.validate()?;
            let task = cfg.task.load()?;
            let actor = cfg.controller.as_deref().map(load_actor).transpose()?;
            let out = args.out.unwrap_or_else(|| cfg.output_dir.join("trajectory.svg"));
            let steps = emit_trajectory(&cfg, &task, actor.as_ref(), &out)?;
            println!("trajectory: {} ({steps} steps)", out.display());
        }
    }
    Ok(())
}

fn report(art: &crate::experiment::RunArtifacts) {
    let s = &art.summary;
    let fmt = |m: Option<f64>, d: Option<f64>| match (m, d) {
        (Some(m), Some(d)) => format!("{m:.6e} +/- {d:.3e}"),
        _ => "n/a".into(),
    };
    println!(
        "{}: {} runs, {} diverged; final train loss {}; final test loss {}",
        s.method,
        s.runs,
        s.diverged,
        fmt(s.final_train_loss_mean, s.final_train_loss_std),
        fmt(s.final_test_loss_mean, s.final_test_loss_std)
    );
    println!("aggregate: {}", art.aggregate_csv.display());
    println!("summary: {}", art.summary_path.display());
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 2 for usage or configuration errors and
/// 1 for failures while running.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Toml(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}
