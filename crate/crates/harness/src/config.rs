use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aclr_core::controller::ControllerConfig;
use aclr_core::optim::OptimizerKind;
use aclr_core::tasks::{gen_regression_2d, load_mnist_idx, mnist_paths, quadratic, subset, Task, TaskKind};
use aclr_core::trainee::RunSettings;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which task to build and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Regression {
        seed: u64,
        n_train: usize,
        n_test: usize,
        noise: f64,
    },
    Quadratic {
        curvature: f64,
        n_train: usize,
        n_test: usize,
    },
    Mnist {
        /// Directory holding the four IDX files (optionally gzipped).
        dir: PathBuf,
        /// Stratified training subset size.
        n_train: usize,
        /// Stratified test subset size; the whole test split when unset.
        n_test: Option<usize>,
        subset_seed: u64,
    },
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec::Regression {
            seed: 1,
            n_train: 1000,
            n_test: 500,
            noise: 0.1,
        }
    }
}

impl TaskSpec {
    pub fn mnist(dir: impl Into<PathBuf>) -> Self {
        TaskSpec::Mnist {
            dir: dir.into(),
            n_train: 2000,
            n_test: None,
            subset_seed: 0,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            TaskSpec::Regression { .. } => TaskKind::Regression2d,
            TaskSpec::Quadratic { .. } => TaskKind::Quadratic,
            TaskSpec::Mnist { .. } => TaskKind::Mnist,
        }
    }

    pub fn load(&self) -> Result<Task> {
        match self {
            TaskSpec::Regression {
                seed,
                n_train,
                n_test,
                noise,
            } => Ok(gen_regression_2d(*seed, *n_train, *n_test, *noise)?),
            TaskSpec::Quadratic {
                curvature,
                n_train,
                n_test,
            } => Ok(quadratic(*curvature, *n_train, *n_test)?),
            TaskSpec::Mnist {
                dir,
                n_train,
                n_test,
                subset_seed,
            } => {
                let load = |train: bool| -> Result<_> {
                    let (images, labels) = mnist_paths(dir, train);
                    for p in [&images, &labels] {
                        if !p.exists() {
                            return Err(Error::Config(format!("missing MNIST file {}", p.display())));
                        }
                    }
                    Ok(load_mnist_idx(images, labels)?)
                };
                let train = subset(&load(true)?, *n_train, *subset_seed)?;
                let mut test = load(false)?;
                if let Some(n) = n_test {
                    test = subset(&test, *n, *subset_seed)?;
                }
                Ok(Task::new(TaskKind::Mnist, train, test)?)
            }
        }
    }
}

/// The learning-rate source under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Controller,
    Sgd,
    Momentum,
    Adagrad,
    Rmsprop,
    Adadelta,
    Adam,
}

impl Method {
    pub fn optimizer(self) -> Option<OptimizerKind> {
        match self {
            Method::Controller => None,
            Method::Sgd => Some(OptimizerKind::Sgd),
            Method::Momentum => Some(OptimizerKind::Momentum),
            Method::Adagrad => Some(OptimizerKind::Adagrad),
            Method::Rmsprop => Some(OptimizerKind::Rmsprop),
            Method::Adadelta => Some(OptimizerKind::Adadelta),
            Method::Adam => Some(OptimizerKind::Adam),
        }
    }

    pub fn name(self) -> &'static str {
        match self.optimizer() {
            Some(k) => k.name(),
            None => "controller",
        }
    }
}

impl From<OptimizerKind> for Method {
    fn from(kind: OptimizerKind) -> Self {
        match kind {
            OptimizerKind::Sgd => Method::Sgd,
            OptimizerKind::Momentum => Method::Momentum,
            OptimizerKind::Adagrad => Method::Adagrad,
            OptimizerKind::Rmsprop => Method::Rmsprop,
            OptimizerKind::Adadelta => Method::Adadelta,
            OptimizerKind::Adam => Method::Adam,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "controller" {
            return Ok(Method::Controller);
        }
        s.parse::<OptimizerKind>()
            .map(Method::from)
            .map_err(|_| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Everything that determines an experiment's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskSpec,
    pub method: Method,
    /// Fixed learning rate for baseline methods.
    pub lr: Option<f64>,
    /// Trainee steps per run (`T`).
    pub steps: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub m_theta: usize,
    pub m_phi: usize,
    /// Reset period during controller training; `steps / 5` when unset.
    pub e: Option<usize>,
    /// Controller training steps per seed; `10 * steps` when unset.
    pub train_steps: Option<usize>,
    /// Behaviour-noise scale on the actor's raw output during training.
    pub exploration: f64,
    pub seeds: Vec<u64>,
    pub record_disagreement: bool,
    pub td_clip: bool,
    /// Test-loss evaluation period; the last step is always evaluated.
    pub eval_every: usize,
    pub output_dir: PathBuf,
    /// Load a trained actor from this file instead of training one per seed.
    pub controller: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            task: TaskSpec::default(),
            method: Method::Controller,
            lr: None,
            steps: 500,
            batch_size: aclr_core::tasks::DEFAULT_BATCH_SIZE,
            gamma: c.gamma,
            m_theta: c.m_theta,
            m_phi: c.m_phi,
            e: None,
            train_steps: None,
            exploration: c.exploration,
            seeds: (0..5).collect(),
            record_disagreement: false,
            td_clip: true,
            eval_every: 1,
            output_dir: PathBuf::from("runs"),
            controller: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.method != Method::Controller && self.lr.is_none() {
            return Err(Error::Config(format!("method {} needs an lr", self.method)));
        }
        if let Some(lr) = self.lr {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("invalid lr {lr}")));
            }
        }
        self.controller_config().validate()?;
        Ok(())
    }

    pub fn reset_every(&self) -> usize {
        self.e.unwrap_or((self.steps / 5).max(1))
    }

    pub fn controller_train_steps(&self) -> usize {
        self.train_steps.unwrap_or(10 * self.steps)
    }

    pub fn controller_config(&self) -> ControllerConfig {
        ControllerConfig {
            gamma: self.gamma,
            m_theta: self.m_theta,
            m_phi: self.m_phi,
            reset_every: self.e.unwrap_or((self.steps / 5).max(1)),
            td_clip: if self.td_clip {
                ControllerConfig::default().td_clip
            } else {
                None
            },
            exploration: self.exploration,
            ..ControllerConfig::default()
        }
    }

    /// Settings of the evaluation (or baseline) run for one seed.
    pub fn run_settings(&self, seed: u64) -> RunSettings {
        let mut s = RunSettings::new(self.steps, seed);
        s.batch_size = self.batch_size;
        s.eval_every = self.eval_every;
        s.record_disagreement = self.record_disagreement;
        s
    }

    /// Settings of the controller training run for one seed.
    pub fn training_settings(&self, seed: u64) -> RunSettings {
        let mut s = RunSettings::new(self.controller_train_steps(), seed);
        s.batch_size = self.batch_size;
        s.eval_every = 0;
        s
    }
}
