//! Training tasks, data ingestion and reproducible mini-batch sampling.

mod idx;
mod sampling;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use idx::{encode_idx, load_mnist_idx, mnist_paths, parse_idx, IdxArray, IMAGES_MAGIC, LABELS_MAGIC};
pub use sampling::{sample_disjoint_pair, BatchSampler};

use crate::error::{Error, Result};
use crate::ndcore::Tensor;
use crate::nets::{Activation, LossKind, MlpSpec, OutputHead, Targets};

pub const DEFAULT_BATCH_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression2d,
    Quadratic,
    Mnist,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitTargets {
    Real { values: Vec<f64>, dim: usize },
    Class { labels: Vec<usize>, classes: usize },
}

/// One data split stored row-major: example `i` occupies
/// `features[i * dim..(i + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub features: Vec<f64>,
    pub dim: usize,
    pub targets: SplitTargets,
}

/// A gathered mini-batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub features: Tensor,
    pub targets: Targets,
}

impl Split {
    pub fn len(&self) -> usize {
        self.features.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features_of(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            SplitTargets::Class { labels, .. } => Some(labels),
            SplitTargets::Real { .. } => None,
        }
    }

    pub fn batch(&self, indices: &[usize]) -> Batch {
        let mut feats = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            feats.extend_from_slice(self.features_of(i));
        }
        let features = Tensor::from_parts(vec![indices.len(), self.dim], feats);
        let targets = match &self.targets {
            SplitTargets::Real { values, dim } => {
                let mut t = Vec::with_capacity(indices.len() * dim);
                for &i in indices {
                    t.extend_from_slice(&values[i * dim..(i + 1) * dim]);
                }
                Targets::Real(Tensor::from_parts(vec![indices.len(), *dim], t))
            }
            SplitTargets::Class { labels, .. } => {
                Targets::Class(indices.iter().map(|&i| labels[i]).collect())
            }
        };
        Batch {
            indices: indices.to_vec(),
            features,
            targets,
        }
    }

    pub fn full_batch(&self) -> Batch {
        let all: Vec<usize> = (0..self.len()).collect();
        self.batch(&all)
    }

    /// Keeps only `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Split {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.features_of(i));
        }
        let targets = match &self.targets {
            SplitTargets::Real { values, dim } => SplitTargets::Real {
                values: indices
                    .iter()
                    .flat_map(|&i| values[i * dim..(i + 1) * dim].iter().copied())
                    .collect(),
                dim: *dim,
            },
            SplitTargets::Class { labels, classes } => SplitTargets::Class {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                classes: *classes,
            },
        };
        Split {
            features,
            dim: self.dim,
            targets,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub kind: TaskKind,
    pub train: Split,
    pub test: Split,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Generating weights for synthetic regression tasks.
    pub true_weights: Option<Vec<f64>>,
}

impl Task {
    pub fn new(kind: TaskKind, train: Split, test: Split) -> Result<Self> {
        if train.is_empty() || test.is_empty() {
            return Err(Error::Config("train and test splits must be non-empty".into()));
        }
        if train.dim != test.dim {
            return Err(Error::Config(format!(
                "train/test feature widths differ: {} vs {}",
                train.dim, test.dim
            )));
        }
        let output_dim = match &train.targets {
            SplitTargets::Real { dim, .. } => *dim,
            SplitTargets::Class { classes, .. } => *classes,
        };
        Ok(Self {
            kind,
            input_dim: train.dim,
            output_dim,
            train,
            test,
            true_weights: None,
        })
    }

    /// Default trainee for the task: a bias-free linear model for the
    /// synthetic problems (so parameter space is the weight plane), and
    /// `784 -> 64 -> 10` ReLU for MNIST.
    pub fn default_trainee(&self) -> MlpSpec {
        match self.kind {
            TaskKind::Regression2d | TaskKind::Quadratic => MlpSpec::new(
                vec![self.input_dim, self.output_dim],
                Activation::Relu,
                OutputHead::Linear,
            )
            .without_bias(),
            TaskKind::Mnist => MlpSpec::new(
                vec![self.input_dim, 64, self.output_dim],
                Activation::Relu,
                OutputHead::SoftmaxCrossEntropy,
            ),
        }
    }

    pub fn loss_kind(&self) -> LossKind {
        match self.train.targets {
            SplitTargets::Real { .. } => LossKind::Mse,
            SplitTargets::Class { .. } => LossKind::SoftmaxCrossEntropy,
        }
    }
}

/// Random planar linear regression: `y = w* . x + N(0, sigma^2)` with
/// `w* ~ U[-2, 2]^2` and `x ~ U[-1, 1]^2`, all drawn from `seed`.
pub fn gen_regression_2d(seed: u64, n_train: usize, n_test: usize, noise_sigma: f64) -> Result<Task> {
    if n_train == 0 || n_test == 0 || !(noise_sigma >= 0.0) {
        return Err(Error::Config(format!(
            "regression needs n_train, n_test >= 1 and sigma >= 0 (got {n_train}, {n_test}, {noise_sigma})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
    let noise = Normal::new(0.0, noise_sigma).expect("sigma checked above");
    let mut draw = |n: usize| {
        let mut features = Vec::with_capacity(2 * n);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let eps = if noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            features.extend_from_slice(&x);
            values.push(w[0] * x[0] + w[1] * x[1] + eps);
        }
        Split {
            features,
            dim: 2,
            targets: SplitTargets::Real { values, dim: 1 },
        }
    };
    let train = draw(n_train);
    let test = draw(n_test);
    let mut task = Task::new(TaskKind::Regression2d, train, test)?;
    task.true_weights = Some(w);
    Ok(task)
}

/// `f(w) = curvature * w^2` written as a regression with every input equal
/// to `sqrt(curvature)` and every target zero.
pub fn quadratic(curvature: f64, n_train: usize, n_test: usize) -> Result<Task> {
    if !(curvature > 0.0) || n_train == 0 || n_test == 0 {
        return Err(Error::Config(format!("invalid quadratic task (a = {curvature})")));
    }
    let split = |n: usize| Split {
        features: vec![curvature.sqrt(); n],
        dim: 1,
        targets: SplitTargets::Real {
            values: vec![0.0; n],
            dim: 1,
        },
    };
    Task::new(TaskKind::Quadratic, split(n_train), split(n_test))
}

/// Class-stratified subsample of `n` examples, returned in original order.
///
/// Each class receives `floor(n * share)` slots; leftover slots go to the
/// classes with the largest remainders (lowest class id on ties). Splits
/// without class labels are sampled uniformly.
pub fn subset(split: &Split, n: usize, seed: u64) -> Result<Split> {
    let total = split.len();
    if n > total {
        return Err(Error::RangeError {
            requested: n,
            available: total,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = match &split.targets {
        SplitTargets::Real { .. } => {
            rand::seq::index::sample(&mut rng, total, n).into_vec()
        }
        SplitTargets::Class { labels, classes } => {
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); *classes];
            for (i, &l) in labels.iter().enumerate() {
                by_class[l].push(i);
            }
            let mut quota: Vec<usize> = by_class.iter().map(|c| n * c.len() / total).collect();
            let mut remainders: Vec<(usize, usize)> = by_class
                .iter()
                .enumerate()
                .map(|(k, c)| (n * c.len() % total, k))
                .collect();
            remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let missing = n - quota.iter().sum::<usize>();
            for &(_, k) in remainders.iter().take(missing) {
                quota[k] += 1;
            }
            let mut out = Vec::with_capacity(n);
            for (members, q) in by_class.iter_mut().zip(quota) {
                members.shuffle(&mut rng);
                out.extend_from_slice(&members[..q]);
            }
            out
        }
    };
    chosen.sort_unstable();
    Ok(split.select(&chosen))
}
