use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Batch, Split};
use crate::error::{Error, Result};

/// Two index sets of `batch_size` each with empty intersection: the first is
/// uniform over `0..n`, the second uniform over what the first left behind.
pub fn sample_disjoint_pair<R: Rng + ?Sized>(
    n: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if batch_size == 0 || 2 * batch_size > n {
        return Err(Error::RangeError {
            requested: 2 * batch_size,
            available: n,
        });
    }
    let mut picked = rand::seq::index::sample(rng, n, 2 * batch_size).into_vec();
    let second = picked.split_off(batch_size);
    Ok((picked, second))
}

/// Reproducible batch source for one run.
///
/// The trainee batch `x_i` comes from a primary stream and the actor batch
/// `x_j` from an independent auxiliary stream, so runs that never draw `x_j`
/// (baselines) see exactly the same `x_i` sequence as controller runs with
/// the same seed. When `batch_size >= n` every trainee batch is the whole
/// split in order.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    n: usize,
    batch_size: usize,
    primary: ChaCha8Rng,
    auxiliary: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(n: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 || n == 0 {
            return Err(Error::RangeError {
                requested: batch_size,
                available: n,
            });
        }
        let primary = ChaCha8Rng::seed_from_u64(seed);
        let mut auxiliary = ChaCha8Rng::seed_from_u64(seed);
        auxiliary.set_stream(1);
        Ok(Self {
            n,
            batch_size,
            primary,
            auxiliary,
        })
    }

    pub fn is_full_batch(&self) -> bool {
        self.batch_size >= self.n
    }

    pub fn next_indices(&mut self) -> Vec<usize> {
        if self.is_full_batch() {
            (0..self.n).collect()
        } else {
            rand::seq::index::sample(&mut self.primary, self.n, self.batch_size).into_vec()
        }
    }

    /// `(x_i, x_j)` index sets with no index in common.
    pub fn next_pair(&mut self) -> Result<(Vec<usize>, Vec<usize>)> {
        if 2 * self.batch_size > self.n {
            return Err(Error::RangeError {
                requested: 2 * self.batch_size,
                available: self.n,
            });
        }
        let first = self.next_indices();
        let mut taken = vec![false; self.n];
        for &i in &first {
            taken[i] = true;
        }
        let pool: Vec<usize> = (0..self.n).filter(|&i| !taken[i]).collect();
        let second = rand::seq::index::sample(&mut self.auxiliary, pool.len(), self.batch_size)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        Ok((first, second))
    }

    pub fn next_batch(&mut self, split: &Split) -> Batch {
        split.batch(&self.next_indices())
    }

    pub fn next_batch_pair(&mut self, split: &Split) -> Result<(Batch, Batch)> {
        let (i, j) = self.next_pair()?;
        Ok((split.batch(&i), split.batch(&j)))
    }
}
