use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Index sets into a chronologically ordered sample list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// The first `round(n * train_fraction)` items form the training pool and the
/// rest the test set. A seeded random `round(pool * val_fraction)` subset of
/// the pool becomes validation; both keep chronological order.
pub fn split_indices(
    n: usize,
    train_fraction: f64,
    val_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    for (name, f) in [("train", train_fraction), ("validation", val_fraction)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Domain(format!("{name} fraction {f} must lie in (0, 1)")));
        }
    }
    let pool = (n as f64 * train_fraction).round() as usize;
    let n_val = (pool as f64 * val_fraction).round() as usize;
    if pool == 0 || pool >= n || n_val == 0 || n_val >= pool {
        return Err(Error::Domain(format!(
            "split of {n} samples ({train_fraction} train, {val_fraction} validation) leaves an empty set"
        )));
    }
    let mut order: Vec<usize> = (0..pool).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut val = order[..n_val].to_vec();
    let mut train = order[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok(SplitIndices {
        train,
        val,
        test: (pool..n).collect(),
    })
}

pub fn split<T: Clone>(
    items: &[T],
    train_fraction: f64,
    val_fraction: f64,
    seed: u64,
) -> Result<Split<T>> {
    let idx = split_indices(items.len(), train_fraction, val_fraction, seed)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| items[i].clone()).collect();
    Ok(Split {
        train: pick(&idx.train),
        val: pick(&idx.val),
        test: pick(&idx.test),
    })
}
