//! Parallel execution of independent trajectories. Trajectory `i` is seeded
//! with `base_seed + i`, and results are always combined in index order, so
//! output does not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Trajectories evaluated concurrently before their results are folded.
pub const DEFAULT_CHUNK: usize = 256;

pub fn trajectory_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

/// Runs `f(index, seed)` for every trajectory and returns results in index
/// order.
pub fn run_ensemble<T, F>(n: usize, base_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    (0..n)
        .into_par_iter()
        .map(|i| f(i, trajectory_seed(base_seed, i)))
        .collect()
}

/// Runs `f` for every trajectory and folds the results into `acc` in index
/// order, keeping at most `chunk` results in memory.
pub fn fold_ensemble<T, A, F, M>(
    n: usize,
    base_seed: u64,
    chunk: usize,
    mut acc: A,
    f: F,
    mut merge: M,
) -> Result<A>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
    M: FnMut(&mut A, T) -> Result<()>,
{
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let chunk = chunk.max(1);
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let part: Vec<T> = (start..end)
            .into_par_iter()
            .map(|i| f(i, trajectory_seed(base_seed, i)))
            .collect::<Result<_>>()?;
        for item in part {
            merge(&mut acc, item)?;
        }
        start = end;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_seeds() {
        let out = run_ensemble(100, 7, |i, seed| Ok((i, seed))).unwrap();
        for (k, (i, seed)) in out.iter().enumerate() {
            assert_eq!(*i, k);
            assert_eq!(*seed, 7 + k as u64);
        }
        assert!(run_ensemble(0, 0, |_, _| Ok(())).is_err());
    }

    #[test]
    fn fold_in_index_order() {
        let order = fold_ensemble(1000, 0, 64, Vec::new(), |i, _| Ok(i), |acc, i| {
            acc.push(i);
            Ok(())
        })
        .unwrap();
        assert_eq!(order, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn errors_propagate() {
        let r = run_ensemble(10, 0, |i, _| {
            if i == 3 {
                Err(Error::EmptyEnsemble)
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
    }
}
