//! Shared fixtures for the benchmarks.

use psirec::model::train_puresvd;
use psirec::synth::binary_stream;
use psirec::{FactorModel, SparseMatrix, SvdOptions};

/// A trained model with one fresh increment, plus the accumulated matrix a
/// full retrain would factorize.
pub struct UpdateFixture {
    pub model: FactorModel,
    pub delta: SparseMatrix,
    pub accumulated: SparseMatrix,
    pub rank: usize,
}

impl UpdateFixture {
    pub fn new(n_users: usize, n_items: usize, nnz: usize, rank: usize) -> Self {
        let (initial, deltas) = binary_stream(n_users, n_items, nnz, nnz / 20, 1, 11);
        let delta = deltas.into_iter().next().expect("one step");
        let model = train_puresvd(&initial, rank, &SvdOptions::DEFAULT).expect("trainable");
        let accumulated = initial.union_binary(&delta).expect("same shape");
        UpdateFixture {
            model,
            delta,
            accumulated,
            rank,
        }
    }
}
