//! Seeded synthetic interaction data for tests and benchmarks.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{Interaction, InteractionLog};
use crate::linalg::SparseMatrix;

/// Users with fixed latent tastes drawing items at uniformly random times.
/// The preference distribution never changes, so later data agrees with
/// earlier data in law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub latent_dim: usize,
    pub events_per_user: usize,
    /// Length of the simulated period in seconds.
    pub span: i64,
    /// Scale of the latent affinity in the sampling logits.
    pub sharpness: f64,
    pub seed: u64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        StationaryConfig {
            n_users: 1500,
            n_items: 300,
            latent_dim: 8,
            events_per_user: 40,
            span: 360 * 86_400,
            sharpness: 2.0,
            seed: 7,
        }
    }
}

pub fn stationary_log(cfg: &StationaryConfig) -> InteractionLog {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gauss = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let users: Vec<Vec<f64>> = (0..cfg.n_users).map(|_| gauss(cfg.latent_dim)).collect();
    let items: Vec<Vec<f64>> = (0..cfg.n_items).map(|_| gauss(cfg.latent_dim)).collect();
    let popularity = gauss(cfg.n_items);
    let norm = (cfg.latent_dim as f64).sqrt();

    let mut records = Vec::with_capacity(cfg.n_users * cfg.events_per_user);
    for (u, taste) in users.iter().enumerate() {
        let mut cumulative = Vec::with_capacity(cfg.n_items);
        let mut total = 0.0;
        for (q, &bias) in items.iter().zip(&popularity) {
            let affinity: f64 = taste.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() / norm;
            total += (cfg.sharpness * affinity + bias).exp();
            cumulative.push(total);
        }
        for _ in 0..cfg.events_per_user {
            let x = rng.gen_range(0.0..total);
            let item = cumulative.partition_point(|&c| c <= x).min(cfg.n_items - 1);
            records.push(Interaction {
                user: format!("u{u}"),
                item: format!("i{item}"),
                rating: 5.0,
                timestamp: rng.gen_range(0..cfg.span),
            });
        }
    }
    records.sort_by_key(|r| r.timestamp);
    InteractionLog::new(records)
}

/// Random binary matrix with exactly `nnz` distinct cells, avoiding `exclude`.
pub fn random_binary(
    n_rows: usize,
    n_cols: usize,
    nnz: usize,
    exclude: Option<&SparseMatrix>,
    rng: &mut impl Rng,
) -> SparseMatrix {
    let taken = exclude.map_or(0, SparseMatrix::nnz);
    assert!(nnz + taken <= n_rows * n_cols, "not enough free cells");
    let mut cells = HashSet::with_capacity(nnz);
    while cells.len() < nnz {
        let (i, j) = (rng.gen_range(0..n_rows), rng.gen_range(0..n_cols));
        if exclude.is_some_and(|m| m.contains(i, j)) {
            continue;
        }
        cells.insert((i, j));
    }
    SparseMatrix::binary_from_pairs(n_rows, n_cols, cells).expect("in bounds")
}

/// An initial binary matrix and `steps` increments of `step_nnz` new cells
/// each, disjoint from everything before them.
pub fn binary_stream(
    n_rows: usize,
    n_cols: usize,
    initial_nnz: usize,
    step_nnz: usize,
    steps: usize,
    seed: u64,
) -> (SparseMatrix, Vec<SparseMatrix>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = random_binary(n_rows, n_cols, initial_nnz, None, &mut rng);
    let mut acc = initial.clone();
    let mut deltas = Vec::with_capacity(steps);
    for _ in 0..steps {
        let d = random_binary(n_rows, n_cols, step_nnz, Some(&acc), &mut rng);
        acc = acc.union_binary(&d).expect("same shape");
        deltas.push(d);
    }
    (initial, deltas)
}
