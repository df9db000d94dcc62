//! Test-only oracles and generators, written against nalgebra so they share
//! no code path with the library kernels.
#![allow(dead_code)]

use nalgebra::DMatrix;
use psirec::linalg::{DenseMatrix, SparseMatrix};
use psirec::model::{reconstruct, FactorModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na_dense(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| m[(i, j)])
}

pub fn to_na_sparse(m: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.n_rows(), m.n_cols());
    for (i, j, v) in m.iter() {
        d[(i, j)] = v;
    }
    d
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Sparse matrix with each cell present with probability `density`, value 1
/// or a uniform value in [0.5, 1.5) when `weighted`.
pub fn random_sparse(m: usize, n: usize, density: f64, weighted: bool, rng: &mut impl Rng) -> SparseMatrix {
    let mut trip = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if rng.gen_bool(density) {
                let v = if weighted { rng.gen_range(0.5..1.5) } else { 1.0 };
                trip.push((i, j, v));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, trip).unwrap()
}

/// Random matrix with orthonormal columns via nalgebra QR.
pub fn random_orthonormal(m: usize, r: usize, rng: &mut impl Rng) -> DenseMatrix {
    let g = DMatrix::from_fn(m, r, |_, _| rng.gen_range(-1.0..1.0));
    from_na(&g.qr().q())
}

/// Random valid factor model with a general (non-diagonal) core.
pub fn random_model(m: usize, n: usize, r: usize, rng: &mut impl Rng) -> FactorModel {
    let u = random_orthonormal(m, r, rng);
    let v = random_orthonormal(n, r, rng);
    let s = DenseMatrix::from_fn(r, r, |i, j| {
        if i == j {
            rng.gen_range(1.0..3.0)
        } else {
            rng.gen_range(-0.5..0.5)
        }
    });
    FactorModel::new(u, s, v, 0).unwrap()
}

/// Literal dense transcription of the five-line projector-splitting step.
pub fn psi_oracle(u0: &DMatrix<f64>, s0: &DMatrix<f64>, v0: &DMatrix<f64>, da: &DMatrix<f64>) -> DMatrix<f64> {
    let k1 = u0 * s0 + da * v0;
    let qr = k1.qr();
    let (u1, s_hat) = (qr.q(), qr.r());
    let s0_tilde = &s_hat - u1.transpose() * da * v0;
    let l1 = v0 * s0_tilde.transpose() + da.transpose() * &u1;
    let qr = l1.qr();
    let (v1, s1_t) = (qr.q(), qr.r());
    let s1 = s1_t.transpose();
    &u1 * s1 * v1.transpose()
}

pub fn psi_oracle_for(model: &FactorModel, delta: &SparseMatrix) -> DMatrix<f64> {
    psi_oracle(
        &to_na_dense(model.u()),
        &to_na_dense(model.s()),
        &to_na_dense(model.v()),
        &to_na_sparse(delta),
    )
}

pub fn y_of(model: &FactorModel) -> DMatrix<f64> {
    to_na_dense(&reconstruct(model).unwrap())
}

/// Singular values of `a`, descending, from a dense decomposition.
pub fn singular_values_oracle(a: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = a.singular_values().iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    vals
}

/// Optimal rank-`r` Frobenius error `sqrt(Σ_{i>r} σᵢ²)`.
pub fn truncation_error_oracle(a: &DMatrix<f64>, r: usize) -> f64 {
    singular_values_oracle(a)[r..].iter().map(|s| s * s).sum::<f64>().sqrt()
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Weighted Jaccard over dense weight vectors indexed by item id.
pub fn wji_dense_oracle(u: &[usize], v: &[usize], n: usize) -> f64 {
    let width = u.iter().chain(v).copied().max().map_or(0, |m| m + 1);
    let weights = |list: &[usize]| {
        let mut w = vec![0.0; width];
        for (pos, &item) in list.iter().enumerate().take(n) {
            w[item] = 1.0 / (pos + 1) as f64;
        }
        w
    };
    let (a, b) = (weights(u), weights(v));
    let num: f64 = a.iter().zip(&b).map(|(x, y)| x.min(*y)).sum();
    let den: f64 = a.iter().zip(&b).map(|(x, y)| x.max(*y)).sum();
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// For every n in 3..=6: each single swap of positions i < j on 0..n,
/// scored against the identity list. Returns (n, i, j, score) rows.
pub fn all_swaps(max_n: usize, score: impl Fn(&[usize], &[usize], usize) -> f64) -> Vec<(usize, usize, usize, f64)> {
    let mut out = Vec::new();
    for n in 3..=max_n {
        let base: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for j in i + 1..n {
                let mut swapped = base.clone();
                swapped.swap(i, j);
                out.push((n, i, j, score(&base, &swapped, n)));
            }
        }
    }
    out
}

pub fn sparse_from_na(d: &DMatrix<f64>) -> SparseMatrix {
    SparseMatrix::from_triplets(
        d.nrows(),
        d.ncols(),
        (0..d.nrows())
            .flat_map(|i| (0..d.ncols()).map(move |j| (i, j)))
            .filter(|&(i, j)| d[(i, j)] != 0.0)
            .map(|(i, j)| (i, j, d[(i, j)])),
    )
    .unwrap()
}

/// Exact rank-r matrix whose nonzeros live on a row × column block pattern.
pub fn patterned_low_rank(m: usize, n: usize, r: usize, rng: &mut impl Rng) -> SparseMatrix {
    let live_rows: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.75)).collect();
    let live_cols: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.75)).collect();
    let left = DMatrix::from_fn(m, r, |i, _| if live_rows[i] { rng.gen_range(-1.0..1.0) } else { 0.0 });
    let right = DMatrix::from_fn(n, r, |j, _| if live_cols[j] { rng.gen_range(-1.0..1.0) } else { 0.0 });
    sparse_from_na(&(left * right.transpose()))
}

/// Exact rank-3 `A₀` (20 × 15), its PureSVD model, and an update
/// `U₀ C V₀ᵀ` lying in both factor subspaces and on `A₀`'s sparsity pattern.
pub fn subspace_instance(rng: &mut impl Rng) -> (SparseMatrix, FactorModel, SparseMatrix) {
    let a0 = patterned_low_rank(20, 15, 3, rng);
    let model = psirec::model::train_puresvd(&a0, 3, &psirec::SvdOptions::DEFAULT).unwrap();
    let c = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-0.3..0.3));
    let delta = to_na_dense(model.u()) * c * to_na_dense(model.v()).transpose();
    // factor rows outside the live block are zero up to rounding
    let delta = sparse_from_na(&delta.map(|x| if x.abs() < 1e-13 { 0.0 } else { x }));
    (a0, model, delta)
}
