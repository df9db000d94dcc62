//! Singular value decompositions: a one-sided Jacobi kernel for dense
//! matrices and a randomized range finder for large sparse ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{SvdOptions, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::dense::dot;
use crate::linalg::{qr_thin, spmm, spmm_transposed, DenseMatrix, SparseMatrix};

/// Thin SVD `A ≈ U · diag(s) · Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Keeps the leading `r` triplets.
    pub fn truncate(self, r: usize) -> Svd {
        let r = r.min(self.rank());
        Svd {
            u: self.u.leading_columns(r),
            singular_values: self.singular_values[..r].to_vec(),
            v: self.v.leading_columns(r),
        }
    }
}

/// Full thin SVD of a dense matrix, singular values sorted non-increasing.
///
/// Sign convention: in every column of `V` the entry of largest magnitude
/// (first one on ties) is positive.
pub fn dense_svd(a: &DenseMatrix) -> Result<Svd> {
    if a.n_rows() >= a.n_cols() {
        tall_svd(a)
    } else {
        let t = tall_svd(&a.transpose())?;
        let mut svd = Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
        fix_signs(&mut svd);
        Ok(svd)
    }
}

fn tall_svd(a: &DenseMatrix) -> Result<Svd> {
    let n = a.n_cols();
    let (q, r) = qr_thin(a)?;
    let (sigma, left, right) = jacobi(&r, &Tolerances::DEFAULT);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]).then(x.cmp(&y)));

    let singular_values: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    let left_sorted: Vec<Vec<f64>> = order.iter().map(|&j| left[j].clone()).collect();
    let right_sorted: Vec<Vec<f64>> = order.iter().map(|&j| right[j].clone()).collect();

    let u_small = DenseMatrix::from_columns(n, &complete_basis(left_sorted, &singular_values));
    let mut svd = Svd {
        u: q.matmul(&u_small)?,
        singular_values,
        v: DenseMatrix::from_columns(n, &right_sorted),
    };
    fix_signs(&mut svd);
    Ok(svd)
}

/// One-sided Jacobi on a square matrix. Returns column norms, the
/// normalized rotated columns (zero vectors where the norm vanishes) and the
/// accumulated right rotation, all in unsorted column order.
fn jacobi(r: &DenseMatrix, tol: &Tolerances) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = r.n_cols();
    let mut g = r.to_columns();
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..tol.jacobi_max_sweeps {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&g[i], &g[i]);
                let beta = dot(&g[j], &g[j]);
                let gamma = dot(&g[i], &g[j]);
                if gamma == 0.0 || gamma.abs() <= tol.jacobi_threshold * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut g, i, j, c, s);
                rotate(&mut w, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = g.iter().map(|c| dot(c, c).sqrt()).collect();
    let scale = sigma.iter().cloned().fold(0.0, f64::max);
    let floor = scale * n as f64 * f64::EPSILON;
    let left = g
        .into_iter()
        .zip(&sigma)
        .map(|(col, &s)| {
            if s > floor {
                col.into_iter().map(|x| x / s).collect()
            } else {
                vec![0.0; n]
            }
        })
        .collect();
    (sigma, left, w)
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(j);
    let (a, b) = (&mut head[i], &mut tail[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Replaces degenerate (zero) left vectors with unit vectors orthogonal to
/// the rest, drawn deterministically from the canonical basis.
fn complete_basis(mut cols: Vec<Vec<f64>>, sigma: &[f64]) -> Vec<Vec<f64>> {
    let n = cols.len();
    let degenerate: Vec<usize> = (0..n)
        .filter(|&j| dot(&cols[j], &cols[j]) == 0.0 || sigma[j] == 0.0)
        .collect();
    if degenerate.is_empty() {
        return cols;
    }
    let dim = cols.first().map_or(0, Vec::len);
    let mut accepted: Vec<usize> = (0..n).filter(|j| !degenerate.contains(j)).collect();
    let mut candidate = 0;
    for &slot in &degenerate {
        while candidate < dim {
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &k in &accepted {
                    let p = dot(&cols[k], &e);
                    for (x, &y) in e.iter_mut().zip(&cols[k]) {
                        *x -= p * y;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                cols[slot] = e.into_iter().map(|x| x / norm).collect();
                accepted.push(slot);
                break;
            }
        }
    }
    cols
}

fn fix_signs(svd: &mut Svd) {
    for j in 0..svd.v.n_cols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for i in 0..svd.v.n_rows() {
            let x = svd.v[(i, j)];
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            svd.v.negate_column(j);
            svd.u.negate_column(j);
        }
    }
}

/// Rank-`r` truncated SVD of a sparse matrix with default solver settings.
pub fn truncated_svd(a: &SparseMatrix, r: usize) -> Result<Svd> {
    truncated_svd_with(a, r, &SvdOptions::DEFAULT)
}

/// Rank-`r` truncated SVD.
///
/// Small matrices (smaller side at most `dense_threshold`) are factorized
/// exactly. Larger ones use a Gaussian range finder with power iterations;
/// the sketch is seeded from `opts.seed`, so results are reproducible.
pub fn truncated_svd_with(a: &SparseMatrix, r: usize, opts: &SvdOptions) -> Result<Svd> {
    let (m, n) = a.shape();
    let max = m.min(n);
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { rank: r, max });
    }
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if max <= opts.dense_threshold {
        return Ok(dense_svd(&a.to_dense())?.truncate(r));
    }

    let k = (r + opts.oversampling).min(max);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = DenseMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));

    let mut q = qr_thin(&spmm(a, &omega)?)?.0;
    for _ in 0..opts.power_iterations {
        let z = qr_thin(&spmm_transposed(a, &q)?)?.0;
        q = qr_thin(&spmm(a, &z)?)?.0;
    }

    // Bᵀ = Aᵀ Q = P Σ Wᵀ, so A ≈ Q B = (Q W) Σ Pᵀ.
    let bt = spmm_transposed(a, &q)?;
    let small = dense_svd(&bt)?;
    let mut svd = Svd {
        u: q.matmul(&small.v)?,
        singular_values: small.singular_values,
        v: small.u,
    }
    .truncate(r);
    fix_signs(&mut svd);
    Ok(svd)
}
