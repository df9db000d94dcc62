//! Factored low-rank state `Y = U S Vᵀ` and the two ways of producing it:
//! a full PureSVD fit, and the incremental projector-splitting step that
//! advances an existing state using only newly arrived interactions.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::config::{SvdOptions, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{dense_svd, qr_thin, spmm, spmm_transposed, truncated_svd_with, DenseMatrix, SparseMatrix};

const CHECKPOINT_MAGIC: &[u8; 4] = b"PSIF";
const CHECKPOINT_VERSION: u32 = 1;

/// Rank-`r` factorization `U · S · Vᵀ` of an `M × N` interaction matrix.
///
/// `U` and `V` have orthonormal columns. `S` is diagonal right after a
/// PureSVD fit and lower triangular after an incremental step.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    u: DenseMatrix,
    s: DenseMatrix,
    v: DenseMatrix,
    step_index: usize,
}

/// How the two tall intermediates of the incremental step are factorized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Decomposition {
    #[default]
    Qr,
    /// `X = P Σ Wᵀ` taken as orthonormal factor `P` and core `Σ Wᵀ`.
    Svd,
}

impl FactorModel {
    pub fn new(u: DenseMatrix, s: DenseMatrix, v: DenseMatrix, step_index: usize) -> Result<Self> {
        let r = s.n_rows();
        if s.n_cols() != r {
            return Err(Error::mismatch("factor core", s.shape(), (r, r)));
        }
        if u.n_cols() != r {
            return Err(Error::mismatch("user factors", u.shape(), s.shape()));
        }
        if v.n_cols() != r {
            return Err(Error::mismatch("item factors", v.shape(), s.shape()));
        }
        if r == 0 {
            return Err(Error::RankOutOfRange { rank: 0, max: 0 });
        }
        if !(u.is_finite() && s.is_finite() && v.is_finite()) {
            return Err(Error::Numerical("non-finite factor entries".into()));
        }
        Ok(FactorModel { u, s, v, step_index })
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn s(&self) -> &DenseMatrix {
        &self.s
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.s.n_rows()
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn n_users(&self) -> usize {
        self.u.n_rows()
    }

    pub fn n_items(&self) -> usize {
        self.v.n_rows()
    }

    /// Worst column-orthonormality defect over `U` and `V`.
    pub fn orthonormality_error(&self) -> f64 {
        self.u.orthonormality_error().max(self.v.orthonormality_error())
    }

    /// Serializes to the little-endian checkpoint layout:
    /// magic `PSIF`, version `u32`, then `n_users`, `n_items`, `rank`,
    /// `step_index` as `u64`, then `U`, `S`, `V` row-major as `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (m, n, r) = (self.n_users(), self.n_items(), self.rank());
        let mut out = Vec::with_capacity(40 + 8 * (m * r + r * r + n * r));
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        for x in [m, n, r, self.step_index] {
            out.extend_from_slice(&(x as u64).to_le_bytes());
        }
        for block in [&self.u, &self.s, &self.v] {
            for x in block.as_slice() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Data(format!("model checkpoint: {msg}"));
        let mut rd = bytes;
        let mut magic = [0u8; 4];
        rd.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 4];
        rd.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
        if u32::from_le_bytes(word) != CHECKPOINT_VERSION {
            return Err(bad("unsupported version"));
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            let mut buf = [0u8; 8];
            rd.read_exact(&mut buf).map_err(|_| bad("truncated header"))?;
            *d = usize::try_from(u64::from_le_bytes(buf)).map_err(|_| bad("dimension overflow"))?;
        }
        let [m, n, r, step_index] = dims;
        let expected = m
            .checked_mul(r)
            .and_then(|a| n.checked_mul(r).and_then(|b| a.checked_add(b)))
            .and_then(|a| r.checked_mul(r).and_then(|b| a.checked_add(b)))
            .and_then(|count| count.checked_mul(8))
            .ok_or_else(|| bad("dimension overflow"))?;
        if rd.len() != expected {
            return Err(bad("payload length does not match header"));
        }
        let mut take = |rows: usize, cols: usize| -> Result<DenseMatrix> {
            let (head, tail) = rd.split_at(rows * cols * 8);
            rd = tail;
            let values = head
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            DenseMatrix::from_row_major(rows, cols, values)
        };
        let u = take(m, r)?;
        let s = take(r, r)?;
        let v = take(n, r)?;
        FactorModel::new(u, s, v, step_index)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Fits the rank-`r` PureSVD model: the truncated SVD of the zero-filled
/// interaction matrix, with `S = diag(σ)` and `step_index = 0`.
pub fn train_puresvd(a: &SparseMatrix, rank: usize, opts: &SvdOptions) -> Result<FactorModel> {
    let svd = truncated_svd_with(a, rank, opts)?;
    FactorModel::new(svd.u, DenseMatrix::from_diagonal(&svd.singular_values), svd.v, 0)
}

/// One projector-splitting step with QR factorizations.
pub fn psi_step(model: &FactorModel, delta: &SparseMatrix) -> Result<FactorModel> {
    psi_step_with(model, delta, Decomposition::Qr)
}

/// Advances `model` by the increment `delta` (same shape as the modelled
/// matrix):
///
/// ```text
/// K  = U₀S₀ + ΔA V₀          (U₁, Ŝ)  = factor(K)
/// S̃  = Ŝ − U₁ᵀ ΔA V₀
/// L  = V₀ S̃ᵀ + ΔAᵀ U₁        (V₁, S₁ᵀ) = factor(L)
/// ```
///
/// The input model is left untouched.
pub fn psi_step_with(model: &FactorModel, delta: &SparseMatrix, decomposition: Decomposition) -> Result<FactorModel> {
    let expected = (model.n_users(), model.n_items());
    if delta.shape() != expected {
        return Err(Error::mismatch("psi_step", delta.shape(), expected));
    }
    let factor = |x: &DenseMatrix| -> Result<(DenseMatrix, DenseMatrix)> {
        match decomposition {
            Decomposition::Qr => qr_thin(x),
            Decomposition::Svd => {
                let svd = dense_svd(x)?;
                let core = DenseMatrix::from_fn(svd.rank(), svd.v.n_rows(), |i, j| {
                    svd.singular_values[i] * svd.v[(j, i)]
                });
                Ok((svd.u, core))
            }
        }
    };

    let delta_v = spmm(delta, &model.v)?;
    let k = model.u.matmul(&model.s)?.add(&delta_v)?;
    let (u1, s_hat) = factor(&k)?;
    let s_tilde = s_hat.sub(&u1.t_matmul(&delta_v)?)?;
    let l = model.v.matmul_t(&s_tilde)?.add(&spmm_transposed(delta, &u1)?)?;
    let (v1, s1_t) = factor(&l)?;

    let next = FactorModel::new(u1, s1_t.transpose(), v1, model.step_index + 1)?;
    debug_assert!(next.orthonormality_error() <= Tolerances::DEFAULT.model_orthonormality);
    Ok(next)
}

/// Dense `U S Vᵀ`; only for small matrices.
pub fn reconstruct(model: &FactorModel) -> Result<DenseMatrix> {
    reconstruct_capped(model, Tolerances::DEFAULT.reconstruct_cap)
}

pub fn reconstruct_capped(model: &FactorModel, cap: usize) -> Result<DenseMatrix> {
    let (m, n) = (model.n_users(), model.n_items());
    if m.saturating_mul(n) > cap {
        return Err(Error::TooLarge { rows: m, cols: n, cap });
    }
    model.u.matmul(&model.s)?.matmul_t(&model.v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(m: usize, n: usize, density: f64, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<_> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(density))
            .collect();
        SparseMatrix::binary_from_pairs(m, n, pairs).unwrap()
    }

    #[test]
    fn puresvd_diagonal() {
        let a = SparseMatrix::from_triplets(3, 3, [(0, 0, 3.0), (1, 1, 2.0), (2, 2, 1.0)]).unwrap();
        let m = train_puresvd(&a, 2, &SvdOptions::DEFAULT).unwrap();
        assert_eq!(m.step_index(), 0);
        assert!((m.s()[(0, 0)] - 3.0).abs() < 1e-14);
        assert!((m.s()[(1, 1)] - 2.0).abs() < 1e-14);
        assert_eq!(m.s()[(0, 1)], 0.0);

        let full = train_puresvd(&a, 3, &SvdOptions::DEFAULT).unwrap();
        assert!(reconstruct(&full).unwrap().max_abs_diff(&a.to_dense()) < 1e-14);
    }

    #[test]
    fn puresvd_rank_one_exact() {
        let u = [1.0, 2.0, 0.0, -1.0];
        let v = [0.5, 0.0, 3.0];
        let a =
            SparseMatrix::from_triplets(4, 3, (0..4).flat_map(|i| (0..3).map(move |j| (i, j, u[i] * v[j])))).unwrap();
        let m = train_puresvd(&a, 1, &SvdOptions::DEFAULT).unwrap();
        let err = reconstruct(&m).unwrap().sub(&a.to_dense()).unwrap().frobenius_norm();
        assert!(err <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn psi_shape_mismatch() {
        let a = random_sparse(6, 5, 0.5, 1);
        let m = train_puresvd(&a, 2, &SvdOptions::DEFAULT).unwrap();
        assert!(matches!(
            psi_step(&m, &SparseMatrix::zeros(5, 6)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn psi_does_not_mutate_input() {
        let a = random_sparse(10, 8, 0.4, 2);
        let m = train_puresvd(&a, 3, &SvdOptions::DEFAULT).unwrap();
        let before = m.to_bytes();
        let next = psi_step(&m, &random_sparse(10, 8, 0.1, 3)).unwrap();
        assert_eq!(m.to_bytes(), before);
        assert_eq!(next.step_index(), 1);
        assert!(next.orthonormality_error() < 1e-8);
    }

    #[test]
    fn psi_svd_variant_agrees_on_reconstruction() {
        let a = random_sparse(12, 9, 0.4, 4);
        let delta = random_sparse(12, 9, 0.1, 5);
        let m = train_puresvd(&a, 3, &SvdOptions::DEFAULT).unwrap();
        let qr = psi_step_with(&m, &delta, Decomposition::Qr).unwrap();
        let svd = psi_step_with(&m, &delta, Decomposition::Svd).unwrap();
        let (yq, ys) = (reconstruct(&qr).unwrap(), reconstruct(&svd).unwrap());
        assert!(yq.sub(&ys).unwrap().frobenius_norm() <= 1e-10 * yq.frobenius_norm());
        assert!(svd.orthonormality_error() < 1e-8);
    }

    #[test]
    fn reconstruct_refuses_large() {
        let m = FactorModel::new(
            DenseMatrix::zeros(3000, 1),
            DenseMatrix::identity(1),
            DenseMatrix::zeros(3000, 1),
            0,
        )
        .unwrap();
        assert!(matches!(reconstruct(&m), Err(Error::TooLarge { .. })));
        assert!(reconstruct_capped(&m, 10_000_000).is_ok());
    }

    #[test]
    fn reconstruct_pads_identity_factors() {
        let u = DenseMatrix::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let v = DenseMatrix::from_fn(3, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let s = DenseMatrix::from_row_major(2, 2, vec![2.0, 0.5, 0.0, 1.0]).unwrap();
        let y = reconstruct(&FactorModel::new(u, s.clone(), v, 0).unwrap()).unwrap();
        let mut expected = DenseMatrix::zeros(4, 3);
        for i in 0..2 {
            for j in 0..2 {
                expected[(i, j)] = s[(i, j)];
            }
        }
        assert_eq!(y, expected);
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(FactorModel::from_bytes(b"nope").is_err());
        let a = random_sparse(6, 5, 0.5, 7);
        let mut bytes = train_puresvd(&a, 2, &SvdOptions::DEFAULT).unwrap().to_bytes();
        bytes.pop();
        assert!(FactorModel::from_bytes(&bytes).is_err());
    }

    #[test]
    fn new_validates_shapes() {
        let ok = FactorModel::new(
            DenseMatrix::zeros(4, 2),
            DenseMatrix::zeros(2, 2),
            DenseMatrix::zeros(3, 2),
            0,
        );
        assert!(ok.is_ok());
        assert!(FactorModel::new(
            DenseMatrix::zeros(4, 3),
            DenseMatrix::zeros(2, 2),
            DenseMatrix::zeros(3, 2),
            0
        )
        .is_err());
        assert!(FactorModel::new(
            DenseMatrix::zeros(4, 2),
            DenseMatrix::zeros(2, 3),
            DenseMatrix::zeros(3, 2),
            0
        )
        .is_err());
    }
}
